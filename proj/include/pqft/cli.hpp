#pragma once

#include "pqft/kernels.hpp"
#include "pqft/models.hpp"
#include "pqft/products.hpp"
#include "pqft/renorm.hpp"
#include "pqft/rgroups.hpp"

#include "json.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace pqft::cli {

inline constexpr const char* kSchema = "pqft-rg/1";

enum ExitCode { kOk = 0, kMismatch = 1, kUsage = 2 };

struct UsageError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct RunConfig {
  std::string command;
  std::string model;
  std::string suite;
  int dim = 4;
  int sig = -1;  // -1: Minkowski signature d - 1
  int power = 1;
  bool oracle = false;
  int order = 3;
  double tol = 1e-8;
  int hMax = 4;
  int gMax = 4;
  double sigma = 5.0;
  std::vector<double> lambdaGrid = rgroups::default_lambda_grid();
  double m2 = 1.0;
  double mu = 1.0;
  double x2 = -1.0;
  std::string out;            // empty: stdout
  std::string format = "json";
  int jobs = 1;
  bool timestamp = true;

  void validate() const {
    if (!(tol > 0)) throw UsageError("tolerance must be positive");
    if (hMax < 0 || gMax < 0) throw UsageError("truncation orders must be non-negative");
    if (format != "json" && format != "csv") throw UsageError("format must be json or csv");
    if (jobs < 1) throw UsageError("jobs must be at least 1");
    if (lambdaGrid.size() < 2) throw UsageError("the cutoff grid needs at least two points");
  }
};

struct RunResult {
  nlohmann::json body;
  std::vector<std::vector<std::string>> table;  // CSV rows after the header
  std::vector<std::string> mismatches;
  int exit_code() const { return mismatches.empty() ? kOk : kMismatch; }
};

// ---------------------------------------------------------------------------
// Helpers.

inline std::string iso_timestamp() {
  std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
  return buf;
}

inline std::string fmt(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

inline void add_scalar_rows(RunResult& r, const std::string& name, const ExactScalar& x) {
  nlohmann::json j = models::scalar_json(x);
  if (j["terms"].empty()) r.table.push_back({name, x.str(), "", "0", "0"});
  for (auto& t : j["terms"])
    r.table.push_back({name, x.str(), t["atoms"], t["re"], t["im"]});
}

inline void collect_checks(RunResult& r, const std::vector<models::Check>& checks) {
  for (auto& c : checks)
    if (!c.ok) r.mismatches.push_back(c.name + (c.detail.empty() ? "" : ": " + c.detail));
}

// ---------------------------------------------------------------------------
// beta

inline RunResult cmd_beta(const RunConfig& cfg) {
  RunResult r;
  if (cfg.model == "phi3_d6" || cfg.model == "phi4_d4") {
    models::BetaReport rep = cfg.model == "phi3_d6" ? models::phi3_d6_beta() : models::phi4_d4_beta();
    r.body = models::to_json(rep);
    for (auto& c : rep.components) add_scalar_rows(r, c.name, c.value);
    add_scalar_rows(r, "gammaDot", rep.gammaDot);
    add_scalar_rows(r, "lambdaDot", rep.lambdaDot);
    for (functionals::Basis b : functionals::kBasis)
      if (!rep.beta[b].is_zero()) add_scalar_rows(r, std::string("beta[") + functionals::basis_name(b) + "]", rep.beta[b]);
    collect_checks(r, rep.checks);
    if (cfg.model == "phi4_d4") {
      auto chain = models::fish_consistency_chain();
      r.body["fishChain"] = {{"closedForm", chain.closedForm.str()},
                             {"kappaDerivative", chain.kappaDerivative.str()},
                             {"euclideanOracle", fmt(chain.euclideanOracle)},
                             {"euclideanClosed", fmt(chain.euclideanClosed)},
                             {"exactAgree", chain.exactAgree},
                             {"numericAgree", chain.numericAgree}};
      if (!chain.exactAgree || !chain.numericAgree) r.mismatches.push_back("fish consistency chain");
    }
    return r;
  }
  if (cfg.model == "phi2_d4_example") {
    auto e = models::phi2_d4_example();
    r.body = models::to_json(e);
    auto rows = [&](const std::string& name, const functionals::LocalFunctional& f) {
      for (auto& t : f.terms)
        add_scalar_rows(r, name + " " + rgroups::smear_key(t.smear) + " phi^" + std::to_string(t.mono.plain),
                        t.mono.coefficient);
    };
    rows("Z(rho)(V)", e.zOfV);
    rows("alpha(V)", e.alphaOfV);
    rows("B_hat(V)", e.bhatOfV);
    collect_checks(r, e.checks);
    return r;
  }
  throw UsageError("unknown model '" + cfg.model + "' (expected phi3_d6, phi4_d4 or phi2_d4_example)");
}

// ---------------------------------------------------------------------------
// extend

inline RunResult cmd_extend(const RunConfig& cfg) {
  RunResult r;
  if (cfg.dim < 2) throw UsageError("dimension must be at least 2");
  if (cfg.power < 0) throw UsageError("power must be non-negative");
  const int sig = cfg.sig < 0 ? cfg.dim - 1 : cfg.sig;
  if (sig > cfg.dim - 1) throw UsageError("signature exceeds dimension - 1");
  kernels::KernelExpr k;
  k.factors = {kernels::power_x2inv(cfg.dim, cfg.power, sig)};
  renorm::ExtensionRecord rec = renorm::extend(k, cfg.dim);
  nlohmann::json viol = nlohmann::json::array();
  for (auto& v : rec.violation) {
    viol.push_back({{"box", v.box}, {"coefficient", models::scalar_json(v.coefficient)}});
    add_scalar_rows(r, "c_" + std::to_string(v.box), v.coefficient);
  }
  r.body = {{"kernel", "(x^2 - i0)^-" + std::to_string(cfg.power)},
            {"dim", cfg.dim},
            {"sig", sig},
            {"scalingDegree", rec.sd.str()},
            {"omega", rec.omega.str()},
            {"unique", rec.unique},
            {"logPower", rec.logPower},
            {"violation", viol}};
  if (cfg.oracle) {
    if (sig != 0 || 2 * cfg.power != cfg.dim) throw UsageError("--oracle needs --sig 0 and 2 * power = dim");
    const double numeric = renorm::euclidean_scaling_oracle(cfg.dim);
    const double closed = evaluate(renorm::sphere_area(cfg.dim), AtomValues::standard())->re.convert_to<double>();
    const bool ok = std::abs(numeric - closed) < 1e-6;
    r.body["oracle"] = {{"numeric", fmt(numeric)}, {"closedForm", fmt(closed)}, {"agree", ok}};
    r.table.push_back({"oracle", "|S^(d-1)|", "", fmt(numeric), "0"});
    if (!ok) r.mismatches.push_back("oracle " + fmt(numeric) + " vs closed form " + fmt(closed));
  }
  return r;
}

// ---------------------------------------------------------------------------
// check suites

namespace detail {

using products::GraphSum;

inline GraphSum random_monomial(std::mt19937& rng, int label, functionals::SupportRegion region, Truncation t) {
  std::uniform_int_distribution<int> plain(0, 3), deriv(0, 1), coef(1, 5);
  return GraphSum::monomial(ExactScalar(coef(rng)), label, "f" + std::to_string(label), plain(rng), deriv(rng),
                            std::move(region), t);
}

}  // namespace detail

inline nlohmann::json check_products(RunResult& r, const RunConfig& cfg) {
  std::mt19937 rng(12345);
  Truncation t{cfg.hMax, 0};
  int trials = 20, assocStar = 0, assocT = 0, involution = 0, causal = 0, ds = 0;
  const auto later = functionals::SupportRegion::slab(4, 5, 6, 0, 1);
  const auto earlier = functionals::SupportRegion::slab(4, 0, 1, 0, 1);
  for (int j = 0; j < trials; ++j) {
    auto a = detail::random_monomial(rng, 0, {}, t), b = detail::random_monomial(rng, 1, {}, t),
         c = detail::random_monomial(rng, 2, {}, t);
    assocStar += products::star(products::star(a, b), c) == products::star(a, products::star(b, c));
    assocT += products::timeordered(products::timeordered(a, b), c) ==
              products::timeordered(a, products::timeordered(b, c));
    auto ab = products::star(a, b);
    involution += products::conj(products::conj(ab)) == ab;
    auto la = detail::random_monomial(rng, 0, later, t), eb = detail::random_monomial(rng, 1, earlier, t);
    causal += products::causal_factorization_check(la, eb);
    auto kg = products::GraphSum::field_kg(3, "g", {}, t);
    ds += products::dyson_schwinger_check(a, kg);
  }
  auto tally = [&](const char* name, int n) {
    r.table.push_back({name, std::to_string(n) + "/" + std::to_string(trials), "", "", ""});
    if (n != trials) r.mismatches.push_back(std::string(name) + " failed in " + std::to_string(trials - n) + " trials");
    return nlohmann::json{{"name", name}, {"passed", n}, {"trials", trials}};
  };
  return nlohmann::json::array({tally("star associativity", assocStar), tally("time-ordered associativity", assocT),
                                tally("conjugation involution", involution), tally("causal factorization", causal),
                                tally("Dyson-Schwinger", ds)});
}

// Runs tasks on up to `jobs` threads; results keep the task order.
template <class T>
std::vector<T> parallel_map(const std::vector<std::function<T()>>& tasks, int jobs) {
  std::vector<T> out(tasks.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t j = next++; j < tasks.size(); j = next++) out[j] = tasks[j]();
  };
  std::vector<std::thread> pool;
  for (int t = 1; t < std::min<int>(jobs, static_cast<int>(tasks.size())); ++t) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
  return out;
}

inline nlohmann::json check_flow(RunResult& r, const RunConfig& cfg) {
  rgroups::FlowSetup setup;
  setup.lambda = 2.0;
  std::vector<std::pair<int, int>> cases;
  std::vector<std::function<products::GraphSum()>> tasks;
  for (int k : {3, 4})
    for (int n = 1; n <= cfg.order; ++n) {
      cases.push_back({k, n});
      tasks.push_back([k, n, setup] {
        functionals::LocalTerm v{{ExactScalar(1), k, 0}, {{"f", 1}}, {}, {}};
        return rgroups::flow_equation_residual(v, n, setup);
      });
    }
  auto residuals = parallel_map(tasks, cfg.jobs);
  nlohmann::json out = nlohmann::json::array();
  for (std::size_t j = 0; j < cases.size(); ++j) {
    auto [k, n] = cases[j];
    const auto& res = residuals[j];
    const std::string name = "phi^" + std::to_string(k) + " order " + std::to_string(n);
    out.push_back({{"vertex", k}, {"order", n}, {"residualGraphs", res.entries.size()}, {"residual", res.dump()}});
    r.table.push_back({name, std::to_string(res.entries.size()), "", "", ""});
    if (!res.empty()) r.mismatches.push_back("flow residual non-empty for " + name);
  }
  return out;
}

inline nlohmann::json check_cocycle(RunResult& r, const RunConfig& cfg) {
  auto S = models::phi2_reference_smatrix();
  const std::vector<rgroups::Shape> shapes{{2, 0}};
  const int n = std::max(2, std::min(cfg.order, 3));
  const ExactScalar logRho = ExactScalar::atom(Atom::LogRho);
  auto z = rgroups::gml_cocycle(S, logRho, n, shapes);
  auto z2 = rgroups::gml_cocycle(S, logRho, n, shapes);
  const bool cocycle = rgroups::cocycle_identity(S, 2, shapes, 2);
  const bool roundTrip = rgroups::round_trip(S, S.with_scale_shift(logRho), z, n, shapes);
  const bool deterministic = z == z2;
  auto cond = rgroups::conditions(z);
  nlohmann::json out = {{"cocycle", cocycle}, {"roundTrip", roundTrip}, {"deterministic", deterministic},
                        {"C5", cond.c5},      {"C6", cond.c6},          {"C7", cond.c7}};
  for (auto& [name, ok] : std::vector<std::pair<std::string, bool>>{
           {"cocycle identity", cocycle}, {"round trip", roundTrip}, {"determinism", deterministic}, {"C7", cond.c7}}) {
    r.table.push_back({name, ok ? "true" : "false", "", "", ""});
    if (!ok) r.mismatches.push_back(name);
  }
  return out;
}

inline nlohmann::json check_hadamard(RunResult& r, const RunConfig& cfg) {
  nlohmann::json out;
  const double x2 = cfg.x2 < 0 ? cfg.x2 : -1.0;
  if (cfg.dim == 2) {
    std::vector<double> vals;
    for (double m2 : {1e-4, 1e-6, 1e-8, 0.0}) vals.push_back(kernels::hadamard_eval(2, m2, cfg.mu, x2));
    bool finite = true;
    for (double v : vals) finite = finite && std::isfinite(v);
    const bool converges = finite && std::abs(vals[2] - vals[3]) < 1e-6;
    out = {{"dim", 2}, {"values", vals}, {"finite", finite}, {"converges", converges}};
    r.table.push_back({"m2 -> 0", fmt(vals.back()), "", "", ""});
    if (!converges) r.mismatches.push_back("d = 2 massless limit not finite");
  } else if (cfg.dim == 3) {
    const double m = std::sqrt(cfg.m2), rr = std::sqrt(-x2);
    const double closed = std::cosh(m * rr) / (4 * M_PI * rr);
    const double series = kernels::hadamard_eval(3, cfg.m2, cfg.mu, x2);
    const bool ok = std::abs(series - closed) <= 1e-10 * std::max(1.0, std::abs(closed));
    out = {{"dim", 3}, {"series", fmt(series)}, {"closedForm", fmt(closed)}, {"agree", ok}};
    r.table.push_back({"d = 3", fmt(series), "", fmt(closed), ""});
    if (!ok) r.mismatches.push_back("d = 3 series vs half-integer Bessel form");
  } else {
    const bool smooth = kernels::smoothness_in_m2_check(cfg.dim, cfg.mu, x2, 2);
    out = {{"dim", cfg.dim}, {"smoothInM2", smooth}};
    r.table.push_back({"smooth in m2", smooth ? "true" : "false", "", "", ""});
    if (!smooth) r.mismatches.push_back("not smooth in m^2");
  }
  return out;
}

inline nlohmann::json check_feynman_i(RunResult& r, const RunConfig& cfg) {
  auto tri = renorm::triangle_integral(std::clamp(cfg.tol, 1e-14, 1e-10));
  auto red = renorm::feynman_reduce_triangle();
  const bool ok = std::abs(tri.value - 0.5) < cfg.tol;
  r.table.push_back({"I", fmt(tri.value), "", fmt(tri.error), ""});
  if (!ok) r.mismatches.push_back("I = " + fmt(tri.value));
  if (!tri.innerOk) r.mismatches.push_back("inner integral depends on lambda");
  if (!red.determinantOk) r.mismatches.push_back("determinant identity");
  return {{"I", fmt(tri.value)},
          {"error", fmt(tri.error)},
          {"inner", tri.innerValues},
          {"innerOk", tri.innerOk},
          {"rawSimplex", fmt(tri.rawSimplex)},
          {"determinantOk", red.determinantOk},
          {"a2OverI", red.coefficientOverI.str()}};
}

inline RunResult cmd_check(const RunConfig& cfg) {
  RunResult r;
  nlohmann::json detail;
  if (cfg.suite == "products") detail = check_products(r, cfg);
  else if (cfg.suite == "flow") detail = check_flow(r, cfg);
  else if (cfg.suite == "cocycle") detail = check_cocycle(r, cfg);
  else if (cfg.suite == "hadamard") detail = check_hadamard(r, cfg);
  else if (cfg.suite == "feynmanI") detail = check_feynman_i(r, cfg);
  else throw UsageError("unknown suite '" + cfg.suite + "' (expected products, flow, cocycle, hadamard or feynmanI)");
  r.body = {{"suite", cfg.suite}, {"detail", detail}};
  return r;
}

// ---------------------------------------------------------------------------
// flow: counterterms of the phi^2 model

inline RunResult cmd_flow(const RunConfig& cfg) {
  RunResult r;
  auto c = rgroups::counterterm_extraction(cfg.sigma, std::max(cfg.tol, 1e-3), cfg.lambdaGrid);
  nlohmann::json fits = nlohmann::json::array();
  for (int f = 0; f < 2; ++f) {
    auto& fit = c.fits[f];
    fits.push_back({{"family", f},
                    {"shift", kernels::regulator_shift(f)},
                    {"logLambda", fit.logLambda},
                    {"values", fit.values},
                    {"slope", fmt(fit.slope)},
                    {"intercept", fmt(fit.intercept)},
                    {"rms", fmt(fit.rms)},
                    {"zSlopeIm", fmt(c.zSlope[f].imag())},
                    {"relativeError", fmt(c.relativeError[f])}});
    r.table.push_back({"family " + std::to_string(f), fmt(fit.slope), "log Lambda", fmt(c.zSlope[f].real()),
                       fmt(c.zSlope[f].imag())});
  }
  r.body = {{"sigma", c.sigma},
            {"profileSquare", fmt(c.profileSquare)},
            {"exactSlopeIm", fmt(c.exactSlope.imag())},
            {"fits", fits},
            {"familySpread", fmt(c.familySpread)},
            {"finiteDifference", fmt(c.finiteDifference)},
            {"ok", c.ok}};
  if (!c.ok) r.mismatches.push_back("log slope of Z_Lambda does not match i/(8 pi^2)");
  return r;
}

// ---------------------------------------------------------------------------
// hadamard: point evaluation

inline RunResult cmd_hadamard(const RunConfig& cfg) {
  RunResult r;
  if (!(cfg.x2 < 0)) throw UsageError("hadamard needs a spacelike point, x2 < 0");
  Decimal v = kernels::hadamard_eval_decimal(cfg.dim, Decimal(cfg.m2), Decimal(cfg.mu), Decimal(cfg.x2));
  r.body = {{"dim", cfg.dim}, {"m2", cfg.m2}, {"mu", cfg.mu}, {"x2", cfg.x2}, {"value", decimal_str(v, 30)}};
  r.table.push_back({"H", "", "", decimal_str(v, 30), "0"});
  return r;
}

// ---------------------------------------------------------------------------

inline RunResult dispatch(const RunConfig& cfg) {
  cfg.validate();
  if (cfg.command == "beta") return cmd_beta(cfg);
  if (cfg.command == "extend") return cmd_extend(cfg);
  if (cfg.command == "check") return cmd_check(cfg);
  if (cfg.command == "flow") return cmd_flow(cfg);
  if (cfg.command == "hadamard") return cmd_hadamard(cfg);
  throw UsageError("unknown command '" + cfg.command + "'");
}

inline std::string render(const RunConfig& cfg, const RunResult& r) {
  if (cfg.format == "csv") {
    std::ostringstream os;
    auto quote = [](const std::string& s) {
      if (s.find_first_of(",\"\n") == std::string::npos) return s;
      std::string q = "\"";
      for (char c : s) q += c == '"' ? std::string("\"\"") : std::string(1, c);
      return q + "\"";
    };
    os << "name,symbolic,atoms,re,im\n";
    for (auto& row : r.table) {
      for (std::size_t j = 0; j < row.size(); ++j) os << (j ? "," : "") << quote(row[j]);
      os << "\n";
    }
    return os.str();
  }
  nlohmann::json doc = {{"schema", kSchema}, {"command", cfg.command}, {"result", r.body},
                        {"mismatches", r.mismatches}, {"ok", r.mismatches.empty()}};
  if (cfg.timestamp) doc["timestamp"] = iso_timestamp();
  return doc.dump(2) + "\n";
}

// PQFT_OUTPUT_DIR overrides the directory of a relative output path.
inline std::filesystem::path output_path(const std::string& out) {
  std::filesystem::path p(out);
  if (const char* dir = std::getenv("PQFT_OUTPUT_DIR"); dir && *dir && p.is_relative()) p = std::filesystem::path(dir) / p;
  return p;
}

inline void write_output(const RunConfig& cfg, const std::string& text, std::ostream& fallback) {
  if (cfg.out.empty()) {
    fallback << text;
    return;
  }
  auto p = output_path(cfg.out);
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream f(p);
  if (!f) throw std::runtime_error("cannot write " + p.string());
  f << text;
}

}  // namespace pqft::cli
