// Acceptance runner: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include "generators.hpp"
#include "pqft/kernels.hpp"
#include "pqft/models.hpp"
#include "pqft/renorm.hpp"
#include "pqft/rgroups.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>

using namespace pqft;
using functionals::Basis;
using functionals::SupportRegion;
using functionals::LocalFunctional;
using functionals::LocalTerm;

namespace {

int failures = 0;

// Runs `body`; the criterion fails if it returns false, throws, or exceeds `budgetSeconds`.
void criterion(const std::string& name, double budgetSeconds, const std::function<bool(std::string&)>& body) {
  std::string detail;
  bool ok = false;
  const auto start = std::chrono::steady_clock::now();
  try {
    ok = body(detail);
  } catch (const std::exception& e) {
    detail = std::string("exception: ") + e.what();
  }
  const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (elapsed > budgetSeconds) {
    ok = false;
    detail += " over budget";
  }
  failures += !ok;
  std::printf("%s %s (%.2fs)%s%s\n", ok ? "PASS" : "FAIL", name.c_str(), elapsed, detail.empty() ? "" : ": ",
              detail.c_str());
  std::fflush(stdout);
}

ExactScalar mono(Rational q, int ipow, int pipow, std::vector<std::pair<Atom, int>> syms = {}) {
  return ExactScalar::monomial(q, ipow, pipow, std::move(syms));
}

bool all_checks(const std::vector<models::Check>& checks, std::string& detail) {
  for (auto& c : checks)
    if (!c.ok) {
      detail = c.name + " " + c.detail;
      return false;
    }
  return true;
}

bool expect(const ExactScalar& got, const ExactScalar& want, const std::string& what, std::string& detail) {
  if (got == want) return true;
  detail += what + " = " + got.str() + " (want " + want.str() + ") ";
  return false;
}

}  // namespace

int main() {
  const double minute = 60;

  // 1. Exact-coefficient regressions
  criterion("exact: fish coefficient in d = 4", minute, [](std::string& d) {
    return expect(models::phi4_d4_B().component("fish"), mono(Rational(-1, 16), 1, -2, {{Atom::Hbar, 2}}), "fish", d);
  });

  criterion("exact: a0, a1, a2, b1", minute, [](std::string& d) {
    auto r3 = models::phi3_d6_beta();
    auto r4 = models::phi4_d4_beta();
    bool ok = expect(r3.component("a0"), mono(Rational(1, 384), 1, -3), "a0", d);
    ok &= expect(r3.component("a1"), mono(Rational(1, 64), 1, -3), "a1", d);
    ok &= expect(r3.component("a2"), mono(Rational(1, 64), 0, -3), "a2", d);
    ok &= expect(r4.component("b1"), mono(Rational(-1, 8), 1, -2), "b1", d);
    return ok;
  });

  criterion("exact: phi^3 beta in d = 6", minute, [](std::string& d) {
    auto r = models::phi3_d6_beta();
    return all_checks(r.checks, d) &&
           expect(r.beta[Basis::Phi3], mono(Rational(-3, 256), 0, -3, {{Atom::Hbar, 1}, {Atom::Coupling, 3}}),
                  "beta[phi^3]", d);
  });

  criterion("exact: phi^4 beta leading terms in d = 4", minute, [](std::string& d) {
    auto r = models::phi4_d4_beta();
    bool ok = all_checks(r.checks, d);
    ok &= expect(r.beta[Basis::Phi4], mono(Rational(3, 16), 0, -2, {{Atom::Hbar, 1}, {Atom::Coupling, 2}}),
                 "beta[phi^4]", d);
    ok &= expect(r.beta[Basis::Phi2],
                 mono(Rational(-1, 16), 0, -2, {{Atom::Hbar, 1}, {Atom::Coupling, 1}, {Atom::Mass2, 1}}),
                 "beta[phi^2]", d);
    return ok;
  });

  criterion("exact: phi^2 example triple Z(V), alpha(V), B-hat(V)", minute, [](std::string& d) {
    auto e = models::phi2_d4_example();
    LocalFunctional wantZ = e.V, wantAlpha = e.V, wantB;
    wantZ.add({{mono(Rational(1, 8), 1, -2, {{Atom::Coupling, 2}, {Atom::LogRho, 1}}), 0, 0}, {{"f", 2}}, {}, {}});
    wantAlpha.add({{mono(Rational(-1, 8), 1, -2, {{Atom::Coupling, 1}, {Atom::Mass2, 1}, {Atom::LogRho, 1}}), 0, 0},
                   {{"f", 1}},
                   {},
                   {}});
    wantB.add({{mono(Rational(-1, 8), 1, -2, {{Atom::Coupling, 1}, {Atom::Mass2, 1}}), 0, 0}, {{"f", 1}}, {}, {}});
    wantB.add({{mono(Rational(1, 8), 1, -2, {{Atom::Coupling, 2}}), 0, 0}, {{"f", 2}}, {}, {}});
    bool ok = all_checks(e.checks, d);
    if (!(e.zOfV == wantZ)) d += "Z(V) ";
    if (!(e.alphaOfV == wantAlpha)) d += "alpha(V) ";
    if (!(e.bhatOfV == wantB)) d += "B-hat(V) ";
    return ok && e.zOfV == wantZ && e.alphaOfV == wantAlpha && e.bhatOfV == wantB;
  });

  criterion("exact: c_k against extend for d in {4,6}, k in {0,1,2}", minute, [](std::string& d) {
    bool ok = true;
    for (int dim : {4, 6})
      for (int k = 0; k <= 2; ++k) {
        auto rec = renorm::extend(renorm::power_kernel(dim, dim / 2 + k), dim);
        const bool good = rec.violation.size() == 1 && rec.violation[0].box == k &&
                          rec.violation[0].coefficient == renorm::c_k(dim, dim - 1, k) &&
                          renorm::box_power_bruteforce(dim, k) * renorm::c_k(dim, dim - 1, k) ==
                              renorm::c_k(dim, dim - 1, 0);
        if (!good) d += "d=" + std::to_string(dim) + ",k=" + std::to_string(k) + " ";
        ok &= good;
      }
    return ok;
  });

  criterion("exact: box power identity against brute force for k <= 3", minute, [](std::string& d) {
    bool ok = true;
    for (int dim = 1; dim <= 6; ++dim)
      for (int k = 0; k <= 3; ++k)
        if (!(renorm::box_power_identity(dim, k) == renorm::box_power_bruteforce(dim, k))) {
          d += "d=" + std::to_string(dim) + ",k=" + std::to_string(k) + " ";
          ok = false;
        }
    return ok;
  });

  // 2. Numeric checks
  criterion("numeric: triangle integral I = 0.5 and inner lambda independence", 10, [](std::string& d) {
    auto t = renorm::triangle_integral(1e-12);
    bool ok = std::abs(t.value - 0.5) < 1e-8 && t.innerValues.size() == 9;
    for (double v : t.innerValues) ok &= std::abs(v - 0.5) < 1e-8;
    char buf[64];
    std::snprintf(buf, sizeof buf, "I - 0.5 = %.3e", t.value - 0.5);
    d = buf;
    return ok;
  });

  criterion("numeric: Euclidean scaling oracle equals the sphere area for d in {2,3,4}", 30, [](std::string& d) {
    bool ok = true;
    for (int dim : {2, 3, 4}) {
      const double area = evaluate(renorm::sphere_area(dim), AtomValues::standard())->re.convert_to<double>();
      const double err = std::abs(renorm::euclidean_scaling_oracle(dim) - area);
      char buf[64];
      std::snprintf(buf, sizeof buf, "d=%d err %.1e ", dim, err);
      d += buf;
      ok &= err < 1e-6;
    }
    return ok;
  });

  criterion("numeric: Hadamard parametrix in d = 2, 3, 4, 6", 30, [](std::string& d) {
    bool ok = true;
    for (double m2 : {0.25, 1.0, 4.0}) {
      const double x2 = -0.8, r = std::sqrt(-x2);
      const double closed = std::cosh(std::sqrt(m2) * r) / (4 * M_PI * r);
      if (std::abs(kernels::hadamard_eval(3, m2, 1.0, x2) - closed) > 1e-10 * closed) {
        d += "d=3 m2=" + std::to_string(m2) + " ";
        ok = false;
      }
    }
    const double h0 = kernels::hadamard_eval(2, 0.0, 1.0, -1.0);
    if (!std::isfinite(h0) || std::abs(kernels::hadamard_eval(2, 1e-10, 1.0, -1.0) - h0) > 1e-8) {
      d += "d=2 massless limit ";
      ok = false;
    }
    for (int dim : {4, 6})
      if (!kernels::smoothness_in_m2_check(dim, 1.0, -0.7, 2)) {
        d += "d=" + std::to_string(dim) + " not smooth ";
        ok = false;
      }
    return ok;
  });

  // 3. Property suites
  criterion("property: star/T associativity, commutator, conjugation, causal factorization, Dyson-Schwinger", 120,
            [](std::string& d) {
              using namespace products;
              testgen::Gen g(20240611);
              const auto later = SupportRegion::slab(4, 5, 6, 0, 1), earlier = SupportRegion::slab(4, 0, 1, 0, 1);
              const int trials = 30;
              int fails = 0;
              for (int t = 0; t < trials; ++t) {
                auto a = g.field_monomial(0), b = g.field_monomial(1), c = g.field_monomial(2);
                bool ok = star(star(a, b), c) == star(a, star(b, c));
                ok &= timeordered(timeordered(a, b), c) == timeordered(a, timeordered(b, c));
                auto com = commutator(a, b);
                ok &= com == star(a, b) - star(b, a);
                for (int n = 0; n <= 4; n += 2) ok &= hbar_part(com, n).empty();
                auto ab = star(a, b);
                ok &= conj(conj(ab)) == ab && conj(ab) == star(conj(b), conj(a));
                ok &= causal_factorization_check(g.field_monomial(0, later), g.field_monomial(1, earlier));
                ok &= dyson_schwinger_check(a, GraphSum::field_kg(3, "g", {}, {4, 0}));
                fails += !ok;
              }
              d = std::to_string(trials - fails) + "/" + std::to_string(trials) + " trials";
              return fails == 0;
            });

  criterion("property: flow residual empty at orders 1-3 for phi^3 and phi^4", 120, [](std::string& d) {
    rgroups::FlowSetup setup;
    setup.lambda = 2.0;
    bool ok = true;
    for (int k : {3, 4})
      for (int n = 1; n <= 3; ++n) {
        LocalTerm v{{ExactScalar(1), k, 0}, {{"f", 1}}, {}, {}};
        if (!rgroups::flow_equation_residual(v, n, setup).empty()) {
          d += "phi^" + std::to_string(k) + " order " + std::to_string(n) + " ";
          ok = false;
        }
      }
    return ok;
  });

  criterion("property: cocycle at order 2, C7 audit, Z additivity, round trip to order 3", 120, [](std::string& d) {
    const std::vector<rgroups::Shape> shapes{{2, 0}};
    auto S = models::phi2_reference_smatrix();
    auto logRho = ExactScalar::atom(Atom::LogRho);
    auto z = rgroups::gml_cocycle(S, logRho, 3, shapes);
    const bool cocycle = rgroups::cocycle_identity(S, 2, shapes, 2);
    const bool c7 = rgroups::c7_audit(z);
    const bool roundTrip = rgroups::round_trip(S, S.with_scale_shift(logRho), z, 3, shapes);

    rgroups::SMatrix Sa;
    Sa.choices[2] = {ExactScalar(), ExactScalar::i()};
    auto za = rgroups::gml_cocycle(Sa, logRho, 2, shapes);
    rgroups::SlotTable slots;
    slots["p"] = functionals::SlotInfo{SupportRegion::box({0}, {1}), nullptr};
    slots["q"] = functionals::SlotInfo{SupportRegion::box({0.8}, {2.2}), nullptr};
    slots["r"] = functionals::SlotInfo{SupportRegion::box({2}, {3}), nullptr};
    auto term = [](const char* slot) {
      LocalFunctional f;
      f.add({{ExactScalar::i() * ExactScalar::atom(Atom::Coupling), 2, 0}, {{slot, 1}}, {}, {}});
      return f;
    };
    const bool additive = rgroups::z_additivity(za, term("p"), term("q"), term("r"), slots, 2);
    if (!cocycle) d += "cocycle ";
    if (!c7) d += "C7 ";
    if (!additive) d += "additivity ";
    if (!roundTrip) d += "round trip ";
    return cocycle && c7 && additive && roundTrip;
  });

  // 4. Wilson experiment
  criterion("wilson: counterterm log slope within 1e-3 and regulator invariance", 300, [](std::string& d) {
    auto c = rgroups::counterterm_extraction();
    char buf[128];
    std::snprintf(buf, sizeof buf, "rel err %.2e / %.2e, family spread %.2e", c.relativeError[0], c.relativeError[1],
                  c.familySpread);
    d = buf;
    return c.relativeError[0] < 1e-3 && c.relativeError[1] < 1e-3 && c.familySpread < 1e-3;
  });

  std::printf("%d failing criteria\n", failures);
  return failures ? 1 : 0;
}
