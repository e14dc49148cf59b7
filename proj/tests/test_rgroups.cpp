#include "pqft/rgroups.hpp"

#include "catch_amalgamated.hpp"

#include <cmath>

using namespace pqft;
using namespace pqft::rgroups;
using functionals::SlotInfo;

namespace {

SMatrix reference_smatrix() {
  SMatrix S;
  S.d = 4;
  S.choices[2] = {ExactScalar(), ExactScalar()};
  return S;
}

const std::vector<Shape> kPhi2{{2, 0}};

ExactScalar ig() { return ExactScalar::i() * ExactScalar::atom(Atom::Coupling); }

LocalFunctional phi2(const std::string& slot) {
  LocalFunctional f;
  f.add({{ig(), 2, 0}, {{slot, 1}}, {}, {}});
  return f;
}

}  // namespace

TEST_CASE("smearing keys round trip") {
  Smearing s{{"f", 2}, {"g", 1}};
  CHECK(smear_from_key(smear_key(s)) == s);
  CHECK(merge({{"f", 1}}, {{"f", 1}, {"g", 1}}) == s);
}

TEST_CASE("separated regions need both regions non-empty") {
  auto a = SupportRegion::box({0}, {1}), b = SupportRegion::box({2}, {3});
  CHECK(separated(a, b));
  CHECK_FALSE(separated(a, SupportRegion{}));
  CHECK_FALSE(separated(a, a));
}

TEST_CASE("second order Z(rho) of the phi^2 model") {
  auto z = gml_cocycle(reference_smatrix(), ExactScalar::atom(Atom::LogRho), 2, kPhi2);
  const auto& out = z.comps.at({{2, 0}, {2, 0}});
  auto expect = ExactScalar::monomial(Rational(-1, 4), 1, -2, {{Atom::Hbar, 2}, {Atom::LogRho, 1}});
  CHECK(out.count({4, 0}) == 0);
  CHECK(out.size() == 1);
  CHECK(out.at({0, 0}) == expect);
}

TEST_CASE("identity scale shift gives the identity map") {
  auto z = gml_cocycle(reference_smatrix(), ExactScalar(), 3, kPhi2);
  CHECK(z == identity_map(4));
}

TEST_CASE("Z maps S onto the rescaled S-matrix to order 3") {
  auto S = reference_smatrix();
  auto lr = ExactScalar::atom(Atom::LogRho);
  auto z = gml_cocycle(S, lr, 3, kPhi2);
  CHECK(round_trip(S, S.with_scale_shift(lr), z, 3, kPhi2));
  CHECK_FALSE(round_trip(S, S.with_scale_shift(lr), identity_map(4), 3, kPhi2));
}

TEST_CASE("cocycle identity at order 2") {
  CHECK(cocycle_identity(reference_smatrix(), 2, kPhi2, 2));
}

TEST_CASE("B-hat relation between two S-matrices") {
  auto S = reference_smatrix(), S2 = S;
  S2.choices[2].deltaShift = ExactScalar::i();
  CHECK(relation_b2_check(S, S2, {{0, 0}, {1, 0}, {2, 0}}));
}

TEST_CASE("conditions on the cocycle") {
  auto z = gml_cocycle(reference_smatrix(), ExactScalar::atom(Atom::LogRho), 3, kPhi2);
  auto c = conditions(z);
  CHECK(c.c5);
  CHECK(c.c6);
  CHECK(c.c7);
  ZMap bad = z;
  bad.comps[{{2, 0}, {2, 0}}][{0, 0}] += ExactScalar::atom(Atom::LogRho).pow(2);
  CHECK_FALSE(c7_audit(bad));
  ZMap real = z;
  real.comps[{{2, 0}, {2, 0}}][{0, 0}] += ExactScalar(1);
  CHECK_FALSE(z_unitarity_condition(real));
}

TEST_CASE("support is preserved") {
  auto z = gml_cocycle(reference_smatrix(), ExactScalar::atom(Atom::LogRho), 2, kPhi2);
  CHECK(support_preserved(z, phi2("f") + phi2("g"), 2));
}

TEST_CASE("Z is additive on split supports") {
  SMatrix S;
  S.choices[2] = {ExactScalar(), ExactScalar::i()};
  auto z = gml_cocycle(S, ExactScalar::atom(Atom::LogRho), 2, kPhi2);
  SlotTable slots;
  slots["p"] = SlotInfo{SupportRegion::box({0}, {1}), nullptr};
  slots["q"] = SlotInfo{SupportRegion::box({0.8}, {2.2}), nullptr};
  slots["r"] = SlotInfo{SupportRegion::box({2}, {3}), nullptr};
  CHECK(z_additivity(z, phi2("p"), phi2("q"), phi2("r"), slots, 2));
}

TEST_CASE("unitarity of the S-matrix") {
  auto S = reference_smatrix();
  auto V = phi2("f");
  CHECK(unitarity_check(S, V));
  SMatrix realShift = S;
  realShift.choices[2].deltaShift = ExactScalar(1);
  CHECK_FALSE(unitarity_check(realShift, V));
  SMatrix imagShift = S;
  imagShift.choices[2].deltaShift = ExactScalar::i();
  CHECK(unitarity_check(imagShift, V));
  LocalFunctional realV;
  realV.add({{ExactScalar(1), 2, 0}, {{"f", 1}}, {}, {}});
  CHECK_THROWS_AS(unitarity_check(S, realV), std::invalid_argument);
}

TEST_CASE("causal factorization of the S-matrix") {
  SMatrix S;
  S.choices[2] = {ExactScalar(), ExactScalar::i()};
  SlotTable slots;
  slots["a"] = SlotInfo{SupportRegion::slab(4, 5, 6, 0, 1), nullptr};
  slots["b"] = SlotInfo{SupportRegion::slab(4, 0, 1, 0, 1), nullptr};
  LocalTerm A{{ig(), 2, 0}, {{"a", 1}}, {}, {}}, B{{ig(), 2, 0}, {{"b", 1}}, {}, {}};
  CHECK(causal_factorization(S, A, B, slots, 3));
  CHECK_FALSE(causal_factorization(S, B, A, slots, 3));
}

TEST_CASE("missing extension choices are reported") {
  LocalTerm A{{ig(), 2, 0}, {{"a", 1}}, {}, {}};
  CHECK_THROWS(s_matrix_term({A, A}, {0, 1}, SMatrix{}));
  LocalTerm C{{ExactScalar(1), 4, 0}, {{"a", 1}}, {}, {}};
  CHECK_THROWS(s_matrix_term({C, C}, {0, 1}, reference_smatrix()));
}

TEST_CASE("flow equation residual vanishes") {
  FlowSetup f;
  f.lambda = 2.0;
  for (int k : {3, 4})
    for (int n = 1; n <= 3; ++n) {
      LocalTerm v{{ExactScalar(1), k, 0}, {{"f", 1}}, {}, {}};
      INFO("phi^" << k << " at order " << n);
      CHECK(flow_equation_residual(v, n, f).empty());
    }
}

TEST_CASE("effective potential grows with the order") {
  FlowSetup f;
  LocalTerm v{{ExactScalar(1), 3, 0}, {{"f", 1}}, {}, {}};
  CHECK_FALSE(flow_effective_potential(v, 2, f).empty());
  CHECK(flow_effective_potential(v, 2, f).entries.size() > flow_effective_potential(v, 1, f).entries.size());
}

TEST_CASE("regularized fish grows like log Lambda / (8 pi^2)") {
  // E(Lambda) = int d^4z D_Lambda^2 A(z) ~ A(0) log(Lambda^2) / (16 pi^2)
  const double sigma = 5.0, a0 = std::pow(M_PI * sigma * sigma, 2);
  for (int family : {0, 1}) {
    auto fit = fit_log(family, sigma, default_lambda_grid());
    INFO("family " << family);
    CHECK(std::abs(fit.slope / a0 * 8 * M_PI * M_PI - 1) < 1e-3);
  }
  CHECK(euclidean_fish(100, 0, sigma) > euclidean_fish(10, 0, sigma));
}

TEST_CASE("counterterm extraction matches the log rho slope") {
  auto c = counterterm_extraction();
  CHECK(c.ok);
  CHECK(c.relativeError[0] < 1e-3);
  CHECK(c.relativeError[1] < 1e-3);
  CHECK(c.familySpread < 1e-3);
  CHECK(std::abs(c.exactSlope - std::complex<double>(0, 1 / (8 * M_PI * M_PI))) < 1e-15);
}
