#include "pqft/models.hpp"

#include "catch_amalgamated.hpp"

using namespace pqft;
using namespace pqft::models;
using functionals::Basis;

namespace {

ExactScalar mono(Rational q, int ipow, int pipow, std::vector<std::pair<Atom, int>> syms = {}) {
  return ExactScalar::monomial(q, ipow, pipow, std::move(syms));
}

void require_checks(const std::vector<Check>& checks) {
  for (auto& c : checks) {
    INFO(c.name << ": " << c.detail);
    CHECK(c.ok);
  }
}

}  // namespace

TEST_CASE("phi^3 in six dimensions") {
  auto r = phi3_d6_beta();
  require_checks(r.checks);
  CHECK(r.component("a0") == mono(Rational(1, 384), 1, -3));
  CHECK(r.component("a1") == mono(Rational(1, 64), 1, -3));
  CHECK(r.component("a2") == mono(Rational(1, 64), 0, -3));
  CHECK(r.beta[Basis::Phi3] == mono(Rational(-3, 256), 0, -3, {{Atom::Hbar, 1}, {Atom::Coupling, 3}}));
  CHECK(r.beta[Basis::Phi4].is_zero());
  CHECK(r.gammaDot == mono(Rational(1, 384), 0, -3, {{Atom::Hbar, 1}, {Atom::Coupling, 2}}));
}

TEST_CASE("phi^3 rejects unsupported orders") {
  CHECK_THROWS_AS(phi3_d6_B(1), std::invalid_argument);
  CHECK_THROWS_AS(phi3_d6_B(4), std::invalid_argument);
}

TEST_CASE("phi^4 in four dimensions") {
  auto r = phi4_d4_beta();
  require_checks(r.checks);
  CHECK(r.component("fish") == mono(Rational(-1, 16), 1, -2, {{Atom::Hbar, 2}}));
  CHECK(r.component("b1") == mono(Rational(-1, 8), 1, -2));
  CHECK(r.component("sunset_box") == mono(Rational(1, 1536), 1, -4, {{Atom::Hbar, 3}}));
  CHECK(r.beta[Basis::Phi4] == mono(Rational(3, 16), 0, -2, {{Atom::Hbar, 1}, {Atom::Coupling, 2}}));
  CHECK(r.beta[Basis::Phi2] ==
        mono(Rational(-1, 16), 0, -2, {{Atom::Hbar, 1}, {Atom::Coupling, 1}, {Atom::Mass2, 1}}));
  CHECK(r.gammaDot == mono(Rational(1, 1536), 0, -4, {{Atom::Hbar, 2}, {Atom::Coupling, 2}}));
  for (Basis b : functionals::kBasis)
    CHECK(free_of(r.beta[b], {Atom::F0, Atom::LogTau, Atom::LogMu}));
}

TEST_CASE("phi^4 sunset carries F0 and the extension scales") {
  auto b = phi4_d4_B();
  auto m2 = b.component("sunset_m2");
  CHECK(m2.depends_on(Atom::F0));
  CHECK(m2.depends_on(Atom::LogTau));
  CHECK(m2.coefficient(Atom::F0, 1) == mono(Rational(-1, 16), 1, -2, {{Atom::Hbar, 3}}));
}

TEST_CASE("phi^4 higher orders are reported separately") {
  auto r = phi4_d4_beta();
  REQUIRE(r.higherOrder.size() == 2);
  CHECK(r.higherOrder[0].value == mono(Rational(1, 768), 0, -4, {{Atom::Hbar, 2}, {Atom::Coupling, 3}}));
  for (auto& c : r.higherOrder)
    CHECK(c.value.coefficient(Atom::Coupling, 3) * ExactScalar::atom(Atom::Coupling, 3) == c.value);
}

TEST_CASE("phi^2 example triple") {
  auto e = phi2_d4_example();
  require_checks(e.checks);
  CHECK(e.ok());
  // V = (i g / hbar) int f phi^2
  REQUIRE(e.V.terms.size() == 1);
  CHECK(e.V.terms[0].mono.coefficient == mono(1, 1, 0, {{Atom::Coupling, 1}, {Atom::Hbar, -1}}));
  LocalFunctional wantZ = e.V, wantAlpha = e.V, wantB;
  wantZ.add({{mono(Rational(1, 8), 1, -2, {{Atom::Coupling, 2}, {Atom::LogRho, 1}}), 0, 0}, {{"f", 2}}, {}, {}});
  wantAlpha.add(
      {{mono(Rational(-1, 8), 1, -2, {{Atom::Coupling, 1}, {Atom::Mass2, 1}, {Atom::LogRho, 1}}), 0, 0}, {{"f", 1}}, {}, {}});
  wantB.add({{mono(Rational(-1, 8), 1, -2, {{Atom::Coupling, 1}, {Atom::Mass2, 1}}), 0, 0}, {{"f", 1}}, {}, {}});
  wantB.add({{mono(Rational(1, 8), 1, -2, {{Atom::Coupling, 2}}), 0, 0}, {{"f", 2}}, {}, {}});
  CHECK(e.zOfV == wantZ);
  CHECK(e.alphaOfV == wantAlpha);
  CHECK(e.bhatOfV == wantB);
}

TEST_CASE("fish consistency chain") {
  auto f = fish_consistency_chain();
  CHECK(f.exactAgree);
  CHECK(f.numericAgree);
  CHECK(f.closedForm == mono(Rational(-1, 16), 1, -2));
  CHECK(std::abs(f.euclideanOracle - 2 * M_PI * M_PI) < 1e-6);
}

TEST_CASE("BetaReport JSON layout") {
  auto j = to_json(phi3_d6_beta());
  CHECK(j["model"] == "phi3_d6");
  CHECK(j.contains("components"));
  CHECK(j.contains("gammaDot"));
  CHECK(j.contains("lambdaDot"));
  CHECK(j.contains("beta"));
  CHECK(j.contains("checks"));
  auto s = scalar_json(mono(Rational(-3, 256), 0, -3, {{Atom::Hbar, 1}, {Atom::Coupling, 3}}));
  REQUIRE(s["terms"].size() == 1);
  CHECK(s["terms"][0]["atoms"] == "hbar^1 g^3");
  CHECK(s["terms"][0]["re"] == "-3.77947669139056513879945929944e-04");
}

TEST_CASE("model pipelines are deterministic") {
  CHECK(to_json(phi4_d4_beta()).dump() == to_json(phi4_d4_beta()).dump());
}
