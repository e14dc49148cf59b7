#include "pqft/products.hpp"

#include "catch_amalgamated.hpp"

using namespace pqft;
using namespace pqft::products;
using functionals::SupportRegion;

namespace {

const Truncation kTrunc{4, 0};

GraphSum phi_power(int label, int plain, SupportRegion region = {}, int deriv = 0) {
  return GraphSum::monomial(ExactScalar(1), label, "f" + std::to_string(label), plain, deriv, std::move(region),
                            kTrunc);
}

}  // namespace

TEST_CASE("star product of two linear fields") {
  auto s = star(phi_power(0, 1), phi_power(1, 1));
  REQUIRE(s.entries.size() == 2);
  CHECK(grading_conserved(s));
  auto one = hbar_part(s, 1);
  REQUIRE(one.entries.size() == 1);
  auto& e = one.entries.begin()->second;
  CHECK(e.graph.edges.at(0).tag.kind == Kind::DeltaComm);
  CHECK(e.prefactor.at({1, 0}) == ExactScalar::i() / Rational(2));
}

TEST_CASE("unit is neutral and hbar parts reassemble") {
  auto a = phi_power(0, 3), b = phi_power(1, 2, {}, 1);
  CHECK(star(GraphSum::unit(kTrunc), a) == a);
  auto s = star(a, b);
  GraphSum sum = GraphSum::zero(kTrunc);
  for (int n = 0; n <= kTrunc.h_max; ++n) sum += hbar_part(s, n);
  CHECK(sum == s);
}

TEST_CASE("symmetry factors of the phi^2 star phi^2 product") {
  auto s = star(phi_power(0, 2), phi_power(1, 2));
  auto two = hbar_part(s, 2);
  REQUIRE(two.entries.size() == 1);
  // 2! 2! / 2! edge multiplicity times (i/2)^2
  CHECK(two.entries.begin()->second.prefactor.at({2, 0}) == ExactScalar(Rational(-1, 2)));
}

TEST_CASE("star matches the literal exponential of the contraction operator") {
  for (auto [pa, da, pb, db] : std::vector<std::array<int, 4>>{{1, 0, 1, 0}, {3, 0, 2, 0}, {2, 1, 1, 1}, {4, 0, 4, 0}}) {
    auto a = phi_power(0, pa, {}, da), b = phi_power(1, pb, {}, db);
    INFO(pa << " " << da << " " << pb << " " << db);
    CHECK(reference::product(a, b, star_rule(4), 4) == star(a, b));
    CHECK(reference::product(a, b, timeordered_rule(4), 4) == timeordered(a, b));
  }
}

TEST_CASE("time-ordered product is symmetric") {
  auto a = phi_power(0, 3), b = phi_power(1, 2, {}, 1);
  CHECK(timeordered(a, b) == timeordered(b, a));
}

TEST_CASE("commutator keeps odd edge counts and vanishes at spacelike separation") {
  auto a = phi_power(0, 2), b = phi_power(1, 2);
  auto c = commutator(a, b);
  CHECK(hbar_part(c, 2).empty());
  CHECK(hbar_part(c, 1) == ExactScalar(2) * hbar_part(star(a, b), 1));
  auto x = phi_power(0, 2, SupportRegion::slab(4, 0, 1, 0, 1));
  auto y = phi_power(1, 2, SupportRegion::slab(4, 0, 1, 10, 11));
  CHECK(commutator(x, y).empty());
  CHECK_FALSE(star(x, y).empty());
}

TEST_CASE("shared labels are rejected") {
  CHECK_THROWS_AS(star(phi_power(0, 1), phi_power(0, 1)), std::invalid_argument);
}

TEST_CASE("causal factorization requires ordered supports") {
  auto late = phi_power(0, 2, SupportRegion::slab(4, 5, 6, 0, 1));
  auto early = phi_power(1, 2, SupportRegion::slab(4, 0, 1, 0, 1));
  CHECK(causal_factorization_check(late, early));
  CHECK_THROWS_AS(causal_factorization_check(early, late), std::invalid_argument);
}

TEST_CASE("causal factorization fails for the reversed Wightman order") {
  auto late = phi_power(0, 2, SupportRegion::slab(4, 5, 6, 0, 1));
  auto early = phi_power(1, 2, SupportRegion::slab(4, 0, 1, 0, 1));
  auto split = [](const Edge& e) {
    std::vector<std::pair<ExactScalar, KernelTag>> out;
    for (auto& [q, k] : kernels::ret_adv_decomposition(e.tag.kind)) {
      KernelTag t = e.tag;
      t.kind = k;
      out.push_back({ExactScalar(q), t});
    }
    return out;
  };
  auto wrong = rewrite_edges(timeordered(late, early), split) - rewrite_edges(star(early, late), split);
  CHECK_FALSE(pruned(wrong).empty());
}

TEST_CASE("Dyson-Schwinger identity for a phi^3 vertex") {
  auto f = phi_power(0, 3);
  auto kg = GraphSum::field_kg(1, "g", {}, kTrunc);
  CHECK(dyson_schwinger_check(f, kg));
  CHECK_THROWS_AS(first_derivative_pairing(f, kg + phi_power(2, 1)), std::invalid_argument);
}

TEST_CASE("conjugation reverses the star product") {
  auto a = GraphSum::monomial(ExactScalar::i(), 0, "a", 2, 0, {}, kTrunc);
  auto b = GraphSum::monomial(ExactScalar(3), 1, "b", 1, 1, {}, kTrunc);
  CHECK(conj(star(a, b)) == star(conj(b), conj(a)));
}

TEST_CASE("regularized products interpolate pointwise and Feynman products") {
  auto a = phi_power(0, 2), b = phi_power(1, 2);
  CHECK(regularized_product(a, b, 0.0) == pointwise(a, b));
  CHECK(regularized_product(a, b, kInfiniteCutoff) == contract(a, b, feynman_rule(4)));
  CHECK_THROWS_AS(regularized_product(a, b, -1.0), std::invalid_argument);
  auto d = dM_dLambda(a, b, 3.0);
  for (auto& [k, e] : d.entries) {
    int dots = 0;
    for (auto& edge : e.graph.edges) dots += edge.tag.kind == Kind::RegularizedDot;
    CHECK(dots == 1);
  }
  CHECK_THROWS_AS(dM_dLambda(a, b, 0.0), std::invalid_argument);
}

TEST_CASE("graph dump is deterministic") {
  auto s1 = star(phi_power(0, 2), phi_power(1, 3));
  auto s2 = star(phi_power(0, 2), phi_power(1, 3));
  CHECK(s1.dump() == s2.dump());
  CHECK_FALSE(s1.dump().empty());
}
