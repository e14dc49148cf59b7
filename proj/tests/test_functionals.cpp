#include "pqft/functionals.hpp"

#include "catch_amalgamated.hpp"

#include <cmath>

using namespace pqft;
using namespace pqft::functionals;

TEST_CASE("basis normalization phi^n / n! and (dphi)^2 / 2") {
  CHECK(basis_monomial(Basis::Phi4).coefficient == ExactScalar(Rational(1, 24)));
  CHECK(basis_monomial(Basis::Phi3).coefficient == ExactScalar(Rational(1, 6)));
  CHECK(basis_monomial(Basis::DPhi2).coefficient == ExactScalar(Rational(1, 2)));
  CHECK(basis_of_shape(0, 2) == Basis::DPhi2);
  CHECK_FALSE(basis_of_shape(5, 0));
}

TEST_CASE("raw monomials land on normalized basis coefficients") {
  LagrangianClass c;
  c.add_raw(ExactScalar(1), 4, 0);
  c.add_raw(ExactScalar(3), 2, 0);
  CHECK(c[Basis::Phi4] == ExactScalar(24));
  CHECK(c[Basis::Phi2] == ExactScalar(6));
  CHECK_THROWS_AS(c.add_raw(ExactScalar(1), 6, 0), std::invalid_argument);
}

TEST_CASE("ignored basis elements absorb contributions") {
  LagrangianClass c;
  c.ignore(Basis::One);
  c.add_raw(ExactScalar(5), 0, 0);
  CHECK(c[Basis::One].is_zero());
  LagrangianClass d;
  d.add_raw(ExactScalar(2), 0, 0);
  CHECK((c + d)[Basis::One].is_zero());
}

TEST_CASE("collapsed box delta terms") {
  LagrangianClass c;
  add_collapsed(c, {ExactScalar(7), 4, 0, 1});
  CHECK(c == LagrangianClass{});
  add_collapsed(c, {ExactScalar(3), 1, 1, 1});
  CHECK(c[Basis::DPhi2] == ExactScalar(-6));
  add_collapsed(c, {ExactScalar(1), 2, 2, 0});
  CHECK(c[Basis::Phi4] == ExactScalar(24));
  CHECK_THROWS_AS(add_collapsed(c, {ExactScalar(1), 2, 1, 1}), std::invalid_argument);
  CHECK_THROWS_AS(add_collapsed(c, {ExactScalar(1), 1, 1, 2}), std::invalid_argument);
}

TEST_CASE("local functional arithmetic merges like terms") {
  auto f = LocalFunctional::monomial(ExactScalar(2), Basis::Phi2, "f");
  auto g = LocalFunctional::monomial(ExactScalar(3), Basis::Phi2, "f");
  auto h = LocalFunctional::monomial(ExactScalar(3), Basis::Phi2, "g");
  CHECK((f + g).terms.size() == 1);
  CHECK((f + h).terms.size() == 2);
  CHECK((f - f).terms.empty());
  CHECK(to_class(f + g)[Basis::Phi2] == ExactScalar(5));
}

TEST_CASE("support geometry") {
  auto early = SupportRegion::slab(2, 0, 1, 0, 1), late = SupportRegion::slab(2, 5, 6, 0, 1);
  auto far = SupportRegion::slab(2, 0, 1, 10, 11);
  CHECK(later(late, early));
  CHECK_FALSE(later(early, late));
  CHECK(spacelike(early, far));
  CHECK(disjoint(early, late));
  CHECK_FALSE(disjoint(early, early));
  CHECK(strictly_later_slab(late, early));
}

TEST_CASE("pruning drops products of disjoint test functions") {
  SlotTable slots;
  slots["a"] = {SupportRegion::box({0}, {1}), nullptr};
  slots["b"] = {SupportRegion::box({2}, {3}), nullptr};
  slots["c"] = {SupportRegion::box({0.5}, {2.5}), nullptr};
  auto f = LocalFunctional::raw(ExactScalar(1), 2, 0, {{"a", 1}, {"b", 1}}) +
           LocalFunctional::raw(ExactScalar(1), 2, 0, {{"a", 1}, {"c", 1}});
  CHECK(f.pruned(slots).terms.size() == 1);
}

TEST_CASE("functional derivatives of plain monomials") {
  LocalTerm phi4{{ExactScalar(1), 4, 0}, {{"f", 1}}, {}, {}};
  auto k2 = functional_derivative(phi4, 2);
  REQUIRE(k2.terms.size() == 1);
  CHECK(k2.terms[0].coefficient == 12);
  CHECK(k2.terms[0].residualPlain == 2);
  CHECK(k2.deltaChain == 1);
  CHECK(functional_derivative(phi4, 5).terms.empty());
  LocalTerm kinetic{{ExactScalar(1), 0, 2}, {{"f", 1}}, {}, {}};
  auto k1 = functional_derivative(kinetic, 1);
  REQUIRE(k1.terms.size() == 1);
  CHECK(k1.terms[0].coefficient == -2);
  CHECK(k1.terms[0].outer == 1);
  CHECK_THROWS_AS(functional_derivative(phi4, 0), std::invalid_argument);
}

TEST_CASE("scaling exponents in d = 4") {
  CHECK(scaling_exponent(basis_monomial(Basis::Phi4), 4) == 0);
  CHECK(scaling_exponent(basis_monomial(Basis::Phi2), 4) == 2);
  CHECK(scaling_exponent(basis_monomial(Basis::DPhi2), 4) == 0);
  CHECK(scaling_exponent(basis_monomial(Basis::Phi3), 6) == 0);
  auto lr = ExactScalar::atom(Atom::LogRho);
  auto s = sigma_rho(LocalFunctional::monomial(ExactScalar(1), Basis::Phi2, "f"), lr, 4);
  CHECK(s.terms[0].logWeight == ExactScalar(2) * lr);
  CHECK(s.terms[0].slotLog == lr);
  auto l = scale_lagrangian(LocalFunctional::monomial(ExactScalar(1), Basis::Phi2, "f"), lr, 4);
  CHECK(l.terms[0].slotLog.is_zero());
  CHECK(mass_dimension_of_coefficient(ExactScalar::atom(Atom::Mass2)) == 2);
  CHECK_THROWS_AS(mass_dimension_of_coefficient(ExactScalar::atom(Atom::Mass2) + ExactScalar(1)),
                  std::invalid_argument);
}

namespace {

SlotTable unit_slot() {
  SlotTable slots;
  slots["f"] = {SupportRegion::box({-10}, {10}), [](double) { return 1.0; }};
  return slots;
}

}  // namespace

TEST_CASE("numeric evaluation of a local functional") {
  auto slots = unit_slot();
  FieldConfig phi{{Bump{0, 1, 1}}};
  auto f = LocalFunctional::raw(ExactScalar(1), 0, 0, {{"f", 1}});
  // int over [-10, 10] of 1
  CHECK(std::abs(evaluate(f, slots, phi) - std::complex<double>(20, 0)) < 1e-9);
  auto g = LocalFunctional::raw(ExactScalar::i(), 1, 0, {{"f", 1}});
  CHECK(std::abs(evaluate(g, slots, phi).real()) < 1e-12);
  CHECK(evaluate(g, slots, phi).imag() > 0);
}

TEST_CASE("additivity holds for local and fails for nonlocal functionals") {
  auto slots = unit_slot();
  auto density = LocalFunctional::raw(ExactScalar(1), 4, 0, {{"f", 1}}) +
                 LocalFunctional::raw(ExactScalar(2), 0, 2, {{"f", 1}});
  NumericFunctional local = [&](const FieldConfig& c) { return evaluate(density, slots, c); };
  NumericFunctional nonlocal = [&](const FieldConfig& c) {
    auto v = evaluate(LocalFunctional::raw(ExactScalar(1), 1, 0, {{"f", 1}}), slots, c);
    return v * v;
  };
  FieldConfig phi{{Bump{-4, 1, 1}}}, chi{{Bump{0, 3, 0.5}}}, psi{{Bump{4, 1, 2}}};
  CHECK(check_additivity(local, phi, chi, psi));
  CHECK_FALSE(check_additivity(nonlocal, phi, chi, psi));
  CHECK_THROWS_AS(check_additivity(local, phi, chi, phi), std::invalid_argument);
}

TEST_CASE("split pieces form a signed partition of unity") {
  for (int n : {1, 2, 5}) {
    auto pieces = support_split(0, 10, n);
    for (double x : {0.0, 1.3, 4.9, 7.7, 10.0}) {
      double s = 0;
      for (auto& p : pieces) s += p.sign * p.chi(x);
      INFO("pieces = " << n << ", x = " << x);
      CHECK(std::abs(s - 1) < 1e-12);
    }
  }
  CHECK_THROWS_AS(support_split(0, 1, 0), std::invalid_argument);
}

TEST_CASE("split functional reassembles the original") {
  SlotTable slots;
  slots["f"] = {SupportRegion::box({-1}, {11}), [](double x) { return std::exp(-(x - 5) * (x - 5) / 8); }};
  auto v = LocalFunctional::raw(ExactScalar(1), 2, 0, {{"f", 1}}) + LocalFunctional::raw(ExactScalar(3), 0, 0, {{"f", 1}});
  FieldConfig phi{{Bump{5, 6, 1}}};
  std::complex<double> total = 0;
  int tag = 0;
  for (auto& p : support_split(0, 10, 4)) {
    auto piece = split_piece(v, p, std::to_string(tag++), slots);
    total += double(p.sign) * evaluate(piece, slots, phi);
  }
  // only the phi^2 term is field-dependent; the constant term splits as chi^0 = 1 per piece
  auto quadratic = LocalFunctional::raw(ExactScalar(1), 2, 0, {{"f", 1}});
  auto constant = LocalFunctional::raw(ExactScalar(3), 0, 0, {{"f", 1}});
  const double pieceCount = 3 - 2;  // pairs minus interior singletons
  auto expect = evaluate(quadratic, slots, phi) + pieceCount * evaluate(constant, slots, phi);
  CHECK(std::abs(total - expect) < 1e-8 * std::abs(expect));
}
