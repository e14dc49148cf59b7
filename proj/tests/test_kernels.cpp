#include "pqft/kernels.hpp"

#include "catch_amalgamated.hpp"

#include <cmath>

using namespace pqft;
using namespace pqft::kernels;

TEST_CASE("scaling degrees of the kernel catalogue") {
  CHECK(scaling_degree(minkowski(Kind::DeltaComm, 4)) == 2);
  CHECK(scaling_degree(minkowski(Kind::FeynmanH, 6)) == 4);
  CHECK(scaling_degree(power_x2inv(6, 4)) == 8);
  CHECK(scaling_degree(delta_distrib(4, {1, 1})) == 6);
  CHECK(scaling_degree(minkowski(Kind::SmoothV, 4)) == 0);
  KernelExpr fish;
  fish.factors = {minkowski(Kind::FeynmanH, 4), minkowski(Kind::FeynmanH, 4)};
  CHECK(scaling_degree(fish) == 4);
}

TEST_CASE("log powers") {
  CHECK(log_power(log_over_x2pow(4, 1, Atom::LogMu)) == 1);
  CHECK(log_power(minkowski(Kind::FeynmanH, 2)) == 1);
  CHECK(log_power(minkowski(Kind::FeynmanH, 4)) == 0);
}

TEST_CASE("argument exchange is an involution") {
  for (Kind k : {Kind::DeltaRet, Kind::DeltaAdv, Kind::DeltaComm, Kind::Wightman, Kind::WightmanRev, Kind::FeynmanH}) {
    auto s = swap_arguments(k);
    auto t = swap_arguments(s.kind);
    CHECK(t.kind == k);
    CHECK(s.sign * t.sign == 1);
  }
  CHECK(swap_arguments(Kind::DeltaComm).sign == -1);
}

TEST_CASE("commutator and Dirac propagators from retarded and advanced") {
  auto comm = ret_adv_decomposition(Kind::DeltaComm);
  REQUIRE(comm.size() == 2);
  CHECK(comm[0].first == 1);
  CHECK(comm[1].first == -1);
  auto dirac = ret_adv_decomposition(Kind::DeltaDirac);
  CHECK(dirac[0].first == Rational(1, 2));
  CHECK(dirac[1].first == Rational(1, 2));
  CHECK_THROWS_AS(ret_adv_decomposition(Kind::FeynmanH), std::invalid_argument);
}

TEST_CASE("massless Feynman prefactors") {
  CHECK(massless_feynman(4).prefactor == ExactScalar::monomial(Rational(-1, 4), 0, -2));
  CHECK(massless_feynman(6).prefactor == ExactScalar::monomial(Rational(1, 4), 0, -3));
  CHECK_THROWS_AS(massless_feynman(3), std::invalid_argument);
}

TEST_CASE("d = 3 parametrix equals the half-integer Bessel closed form") {
  for (double m2 : {0.25, 1.0, 2.5})
    for (double x2 : {-0.1, -1.0, -3.0}) {
      const double r = std::sqrt(-x2), m = std::sqrt(m2);
      const double closed = std::cosh(m * r) / (4 * M_PI * r);
      INFO("m2 = " << m2 << ", x2 = " << x2);
      CHECK(std::abs(hadamard_eval(3, m2, 1.0, x2) - closed) <= 1e-10 * closed);
    }
}

TEST_CASE("even-dimensional series agrees with the Bessel form") {
  for (int d : {4, 6})
    for (double m2 : {0.3, 1.7}) {
      Decimal series = hadamard_eval_decimal(d, Decimal(m2), Decimal(1), Decimal(-0.7));
      Decimal bessel = hadamard_bessel_form(d, Decimal(m2), Decimal(1), Decimal(-0.7));
      INFO("d = " << d << ", m2 = " << m2);
      CHECK(boost::multiprecision::abs(series - bessel) < Decimal("1e-20") * boost::multiprecision::abs(bessel));
    }
}

TEST_CASE("d = 2 massless limit is finite") {
  const double h0 = hadamard_eval(2, 0.0, 1.0, -1.0);
  CHECK(std::isfinite(h0));
  CHECK(std::abs(hadamard_eval(2, 1e-10, 1.0, -1.0) - h0) < 1e-8);
}

TEST_CASE("parametrix is smooth in m^2 for d = 4 and 6") {
  CHECK(smoothness_in_m2_check(4, 1.0, -1.0, 2));
  CHECK(smoothness_in_m2_check(6, 1.0, -0.5, 2));
}

TEST_CASE("smoothness detector rejects m^4 log |m^2|") {
  auto f = [](Decimal m2) -> std::optional<Decimal> {
    if (m2 == 0) return Decimal(0);
    return m2 * m2 * boost::multiprecision::log(boost::multiprecision::abs(m2));
  };
  CHECK_FALSE(smooth_at_zero(f, 2));
  CHECK(smooth_at_zero([](Decimal m2) -> std::optional<Decimal> { return boost::multiprecision::exp(m2); }, 2));
}

TEST_CASE("F(0) numeric limit matches the closed form") {
  CHECK(std::abs(f0_numeric() - f0_closed_form()) < 1e-6);
  CHECK(std::abs(f0_numeric(-2.0, 1.5) - f0_closed_form()) < 1e-6);
}

TEST_CASE("coincidence limit of v") {
  auto v = v_coincidence(4, 2.0, 1.0);
  auto ev = evaluate(v.exact.substitute(Atom::Mass2, 2), AtomValues::standard());
  REQUIRE(ev);
  CHECK(std::abs(ev->re.convert_to<double>() - v.value) < 1e-15);
  CHECK(v_mass_derivative(4) == ExactScalar::monomial(Rational(1, 16), 0, -2));
  CHECK(v_mass_derivative(6).is_zero());
  CHECK_THROWS_AS(v_coincidence(3, 1.0, 1.0), std::invalid_argument);
}

TEST_CASE("regulator families are distinct") {
  CHECK(regulator_shift(0) != regulator_shift(1));
  auto t = regularized(4, 1, 10.0);
  CHECK(t.kind == Kind::Regularized);
  CHECK(scaling_degree(t) == 0);
}
