#pragma once

#include "pqft/exact.hpp"

#include <boost/math/special_functions/gamma.hpp>
#include <boost/math/special_functions/digamma.hpp>

#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace pqft::kernels {

enum class Kind {
  DeltaRet,
  DeltaAdv,
  DeltaComm,    // Delta = Delta_R - Delta_A
  DeltaDirac,   // Delta_D = (Delta_R + Delta_A) / 2
  Hadamard,
  FeynmanH,
  PowerX2inv,   // (x^2 - i0)^(-p)
  LogOverX2pow, // log(-kappa^2 (x^2 - i0)) / (x^2 - i0)^p
  MassDerivH,   // d^n/d(m^2)^n of H_F at m = 0
  SmoothV,
  Regularized,  // k_Lambda = h_Lambda - H
  RegularizedDot, // d/dLambda k_Lambda
  DeltaDistrib, // derivative of the delta distribution
  Wightman,     // Delta_+ = H + i Delta / 2
  WightmanRev,  // Delta_+ with exchanged arguments
  AntiFeynmanH, // complex conjugate of H_F
  Extended,     // one edge of a bundle H_F^power extended at coincidence
  AntiExtended, // complex conjugate of Extended
};

inline const char* kind_name(Kind k) {
  switch (k) {
    case Kind::DeltaRet: return "DeltaRet";
    case Kind::DeltaAdv: return "DeltaAdv";
    case Kind::DeltaComm: return "DeltaComm";
    case Kind::DeltaDirac: return "DeltaDirac";
    case Kind::Hadamard: return "Hadamard";
    case Kind::FeynmanH: return "FeynmanH";
    case Kind::PowerX2inv: return "PowerX2inv";
    case Kind::LogOverX2pow: return "LogOverX2pow";
    case Kind::MassDerivH: return "MassDerivH";
    case Kind::SmoothV: return "SmoothV";
    case Kind::Regularized: return "Regularized";
    case Kind::RegularizedDot: return "RegularizedDot";
    case Kind::DeltaDistrib: return "DeltaDistrib";
    case Kind::Wightman: return "Wightman";
    case Kind::WightmanRev: return "WightmanRev";
    case Kind::AntiFeynmanH: return "AntiFeynmanH";
    case Kind::Extended: return "Extended";
    case Kind::AntiExtended: return "AntiExtended";
  }
  return "?";
}

enum class SupportRule {
  None,
  PastOfSecond,   // vanishes unless x is in the causal past of y
  FutureOfSecond, // vanishes unless x is in the causal future of y
  Coincidence,
};

struct KernelTag {
  Kind kind = Kind::FeynmanH;
  int dim = 4;
  int sig = 3;
  int massOrder = 0;
  bool muDep = false;
  int power = 0;        // p for PowerX2inv / LogOverX2pow, order for MassDerivH
  int derivs = 0;       // number of coordinate derivatives applied
  Atom logScale = Atom::LogKappa;
  int family = 0;       // regulator family id
  double lambda = 0.0;  // cutoff for Regularized
  std::vector<int> alpha; // multi-index for DeltaDistrib

  friend bool operator==(const KernelTag& a, const KernelTag& b) {
    return a.kind == b.kind && a.dim == b.dim && a.sig == b.sig && a.massOrder == b.massOrder &&
           a.muDep == b.muDep && a.power == b.power && a.derivs == b.derivs &&
           a.logScale == b.logScale && a.family == b.family && a.lambda == b.lambda &&
           a.alpha == b.alpha;
  }
  friend bool operator<(const KernelTag& a, const KernelTag& b) {
    auto key = [](const KernelTag& t) {
      return std::tie(t.kind, t.dim, t.sig, t.massOrder, t.muDep, t.power, t.derivs, t.logScale,
                      t.family, t.lambda, t.alpha);
    };
    return key(a) < key(b);
  }
};

inline KernelTag minkowski(Kind k, int d) {
  KernelTag t;
  t.kind = k;
  t.dim = d;
  t.sig = d - 1;
  t.muDep = (k == Kind::Hadamard || k == Kind::FeynmanH || k == Kind::SmoothV) && d % 2 == 0;
  return t;
}
inline KernelTag power_x2inv(int d, int p, int sig = -1) {
  KernelTag t = minkowski(Kind::PowerX2inv, d);
  if (sig >= 0) t.sig = sig;
  t.power = p;
  return t;
}
inline KernelTag log_over_x2pow(int d, int p, Atom scale) {
  KernelTag t = minkowski(Kind::LogOverX2pow, d);
  t.power = p;
  t.logScale = scale;
  t.muDep = scale == Atom::LogMu;
  return t;
}
inline KernelTag delta_distrib(int d, std::vector<int> alpha = {}) {
  KernelTag t = minkowski(Kind::DeltaDistrib, d);
  t.alpha = std::move(alpha);
  return t;
}
inline KernelTag regularized(int d, int family, double lambda) {
  KernelTag t = minkowski(Kind::Regularized, d);
  t.family = family;
  t.lambda = lambda;
  return t;
}

inline SupportRule support_rule(const KernelTag& t) {
  switch (t.kind) {
    case Kind::DeltaAdv: return SupportRule::PastOfSecond;
    case Kind::DeltaRet: return SupportRule::FutureOfSecond;
    case Kind::DeltaDistrib: return SupportRule::Coincidence;
    default: return SupportRule::None;
  }
}

// Symmetry under exchange of the two arguments: k(y,x) = sign * swapped(k)(x,y).
struct Swapped {
  Kind kind;
  int sign;
};
inline Swapped swap_arguments(Kind k) {
  switch (k) {
    case Kind::DeltaRet: return {Kind::DeltaAdv, 1};
    case Kind::DeltaAdv: return {Kind::DeltaRet, 1};
    case Kind::DeltaComm: return {Kind::DeltaComm, -1};
    case Kind::Wightman: return {Kind::WightmanRev, 1};
    case Kind::WightmanRev: return {Kind::Wightman, 1};
    default: return {k, 1};
  }
}

// Delta and Delta_D in terms of the retarded and advanced propagators.
inline std::vector<std::pair<Rational, Kind>> ret_adv_decomposition(Kind k) {
  switch (k) {
    case Kind::DeltaComm: return {{Rational(1), Kind::DeltaRet}, {Rational(-1), Kind::DeltaAdv}};
    case Kind::DeltaDirac:
      return {{Rational(1, 2), Kind::DeltaRet}, {Rational(1, 2), Kind::DeltaAdv}};
    case Kind::DeltaRet: return {{Rational(1), Kind::DeltaRet}};
    case Kind::DeltaAdv: return {{Rational(1), Kind::DeltaAdv}};
    default: throw std::invalid_argument("ret_adv_decomposition: not a propagator of the causal family");
  }
}

inline Rational scaling_degree(const KernelTag& t) {
  const int d = t.dim;
  Rational base;
  switch (t.kind) {
    case Kind::DeltaRet:
    case Kind::DeltaAdv:
    case Kind::DeltaComm:
    case Kind::DeltaDirac:
    case Kind::Hadamard:
    case Kind::FeynmanH:
    case Kind::Wightman:
    case Kind::WightmanRev:
    case Kind::AntiFeynmanH:
    case Kind::Extended:
    case Kind::AntiExtended: base = d - 2; break;
    case Kind::PowerX2inv:
    case Kind::LogOverX2pow: base = 2 * t.power; break;
    case Kind::MassDerivH: base = std::max(d - 2 - 2 * t.power, 0); break;
    case Kind::SmoothV:
    case Kind::Regularized:
    case Kind::RegularizedDot: base = 0; break;
    case Kind::DeltaDistrib: {
      int a = 0;
      for (int x : t.alpha) a += x;
      base = d + a;
      break;
    }
  }
  return base + t.derivs;
}

// Number of log factors a kernel carries under scaling.
inline int log_power(const KernelTag& t) {
  if (t.kind == Kind::LogOverX2pow) return 1;
  if (t.kind == Kind::MassDerivH && 2 * t.power >= t.dim - 2 && t.dim % 2 == 0) return 1;
  if ((t.kind == Kind::Hadamard || t.kind == Kind::FeynmanH) && t.dim == 2) return 1;
  return 0;
}

struct KernelExpr {
  ExactScalar prefactor = 1;
  std::vector<KernelTag> factors;
  int slots = 1; // number of relative coordinates the product depends on
};

inline Rational scaling_degree(const KernelExpr& k) {
  Rational sd = 0;
  if (k.factors.empty()) return sd;
  const int d = k.factors.front().dim;
  for (auto& t : k.factors) {
    if (t.dim != d) throw std::invalid_argument("scaling_degree: mixed dimensions");
    sd += scaling_degree(t);
  }
  return sd;
}

inline int log_power(const KernelExpr& k) {
  int p = 0;
  for (auto& t : k.factors) p += log_power(t);
  return p;
}

// Feynman propagator at m = 0: D_F = c_d / (x^2 - i0)^(d/2 - 1), c_4 = -1/(4 pi^2), c_6 = 1/(4 pi^3).
inline KernelExpr massless_feynman(int d) {
  if (d % 2 != 0 || d < 4) throw std::invalid_argument("massless_feynman: even d >= 4 required");
  // c_d = Gamma(d/2 - 1) / (4 pi^(d/2)) * (-1)^(d/2 - 1) ... with u = x^2 - i0 and |x^2| = -u.
  const int n = d / 2 - 1;
  Rational c = factorial(n - 1) / 4;
  if (n % 2 == 1) c = -c;
  KernelExpr e;
  e.prefactor = ExactScalar::monomial(c, 0, -(d / 2));
  e.factors = {power_x2inv(d, n)};
  return e;
}

struct MassTerm {
  int massOrder;
  KernelExpr kernel;
  bool uniqueRemainder;
};

// Leading terms of H_F in powers of m^2 (d = 4, 6).
inline std::vector<MassTerm> mass_expansion(int d) {
  std::vector<MassTerm> out;
  if (d == 4) {
    out.push_back({0, massless_feynman(4), false});
    KernelExpr logpart;
    logpart.prefactor = ExactScalar::monomial(Rational(1, 16), 0, -2);
    logpart.factors = {log_over_x2pow(4, 0, Atom::LogMu)};
    out.push_back({1, logpart, false});
    KernelExpr constant;
    constant.prefactor = ExactScalar::atom(Atom::F0);
    constant.factors = {power_x2inv(4, 0)};
    out.push_back({1, constant, false});
    return out;
  }
  if (d == 6) {
    out.push_back({0, massless_feynman(6), false});
    KernelExpr m2;
    m2.prefactor = ExactScalar::monomial(Rational(1, 16), 0, -3);
    m2.factors = {power_x2inv(6, 1)};
    out.push_back({1, m2, false});
    return out;
  }
  throw std::invalid_argument("mass_expansion: unsupported dimension");
}

// ---------------------------------------------------------------------------
// Modified Bessel functions from ascending series.

namespace detail {

inline Decimal rgamma(const Decimal& x) {
  // 1/Gamma(x), zero at the poles.
  Decimal r = boost::multiprecision::round(x);
  if (x <= 0 && x == r) return Decimal(0);
  return 1 / boost::math::tgamma(x);
}

inline Decimal digamma_int(int k) {
  // psi(k) for positive integer k
  Decimal s = -boost::math::constants::euler<Decimal>();
  for (int j = 1; j < k; ++j) s += Decimal(1) / j;
  return s;
}

constexpr int kMaxTerms = 4000;

template <class TermFn>
Decimal sum_series(TermFn term) {
  Decimal s = 0;
  int quiet = 0;
  for (int k = 0; k < kMaxTerms; ++k) {
    Decimal t = term(k);
    s += t;
    Decimal scale = boost::multiprecision::abs(s) > 1 ? boost::multiprecision::abs(s) : Decimal(1);
    if (boost::multiprecision::abs(t) <= scale * Decimal("1e-48")) {
      if (++quiet >= 3) return s;
    } else {
      quiet = 0;
    }
  }
  throw std::runtime_error("Bessel series: convergence budget exceeded");
}

}  // namespace detail

// I_nu(y) for real nu and y > 0.
inline Decimal bessel_i(const Decimal& nu, const Decimal& y) {
  const Decimal half = y / 2;
  const Decimal q = half * half;
  Decimal lead = boost::multiprecision::pow(half, nu);
  return lead * detail::sum_series([&](int k) {
           return boost::multiprecision::pow(q, k) / boost::math::tgamma(Decimal(k + 1)) *
                  detail::rgamma(nu + k + 1);
         });
}

// K_n(y) for integer n >= 0 from the log-bearing limit series.
inline Decimal bessel_k_int(int n, const Decimal& y) {
  const Decimal half = y / 2;
  const Decimal q = half * half;
  Decimal finite = 0;
  for (int k = 0; k < n; ++k)
    finite += boost::math::tgamma(Decimal(n - k)) / boost::math::tgamma(Decimal(k + 1)) *
              boost::multiprecision::pow(-q, k);
  finite *= boost::multiprecision::pow(half, -n) / 2;
  Decimal logpart = ((n + 1) % 2 == 0 ? 1 : -1) * boost::multiprecision::log(half) * bessel_i(Decimal(n), y);
  Decimal psi = detail::sum_series([&](int k) {
    return (detail::digamma_int(k + 1) + detail::digamma_int(n + k + 1)) *
           boost::multiprecision::pow(q, k) /
           (boost::math::tgamma(Decimal(k + 1)) * boost::math::tgamma(Decimal(n + k + 1)));
  });
  psi *= (n % 2 == 0 ? 1 : -1) * boost::multiprecision::pow(half, n) / 2;
  return finite + logpart + psi;
}

// K_nu for non-integer nu via K = pi (I_{-nu} - I_nu) / (2 sin(nu pi)).
inline Decimal bessel_k(const Decimal& nu, const Decimal& y) {
  Decimal r = boost::multiprecision::round(nu);
  if (nu == r) return bessel_k_int(std::abs(r.convert_to<int>()), y);
  const Decimal pi = boost::math::constants::pi<Decimal>();
  return pi * (bessel_i(-nu, y) - bessel_i(nu, y)) / (2 * boost::multiprecision::sin(nu * pi));
}

// ---------------------------------------------------------------------------
// Hadamard function at spacelike separation.

struct HadamardParts {
  Decimal regular;    // m^2-analytic part without the log
  Decimal logCoeff;   // coefficient of log(mu^2 |x^2| / 4)
};

// H^mu_m(x) for x^2 < 0 as an entire series in z = m^2 |x^2|, valid for any
// sign of m^2. Odd d: ascending series of I_{1-d/2}. Even d: the K_{d/2-1}
// log series combined with the log(mu^2/m^2) I_{d/2-1} term, where the m-dependence
// of the logarithms cancels.
inline HadamardParts hadamard_parts(int d, const Decimal& m2, const Decimal& x2) {
  if (d < 2) throw std::invalid_argument("hadamard: d >= 2 required");
  if (!(x2 < 0)) throw std::domain_error("hadamard: spacelike separation (x^2 < 0) required");
  const Decimal pi = boost::math::constants::pi<Decimal>();
  const Decimal r2 = -x2;
  const Decimal z4 = m2 * r2 / 4;
  HadamardParts out{0, 0};
  if (d % 2 == 1) {
    const Decimal nu = Decimal(2 - d) / 2;
    const Decimal pref = 1 / (4 * boost::multiprecision::sin((Decimal(d) / 2 - 1) * pi)) *
                         boost::multiprecision::pow(2 * pi, Decimal(2 - d) / 2) *
                         boost::multiprecision::pow(r2, nu) * boost::multiprecision::pow(Decimal(2), -nu);
    out.regular = pref * detail::sum_series([&](int k) {
      return boost::multiprecision::pow(z4, k) / boost::math::tgamma(Decimal(k + 1)) *
             detail::rgamma(nu + k + 1);
    });
    return out;
  }
  const int n = d / 2 - 1;
  const Decimal norm = boost::multiprecision::pow(2 * pi, -Decimal(d) / 2);
  const Decimal r2n = boost::multiprecision::pow(r2, n);
  Decimal finite = 0;
  for (int k = 0; k < n; ++k)
    finite += boost::math::tgamma(Decimal(n - k)) / boost::math::tgamma(Decimal(k + 1)) *
              boost::multiprecision::pow(-z4, k);
  finite *= boost::multiprecision::pow(Decimal(2), n - 1) / r2n;
  // y^n I_n(y) = 2^n sum (z/4)^(k+n) / (k! (n+k)!)
  Decimal ynIn = boost::multiprecision::pow(Decimal(2), n) * detail::sum_series([&](int k) {
                   return boost::multiprecision::pow(z4, k + n) /
                          (boost::math::tgamma(Decimal(k + 1)) * boost::math::tgamma(Decimal(n + k + 1)));
                 });
  Decimal psi = detail::sum_series([&](int k) {
    return (detail::digamma_int(k + 1) + detail::digamma_int(n + k + 1)) * boost::multiprecision::pow(z4, k) /
           (boost::math::tgamma(Decimal(k + 1)) * boost::math::tgamma(Decimal(n + k + 1)));
  });
  // y^n (y/2)^n = 2^n (z/4)^n
  psi *= (n % 2 == 0 ? 1 : -1) * boost::multiprecision::pow(z4, n) * boost::multiprecision::pow(Decimal(2), n) /
         (2 * r2n);
  const int sgn = (n + 1) % 2 == 0 ? 1 : -1;
  out.regular = norm * (finite + psi);
  // log(mu |x| / 2) = log(mu^2 |x^2| / 4) / 2
  out.logCoeff = norm * sgn * ynIn / r2n / 2;
  return out;
}

inline Decimal hadamard_eval_decimal(int d, const Decimal& m2, const Decimal& mu, const Decimal& x2) {
  HadamardParts p = hadamard_parts(d, m2, x2);
  if (d % 2 == 1) return p.regular;
  if (!(mu > 0)) throw std::domain_error("hadamard: mu > 0 required in even dimension");
  return p.regular + p.logCoeff * boost::multiprecision::log(mu * mu * (-x2) / 4);
}

inline double hadamard_eval(int d, double m2, double mu, double x2) {
  return hadamard_eval_decimal(d, Decimal(m2), Decimal(mu), Decimal(x2)).convert_to<double>();
}

// The Wightman function alone: (2 pi)^(-d/2) m^(d/2-1) |x^2|^((2-d)/4) K_{d/2-1}(m |x|).
// Undefined for m^2 < 0.
inline std::optional<Decimal> wightman_eval(int d, const Decimal& m2, const Decimal& x2) {
  if (!(x2 < 0)) throw std::domain_error("wightman: spacelike separation required");
  if (m2 < 0) return std::nullopt;
  const Decimal pi = boost::math::constants::pi<Decimal>();
  const Decimal r2 = -x2;
  const Decimal nu = Decimal(d) / 2 - 1;
  if (m2 == 0) {
    if (d == 2) return std::nullopt;
    return boost::math::tgamma(nu) / (4 * boost::multiprecision::pow(pi, Decimal(d) / 2) *
                                      boost::multiprecision::pow(r2, nu));
  }
  const Decimal m = boost::multiprecision::sqrt(m2);
  const Decimal y = m * boost::multiprecision::sqrt(r2);
  return boost::multiprecision::pow(2 * pi, -Decimal(d) / 2) * boost::multiprecision::pow(m, nu) *
         boost::multiprecision::pow(r2, Decimal(2 - d) / 4) * bessel_k(nu, y);
}

// Closed form of the even-d Hadamard function built literally from Delta^+ and
// the log(mu^2/m^2) I_{d/2-1} term; requires m^2 > 0.
inline Decimal hadamard_bessel_form(int d, const Decimal& m2, const Decimal& mu, const Decimal& x2) {
  const Decimal pi = boost::math::constants::pi<Decimal>();
  const Decimal r2 = -x2;
  const Decimal nu = Decimal(d) / 2 - 1;
  const Decimal m = boost::multiprecision::sqrt(m2);
  const Decimal y = m * boost::multiprecision::sqrt(r2);
  if (d % 2 == 1) {
    return 1 / (4 * boost::multiprecision::sin(nu * pi)) * boost::multiprecision::pow(2 * pi, Decimal(2 - d) / 2) *
           boost::multiprecision::pow(m, nu) * boost::multiprecision::pow(r2, Decimal(2 - d) / 4) *
           bessel_i(-nu, y);
  }
  const Decimal sgn = (d / 2) % 2 == 0 ? 1 : -1;
  return *wightman_eval(d, m2, x2) +
         sgn / (2 * boost::multiprecision::pow(2 * pi, Decimal(d) / 2)) * boost::multiprecision::log(mu * mu / m2) *
             boost::multiprecision::pow(m, nu) * boost::multiprecision::pow(r2, Decimal(2 - d) / 4) *
             bessel_i(nu, y);
}

// n-th central difference of f at 0 with step h.
inline std::optional<Decimal> central_difference(const std::function<std::optional<Decimal>(Decimal)>& f, int n,
                                                 const Decimal& h) {
  Decimal acc = 0;
  Decimal binom = 1;
  for (int k = 0; k <= n; ++k) {
    auto v = f((Decimal(n) / 2 - k) * h);
    if (!v) return std::nullopt;
    acc += ((k % 2) ? -binom : binom) * *v;
    binom = binom * (n - k) / (k + 1);
  }
  return acc / boost::multiprecision::pow(h, n);
}

// Richardson-stability of the n-th finite difference of f across 0.
inline bool smooth_at_zero(const std::function<std::optional<Decimal>(Decimal)>& f, int n,
                           double tol = 1e-6) {
  std::vector<Decimal> est;
  Decimal h = Decimal("0.05");
  for (int j = 0; j < 6; ++j, h /= 2) {
    auto v = central_difference(f, n, h);
    if (!v) return false;
    est.push_back(*v);
  }
  // central differences have even error expansion: one Richardson step in h^2
  std::vector<Decimal> rich;
  for (std::size_t j = 1; j < est.size(); ++j) rich.push_back((4 * est[j] - est[j - 1]) / 3);
  Decimal last = rich.back();
  Decimal prev = rich[rich.size() - 2];
  Decimal scale = boost::multiprecision::abs(last) > 1 ? boost::multiprecision::abs(last) : Decimal(1);
  return boost::multiprecision::abs(last - prev) <= Decimal(tol) * scale;
}

inline bool smoothness_in_m2_check(int d, double mu, double x2, int order) {
  const Decimal dmu(mu), dx2(x2);
  return smooth_at_zero(
      [&](Decimal m2) -> std::optional<Decimal> { return hadamard_eval_decimal(d, m2, dmu, dx2); }, order);
}

// ---------------------------------------------------------------------------
// Coincidence limit of v = (1/2) mu d/dmu H.

struct VCoincidence {
  ExactScalar exact; // coefficient times m2^(d/2-1)
  double value;
};

inline VCoincidence v_coincidence(int d, double m2, double /*mu*/) {
  if (d % 2 != 0) throw std::invalid_argument("v_coincidence: even dimension required");
  const int n = d / 2 - 1;
  // v(x,x) = (-1)^(d/2) m^(d-2) / (2 (2 pi)^(d/2) 2^n n!)
  Rational c = Rational(1) / (2 * rational_pow(2, d / 2) * rational_pow(2, n) * factorial(n));
  if ((d / 2) % 2 == 1) c = -c;
  VCoincidence out;
  out.exact = ExactScalar::monomial(c, 0, -(d / 2), {{Atom::Mass2, n}});
  out.value = to_double(c) * std::pow(M_PI, -d / 2.0) * std::pow(m2, n);
  return out;
}

// d v(x,x) / d m^2 at m^2 = 0 (d = 4 only carries a nonzero value).
inline ExactScalar v_mass_derivative(int d) {
  VCoincidence v = v_coincidence(d, 0.0, 1.0);
  return v.exact.derivative(Atom::Mass2).substitute(Atom::Mass2, 0);
}

// ---------------------------------------------------------------------------
// F(0): constant m^2 term of H_F in d = 4, fixed from the Bessel form.

// Numerically: [H_m(x) - D_F(x) - m^2 f(0) log(mu^2 |x^2|)] / m^2 as m -> 0,
// evaluated with the literal K_1 / I_1 expression and Richardson extrapolation.
inline double f0_numeric(double x2 = -1.0, double mu = 1.0) {
  const Decimal pi = boost::math::constants::pi<Decimal>();
  const Decimal dx2(x2), dmu(mu);
  auto remainder = [&](const Decimal& m2) {
    Decimal h = hadamard_bessel_form(4, m2, dmu, dx2);
    Decimal df = 1 / (4 * pi * pi * (-dx2));
    Decimal logterm = m2 / (16 * pi * pi) * boost::multiprecision::log(dmu * dmu * (-dx2));
    return (h - df - logterm) / m2;
  };
  std::vector<Decimal> est;
  Decimal m2("1e-6");
  for (int j = 0; j < 4; ++j, m2 /= 4) est.push_back(remainder(m2));
  // remainder = F0 + O(m^2 log m^2); extrapolate linearly in m^2 twice
  Decimal a = (4 * est[3] - est[2]) / 3;
  return a.convert_to<double>();
}

// Closed form resolved from the small-argument expansion of K_1:
// F(0) = (2C - 1 - 2 log 2) / (2^4 pi^2).
inline double f0_closed_form() {
  const double euler = 0.57721566490153286060651209;
  return (2 * euler - 1 - 2 * std::log(2.0)) / (16 * M_PI * M_PI);
}

// Regularized family: h_Lambda is H_F with x^2 -> x^2 - a_f / Lambda^2; family 0 has a = 1,
// family 1 a = 4 (a rescaled mollification width).
inline double regulator_shift(int family) { return family == 0 ? 1.0 : 4.0; }

}  // namespace pqft::kernels
