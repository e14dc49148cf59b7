#pragma once

#include "pqft/kernels.hpp"

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <array>
#include <cmath>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace pqft::renorm {

using kernels::Kind;
using kernels::KernelExpr;
using kernels::KernelTag;

// Area of the unit sphere S^(d-1), exact for every d >= 1.
inline ExactScalar sphere_area(int d) {
  if (d < 1) throw std::invalid_argument("sphere_area: d >= 1 required");
  if (d % 2 == 0) return ExactScalar::monomial(Rational(2) / factorial(d / 2 - 1), 0, d / 2);
  // Gamma(d/2) = sqrt(pi) (d-2)!! / 2^((d-1)/2)
  Rational dfact = 1;
  for (int j = d - 2; j > 1; j -= 2) dfact *= j;
  return ExactScalar::monomial(rational_pow(2, (d + 1) / 2) / dfact, 0, (d - 1) / 2);
}

// (d/2)(d/2 + 1)...(d/2 + k - 1)
inline Rational rising_half(int d, int k) {
  Rational r = 1;
  for (int j = 0; j < k; ++j) r *= Rational(d, 2) + j;
  return r;
}

// box^k (x^2)^k in d Euclidean dimensions.
inline Rational box_power_identity(int d, int k) {
  return rational_pow(4, k) * factorial(k) * rising_half(d, k);
}

// Same number by applying the Laplacian k times to the expanded polynomial.
inline Rational box_power_bruteforce(int d, int k) {
  using Poly = std::map<std::vector<int>, Rational>;
  Poly p;
  p[std::vector<int>(d, 0)] = 1;
  for (int j = 0; j < k; ++j) {
    Poly q;
    for (auto& [e, c] : p)
      for (int a = 0; a < d; ++a) {
        auto f = e;
        f[a] += 2;
        q[f] += c;
      }
    p = std::move(q);
  }
  for (int j = 0; j < k; ++j) {
    Poly q;
    for (auto& [e, c] : p)
      for (int a = 0; a < d; ++a) {
        if (e[a] < 2) continue;
        auto f = e;
        f[a] -= 2;
        q[f] += c * e[a] * (e[a] - 1);
      }
    p = std::move(q);
  }
  Rational total = 0;
  for (auto& [e, c] : p) total += c;
  return total;
}

// Scaling violation of the almost homogeneous extension of (x^2 - i0)^(-d/2 - k):
// rho d/drho [rho^(d+2k) t(rho x)] = c_k box^k delta.
inline ExactScalar c_k(int d, int sig, int k) {
  return ExactScalar::monomial(1, sig, 0) * sphere_area(d) /
         (rational_pow(4, k) * factorial(k) * rising_half(d, k));
}

// box (x^2 - i0)^(1 - d/2) = i^s (2 - d) |S^(d-1)| delta
inline ExactScalar fundamental_solution(int d, int sig) {
  return ExactScalar::monomial(2 - d, sig, 0) * sphere_area(d);
}

// ---------------------------------------------------------------------------
// Extensions of kernels with one relative coordinate.

struct ViolationTerm {
  int box = 0;
  ExactScalar coefficient;
};

struct ExtensionRecord {
  KernelExpr kernel;
  int ambientDim = 0;
  Rational sd;
  Rational omega;
  std::vector<ViolationTerm> violation;
  int logPower = 0;
  bool unique = true;
};

inline ExtensionRecord extend(const KernelExpr& k, int ambientDim) {
  if (k.factors.empty()) throw std::invalid_argument("extend: empty kernel");
  const int d = k.factors.front().dim;
  if (ambientDim != d * k.slots)
    throw std::invalid_argument("extend: ambient dimension " + std::to_string(ambientDim) +
                                " does not match kernel dimension " + std::to_string(d));
  ExtensionRecord r;
  r.kernel = k;
  r.ambientDim = ambientDim;
  r.sd = kernels::scaling_degree(k);
  r.omega = r.sd - ambientDim;
  r.unique = r.omega < 0;
  r.logPower = kernels::log_power(k) + (r.unique ? 0 : 1);
  if (r.unique) return r;
  if (k.slots != 1) throw std::invalid_argument("extend: several relative coordinates need a Feynman reduction");
  int p = 0;
  for (auto& t : k.factors) {
    if (t.kind != Kind::PowerX2inv || t.derivs != 0)
      throw std::invalid_argument(std::string("extend: no violation rule for ") + kernels::kind_name(t.kind));
    p += t.power;
  }
  const int sig = k.factors.front().sig;
  const int omega = 2 * p - d;
  if (omega % 2 != 0) return r;
  r.violation.push_back({omega / 2, k.prefactor * c_k(d, sig, omega / 2)});
  return r;
}

inline KernelExpr power_kernel(int d, int p, ExactScalar prefactor = 1) {
  KernelExpr e;
  e.prefactor = std::move(prefactor);
  e.factors = {kernels::power_x2inv(d, p)};
  return e;
}

// ---------------------------------------------------------------------------
// Radial functions sum c u^(-p) L^j, u = x^2 - i0, L = log(-s^2 u) for a scale atom s.

struct Radial {
  std::map<std::pair<int, int>, ExactScalar> terms;
  Atom scale = Atom::LogMu;

  static Radial power(int p, ExactScalar c = 1, int logs = 0, Atom scale = Atom::LogMu) {
    Radial r;
    r.scale = scale;
    if (!c.is_zero()) r.terms[{p, logs}] = std::move(c);
    return r;
  }
  void add(int p, int j, const ExactScalar& c) {
    auto& slot = terms[{p, j}];
    slot += c;
    if (slot.is_zero()) terms.erase({p, j});
  }
  bool empty() const { return terms.empty(); }
  Radial& operator+=(const Radial& o) {
    check_scale(o);
    for (auto& [k, c] : o.terms) add(k.first, k.second, c);
    return *this;
  }
  friend Radial operator+(Radial a, const Radial& b) { return a += b; }
  friend Radial operator-(Radial a, const Radial& b) { return a += ExactScalar(-1) * b; }
  friend Radial operator*(const ExactScalar& s, const Radial& f) {
    Radial r;
    r.scale = f.scale;
    for (auto& [k, c] : f.terms) r.add(k.first, k.second, s * c);
    return r;
  }
  friend Radial operator*(const Radial& f, const Radial& g) {
    f.check_scale(g);
    Radial r;
    r.scale = f.scale;
    for (auto& [a, x] : f.terms)
      for (auto& [b, y] : g.terms) r.add(a.first + b.first, a.second + b.second, x * y);
    return r;
  }
  friend bool operator==(const Radial& a, const Radial& b) { return a.terms == b.terms; }

  // d/du
  Radial derivative() const {
    Radial r;
    r.scale = scale;
    for (auto& [k, c] : terms) {
      auto [p, j] = k;
      if (p != 0 || j != 0) r.add(p + 1, j, ExactScalar(-p) * c);
      if (j > 0) r.add(p + 1, j - 1, ExactScalar(j) * c);
    }
    return r;
  }

 private:
  void check_scale(const Radial& o) const {
    if (!empty() && !o.empty() && o.scale != scale)
      throw std::invalid_argument("Radial: mixed log scales");
  }
};

// d_mu f d^mu g for radial f, g
inline Radial grad_dot(const Radial& f, const Radial& g) {
  return ExactScalar(4) * (Radial::power(-1, 1, 0, f.scale) * (f.derivative() * g.derivative()));
}
// box f = 4 u f'' + 2 d f'
inline Radial box(const Radial& f, int d) {
  Radial f1 = f.derivative();
  return ExactScalar(4) * (Radial::power(-1, 1, 0, f.scale) * f1.derivative()) + ExactScalar(2 * d) * f1;
}

inline Radial to_radial(const KernelExpr& k) {
  Radial r = Radial::power(0, k.prefactor);
  for (auto& t : k.factors) {
    if (t.derivs != 0) throw std::invalid_argument("to_radial: differentiated factor");
    if (t.kind == Kind::PowerX2inv) {
      r = r * Radial::power(t.power, 1, 0, r.scale);
    } else if (t.kind == Kind::LogOverX2pow) {
      Radial f = Radial::power(t.power, 1, 1, t.logScale);
      if (r.terms.size() == 1 && r.terms.count({0, 0})) r.scale = t.logScale;
      r = r * f;
    } else {
      throw std::invalid_argument(std::string("to_radial: ") + kernels::kind_name(t.kind));
    }
  }
  return r;
}

// m^2 expansion of H_F as radial functions; index = power of m^2.
inline std::vector<Radial> feynman_radial(int d, int orders = 2) {
  std::vector<Radial> out(orders);
  for (auto& m : kernels::mass_expansion(d)) {
    if (m.massOrder >= orders) continue;
    out[m.massOrder] += to_radial(m.kernel);
  }
  return out;
}

// Truncated product of mass-expanded radial series.
inline std::vector<Radial> series_product(const std::vector<Radial>& a, const std::vector<Radial>& b) {
  const std::size_t n = std::min(a.size(), b.size());
  std::vector<Radial> out(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; i + j < n; ++j) out[i + j] += a[i] * b[j];
  return out;
}

// ---------------------------------------------------------------------------
// Distributions supported at the origin, possibly with unresolved box[L_s/u] pieces.

struct LocalDistribution {
  std::map<int, ExactScalar> boxDelta;        // box^k delta
  ExactScalar boxInvU;                        // box (1/u), d = 4
  std::map<Atom, ExactScalar> boxLogOverU;    // box [L_s / u]

  void add_delta(int k, const ExactScalar& c) {
    auto& s = boxDelta[k];
    s += c;
    if (s.is_zero()) boxDelta.erase(k);
  }
  LocalDistribution& operator+=(const LocalDistribution& o) {
    for (auto& [k, c] : o.boxDelta) add_delta(k, c);
    boxInvU += o.boxInvU;
    for (auto& [a, c] : o.boxLogOverU) {
      auto& s = boxLogOverU[a];
      s += c;
      if (s.is_zero()) boxLogOverU.erase(a);
    }
    return *this;
  }
  friend LocalDistribution operator*(const ExactScalar& s, const LocalDistribution& x) {
    LocalDistribution r;
    for (auto& [k, c] : x.boxDelta) r.add_delta(k, s * c);
    r.boxInvU = s * x.boxInvU;
    for (auto& [a, c] : x.boxLogOverU)
      if (!(s * c).is_zero()) r.boxLogOverU[a] = s * c;
    return r;
  }
  bool resolved() const { return boxInvU.is_zero() && boxLogOverU.empty(); }
  ExactScalar delta(int k) const {
    auto it = boxDelta.find(k);
    return it == boxDelta.end() ? ExactScalar() : it->second;
  }
};

// box[L_s/u] = box[log(-u)/u] + 2 log s box(1/u): a combination is local only if the
// coefficients of the box[L_s/u] pieces sum to zero.
inline LocalDistribution collapse(const LocalDistribution& x, int d, int sig) {
  LocalDistribution r;
  r.boxDelta = x.boxDelta;
  ExactScalar sum, invU = x.boxInvU;
  for (auto& [a, c] : x.boxLogOverU) {
    sum += c;
    invU += ExactScalar(2) * c * ExactScalar::atom(a);
  }
  if (!sum.is_zero()) throw std::domain_error("collapse: non-local residue " + sum.str() + " box[log(-u)/u]");
  if (!invU.is_zero()) {
    if (d != 4) throw std::invalid_argument("collapse: box(1/u) only in d = 4");
    r.add_delta(0, invU * fundamental_solution(d, sig));
  }
  return r;
}

// Violation of a pure power piece c u^(-p) under rho d/drho rho^(2p) t(rho x).
inline LocalDistribution power_violation(int d, int sig, int p, const ExactScalar& c) {
  LocalDistribution r;
  const int omega = 2 * p - d;
  if (omega < 0 || omega % 2 != 0 || c.is_zero()) return r;
  r.add_delta(omega / 2, c * c_k(d, sig, omega / 2));
  return r;
}

// Coefficient alpha with u^(-d/2) = alpha box[L_kappa u^(1 - d/2)] away from the origin.
struct ExplicitExtension {
  int d = 4;
  int sig = 3;
  Atom scale = Atom::LogKappa;
  ExactScalar coefficient;       // alpha
  bool offOriginOk = false;      // box of the ansatz reproduces u^(-d/2)
  ExactScalar kappaDerivative;   // d t / d log kappa, multiple of delta
  ExactScalar violation;         // c_0
  bool consistent = false;       // both agree
};

inline ExplicitExtension explicit_extension(int d, int sig, Atom scale = Atom::LogKappa) {
  if (d % 2 != 0 || d < 4) throw std::invalid_argument("explicit_extension: even d >= 4 required");
  ExplicitExtension e;
  e.d = d;
  e.sig = sig;
  e.scale = scale;
  e.coefficient = ExactScalar(Rational(1) / (2 * (2 - d)));
  Radial ansatz = Radial::power(d / 2 - 1, e.coefficient, 1, scale);
  e.offOriginOk = box(ansatz, d) == Radial::power(d / 2, 1, 0, scale);
  // L_kappa = log(-u) + 2 log kappa
  e.kappaDerivative = ExactScalar(2) * e.coefficient * fundamental_solution(d, sig);
  e.violation = c_k(d, sig, 0);
  e.consistent = e.offOriginOk && e.kappaDerivative == e.violation;
  return e;
}

// t_{kappa2} - t_{kappa1} for the explicit extension of u^(-d/2).
inline ExactScalar explicit_extension_difference(int d, int sig, const ExactScalar& logKappa1,
                                                 const ExactScalar& logKappa2) {
  return explicit_extension(d, sig).kappaDerivative * (logKappa2 - logKappa1);
}

// (d_nu x^nu - mu d_mu) applied to c L_mu/u^2 in d = 4, where mu d_mu t equals
// partner box[L_partnerScale/u]. Uses x^nu L/u^2 = -1/2 d^nu(1/u) - 1/2 d^nu[L/u].
inline LocalDistribution log_scaling_rule(const ExactScalar& c, const ExactScalar& partner,
                                          Atom partnerScale) {
  LocalDistribution r;
  r.boxInvU = ExactScalar(Rational(-1, 2)) * c;
  r.boxLogOverU[Atom::LogMu] = ExactScalar(Rational(-1, 2)) * c;
  auto& s = r.boxLogOverU[partnerScale];
  s -= partner;
  if (s.is_zero()) r.boxLogOverU.erase(partnerScale);
  return r;
}

// ---------------------------------------------------------------------------
// Feynman reduction of the d = 6 triangle H_F(x) H_F(y) H_F(x + y).

inline double det_numeric(std::vector<std::vector<double>> a) {
  const std::size_t n = a.size();
  double det = 1;
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t piv = c;
    for (std::size_t r = c + 1; r < n; ++r)
      if (std::abs(a[r][c]) > std::abs(a[piv][c])) piv = r;
    if (a[piv][c] == 0) return 0;
    if (piv != c) {
      std::swap(a[piv], a[c]);
      det = -det;
    }
    det *= a[c][c];
    for (std::size_t r = c + 1; r < n; ++r) {
      double f = a[r][c] / a[c][c];
      for (std::size_t k = c; k < n; ++k) a[r][k] -= f * a[c][k];
    }
  }
  return det;
}

// Quadratic form alpha x^2 + beta y^2 + gamma (x + y)^2 on R^(2d) with metric eta.
inline std::vector<std::vector<double>> triangle_form(int d, double alpha, double beta, double gamma) {
  const int n = 2 * d;
  std::vector<std::vector<double>> g(n, std::vector<double>(n, 0.0));
  const double block[2][2] = {{alpha + gamma, gamma}, {gamma, beta + gamma}};
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b)
      for (int mu = 0; mu < d; ++mu) g[a * d + mu][b * d + mu] = block[a][b] * (mu == 0 ? 1.0 : -1.0);
  return g;
}

struct FeynmanReduction {
  int d = 6;
  ExactScalar propagatorCube;   // (4 pi^3)^(-3)
  Rational parameterWeight;     // Gamma(6) / Gamma(2)^3
  ExactScalar sphere;           // |S^11|
  ExactScalar phase;            // overall phase of the reduced violation
  bool determinantOk = false;   // |det G| = (alpha beta + beta gamma + gamma alpha)^d
  ExactScalar coefficientOverI; // a_2 / I
};

inline FeynmanReduction feynman_reduce_triangle() {
  FeynmanReduction r;
  r.propagatorCube = ExactScalar::monomial(Rational(1, 64), 0, -9);
  r.parameterWeight = factorial(5);
  r.sphere = sphere_area(12);
  r.phase = 1;
  const std::array<std::array<double, 3>, 4> samples = {
      {{0.2, 0.3, 0.5}, {0.7, 0.2, 0.1}, {0.1, 0.1, 0.8}, {1.0 / 3, 1.0 / 3, 1.0 / 3}}};
  r.determinantOk = true;
  for (auto& s : samples) {
    double det = det_numeric(triangle_form(6, s[0], s[1], s[2]));
    double expect = std::pow(s[0] * s[1] + s[1] * s[2] + s[2] * s[0], 6);
    if (std::abs(std::abs(det) - expect) > 1e-12 * expect) r.determinantOk = false;
  }
  r.coefficientOverI = r.phase * r.propagatorCube * r.sphere * r.parameterWeight;
  return r;
}

struct TriangleIntegral {
  double value = 0;
  double error = 0;
  std::vector<double> innerValues;  // kappa integral at nine lambda points
  bool innerOk = false;
  double rawSimplex = 0;
  bool rawOk = false;
};

// I = int over the simplex of alpha beta gamma / (alpha beta + beta gamma + gamma alpha)^3.
inline TriangleIntegral triangle_integral(double tol = 1e-12) {
  using boost::math::quadrature::gauss_kronrod;
  TriangleIntegral out;
  auto inner = [](double lambda) {
    const double c = lambda * (1 - lambda), a = 1 - c;
    auto f = [&](double kappa) { return c * (1 - kappa) / std::pow(1 - a * kappa, 3); };
    return gauss_kronrod<double, 61>::integrate(f, 0.0, 1.0, 15, 1e-14);
  };
  out.value = gauss_kronrod<double, 61>::integrate(inner, 0.0, 1.0, 15, tol, &out.error);
  if (!(out.error <= 1e3 * tol)) throw std::runtime_error("triangle_integral: quadrature did not converge");
  out.innerOk = true;
  for (int j = 1; j <= 9; ++j) {
    double v = inner(j / 10.0);
    out.innerValues.push_back(v);
    if (std::abs(v - 0.5) > 1e-10) out.innerOk = false;
  }
  auto rawInner = [](double alpha) {
    auto f = [&](double beta) {
      const double gamma = 1 - alpha - beta;
      const double q = alpha * beta + beta * gamma + gamma * alpha;
      return q > 0 ? alpha * beta * gamma / (q * q * q) : 0.0;
    };
    return gauss_kronrod<double, 61>::integrate(f, 0.0, 1.0 - alpha, 15, 1e-12);
  };
  out.rawSimplex = gauss_kronrod<double, 61>::integrate(rawInner, 0.0, 1.0, 15, 1e-10);
  out.rawOk = std::abs(out.rawSimplex - out.value) < 1e-6;
  return out;
}

// ---------------------------------------------------------------------------
// Euclidean check: t = |x|^(-d) made finite by subtracting psi(0) on the unit ball.
// F(rho) = <t, psi(./rho)> grows like |S^(d-1)| psi(0) log rho.

inline double angular_measure(int d) {
  using boost::math::quadrature::gauss_kronrod;
  double total = gauss_kronrod<double, 31>::integrate([](double) { return 1.0; }, 0.0, 2 * M_PI, 5, 1e-14);
  for (int j = 1; j <= d - 2; ++j)
    total *= gauss_kronrod<double, 61>::integrate([j](double th) { return std::pow(std::sin(th), j); }, 0.0,
                                                   M_PI, 15, 1e-14);
  return total;
}

inline double euclidean_scaling_oracle(int d, int power2 = -1) {
  using boost::math::quadrature::gauss_kronrod;
  if (power2 < 0) power2 = d;
  if (power2 != d) throw std::invalid_argument("euclidean_scaling_oracle: needs 2p = d");
  if (d < 2) throw std::invalid_argument("euclidean_scaling_oracle: d >= 2 required");
  const double psi0 = 1.0;
  auto radial = [&](double rho) {
    auto near = [&](double r) { return r == 0 ? -1.0 / (rho * rho) * r : (std::exp(-r * r / (rho * rho)) - psi0) / r; };
    double a = gauss_kronrod<double, 61>::integrate(near, 0.0, 1.0, 15, 1e-14);
    boost::math::quadrature::exp_sinh<double> tail;
    double b = tail.integrate([&](double r) { return std::exp(-(r + 1) * (r + 1) / (rho * rho)) / (r + 1); },
                              0.0, std::numeric_limits<double>::infinity());
    return a + b;
  };
  const double omega = angular_measure(d);
  const double h = 1e-3;
  double fp = omega * radial(std::exp(h)), fm = omega * radial(std::exp(-h));
  return (fp - fm) / (2 * h) / psi0;
}

}  // namespace pqft::renorm
