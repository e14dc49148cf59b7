#pragma once

#include "pqft/exact.hpp"

#include <array>
#include <cmath>
#include <complex>
#include <functional>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace pqft::functionals {

// ---------------------------------------------------------------------------
// Supports: finite unions of closed axis-aligned boxes, coordinate 0 is time.

struct Box {
  std::vector<double> lo;
  std::vector<double> hi;
};

struct SupportRegion {
  std::vector<Box> boxes;

  static SupportRegion box(std::vector<double> lo, std::vector<double> hi) {
    return SupportRegion{{Box{std::move(lo), std::move(hi)}}};
  }
  // Time slab [t0, t1] x [x0, x1]^(d-1).
  static SupportRegion slab(int d, double t0, double t1, double x0, double x1) {
    std::vector<double> lo(d, x0), hi(d, x1);
    lo[0] = t0;
    hi[0] = t1;
    return box(lo, hi);
  }
  bool empty() const { return boxes.empty(); }
  SupportRegion united(const SupportRegion& o) const {
    SupportRegion r = *this;
    r.boxes.insert(r.boxes.end(), o.boxes.begin(), o.boxes.end());
    return r;
  }
};

inline bool boxes_intersect(const Box& a, const Box& b) {
  for (std::size_t k = 0; k < a.lo.size(); ++k)
    if (a.hi[k] < b.lo[k] || b.hi[k] < a.lo[k]) return false;
  return true;
}

inline bool disjoint(const SupportRegion& a, const SupportRegion& b) {
  for (auto& x : a.boxes)
    for (auto& y : b.boxes)
      if (boxes_intersect(x, y)) return false;
  return true;
}

inline double spatial_distance(const Box& a, const Box& b) {
  double s = 0;
  for (std::size_t k = 1; k < a.lo.size(); ++k) {
    double gap = std::max({0.0, b.lo[k] - a.hi[k], a.lo[k] - b.hi[k]});
    s += gap * gap;
  }
  return std::sqrt(s);
}

// Some point of a lies in the closed causal past of some point of b.
inline bool causally_precedes(const Box& a, const Box& b) {
  return b.hi[0] - a.lo[0] >= spatial_distance(a, b);
}

inline bool causally_precedes(const SupportRegion& a, const SupportRegion& b) {
  for (auto& x : a.boxes)
    for (auto& y : b.boxes)
      if (causally_precedes(x, y)) return true;
  return false;
}

// A is later than B: no point of A lies in the causal past of B.
inline bool later(const SupportRegion& a, const SupportRegion& b) { return !causally_precedes(a, b); }

inline bool spacelike(const SupportRegion& a, const SupportRegion& b) {
  return later(a, b) && later(b, a);
}

// Strictly later by a time slab: every time in A exceeds every time in B.
inline bool strictly_later_slab(const SupportRegion& a, const SupportRegion& b) {
  for (auto& x : a.boxes)
    for (auto& y : b.boxes)
      if (!(x.lo[0] > y.hi[0])) return false;
  return true;
}

// ---------------------------------------------------------------------------
// Density monomials: coefficient * phi^plain * (d phi . d phi)^(deriv/2).

enum class Basis { One, Phi, Phi2, DPhi2, Phi3, Phi4 };
inline constexpr std::array<Basis, 6> kBasis = {Basis::One, Basis::Phi, Basis::Phi2,
                                                Basis::DPhi2, Basis::Phi3, Basis::Phi4};

inline const char* basis_name(Basis b) {
  switch (b) {
    case Basis::One: return "1";
    case Basis::Phi: return "phi";
    case Basis::Phi2: return "phi^2";
    case Basis::DPhi2: return "(dphi)^2";
    case Basis::Phi3: return "phi^3";
    case Basis::Phi4: return "phi^4";
  }
  return "?";
}

struct DensityMonomial {
  ExactScalar coefficient = 1;
  int plain = 0;
  int deriv = 0;

  int fields() const { return plain + deriv; }
  // Mass dimension of the field content.
  Rational engineering_dimension(int d) const {
    return Rational(plain * (d - 2), 2) + Rational(deriv * d, 2);
  }
  bool same_shape(const DensityMonomial& o) const { return plain == o.plain && deriv == o.deriv; }
};

// Basis elements in the normalization phi^n / n! and (d phi)^2 / 2.
inline DensityMonomial basis_monomial(Basis b) {
  switch (b) {
    case Basis::One: return {1, 0, 0};
    case Basis::Phi: return {1, 1, 0};
    case Basis::Phi2: return {Rational(1, 2), 2, 0};
    case Basis::DPhi2: return {Rational(1, 2), 0, 2};
    case Basis::Phi3: return {Rational(1, 6), 3, 0};
    case Basis::Phi4: return {Rational(1, 24), 4, 0};
  }
  return {};
}

inline std::optional<Basis> basis_of_shape(int plain, int deriv) {
  for (Basis b : kBasis) {
    auto m = basis_monomial(b);
    if (m.plain == plain && m.deriv == deriv) return b;
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Smearing slots and local functionals.

// Multiset of named test functions multiplied at one point; f(x)^2 is {f:2}.
using Smearing = std::map<std::string, int>;

struct LocalTerm {
  DensityMonomial mono;
  Smearing smear;
  ExactScalar logWeight;  // overall factor exp(logWeight) from scaling
  ExactScalar slotLog;    // test functions evaluated at exp(slotLog) * x
};

inline bool same_structure(const LocalTerm& a, const LocalTerm& b) {
  return a.mono.same_shape(b.mono) && a.smear == b.smear && a.logWeight == b.logWeight &&
         a.slotLog == b.slotLog;
}

struct SlotInfo {
  SupportRegion region;
  std::function<double(double)> profile;  // one-dimensional numeric profile
};

using SlotTable = std::map<std::string, SlotInfo>;

struct LocalFunctional {
  std::vector<LocalTerm> terms;

  static LocalFunctional monomial(const ExactScalar& c, Basis b, const std::string& slot) {
    LocalFunctional f;
    DensityMonomial m = basis_monomial(b);
    m.coefficient = c * m.coefficient;
    f.terms.push_back({m, {{slot, 1}}, {}, {}});
    return f;
  }
  static LocalFunctional raw(const ExactScalar& c, int plain, int deriv, Smearing s) {
    LocalFunctional f;
    f.terms.push_back({{c, plain, deriv}, std::move(s), {}, {}});
    return f;
  }

  LocalFunctional& operator+=(const LocalFunctional& o) {
    for (auto& t : o.terms) add(t);
    return *this;
  }
  friend LocalFunctional operator+(LocalFunctional a, const LocalFunctional& b) { return a += b; }
  friend LocalFunctional operator*(const ExactScalar& c, LocalFunctional a) {
    LocalFunctional r;
    for (auto& t : a.terms) {
      LocalTerm u = t;
      u.mono.coefficient = c * u.mono.coefficient;
      r.add(u);
    }
    return r;
  }
  friend LocalFunctional operator-(const LocalFunctional& a, const LocalFunctional& b) {
    return a + ExactScalar(-1) * b;
  }
  friend bool operator==(const LocalFunctional& a, const LocalFunctional& b) {
    LocalFunctional d = a - b;
    return d.terms.empty();
  }

  void add(const LocalTerm& t) {
    if (t.mono.coefficient.is_zero()) return;
    for (auto it = terms.begin(); it != terms.end(); ++it) {
      if (same_structure(*it, t)) {
        it->mono.coefficient += t.mono.coefficient;
        if (it->mono.coefficient.is_zero()) terms.erase(it);
        return;
      }
    }
    terms.push_back(t);
  }

  // Drop terms whose smearing multiplies test functions with disjoint supports.
  LocalFunctional pruned(const SlotTable& slots) const {
    LocalFunctional r;
    for (auto& t : terms) {
      bool zero = false;
      for (auto& [a, pa] : t.smear)
        for (auto& [b, pb] : t.smear) {
          if (a >= b) continue;
          auto ia = slots.find(a), ib = slots.find(b);
          if (ia != slots.end() && ib != slots.end() && disjoint(ia->second.region, ib->second.region))
            zero = true;
        }
      if (!zero) r.add(t);
    }
    return r;
  }

  // supp F = union of the smearing supports.
  SupportRegion support(const SlotTable& slots) const {
    SupportRegion r;
    for (auto& t : terms)
      for (auto& [s, p] : t.smear) r = r.united(slots.at(s).region);
    return r;
  }
};

// ---------------------------------------------------------------------------
// Equivalence classes over the basis {1, phi, phi^2, (dphi)^2, phi^3, phi^4}.

struct LagrangianClass {
  std::array<ExactScalar, 6> coeff{};
  std::array<bool, 6> ignored{};

  static std::size_t index(Basis b) { return static_cast<std::size_t>(b); }
  ExactScalar& operator[](Basis b) { return coeff[index(b)]; }
  const ExactScalar& operator[](Basis b) const { return coeff[index(b)]; }

  void ignore(Basis b) {
    ignored[index(b)] = true;
    coeff[index(b)] = ExactScalar();
  }

  LagrangianClass& operator+=(const LagrangianClass& o) {
    for (std::size_t k = 0; k < 6; ++k) {
      ignored[k] = ignored[k] || o.ignored[k];
      coeff[k] = ignored[k] ? ExactScalar() : coeff[k] + o.coeff[k];
    }
    return *this;
  }
  friend LagrangianClass operator+(LagrangianClass a, const LagrangianClass& b) { return a += b; }
  friend LagrangianClass operator*(const ExactScalar& c, LagrangianClass a) {
    for (auto& x : a.coeff) x = c * x;
    return a;
  }
  friend LagrangianClass operator-(const LagrangianClass& a, const LagrangianClass& b) {
    return a + ExactScalar(-1) * b;
  }
  friend bool operator==(const LagrangianClass& a, const LagrangianClass& b) {
    return a.coeff == b.coeff;
  }

  // Adds c * (raw field monomial) expressed in the normalized basis.
  void add_raw(const ExactScalar& c, int plain, int deriv) {
    auto b = basis_of_shape(plain, deriv);
    if (!b) throw std::invalid_argument("LagrangianClass: monomial outside the basis");
    if (ignored[index(*b)]) return;
    DensityMonomial m = basis_monomial(*b);
    coeff[index(*b)] += c.divided_by_monomial(m.coefficient);
  }
};

// Class of a local functional in the adiabatic limit (test functions set to 1).
inline LagrangianClass to_class(const LocalFunctional& f) {
  LagrangianClass c;
  for (auto& t : f.terms) c.add_raw(t.mono.coefficient, t.mono.plain, t.mono.deriv);
  return c;
}

// Local expressions collapsed onto a point with phi_a(x) box^k delta(x - y) phi_b(y)
// feed into the class by integration by parts: a (box^k) pair between two
// single fields gives (-1)^k (d phi)^2-type terms for k = 1 and vanishes as a
// total derivative whenever the box acts on a product with no field partner.
struct CollapsedTerm {
  ExactScalar coefficient;
  int leftPlain = 0;   // fields at the first point
  int rightPlain = 0;  // fields at the second point
  int box = 0;         // power of box on delta
};

inline void add_collapsed(LagrangianClass& cls, const CollapsedTerm& t) {
  if (t.box == 0) {
    cls.add_raw(t.coefficient, t.leftPlain + t.rightPlain, 0);
    return;
  }
  if (t.box == 1) {
    if (t.leftPlain == 0 || t.rightPlain == 0) return;  // box of a product: total derivative
    if (t.leftPlain == 1 && t.rightPlain == 1) {
      // phi box phi = -(d phi . d phi) up to a total derivative
      cls.add_raw(-t.coefficient, 0, 2);
      return;
    }
  }
  throw std::invalid_argument("add_collapsed: operator outside the supported class reduction");
}

// ---------------------------------------------------------------------------
// Functional derivatives of local functionals.

// One term of  center(x) * p(d_rel) delta(x_rel): `outer` derivatives act on
// (f * residual) at the center of mass, `relative` is the order of the
// derivative on the relative delta. Indices are contracted pairwise.
struct DerivativeTerm {
  Rational coefficient;
  int residualPlain = 0;
  int residualDeriv = 0;
  int outer = 0;
  int relative = 0;
};

struct DerivativeKernel {
  int order = 0;
  std::string slot;
  ExactScalar scalar = 1;  // the monomial coefficient, factored out
  std::vector<DerivativeTerm> terms;  // empty means zero
  int deltaChain = 0;  // number of delta factors linking the points
};

inline DerivativeKernel functional_derivative(const LocalTerm& t, int n) {
  if (n < 1) throw std::invalid_argument("functional_derivative: n >= 1 required");
  if (t.smear.size() != 1 || t.smear.begin()->second != 1)
    throw std::invalid_argument("functional_derivative: single linear smearing expected");
  DerivativeKernel k;
  k.order = n;
  k.slot = t.smear.begin()->first;
  k.scalar = t.mono.coefficient;
  k.deltaChain = n - 1;
  const int a = t.mono.plain, b = t.mono.deriv;
  if (n > a + b) return k;
  if (b == 0) {
    // f(x1) delta(x1 - x2) ... delta(x_{n-1} - x_n) times a!/(a-n)! phi^(a-n)
    Rational c = factorial(a) / factorial(a - n);
    k.terms.push_back({c, a - n, 0, 0, 0});
    return k;
  }
  if (n == 1) {
    // phi-slot: a phi^(a-1) (dphi)^b; dphi-slot: -b d(f phi^a (dphi)^(b-1))
    if (a > 0) k.terms.push_back({Rational(a), a - 1, b, 0, 0});
    k.terms.push_back({Rational(-b), a, b - 1, 1, 0});
    return k;
  }
  if (n == 2 && b == 2) {
    if (a >= 2) k.terms.push_back({Rational(a * (a - 1)), a - 2, 2, 0, 0});
    if (a >= 1) k.terms.push_back({Rational(-a * b), a - 1, 1, 1, 0});
    // d_{x1} d_{x2} (delta f R) = 1/4 dd(f R) delta - (f R) dd delta
    k.terms.push_back({Rational(b * (b - 1), 4), a, 0, 2, 0});
    k.terms.push_back({Rational(-b * (b - 1)), a, 0, 0, 2});
    return k;
  }
  throw std::invalid_argument("functional_derivative: derivative monomials supported up to n = 2");
}

// ---------------------------------------------------------------------------
// Scaling action.

// sigma_rho maps coefficient * int f phi^k d^D to rho^(d - k(d-2)/2 - D) times
// the same monomial smeared with f(rho x). logRho is symbolic (e.g. log_rho).
inline Rational scaling_exponent(const DensityMonomial& m, int d) {
  return Rational(d) - m.engineering_dimension(d);
}

inline LocalFunctional sigma_rho(const LocalFunctional& f, const ExactScalar& logRho, int d) {
  LocalFunctional r;
  for (auto t : f.terms) {
    t.logWeight += scaling_exponent(t.mono, d) * logRho;
    t.slotLog += logRho;
    r.terms.push_back(t);
  }
  return r;
}

// L^rho(f) = sigma_rho(L(f_rho)) with f_rho(x) = f(x / rho): test functions
// return to f and the coefficient picks up rho to its mass dimension.
inline LocalFunctional scale_lagrangian(const LocalFunctional& l, const ExactScalar& logRho, int d) {
  LocalFunctional pre;
  for (auto t : l.terms) {
    t.slotLog -= logRho;
    pre.terms.push_back(t);
  }
  return sigma_rho(pre, logRho, d);
}

// Mass dimension carried by the coefficient (powers of m^2 count 2 each).
inline int mass_dimension_of_coefficient(const ExactScalar& c) {
  int m = -1;
  for (auto& [k, q] : c.terms()) {
    int e = 2 * k.exponent(Atom::Mass2);
    if (m >= 0 && e != m) throw std::invalid_argument("inhomogeneous mass dimension");
    m = e;
  }
  return m < 0 ? 0 : m;
}

// ---------------------------------------------------------------------------
// Numeric realization in one dimension: bump profiles and density integrals.

struct Bump {
  double center = 0;
  double radius = 1;
  double height = 1;

  double operator()(double x) const {
    double r = (x - center) / radius;
    if (std::abs(r) >= 1) return 0;
    return height * std::exp(1 - 1 / (1 - r * r));
  }
  double derivative(double x) const {
    double r = (x - center) / radius;
    if (std::abs(r) >= 1) return 0;
    double g = 1 - r * r;
    return (*this)(x) * (-2 * r / (g * g)) / radius;
  }
  double lo() const { return center - radius; }
  double hi() const { return center + radius; }
};

struct FieldConfig {
  std::vector<Bump> bumps;
  double value(double x) const {
    double s = 0;
    for (auto& b : bumps) s += b(x);
    return s;
  }
  double derivative(double x) const {
    double s = 0;
    for (auto& b : bumps) s += b.derivative(x);
    return s;
  }
  FieldConfig operator+(const FieldConfig& o) const {
    FieldConfig r = *this;
    r.bumps.insert(r.bumps.end(), o.bumps.begin(), o.bumps.end());
    return r;
  }
  SupportRegion support() const {
    SupportRegion r;
    for (auto& b : bumps) r.boxes.push_back(Box{{b.lo()}, {b.hi()}});
    return r;
  }
};

struct Grid {
  double lo = -10;
  double hi = 10;
  int points = 8001;
};

template <class F>
double integrate(const Grid& g, F&& f) {
  // composite Simpson
  int n = g.points - 1;
  if (n % 2) ++n;
  const double h = (g.hi - g.lo) / n;
  double s = f(g.lo) + f(g.hi);
  for (int k = 1; k < n; ++k) s += (k % 2 ? 4.0 : 2.0) * f(g.lo + k * h);
  return s * h / 3;
}

using NumericFunctional = std::function<std::complex<double>(const FieldConfig&)>;

inline std::complex<double> numeric_coefficient(const ExactScalar& c, const AtomValues& env) {
  auto v = evaluate(c, env);
  if (!v) throw std::invalid_argument("numeric_coefficient: unresolved atom");
  return {v->re.convert_to<double>(), v->im.convert_to<double>()};
}

inline std::complex<double> evaluate(const LocalFunctional& f, const SlotTable& slots, const FieldConfig& phi,
                                     const AtomValues& env = AtomValues::standard(), const Grid& g = {}) {
  std::complex<double> total = 0;
  for (auto& t : f.terms) {
    std::complex<double> c = numeric_coefficient(t.mono.coefficient, env);
    auto w = evaluate(t.logWeight, env);
    auto s = evaluate(t.slotLog, env);
    if (!w || !s) throw std::invalid_argument("evaluate: unresolved scale");
    const double weight = std::exp(w->re.convert_to<double>());
    const double stretch = std::exp(s->re.convert_to<double>());
    double val = integrate(g, [&](double x) {
      double smear = 1;
      for (auto& [name, p] : t.smear) smear *= std::pow(slots.at(name).profile(stretch * x), p);
      if (smear == 0) return 0.0;
      return smear * std::pow(phi.value(x), t.mono.plain) * std::pow(phi.derivative(x), t.mono.deriv);
    });
    total += c * weight * val;
  }
  return total;
}

inline bool check_additivity(const NumericFunctional& f, const FieldConfig& phi, const FieldConfig& chi,
                             const FieldConfig& psi, double tol = 1e-9) {
  if (!disjoint(phi.support(), psi.support()))
    throw std::invalid_argument("check_additivity: phi and psi must have disjoint supports");
  auto lhs = f(phi + chi + psi);
  auto rhs = f(phi + chi) - f(chi) + f(chi + psi);
  double scale = std::max({1.0, std::abs(lhs), std::abs(rhs)});
  return std::abs(lhs - rhs) <= tol * scale;
}

// ---------------------------------------------------------------------------
// Splitting a local functional into pieces of small support: partition of unity
// on [lo, hi] by N bumps overlapping only their neighbours, combined with the
// inclusion-exclusion signs (+1 on neighbour pairs, -1 on interior singletons).

struct SplitPiece {
  int sign;
  std::vector<int> members;
  std::function<double(double)> chi;  // sum of the member partition functions
  SupportRegion region;
};

inline std::vector<SplitPiece> support_split(double lo, double hi, int pieces) {
  if (pieces < 1) throw std::invalid_argument("support_split: at least one piece");
  const double h = pieces > 1 ? (hi - lo) / (pieces - 1) : (hi - lo);
  const double r = 0.75 * h;
  std::vector<Bump> raw;
  if (pieces == 1)
    raw.push_back(Bump{(lo + hi) / 2, r, 1});
  else
    for (int i = 0; i < pieces; ++i) raw.push_back(Bump{lo + i * h, r, 1});
  auto total = [raw](double x) {
    double s = 0;
    for (auto& b : raw) s += b(x);
    return s;
  };
  auto chi = [raw, total](int i) {
    return [raw, total, i](double x) {
      double s = total(x);
      return s > 0 ? raw[i](x) / s : 0.0;
    };
  };
  std::vector<SplitPiece> out;
  if (pieces == 1) {
    out.push_back({1, {0}, chi(0), SupportRegion::box({raw[0].lo()}, {raw[0].hi()})});
    return out;
  }
  for (int i = 0; i + 1 < pieces; ++i) {
    auto ci = chi(i), cj = chi(i + 1);
    out.push_back({1, {i, i + 1}, [ci, cj](double x) { return ci(x) + cj(x); },
                   SupportRegion::box({raw[i].lo()}, {raw[i + 1].hi()})});
  }
  for (int i = 1; i + 1 < pieces; ++i)
    out.push_back({-1, {i}, chi(i), SupportRegion::box({raw[i].lo()}, {raw[i].hi()})});
  return out;
}

// F_I(phi) = F(phi * chi_I) for a derivative-free local functional: the field
// factor chi_I^k is moved into a fresh smearing slot for each monomial degree.
inline LocalFunctional split_piece(const LocalFunctional& f, const SplitPiece& piece, const std::string& tag,
                                   SlotTable& slots) {
  LocalFunctional out;
  for (auto& t : f.terms) {
    if (t.mono.deriv != 0) throw std::invalid_argument("split_piece: derivative-free densities only");
    if (t.smear.size() != 1) throw std::invalid_argument("split_piece: single slot expected");
    const auto& [base, power] = *t.smear.begin();
    const int k = t.mono.plain;
    std::string name = base + "#" + tag + "^" + std::to_string(k);
    if (!slots.count(name)) {
      auto fprof = slots.at(base).profile;
      auto chi = piece.chi;
      SupportRegion reg = k == 0 ? slots.at(base).region : piece.region;
      slots[name] = SlotInfo{reg, [fprof, chi, power, k](double x) {
                               return std::pow(fprof(x), power) * std::pow(chi(x), k);
                             }};
    }
    LocalTerm u = t;
    u.smear = {{name, 1}};
    out.add(u);
  }
  return out;
}

}  // namespace pqft::functionals
