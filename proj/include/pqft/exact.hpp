#pragma once

#include <boost/multiprecision/cpp_dec_float.hpp>
#include <boost/multiprecision/cpp_int.hpp>
#include <boost/math/constants/constants.hpp>

#include <algorithm>
#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace pqft {

using Rational = boost::multiprecision::cpp_rational;
using BigInt = boost::multiprecision::cpp_int;
using Decimal = boost::multiprecision::cpp_dec_float_50;

// Symbolic atoms. The logs and constants come first; the remaining atoms are
// expansion parameters (hbar, couplings, mass squared) kept inside the scalar
// so that coefficients can carry their own grading.
enum class Atom : std::uint8_t {
  LogRho,
  LogMu,
  LogTau,
  LogKappa,
  LogLambda,
  EulerC,
  F0,
  Hbar,
  Coupling,
  Mass2,
  CouplingA,
  CouplingB,
};

inline constexpr std::array<Atom, 12> kAllAtoms = {
    Atom::LogRho, Atom::LogMu,    Atom::LogTau, Atom::LogKappa,
    Atom::LogLambda, Atom::EulerC, Atom::F0,    Atom::Hbar,
    Atom::Coupling, Atom::Mass2,  Atom::CouplingA, Atom::CouplingB};

inline const char* atom_name(Atom a) {
  switch (a) {
    case Atom::LogRho: return "log_rho";
    case Atom::LogMu: return "log_mu";
    case Atom::LogTau: return "log_tau";
    case Atom::LogKappa: return "log_kappa";
    case Atom::LogLambda: return "log_lambda";
    case Atom::EulerC: return "C";
    case Atom::F0: return "F0";
    case Atom::Hbar: return "hbar";
    case Atom::Coupling: return "g";
    case Atom::Mass2: return "m2";
    case Atom::CouplingA: return "a";
    case Atom::CouplingB: return "b";
  }
  return "?";
}

inline std::optional<Atom> atom_from_name(const std::string& s) {
  for (Atom a : kAllAtoms)
    if (s == atom_name(a)) return a;
  return std::nullopt;
}

// One monomial i^a * pi^b * prod(sym^k); syms sorted by atom, no zero exponents.
struct TermKey {
  int ipow = 0;
  int pipow = 0;
  std::vector<std::pair<Atom, int>> syms;

  friend bool operator<(const TermKey& x, const TermKey& y) {
    if (x.ipow != y.ipow) return x.ipow < y.ipow;
    if (x.pipow != y.pipow) return x.pipow < y.pipow;
    return x.syms < y.syms;
  }
  friend bool operator==(const TermKey& x, const TermKey& y) {
    return x.ipow == y.ipow && x.pipow == y.pipow && x.syms == y.syms;
  }

  int exponent(Atom a) const {
    for (auto& [s, k] : syms)
      if (s == a) return k;
    return 0;
  }
};

inline TermKey multiply_keys(const TermKey& x, const TermKey& y, int& sign) {
  TermKey out;
  int ip = x.ipow + y.ipow;
  sign = (ip >= 2) ? -1 : 1;
  out.ipow = ip % 2;
  out.pipow = x.pipow + y.pipow;
  std::map<Atom, int> m;
  for (auto& [s, k] : x.syms) m[s] += k;
  for (auto& [s, k] : y.syms) m[s] += k;
  for (auto& [s, k] : m)
    if (k != 0) out.syms.emplace_back(s, k);
  return out;
}

// Exact scalar: finite sum of rational multiples of monomials. The imaginary
// unit is stored as i^0 or i^1 with i^2 folded into the sign, so a < 2 < 4.
class ExactScalar {
 public:
  ExactScalar() = default;
  ExactScalar(int q) { add_term(TermKey{}, Rational(q)); }
  ExactScalar(const Rational& q) { add_term(TermKey{}, q); }

  static ExactScalar monomial(const Rational& q, int ipow, int pipow,
                              std::vector<std::pair<Atom, int>> syms = {}) {
    ExactScalar x;
    TermKey k;
    int sign = 1;
    int a = ((ipow % 4) + 4) % 4;
    if (a >= 2) {
      sign = -1;
      a -= 2;
    }
    k.ipow = a;
    k.pipow = pipow;
    std::map<Atom, int> m;
    for (auto& [s, e] : syms) m[s] += e;
    for (auto& [s, e] : m)
      if (e != 0) k.syms.emplace_back(s, e);
    x.add_term(k, q * sign);
    return x;
  }
  static ExactScalar i() { return monomial(1, 1, 0); }
  static ExactScalar pi(int power = 1) { return monomial(1, 0, power); }
  static ExactScalar atom(Atom a, int power = 1) {
    return monomial(1, 0, 0, {{a, power}});
  }
  static ExactScalar rational(long long num, long long den = 1) {
    return ExactScalar(Rational(num) / Rational(den));
  }

  const std::map<TermKey, Rational>& terms() const { return terms_; }
  bool is_zero() const { return terms_.empty(); }
  std::size_t size() const { return terms_.size(); }

  ExactScalar& operator+=(const ExactScalar& y) {
    for (auto& [k, q] : y.terms_) add_term(k, q);
    return *this;
  }
  ExactScalar& operator-=(const ExactScalar& y) {
    for (auto& [k, q] : y.terms_) add_term(k, -q);
    return *this;
  }
  friend ExactScalar operator+(ExactScalar x, const ExactScalar& y) { return x += y; }
  friend ExactScalar operator-(ExactScalar x, const ExactScalar& y) { return x -= y; }
  friend ExactScalar operator-(const ExactScalar& x) {
    ExactScalar r;
    for (auto& [k, q] : x.terms_) r.terms_.emplace(k, -q);
    return r;
  }
  friend ExactScalar operator*(const ExactScalar& x, const ExactScalar& y) {
    ExactScalar r;
    for (auto& [kx, qx] : x.terms_)
      for (auto& [ky, qy] : y.terms_) {
        int sign = 1;
        TermKey k = multiply_keys(kx, ky, sign);
        r.add_term(k, qx * qy * sign);
      }
    return r;
  }
  ExactScalar& operator*=(const ExactScalar& y) { return *this = *this * y; }
  friend ExactScalar operator*(const Rational& q, const ExactScalar& x) {
    ExactScalar r;
    if (q == 0) return r;
    for (auto& [k, c] : x.terms_) r.terms_.emplace(k, c * q);
    return r;
  }
  friend ExactScalar operator/(const ExactScalar& x, const Rational& q) {
    if (q == 0) throw std::domain_error("ExactScalar: division by zero");
    return (Rational(1) / q) * x;
  }
  friend bool operator==(const ExactScalar& x, const ExactScalar& y) {
    return x.terms_ == y.terms_;
  }
  friend bool operator!=(const ExactScalar& x, const ExactScalar& y) { return !(x == y); }
  friend bool operator<(const ExactScalar& x, const ExactScalar& y) {
    return x.terms_ < y.terms_;
  }

  // Division by a single monomial (the only division the models need).
  ExactScalar divided_by_monomial(const ExactScalar& m) const {
    if (m.terms_.size() != 1)
      throw std::domain_error("ExactScalar: divisor is not a monomial");
    auto& [k, q] = *m.terms_.begin();
    std::vector<std::pair<Atom, int>> inv;
    for (auto& [s, e] : k.syms) inv.emplace_back(s, -e);
    return *this * monomial(Rational(1) / q, -k.ipow, -k.pipow, inv);
  }

  ExactScalar pow(int n) const {
    if (n < 0) {
      ExactScalar one(1);
      return one.divided_by_monomial(*this).pow(-n);
    }
    ExactScalar r(1);
    for (int j = 0; j < n; ++j) r *= *this;
    return r;
  }

  // Complex conjugation: i -> -i; atoms are treated as real.
  ExactScalar conj() const {
    ExactScalar r;
    for (auto& [k, q] : terms_) r.add_term(k, k.ipow ? -q : q);
    return r;
  }

  // Formal derivative with respect to an atom.
  ExactScalar derivative(Atom a) const {
    ExactScalar r;
    for (auto& [k, q] : terms_) {
      int e = k.exponent(a);
      if (e == 0) continue;
      TermKey nk = k;
      nk.syms.clear();
      for (auto& [s, p] : k.syms) {
        int np = (s == a) ? p - 1 : p;
        if (np != 0) nk.syms.emplace_back(s, np);
      }
      r.add_term(nk, q * e);
    }
    return r;
  }

  // Replace atom a (nonnegative powers only) by an arbitrary scalar.
  ExactScalar substitute(Atom a, const ExactScalar& value) const {
    ExactScalar r;
    for (auto& [k, q] : terms_) {
      int e = k.exponent(a);
      if (e < 0) throw std::domain_error("substitute: negative power of atom");
      TermKey nk = k;
      nk.syms.clear();
      for (auto& [s, p] : k.syms)
        if (s != a) nk.syms.emplace_back(s, p);
      ExactScalar t;
      t.add_term(nk, q);
      r += t * value.pow(e);
    }
    return r;
  }

  // Coefficient of atom^power (terms with a different power of `a` dropped).
  ExactScalar coefficient(Atom a, int power) const {
    ExactScalar r;
    for (auto& [k, q] : terms_) {
      if (k.exponent(a) != power) continue;
      TermKey nk = k;
      nk.syms.clear();
      for (auto& [s, p] : k.syms)
        if (s != a) nk.syms.emplace_back(s, p);
      r.add_term(nk, q);
    }
    return r;
  }

  int max_power(Atom a) const {
    int m = 0;
    bool first = true;
    for (auto& [k, q] : terms_) {
      int e = k.exponent(a);
      if (first || e > m) m = e;
      first = false;
    }
    return m;
  }
  bool depends_on(Atom a) const {
    for (auto& [k, q] : terms_)
      if (k.exponent(a) != 0) return true;
    return false;
  }

  std::string str() const;

 private:
  void add_term(const TermKey& k, const Rational& q) {
    if (q == 0) return;
    auto it = terms_.find(k);
    if (it == terms_.end()) {
      terms_.emplace(k, q);
      return;
    }
    it->second += q;
    if (it->second == 0) terms_.erase(it);
  }

  std::map<TermKey, Rational> terms_;
};

inline std::string rational_str(const Rational& q) {
  std::ostringstream os;
  os << boost::multiprecision::numerator(q);
  if (boost::multiprecision::denominator(q) != 1)
    os << "/" << boost::multiprecision::denominator(q);
  return os.str();
}

inline std::string ExactScalar::str() const {
  if (terms_.empty()) return "0";
  std::ostringstream os;
  bool first = true;
  for (auto& [k, q] : terms_) {
    if (!first) os << " + ";
    first = false;
    os << rational_str(q) << " * i^" << k.ipow << " * pi^" << k.pipow << " * prod(";
    bool f2 = true;
    for (auto& [s, e] : k.syms) {
      if (!f2) os << ", ";
      f2 = false;
      os << atom_name(s) << "^" << e;
    }
    os << ")";
  }
  return os.str();
}

inline std::ostream& operator<<(std::ostream& os, const ExactScalar& x) { return os << x.str(); }

// Parses the canonical text form produced by str().
inline ExactScalar parse_exact(const std::string& text) {
  ExactScalar out;
  if (text == "0") return out;
  std::size_t pos = 0;
  auto expect = [&](const std::string& tok) {
    while (pos < text.size() && text[pos] == ' ') ++pos;
    if (text.compare(pos, tok.size(), tok) != 0)
      throw std::invalid_argument("parse_exact: expected '" + tok + "' at " + std::to_string(pos));
    pos += tok.size();
  };
  auto read_until = [&](const std::string& stops) {
    while (pos < text.size() && text[pos] == ' ') ++pos;
    std::size_t start = pos;
    while (pos < text.size() && stops.find(text[pos]) == std::string::npos) ++pos;
    return text.substr(start, pos - start);
  };
  while (pos < text.size()) {
    std::string q = read_until(" ");
    expect("* i^");
    int a = std::stoi(read_until(" "));
    expect("* pi^");
    int b = std::stoi(read_until(" "));
    expect("* prod(");
    std::vector<std::pair<Atom, int>> syms;
    while (pos < text.size() && text[pos] != ')') {
      std::string name = read_until("^");
      expect("^");
      int e = std::stoi(read_until(",)"));
      auto at = atom_from_name(name);
      if (!at) throw std::invalid_argument("parse_exact: unknown atom " + name);
      syms.emplace_back(*at, e);
      if (text[pos] == ',') ++pos;
    }
    expect(")");
    out += ExactScalar::monomial(Rational(q), a, b, syms);
    while (pos < text.size() && text[pos] == ' ') ++pos;
    if (pos < text.size()) expect("+");
  }
  return out;
}

// Numeric values for atoms, used only for decimal rendering and numeric checks.
struct AtomValues {
  std::map<Atom, Decimal> values;

  static AtomValues standard() {
    AtomValues v;
    v.values[Atom::EulerC] = boost::math::constants::euler<Decimal>();
    return v;
  }
};

struct ComplexDecimal {
  Decimal re = 0;
  Decimal im = 0;
};

inline std::optional<ComplexDecimal> evaluate(const ExactScalar& x, const AtomValues& env) {
  ComplexDecimal r;
  const Decimal pi = boost::math::constants::pi<Decimal>();
  for (auto& [k, q] : x.terms()) {
    Decimal v = Decimal(boost::multiprecision::numerator(q)) /
                Decimal(boost::multiprecision::denominator(q));
    v *= boost::multiprecision::pow(pi, k.pipow);
    for (auto& [s, e] : k.syms) {
      auto it = env.values.find(s);
      if (it == env.values.end()) return std::nullopt;
      v *= boost::multiprecision::pow(it->second, e);
    }
    (k.ipow ? r.im : r.re) += v;
  }
  return r;
}

inline std::string decimal_str(const Decimal& v, int digits = 30) {
  std::ostringstream os;
  os.precision(digits - 1);  // scientific precision counts digits after the point
  os << std::scientific << v;
  return os.str();
}

// "re + im*i" at the requested number of significant digits, or empty when
// the scalar still contains atoms without a numeric value.
inline std::string to_decimal(const ExactScalar& x, const AtomValues& env, int digits = 30) {
  auto v = evaluate(x, env);
  if (!v) return "";
  return decimal_str(v->re, digits) + " + " + decimal_str(v->im, digits) + "*i";
}

// ---------------------------------------------------------------------------
// Truncated bigraded series in (hbar order, coupling order).

struct Truncation {
  int h_max = 4;
  int g_max = 4;
  friend bool operator==(const Truncation& a, const Truncation& b) {
    return a.h_max == b.h_max && a.g_max == b.g_max;
  }
};

using Bidegree = std::pair<int, int>;

template <class T>
class FormalSeries {
 public:
  FormalSeries() = default;
  explicit FormalSeries(Truncation t) : trunc_(t) {}

  static FormalSeries constant(const T& c, Truncation t = {}) {
    FormalSeries s(t);
    s.set({0, 0}, c);
    return s;
  }

  Truncation truncation() const { return trunc_; }
  const std::map<Bidegree, T>& coeffs() const { return coeffs_; }

  bool in_range(Bidegree d) const {
    return d.first >= 0 && d.second >= 0 && d.first <= trunc_.h_max && d.second <= trunc_.g_max;
  }

  T at(Bidegree d) const {
    auto it = coeffs_.find(d);
    return it == coeffs_.end() ? T{} : it->second;
  }

  // Entries outside the truncation window are dropped.
  void set(Bidegree d, const T& v) {
    if (!in_range(d)) return;
    if (is_zero_value(v))
      coeffs_.erase(d);
    else
      coeffs_[d] = v;
  }
  void add(Bidegree d, const T& v) {
    if (!in_range(d)) return;
    set(d, at(d) + v);
  }

  bool empty() const { return coeffs_.empty(); }

  FormalSeries& operator+=(const FormalSeries& o) {
    check(o);
    for (auto& [d, v] : o.coeffs_) add(d, v);
    return *this;
  }
  FormalSeries& operator-=(const FormalSeries& o) {
    check(o);
    for (auto& [d, v] : o.coeffs_) add(d, -v);
    return *this;
  }
  friend FormalSeries operator+(FormalSeries a, const FormalSeries& b) { return a += b; }
  friend FormalSeries operator-(FormalSeries a, const FormalSeries& b) { return a -= b; }
  friend FormalSeries operator-(const FormalSeries& a) {
    FormalSeries r(a.trunc_);
    for (auto& [d, v] : a.coeffs_) r.set(d, -v);
    return r;
  }
  friend bool operator==(const FormalSeries& a, const FormalSeries& b) {
    return a.trunc_ == b.trunc_ && a.coeffs_ == b.coeffs_;
  }

  FormalSeries scaled(const Rational& q) const {
    FormalSeries r(trunc_);
    for (auto& [d, v] : coeffs_) r.set(d, q * v);
    return r;
  }

  void check(const FormalSeries& o) const {
    if (!(trunc_ == o.trunc_)) throw std::invalid_argument("FormalSeries: truncation mismatch");
  }

 private:
  static bool is_zero_value(const T& v) {
    if constexpr (requires { v.is_zero(); })
      return v.is_zero();
    else
      return v == T{};
  }

  Truncation trunc_{};
  std::map<Bidegree, T> coeffs_;
};

template <class T>
FormalSeries<T> series_mul(const FormalSeries<T>& s, const FormalSeries<T>& t) {
  s.check(t);
  FormalSeries<T> r(s.truncation());
  for (auto& [ds, vs] : s.coeffs())
    for (auto& [dt, vt] : t.coeffs()) {
      Bidegree d{ds.first + dt.first, ds.second + dt.second};
      if (r.in_range(d)) r.add(d, vs * vt);
    }
  return r;
}

template <class T>
int series_max_power(const FormalSeries<T>& s) {
  return s.truncation().h_max + s.truncation().g_max;
}

template <class T>
FormalSeries<T> series_exp(const FormalSeries<T>& s) {
  if (s.coeffs().count({0, 0}))
    throw std::domain_error("series_exp: constant term must vanish");
  const Truncation tr = s.truncation();
  FormalSeries<T> result = FormalSeries<T>::constant(T(1), tr);
  FormalSeries<T> power = FormalSeries<T>::constant(T(1), tr);
  Rational fact = 1;
  for (int n = 1; n <= series_max_power(s); ++n) {
    power = series_mul(power, s);
    if (power.empty()) break;
    fact *= n;
    result += power.scaled(Rational(1) / fact);
  }
  return result;
}

template <class T>
FormalSeries<T> series_log(const FormalSeries<T>& s) {
  if (!(s.at({0, 0}) == T(1)))
    throw std::domain_error("series_log: constant term must be 1");
  const Truncation tr = s.truncation();
  FormalSeries<T> x = s - FormalSeries<T>::constant(T(1), tr);
  FormalSeries<T> result(tr);
  FormalSeries<T> power = FormalSeries<T>::constant(T(1), tr);
  for (int n = 1; n <= series_max_power(s); ++n) {
    power = series_mul(power, x);
    if (power.empty()) break;
    Rational c = Rational(n % 2 ? 1 : -1) / n;
    result += power.scaled(c);
  }
  return result;
}

using ScalarSeries = FormalSeries<ExactScalar>;

// Small exact helpers shared by several modules.
inline Rational factorial(int n) {
  Rational r = 1;
  for (int k = 2; k <= n; ++k) r *= k;
  return r;
}

inline Rational rational_pow(const Rational& q, int n) {
  Rational r = 1;
  if (n >= 0) {
    for (int k = 0; k < n; ++k) r *= q;
  } else {
    for (int k = 0; k < -n; ++k) r /= q;
  }
  return r;
}

inline double to_double(const Rational& q) { return q.convert_to<double>(); }

}  // namespace pqft
