#pragma once

#include "pqft/functionals.hpp"
#include "pqft/kernels.hpp"
#include "pqft/renorm.hpp"
#include "pqft/rgroups.hpp"

#include "json.hpp"

#include <string>
#include <utility>
#include <vector>

namespace pqft::models {

using functionals::Basis;
using functionals::LagrangianClass;
using functionals::LocalFunctional;
using functionals::LocalTerm;
using renorm::LocalDistribution;
using renorm::Radial;

inline ExactScalar hbar(int p = 1) { return ExactScalar::atom(Atom::Hbar, p); }
inline ExactScalar coupling(int p = 1) { return ExactScalar::atom(Atom::Coupling, p); }
inline ExactScalar mass2(int p = 1) { return ExactScalar::atom(Atom::Mass2, p); }

// ---------------------------------------------------------------------------
// Scaling violations of second-order kernels, hbar factors stripped.

// rho d/drho of the extension at rho = 1: massless part plus the m^2 part.
struct ChannelViolation {
  LocalDistribution massless;  // box^k delta coefficients
  LocalDistribution mass2;     // coefficients of m^2 box^k delta
};

// Coefficient of u^(-p) (no log) in a radial function.
inline ExactScalar power_coefficient(const Radial& r, int p) {
  auto it = r.terms.find({p, 0});
  return it == r.terms.end() ? ExactScalar() : it->second;
}

inline LocalDistribution radial_violation(const Radial& r, int d, int sig, const ExactScalar& logPartner = {}) {
  LocalDistribution out;
  for (auto& [key, c] : r.terms) {
    auto [p, logs] = key;
    if (logs == 0) {
      out += renorm::power_violation(d, sig, p, c);
      continue;
    }
    if (2 * p < d) continue;  // unique extension, invariant under joint scaling of x and mu
    if (logs != 1 || 2 * p != d || d != 4)
      throw std::domain_error("radial_violation: logarithmic kernel without a scaling rule");
    out += renorm::collapse(renorm::log_scaling_rule(c, logPartner, Atom::LogTau), d, sig);
  }
  return out;
}

// Extension of H_F^k / k! with k plain contractions. The m^2 log piece of the d = 4
// case is tied to the t_2-extension of D_F^(k-1)/(k-1)! by mu d/dmu t = 2 hbar v t_2.
inline ChannelViolation plain_channel(int d, int k) {
  const int sig = d - 1;
  auto h = renorm::feynman_radial(d, 2);
  std::vector<Radial> pw{Radial::power(0, 1), Radial()};
  std::vector<Radial> lower = pw;
  for (int j = 0; j < k; ++j) {
    lower = pw;
    pw = renorm::series_product(pw, h);
  }
  const ExactScalar norm(Rational(1) / factorial(k));
  Radial massless = norm * pw[0], m2 = norm * pw[1];
  ExactScalar partner;
  if (d == 4 && k >= 2) {
    Radial prev = ExactScalar(Rational(1) / factorial(k - 1)) * lower[0];
    const ExactScalar alpha = renorm::explicit_extension(d, sig, Atom::LogTau).coefficient;
    partner = ExactScalar(2) * kernels::v_mass_derivative(d) * power_coefficient(prev, d / 2) * alpha;
  }
  return {radial_violation(massless, d, sig), radial_violation(m2, d, sig, partner)};
}

// phi^2 (x) (d phi)^2/2 with two contractions: (1/2) d_l H_F d^l H_F.
inline ChannelViolation derivative_channel(int d) {
  const int sig = d - 1;
  auto h = renorm::feynman_radial(d, 2);
  Radial massless = ExactScalar(Rational(1, 2)) * renorm::grad_dot(h[0], h[0]);
  Radial m2 = renorm::grad_dot(h[0], h[1]);
  return {radial_violation(massless, d, sig), radial_violation(m2, d, sig)};
}

// ---------------------------------------------------------------------------
// Reports.

struct Check {
  std::string name;
  bool ok = false;
  std::string detail;
};

struct Component {
  std::string name;
  ExactScalar value;
  std::string note;
};

struct BetaReport {
  std::string model;
  int order = 0;
  std::vector<Component> components;  // named coefficients of the B-function
  LagrangianClass bClass;             // [B o L]
  ExactScalar gammaDot;
  ExactScalar lambdaDot;
  LagrangianClass beta;               // (hbar / i) beta, leading orders
  std::vector<Component> higherOrder; // reported, not compared
  std::vector<Check> checks;

  bool ok() const {
    for (auto& c : checks)
      if (!c.ok) return false;
    return true;
  }
  const ExactScalar& component(const std::string& name) const {
    for (auto& c : components)
      if (c.name == name) return c.value;
    throw std::out_of_range("BetaReport: no component " + name);
  }
  void add_check(std::string name, bool ok, std::string detail = {}) {
    checks.push_back({std::move(name), ok, std::move(detail)});
  }
  void expect(const std::string& name, const ExactScalar& got, const ExactScalar& want) {
    add_check(name, got == want, "got " + got.str() + ", expected " + want.str());
  }
};

// ---------------------------------------------------------------------------
// Class assembly.

// Adds c * B^(2)(phi^a/a! (x) phi^b/b!) for the plain channels k = 1..min(a, b).
inline void add_plain_pair(LagrangianClass& cls, const ExactScalar& c, int d, int a, int b) {
  for (int k = 1; k <= std::min(a, b); ++k) {
    if (k == a && k == b) continue;  // field-independent
    ChannelViolation v = plain_channel(d, k);
    const ExactScalar w = c * hbar(k) * ExactScalar(Rational(1) / (factorial(a - k) * factorial(b - k)));
    auto put = [&](const LocalDistribution& dist, const ExactScalar& extra) {
      for (auto& [box, x] : dist.boxDelta)
        functionals::add_collapsed(cls, {w * extra * x, a - k, b - k, box});
    };
    put(v.massless, ExactScalar(1));
    put(v.mass2, mass2());
  }
}

// Adds c * B^(2)(phi^a/a! (x) (d phi)^2/2) through the two-contraction channel.
inline void add_derivative_pair(LagrangianClass& cls, const ExactScalar& c, int d, int a) {
  if (a < 2) return;
  ChannelViolation v = derivative_channel(d);
  const ExactScalar w = c * hbar(2) * ExactScalar(Rational(1) / factorial(a - 2));
  for (auto& [box, x] : v.massless.boxDelta) functionals::add_collapsed(cls, {w * x, a - 2, 0, box});
  for (auto& [box, x] : v.mass2.boxDelta) functionals::add_collapsed(cls, {w * mass2() * x, a - 2, 0, box});
}

struct Interaction {
  int d = 4;
  std::vector<std::pair<Basis, ExactScalar>> terms;  // L = (i/hbar) sum c_b [b]
};

// [B^(2)(b1 (x) b2)] for two basis elements.
inline LagrangianClass pair_class(int d, Basis b1, Basis b2) {
  LagrangianClass cls;
  cls.ignore(Basis::One);
  cls.ignore(Basis::Phi);
  auto m1 = functionals::basis_monomial(b1), m2 = functionals::basis_monomial(b2);
  if (m1.deriv == 0 && m2.deriv == 0) {
    add_plain_pair(cls, ExactScalar(1), d, m1.plain, m2.plain);
  } else if (m1.deriv == 0 && m2.deriv == 2 && m2.plain == 0) {
    add_derivative_pair(cls, ExactScalar(1), d, m1.plain);
  } else if (m2.deriv == 0 && m1.deriv == 2 && m1.plain == 0) {
    add_derivative_pair(cls, ExactScalar(1), d, m2.plain);
  } else {
    throw std::invalid_argument("pair_class: (d phi)^2 (x) (d phi)^2 channel not supported");
  }
  return cls;
}

// [B^(2) o L] = (1/2) (i/hbar)^2 sum c_b c_b' B^(2)(b (x) b').
inline LagrangianClass second_order_class(const Interaction& L) {
  LagrangianClass cls;
  cls.ignore(Basis::One);
  cls.ignore(Basis::Phi);
  const ExactScalar pre = ExactScalar(Rational(1, 2)) * (ExactScalar::i() * hbar(-1)).pow(2);
  for (auto& [b1, c1] : L.terms)
    for (auto& [b2, c2] : L.terms) cls += (pre * c1 * c2) * pair_class(L.d, b1, b2);
  return cls;
}

// <L^(1), phi> on the class level: phi^n/n! -> n [phi^n], (d phi)^2/2 -> 2 [(d phi)^2].
inline LagrangianClass field_derivative_pairing(const LagrangianClass& l) {
  LagrangianClass r;
  for (Basis b : functionals::kBasis) {
    auto m = functionals::basis_monomial(b);
    r[b] = ExactScalar(m.fields()) * l[b];
  }
  return r;
}

// mu d/dmu L_mu = -2 hbar Gamma_v L, Gamma_v phi^n/n! = (1/2) v phi^(n-2)/(n-2)!.
inline LagrangianClass mu_derivative(const LagrangianClass& l, int d) {
  const ExactScalar v = kernels::v_coincidence(d, 0.0, 1.0).exact;
  LagrangianClass r;
  for (Basis b : functionals::kBasis) {
    auto m = functionals::basis_monomial(b);
    if (m.deriv != 0 || m.plain < 2 || l[b].is_zero()) continue;
    auto lower = functionals::basis_of_shape(m.plain - 2, 0);
    r[*lower] += ExactScalar(-2) * hbar() * ExactScalar(Rational(1, 2)) * v * l[b];
  }
  return r;
}

inline ExactScalar truncate_coupling(const ExactScalar& x, int maxPower) {
  ExactScalar r;
  for (int p = 0; p <= std::min(maxPower, x.max_power(Atom::Coupling)); ++p)
    r += x.coefficient(Atom::Coupling, p) * coupling(p);
  return r;
}

inline LagrangianClass truncate_coupling(const LagrangianClass& l, int maxPower) {
  LagrangianClass r = l;
  for (auto& c : r.coeff) c = truncate_coupling(c, maxPower);
  return r;
}

inline LagrangianClass drop_orders_upto(const LagrangianClass& l, int maxPower) {
  LagrangianClass r = l - truncate_coupling(l, maxPower);
  r.ignored = l.ignored;
  return r;
}

// beta([L]) = [B o L] + (gammaDot/2) <L^(1), phi> - (i/(2 hbar))(gammaDot [d phi d phi] + lambdaDot m^2 [phi phi])
//             + [mu d/dmu L_mu]; the scaling term vanishes for marginal interactions.
inline void assemble_beta(BetaReport& r, const LagrangianClass& input, int d, int order) {
  const LagrangianClass& bl = r.bClass;
  const ExactScalar minusIHbar = ExactScalar(-1) * ExactScalar::i() * hbar();
  r.gammaDot = minusIHbar * bl[Basis::DPhi2];
  r.lambdaDot = minusIHbar * bl[Basis::Phi2].coefficient(Atom::Mass2, 1);
  LagrangianClass sub;
  const ExactScalar iOverHbar = ExactScalar::i() * hbar(-1);
  sub[Basis::DPhi2] = iOverHbar * r.gammaDot;
  sub[Basis::Phi2] = iOverHbar * r.lambdaDot * mass2();
  LagrangianClass beta = bl - sub + ExactScalar(Rational(1, 2)) * r.gammaDot * field_derivative_pairing(input) +
                         mu_derivative(input, d);
  beta.ignore(Basis::One);
  beta.ignore(Basis::Phi);
  LagrangianClass scaled = minusIHbar * beta;  // hbar/i
  r.beta = truncate_coupling(scaled, order);
  LagrangianClass rest = drop_orders_upto(scaled, order);
  for (Basis b : functionals::kBasis)
    if (!rest[b].is_zero())
      r.higherOrder.push_back({std::string("beta[") + functionals::basis_name(b) + "]", rest[b], "higher order in g"});
  r.add_check("(d phi)^2 component absorbed", beta[Basis::DPhi2].is_zero());
  r.add_check("m^2 [phi^2] of [B o L] absorbed",
              (bl[Basis::Phi2].coefficient(Atom::Mass2, 1) * mass2() - sub[Basis::Phi2]).is_zero());
}

// ---------------------------------------------------------------------------
// phi^3 in d = 6.

inline BetaReport phi3_d6_B(int order = 3) {
  if (order < 2 || order > 3) throw std::invalid_argument("phi3_d6_B: order 2 or 3");
  BetaReport r;
  r.model = "phi3_d6";
  r.order = order;
  ChannelViolation fish = plain_channel(6, 2);
  const ExactScalar a0 = fish.massless.delta(1), a1 = fish.mass2.delta(0);
  r.components.push_back({"a0", a0, "box delta coefficient of B(phi^2 (x) phi^2), per hbar^2"});
  r.components.push_back({"a1", a1, "m^2 delta coefficient of B(phi^2 (x) phi^2), per hbar^2"});
  r.expect("a0", a0, ExactScalar::monomial(Rational(1, 384), 1, -3));
  r.expect("a1", a1, ExactScalar::monomial(Rational(1, 64), 1, -3));

  Interaction L{6, {{Basis::Phi3, coupling()}}};
  r.bClass = second_order_class(L);
  if (order >= 3) {
    auto red = renorm::feynman_reduce_triangle();
    auto tri = renorm::triangle_integral(1e-12);
    const bool iOk = std::abs(tri.value - 0.5) < 1e-8;
    r.add_check("triangle determinant", red.determinantOk);
    r.add_check("triangle integral I = 1/2", iOk, "I = " + std::to_string(tri.value));
    r.add_check("inner integral independent of lambda", tri.innerOk);
    const ExactScalar a2 = red.coefficientOverI * ExactScalar(Rational(1, 2));
    r.components.push_back({"a2", a2, "delta(x) delta(y) coefficient of B(phi^2 (x) phi^2 (x) phi^2), per hbar^3"});
    r.expect("a2", a2, ExactScalar::monomial(Rational(1, 64), 0, -3));
    // (1/3!) (i/hbar)^3 g^3 hbar^3 a_2 phi(x_1) phi(x_2) phi(x_3)
    const ExactScalar pre = (ExactScalar::i() * hbar(-1)).pow(3) * coupling(3) * hbar(3) * a2;
    r.bClass.add_raw(ExactScalar(Rational(1, 6)) * pre, 3, 0);
  }
  for (Basis b : functionals::kBasis)
    if (!r.bClass[b].is_zero())
      r.components.push_back({std::string("[B o L][") + functionals::basis_name(b) + "]", r.bClass[b], ""});
  return r;
}

inline BetaReport phi3_d6_beta() {
  BetaReport r = phi3_d6_B(3);
  LagrangianClass input;
  input[Basis::Phi3] = ExactScalar::i() * hbar(-1) * coupling();
  assemble_beta(r, input, 6, 3);
  r.expect("gammaDot", r.gammaDot, ExactScalar::monomial(Rational(1, 384), 0, -3, {{Atom::Hbar, 1}, {Atom::Coupling, 2}}));
  r.expect("beta[phi^3]", r.beta[Basis::Phi3],
           ExactScalar::monomial(Rational(-3, 256), 0, -3, {{Atom::Hbar, 1}, {Atom::Coupling, 3}}));
  bool others = true;
  for (Basis b : functionals::kBasis)
    if (b != Basis::Phi3 && !r.beta[b].is_zero()) others = false;
  r.add_check("beta closes on [phi^3]", others);
  r.add_check("g = 0 gives 0", r.beta[Basis::Phi3].substitute(Atom::Coupling, 0).is_zero());
  const ExactScalar b3 = r.beta[Basis::Phi3];
  r.add_check("hbar grading of beta is O(hbar)", b3.max_power(Atom::Hbar) == 1 && !b3.coefficient(Atom::Hbar, 1).is_zero());
  r.add_check("asymptotic freedom sign", b3.substitute(Atom::Hbar, 1).substitute(Atom::Coupling, 1) ==
                                             ExactScalar::monomial(Rational(-3, 256), 0, -3));
  return r;
}

// ---------------------------------------------------------------------------
// phi^4 in d = 4.

inline BetaReport phi4_d4_B() {
  BetaReport r;
  r.model = "phi4_d4";
  r.order = 2;
  ChannelViolation fish = plain_channel(4, 2), sunset = plain_channel(4, 3), grad = derivative_channel(4);
  const ExactScalar fishC = hbar(2) * fish.massless.delta(0);
  r.components.push_back({"fish", fishC, "B(phi^2 (x) phi^2) at phi = 0, delta coefficient"});
  r.components.push_back({"a1_deriv", grad.massless.delta(1), "box delta in B(phi^2 (x) (d phi)^2), per hbar^2"});
  r.components.push_back({"b1", grad.mass2.delta(0), "m^2 delta in B(phi^2 (x) (d phi)^2), per hbar^2"});
  r.components.push_back({"sunset_box", hbar(3) * sunset.massless.delta(1), "box delta in B(phi^3 (x) phi^3)"});
  r.components.push_back({"sunset_m2", hbar(3) * sunset.mass2.delta(0), "m^2 delta in B(phi^3 (x) phi^3)"});
  r.expect("fish", fishC, ExactScalar::monomial(Rational(-1, 16), 1, -2, {{Atom::Hbar, 2}}));
  r.expect("b1", grad.mass2.delta(0), ExactScalar::monomial(Rational(-1, 8), 1, -2));
  r.expect("sunset box delta", hbar(3) * sunset.massless.delta(1),
           ExactScalar::monomial(Rational(1, 1536), 1, -4, {{Atom::Hbar, 3}}));
  // i hbar^3 ( -(1 + log mu^2/tau^2)/(2^8 pi^4) - F0/(2^4 pi^2) ), log mu^2/tau^2 = 2 (LogMu - LogTau)
  const ExactScalar logRatio = ExactScalar(2) * (ExactScalar::atom(Atom::LogMu) - ExactScalar::atom(Atom::LogTau));
  const ExactScalar sunsetM2 =
      ExactScalar::i() * hbar(3) *
      (ExactScalar(-1) * (ExactScalar(1) + logRatio) * ExactScalar::monomial(Rational(1, 256), 0, -4) -
       ExactScalar::atom(Atom::F0) * ExactScalar::monomial(Rational(1, 16), 0, -2));
  r.expect("sunset m^2 delta", hbar(3) * sunset.mass2.delta(0), sunsetM2);

  // channel contributions to [B^(2) o (g phi^4 + a m^2 phi^2 + b (d phi)^2)^2], couplings without i/hbar
  LagrangianClass gg = ExactScalar(Rational(1, 2)) * pair_class(4, Basis::Phi4, Basis::Phi4);
  LagrangianClass ga = mass2() * pair_class(4, Basis::Phi4, Basis::Phi2);
  LagrangianClass gb = pair_class(4, Basis::Phi4, Basis::DPhi2);
  const ExactScalar undo(1);
  r.components.push_back({"g^2 [phi^4]", undo * gg[Basis::Phi4], "per g^2"});
  r.components.push_back({"g^2 [(d phi)^2]", undo * gg[Basis::DPhi2], "per g^2"});
  r.components.push_back({"g^2 m^2 [phi^2]", undo * gg[Basis::Phi2], "per g^2"});
  r.components.push_back({"a g m^2 [phi^2]", undo * ga[Basis::Phi2], "per a g"});
  r.components.push_back({"b g m^2 [phi^2]", undo * gb[Basis::Phi2], "per b g"});
  r.expect("g^2 [phi^4]", undo * gg[Basis::Phi4], ExactScalar::monomial(Rational(-3, 16), 1, -2, {{Atom::Hbar, 2}}));
  r.expect("g^2 [(d phi)^2]", undo * gg[Basis::DPhi2],
           ExactScalar::monomial(Rational(-1, 1536), 1, -4, {{Atom::Hbar, 3}}));
  r.expect("g^2 m^2 [phi^2]", undo * gg[Basis::Phi2], mass2() * sunsetM2);
  r.expect("a g m^2 [phi^2]", undo * ga[Basis::Phi2], ExactScalar::monomial(Rational(-1, 16), 1, -2, {{Atom::Hbar, 2}, {Atom::Mass2, 1}}));
  r.expect("b g m^2 [phi^2]", undo * gb[Basis::Phi2], ExactScalar::monomial(Rational(-1, 8), 1, -2, {{Atom::Hbar, 2}, {Atom::Mass2, 1}}));
  r.add_check("box delta of the phi^4 (x) (d phi)^2 channel is a total derivative",
              gb[Basis::Phi4].is_zero() && gb[Basis::DPhi2].is_zero() && !grad.massless.delta(1).is_zero());

  r.bClass = second_order_class({4, {{Basis::Phi4, coupling()}}});
  for (Basis b : functionals::kBasis)
    if (!r.bClass[b].is_zero())
      r.components.push_back({std::string("[B o L][") + functionals::basis_name(b) + "]", r.bClass[b], ""});
  return r;
}

inline bool free_of(const ExactScalar& x, std::initializer_list<Atom> atoms) {
  for (Atom a : atoms)
    if (x.depends_on(a)) return false;
  return true;
}

// m^2 [phi^2] coefficient of [B o L] at two values of the t_2 scale.
inline ExactScalar tau_shift(const BetaReport& r, const ExactScalar& logTau1, const ExactScalar& logTau2) {
  const ExactScalar undo = (ExactScalar::i() * hbar(-1)).pow(-2) * coupling(-2);
  const ExactScalar c = undo * r.bClass[Basis::Phi2];
  return c.substitute(Atom::LogTau, logTau2) - c.substitute(Atom::LogTau, logTau1);
}

inline BetaReport phi4_d4_beta() {
  BetaReport r = phi4_d4_B();
  LagrangianClass input;
  input[Basis::Phi4] = ExactScalar::i() * hbar(-1) * coupling();
  assemble_beta(r, input, 4, 2);
  r.expect("gammaDot", r.gammaDot, ExactScalar::monomial(Rational(1, 1536), 0, -4, {{Atom::Hbar, 2}, {Atom::Coupling, 2}}));
  r.expect("beta[phi^4]", r.beta[Basis::Phi4],
           ExactScalar::monomial(Rational(3, 16), 0, -2, {{Atom::Hbar, 1}, {Atom::Coupling, 2}}));
  r.expect("beta m^2 [phi^2]", r.beta[Basis::Phi2],
           ExactScalar::monomial(Rational(-1, 16), 0, -2, {{Atom::Hbar, 1}, {Atom::Coupling, 1}, {Atom::Mass2, 1}}));
  bool clean = true;
  for (auto& c : r.beta.coeff) clean = clean && free_of(c, {Atom::F0, Atom::LogTau, Atom::LogMu});
  r.add_check("beta free of F0, log tau and log mu", clean);
  r.add_check("m = 0 gives a pure [phi^4] flow",
              r.beta[Basis::Phi2].substitute(Atom::Mass2, 0).is_zero() && r.beta[Basis::DPhi2].is_zero() &&
                  r.beta[Basis::Phi3].is_zero());
  // Shift of the m^2 [phi^2] coefficient under tau_1 -> tau_2, log tau_2^2/tau_1^2 = 2 delta.
  const ExactScalar delta = ExactScalar::atom(Atom::LogRho);  // stands for log tau_2 - log tau_1
  const ExactScalar shift = tau_shift(r, ExactScalar(), delta);
  r.components.push_back({"tau shift", shift, "change of g^2 m^2 [phi^2] in [B o L] for log tau -> log tau + delta"});
  r.expect("tau shift", shift,
           ExactScalar::monomial(Rational(2, 256), 1, -4, {{Atom::Hbar, 3}, {Atom::Mass2, 1}, {Atom::LogRho, 1}}));
  // (gammaDot g / 2) * 2 hbar [Gamma_H phi^4]; Gamma_H phi^4/4! = (1/2) H(x,x) phi^2/2!
  r.higherOrder.push_back({"beta[phi^2] from 2 hbar Gamma_H",
                           ExactScalar(-1) * ExactScalar::i() * hbar() * ExactScalar(Rational(1, 2)) * r.gammaDot *
                               ExactScalar::i() * hbar(-1) * coupling() * hbar() * ExactScalar(2) *
                               ExactScalar(Rational(1, 2)),
                           "times H^mu(x,x), the coincidence value of the Hadamard function"});
  return r;
}

// ---------------------------------------------------------------------------
// phi^2 in d = 4: Z(rho)(V), alpha_{-v log rho^2}(V) and B_hat(V).

struct Phi2Example {
  LocalFunctional V;
  LocalFunctional zOfV;
  LocalFunctional alphaOfV;
  LocalFunctional bhatOfV;
  rgroups::ZMap z;
  rgroups::ZMap bhat;
  std::vector<Check> checks;
  bool ok() const {
    for (auto& c : checks)
      if (!c.ok) return false;
    return true;
  }
};

inline rgroups::SMatrix phi2_reference_smatrix() {
  rgroups::SMatrix S;
  S.d = 4;
  S.choices[2] = {ExactScalar(), ExactScalar()};
  return S;
}

inline Phi2Example phi2_d4_example() {
  Phi2Example e;
  const ExactScalar ig = ExactScalar::i() * coupling();
  e.V.add(LocalTerm{{ig * hbar(-1), 2, 0}, {{"f", 1}}, {}, {}});
  const std::vector<rgroups::Shape> shapes{{2, 0}};
  const ExactScalar logRho = ExactScalar::atom(Atom::LogRho);
  auto S = phi2_reference_smatrix();
  e.z = rgroups::gml_cocycle(S, logRho, 2, shapes);
  e.zOfV = rgroups::apply(e.z, e.V, 2);
  e.alphaOfV = rgroups::apply(rgroups::alpha_v_log(4, logRho, -1, 2), e.V, 1);
  e.bhat = rgroups::bhat_function(S, 2, {{0, 0}, {2, 0}}, 2);
  e.bhat.identityDefault = false;
  e.bhatOfV = rgroups::apply(e.bhat, e.V, 2);

  LocalFunctional wantZ = e.V, wantAlpha = e.V, wantB;
  wantZ.add(LocalTerm{{ig * coupling() * logRho * ExactScalar::monomial(Rational(1, 8), 0, -2), 0, 0}, {{"f", 2}}, {}, {}});
  wantAlpha.add(LocalTerm{{ExactScalar(-1) * ig * mass2() * ExactScalar::monomial(Rational(1, 16), 0, -2) *
                               ExactScalar(2) * logRho, 0, 0}, {{"f", 1}}, {}, {}});
  wantB.add(LocalTerm{{ExactScalar(-1) * ig * mass2() * ExactScalar::monomial(Rational(1, 8), 0, -2), 0, 0}, {{"f", 1}}, {}, {}});
  wantB.add(LocalTerm{{ig * coupling() * ExactScalar::monomial(Rational(1, 8), 0, -2), 0, 0}, {{"f", 2}}, {}, {}});
  e.checks.push_back({"Z(rho)(V)", e.zOfV == wantZ, ""});
  e.checks.push_back({"alpha_{-v log rho^2}(V)", e.alphaOfV == wantAlpha, ""});
  e.checks.push_back({"B_hat(V)", e.bhatOfV == wantB, ""});
  e.checks.push_back({"cocycle identity", rgroups::cocycle_identity(S, 2, shapes, 2), ""});
  e.checks.push_back({"C7 audit", rgroups::c7_audit(e.z), ""});
  return e;
}

// ---------------------------------------------------------------------------
// Fish coefficient three ways: closed form, kappa derivative of the explicit
// extension, and the Euclidean oracle for the s = 0 analogue.

struct FishChain {
  ExactScalar closedForm;
  ExactScalar kappaDerivative;
  double euclideanOracle = 0;
  double euclideanClosed = 0;
  bool exactAgree = false;
  bool numericAgree = false;
};

inline FishChain fish_consistency_chain() {
  FishChain f;
  const ExactScalar coef = ExactScalar::monomial(Rational(1, 32), 0, -4);  // D_F^2 / 2 at u^(-2)
  f.closedForm = coef * renorm::c_k(4, 3, 0);
  f.kappaDerivative = coef * renorm::explicit_extension(4, 3).kappaDerivative;
  f.euclideanOracle = renorm::euclidean_scaling_oracle(4);
  f.euclideanClosed = evaluate(renorm::c_k(4, 0, 0), AtomValues::standard())->re.convert_to<double>();
  f.exactAgree = f.closedForm == f.kappaDerivative &&
                 f.closedForm == ExactScalar::monomial(Rational(-1, 16), 1, -2);
  f.numericAgree = std::abs(f.euclideanOracle - f.euclideanClosed) < 1e-6;
  return f;
}

// ---------------------------------------------------------------------------
// JSON rendering.

// Symbolic form plus one 30-digit decimal per monomial in the remaining atoms.
inline nlohmann::json scalar_json(const ExactScalar& x) {
  nlohmann::json terms = nlohmann::json::array();
  for (auto& [k, q] : x.terms()) {
    ExactScalar value;
    value += ExactScalar::monomial(q, k.ipow, k.pipow);
    std::string atoms;
    for (auto& [a, e] : k.syms) atoms += std::string(atoms.empty() ? "" : " ") + atom_name(a) + "^" + std::to_string(e);
    auto v = evaluate(value, AtomValues::standard());
    terms.push_back({{"atoms", atoms}, {"re", decimal_str(v->re, 30)}, {"im", decimal_str(v->im, 30)}});
  }
  return {{"symbolic", x.str()}, {"terms", terms}};
}

inline nlohmann::json class_json(const LagrangianClass& c) {
  nlohmann::json out = nlohmann::json::array();
  for (Basis b : functionals::kBasis) {
    if (c.ignored[LagrangianClass::index(b)] || c[b].is_zero()) continue;
    out.push_back({{"basis", functionals::basis_name(b)}, {"coefficient", scalar_json(c[b])}});
  }
  return out;
}

inline nlohmann::json checks_json(const std::vector<Check>& checks) {
  nlohmann::json out = nlohmann::json::array();
  for (auto& c : checks) out.push_back({{"name", c.name}, {"ok", c.ok}, {"detail", c.detail}});
  return out;
}

inline nlohmann::json to_json(const BetaReport& r) {
  nlohmann::json comps = nlohmann::json::array(), higher = nlohmann::json::array();
  for (auto& c : r.components) comps.push_back({{"basis", c.name}, {"coefficient", scalar_json(c.value)}, {"note", c.note}});
  for (auto& c : r.higherOrder) higher.push_back({{"basis", c.name}, {"coefficient", scalar_json(c.value)}, {"note", c.note}});
  return {{"model", r.model},
          {"order", r.order},
          {"components", comps},
          {"gammaDot", scalar_json(r.gammaDot)},
          {"lambdaDot", scalar_json(r.lambdaDot)},
          {"beta", class_json(r.beta)},
          {"higherOrder", higher},
          {"checks", checks_json(r.checks)}};
}

inline nlohmann::json functional_json(const LocalFunctional& f) {
  nlohmann::json out = nlohmann::json::array();
  for (auto& t : f.terms)
    out.push_back({{"coefficient", scalar_json(t.mono.coefficient)},
                   {"plain", t.mono.plain},
                   {"deriv", t.mono.deriv},
                   {"smearing", rgroups::smear_key(t.smear)}});
  return out;
}

inline nlohmann::json to_json(const Phi2Example& e) {
  return {{"model", "phi2_d4_example"},
          {"V", functional_json(e.V)},
          {"Z(rho)(V)", functional_json(e.zOfV)},
          {"alpha_{-v log rho^2}(V)", functional_json(e.alphaOfV)},
          {"B_hat(V)", functional_json(e.bhatOfV)},
          {"checks", checks_json(e.checks)}};
}

}  // namespace pqft::models
