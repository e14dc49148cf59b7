#pragma once

#include "pqft/functionals.hpp"
#include "pqft/products.hpp"
#include "pqft/renorm.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <complex>
#include <functional>
#include <map>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace pqft::rgroups {

using functionals::LocalFunctional;
using functionals::LocalTerm;
using functionals::SlotTable;
using functionals::Smearing;
using functionals::SupportRegion;
using kernels::Kind;
using kernels::KernelTag;
using products::Edge;
using products::Graph;
using products::GraphSum;
using products::Vertex;

using Shape = std::pair<int, int>;  // (plain, derivative) field count

// ---------------------------------------------------------------------------
// Smearing slots carried by graph vertices as canonical keys "f{1}*g{2}".

inline std::string smear_key(const Smearing& s) {
  std::string out;
  for (auto& [name, p] : s) {
    if (p == 0) continue;
    if (!out.empty()) out += "*";
    out += name + "{" + std::to_string(p) + "}";
  }
  return out;
}

inline Smearing smear_from_key(const std::string& key) {
  Smearing s;
  std::size_t pos = 0;
  while (pos < key.size()) {
    std::size_t end = key.find('*', pos);
    if (end == std::string::npos) end = key.size();
    std::string part = key.substr(pos, end - pos);
    std::size_t brace = part.rfind('{');
    if (brace == std::string::npos || part.back() != '}') throw std::invalid_argument("smear_from_key: " + key);
    s[part.substr(0, brace)] += std::stoi(part.substr(brace + 1, part.size() - brace - 2));
    pos = end + 1;
  }
  return s;
}

inline Smearing merge(Smearing a, const Smearing& b) {
  for (auto& [n, p] : b) a[n] += p;
  return a;
}

// Region of a product of test functions: the first known factor (a superset).
inline SupportRegion region_of(const Smearing& s, const SlotTable& slots) {
  for (auto& [n, p] : s) {
    auto it = slots.find(n);
    if (it != slots.end()) return it->second.region;
  }
  return {};
}

// Empty regions are unknown and never separated.
inline bool separated(const SupportRegion& a, const SupportRegion& b) {
  return !a.empty() && !b.empty() && functionals::disjoint(a, b);
}

inline bool smearing_vanishes(const Smearing& s, const SlotTable& slots) {
  for (auto& [a, pa] : s)
    for (auto& [b, pb] : s) {
      if (!(a < b)) continue;
      auto ia = slots.find(a), ib = slots.find(b);
      if (ia != slots.end() && ib != slots.end() && separated(ia->second.region, ib->second.region))
        return true;
    }
  return false;
}

inline ExactScalar flatten(const ScalarSeries& s) {
  ExactScalar r;
  for (auto& [d, v] : s.coeffs())
    r += v * ExactScalar::atom(Atom::Hbar, d.first) * ExactScalar::atom(Atom::Coupling, d.second);
  return r;
}

// Prefactors folded into single exact scalars carrying hbar and g as atoms.
inline GraphSum flattened(const GraphSum& s) {
  GraphSum r = GraphSum::zero(s.trunc);
  for (auto& [k, e] : s.entries) r.add(e.graph, ScalarSeries::constant(flatten(e.prefactor), s.trunc));
  return r;
}

// ---------------------------------------------------------------------------
// S-matrices as extension-choice tables.

// t_choice = t_ref + (c_0 * coefficient(D_F^m) * scaleShift + deltaShift) delta,
// where the reference extension of H_F^m has scale log kappa.
struct ExtensionChoice {
  ExactScalar scaleShift;
  ExactScalar deltaShift;
};

struct SMatrix {
  int d = 4;
  std::map<int, ExtensionChoice> choices;  // keyed by the bundle size m of H_F^m
  Truncation trunc{12, 0};

  int sig() const { return d - 1; }
  SMatrix with_scale_shift(const ExactScalar& logRho) const {
    SMatrix s = *this;
    for (auto& [m, c] : s.choices) c.scaleShift += logRho;
    return s;
  }
};

inline std::string bundle_name(int d, int m) {
  return "H_F^" + std::to_string(m) + " (d=" + std::to_string(d) + ")";
}

// delta coefficient of t_choice - t_ref for a bundle of m edges
inline ExactScalar bundle_shift(const SMatrix& S, int m) {
  auto it = S.choices.find(m);
  if (it == S.choices.end()) throw std::runtime_error("missing extension selection for " + bundle_name(S.d, m));
  const int omega = m * (S.d - 2) - S.d;
  if (omega != 0)
    throw std::runtime_error("extension shift of " + bundle_name(S.d, m) + " needs derivatives of delta");
  ExactScalar lead = kernels::massless_feynman(S.d).prefactor.pow(m);
  return lead * renorm::c_k(S.d, S.sig(), 0) * it->second.scaleShift + it->second.deltaShift;
}

inline GraphSum vertex_sum(const LocalTerm& t, int label, const SlotTable& slots, Truncation trunc) {
  if (!t.logWeight.is_zero() || !t.slotLog.is_zero())
    throw std::invalid_argument("vertex_sum: scaled terms are not supported as S-matrix arguments");
  return GraphSum::monomial(t.mono.coefficient, label, smear_key(t.smear), t.mono.plain, t.mono.deriv,
                            region_of(t.smear, slots), trunc);
}

namespace detail {

struct Bundle {
  int u, v, m;
};

// Merges vertex v into u (u < v) after removing the m bundle edges between them.
inline Graph collapse(const Graph& g, int u, int v, int m, const SlotTable& slots) {
  Graph h;
  const Vertex& a = g.vertex(u);
  const Vertex& b = g.vertex(v);
  if (a.deriv || b.deriv) throw std::invalid_argument("collapse: derivative legs at a divergent bundle");
  Vertex merged = a;
  merged.plain = a.plain + b.plain - 2 * m;
  Smearing s = merge(smear_from_key(a.slot), smear_from_key(b.slot));
  merged.slot = smear_key(s);
  merged.region = region_of(s, slots);
  for (auto& x : g.vertices)
    if (x.label != u && x.label != v) h.vertices.push_back(x);
  h.vertices.push_back(merged);
  for (auto e : g.edges) {
    if ((e.u == u && e.v == v)) continue;
    if (e.u == v) e.u = u;
    if (e.v == v) e.v = u;
    if (e.u > e.v) {
      std::swap(e.u, e.v);
      std::swap(e.du, e.dv);
    }
    h.edges.push_back(e);
  }
  h.canonicalize();
  return h;
}

inline bool connected(const Graph& g, const std::vector<int>& members) {
  if (members.empty()) return false;
  std::set<int> in(members.begin(), members.end()), seen{members.front()};
  std::vector<int> stack{members.front()};
  while (!stack.empty()) {
    int x = stack.back();
    stack.pop_back();
    for (auto& e : g.edges) {
      int y = e.u == x ? e.v : (e.v == x ? e.u : -1);
      if (y >= 0 && in.count(y) && !seen.count(y)) {
        seen.insert(y);
        stack.push_back(y);
      }
    }
  }
  return seen.size() == in.size();
}

}  // namespace detail

// Replaces coincidence-divergent H_F bundles by the reference extension plus the
// delta-collapsed shift of the selected extension.
inline GraphSum apply_extensions(const GraphSum& s, const SMatrix& S, const SlotTable& slots, int order) {
  GraphSum out = GraphSum::zero(s.trunc);
  const int d = S.d;
  for (auto& [key, e] : s.entries) {
    const Graph& g = e.graph;
    std::map<std::pair<int, int>, std::vector<const Edge*>> pairs;
    for (auto& edge : g.edges) pairs[{edge.u, edge.v}].push_back(&edge);
    std::vector<detail::Bundle> bundles;
    for (auto& [uv, list] : pairs) {
      int sd = 0;
      bool derivs = false;
      for (auto* x : list) {
        sd += d - 2 + x->du + x->dv;
        derivs = derivs || x->du || x->dv;
      }
      if (sd < d) continue;
      if (separated(g.vertex(uv.first).region, g.vertex(uv.second).region)) continue;
      if (derivs)
        throw std::runtime_error("missing extension selection for a differentiated bundle at order " +
                                 std::to_string(order));
      if (!S.choices.count(static_cast<int>(list.size())))
        throw std::runtime_error("missing extension selection for " + bundle_name(d, static_cast<int>(list.size())) +
                                 " at order " + std::to_string(order));
      bundles.push_back({uv.first, uv.second, static_cast<int>(list.size())});
    }
    // divergent subgraphs with three or more vertices
    const int nv = static_cast<int>(g.vertices.size());
    for (int mask = 1; mask < (1 << nv); ++mask) {
      std::vector<int> members;
      for (int j = 0; j < nv; ++j)
        if (mask >> j & 1) members.push_back(g.vertices[j].label);
      if (members.size() < 3) continue;
      int sd = 0;
      std::set<int> in(members.begin(), members.end());
      for (auto& edge : g.edges)
        if (in.count(edge.u) && in.count(edge.v)) sd += d - 2 + edge.du + edge.dv;
      if (sd >= d * (static_cast<int>(members.size()) - 1) && detail::connected(g, members))
        throw std::runtime_error("missing extension selection for a " + std::to_string(members.size()) +
                                 "-vertex subgraph at order " + std::to_string(order));
    }
    const std::size_t nb = bundles.size();
    for (std::size_t choice = 0; choice < (std::size_t(1) << nb); ++choice) {
      Graph h = g;
      ExactScalar factor(1);
      for (auto& edge : h.edges)
        for (std::size_t b = 0; b < nb; ++b)
          if (!(choice >> b & 1) && edge.u == bundles[b].u && edge.v == bundles[b].v) {
            edge.tag.kind = Kind::Extended;
            edge.tag.power = bundles[b].m;
          }
      std::map<int, int> rep;
      auto find = [&](int x) {
        while (rep.count(x)) x = rep[x];
        return x;
      };
      for (std::size_t b = 0; b < nb && !factor.is_zero(); ++b) {
        if (!(choice >> b & 1)) continue;
        factor *= bundle_shift(S, bundles[b].m);
        int u = find(bundles[b].u), v = find(bundles[b].v);
        if (u > v) std::swap(u, v);
        h = detail::collapse(h, u, v, bundles[b].m, slots);
        rep[v] = u;
      }
      if (factor.is_zero()) continue;
      bool vanishes = false;
      for (auto& x : h.vertices) vanishes = vanishes || smearing_vanishes(smear_from_key(x.slot), slots);
      if (vanishes) continue;
      ScalarSeries p(s.trunc);
      for (auto& [deg, v] : e.prefactor.coeffs()) p.set(deg, v * factor);
      out.add(h, p);
    }
  }
  return out;
}

// S^(n)(t_1, ..., t_n) on the given labels, H_F edges with extensions applied.
inline GraphSum s_matrix_term(const std::vector<LocalTerm>& inputs, const std::vector<int>& labels, const SMatrix& S,
                              const SlotTable& slots = {}) {
  if (inputs.size() != labels.size()) throw std::invalid_argument("s_matrix_term: label count");
  if (inputs.empty()) return GraphSum::unit(S.trunc);
  GraphSum acc = vertex_sum(inputs[0], labels[0], slots, S.trunc);
  for (std::size_t j = 1; j < inputs.size(); ++j)
    acc = products::contract(acc, vertex_sum(inputs[j], labels[j], slots, S.trunc), products::feynman_rule(S.d));
  return apply_extensions(acc, S, slots, static_cast<int>(inputs.size()));
}

namespace detail {

inline void tuples(int n, int k, std::vector<int>& cur, const std::function<void(const std::vector<int>&)>& f) {
  if (static_cast<int>(cur.size()) == n) {
    f(cur);
    return;
  }
  for (int j = 0; j < k; ++j) {
    cur.push_back(j);
    tuples(n, k, cur, f);
    cur.pop_back();
  }
}

// All set partitions of {0, ..., n-1}; blocks are sorted, first elements increasing.
inline std::vector<std::vector<std::vector<int>>> set_partitions(const std::vector<int>& items) {
  std::vector<std::vector<std::vector<int>>> out;
  std::vector<std::vector<int>> cur;
  std::function<void(std::size_t)> rec = [&](std::size_t i) {
    if (i == items.size()) {
      out.push_back(cur);
      return;
    }
    for (std::size_t b = 0; b < cur.size(); ++b) {
      cur[b].push_back(items[i]);
      rec(i + 1);
      cur[b].pop_back();
    }
    cur.push_back({items[i]});
    rec(i + 1);
    cur.pop_back();
  };
  rec(0);
  return out;
}

}  // namespace detail

// Orders 0..N of S(V): order n is (1/n!) S^(n)(V, ..., V).
inline std::vector<GraphSum> s_matrix(const LocalFunctional& V, const SMatrix& S, int N, const SlotTable& slots = {}) {
  std::vector<GraphSum> out{GraphSum::unit(S.trunc)};
  for (int n = 1; n <= N; ++n) {
    GraphSum sum = GraphSum::zero(S.trunc);
    std::vector<int> cur, labels(n);
    std::iota(labels.begin(), labels.end(), 0);
    detail::tuples(n, static_cast<int>(V.terms.size()), cur, [&](const std::vector<int>& idx) {
      std::vector<LocalTerm> in;
      for (int j : idx) in.push_back(V.terms[j]);
      sum += s_matrix_term(in, labels, S, slots);
    });
    out.push_back(ExactScalar(Rational(1) / factorial(n)) * sum);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Renormalization group elements as tables of local multilinear kernels.

struct ZMap {
  int d = 4;
  // sorted input shapes -> output shape -> coefficient; output smeared with
  // the product of the input test functions
  std::map<std::vector<Shape>, std::map<Shape, ExactScalar>> comps;
  bool identityDefault = true;  // missing first-order entries act as the identity

  void add(const std::vector<Shape>& in, Shape out, const ExactScalar& c) {
    auto key = in;
    std::sort(key.begin(), key.end());
    auto& slot = comps[key][out];
    slot += c;
    if (slot.is_zero()) comps[key].erase(out);
    if (comps[key].empty()) comps.erase(key);
  }
  ZMap normalized() const {
    ZMap r = *this;
    for (auto it = r.comps.begin(); it != r.comps.end();) {
      bool identity = identityDefault && it->first.size() == 1 && it->second.size() == 1 &&
                      it->second.begin()->first == it->first[0] && it->second.begin()->second == ExactScalar(1);
      if (it->second.empty() || identity)
        it = r.comps.erase(it);
      else
        ++it;
    }
    return r;
  }
  friend bool operator==(const ZMap& a, const ZMap& b) {
    return a.identityDefault == b.identityDefault && a.normalized().comps == b.normalized().comps;
  }
  int max_order() const {
    int n = 1;
    for (auto& [k, v] : comps) n = std::max(n, static_cast<int>(k.size()));
    return n;
  }
};

inline ZMap identity_map(int d = 4) {
  ZMap z;
  z.d = d;
  return z;
}

// Z^(n)(t_1, ..., t_n) for single terms.
inline LocalFunctional apply_component(const ZMap& z, const std::vector<LocalTerm>& in) {
  LocalFunctional out;
  const std::size_t n = in.size();
  std::vector<Shape> key;
  ExactScalar coef(1);
  Smearing smear;
  for (auto& t : in) {
    if (!t.logWeight.is_zero() || !t.slotLog.is_zero())
      throw std::invalid_argument("apply_component: scaled arguments are not supported");
    if (n >= 2 && t.mono.fields() == 0) return out;  // Z(V + c) = Z(V) + c
    key.emplace_back(t.mono.plain, t.mono.deriv);
    coef *= t.mono.coefficient;
    smear = merge(smear, t.smear);
  }
  std::sort(key.begin(), key.end());
  auto it = z.comps.find(key);
  if (it == z.comps.end()) {
    if (n == 1 && z.identityDefault) out.add(in[0]);
    return out;
  }
  for (auto& [shape, c] : it->second) out.add(LocalTerm{{coef * c, shape.first, shape.second}, smear, {}, {}});
  return out;
}

// Z^(n)(F_1, ..., F_n), multilinear in the terms of each argument.
inline LocalFunctional apply_multilinear(const ZMap& z, const std::vector<LocalFunctional>& args) {
  LocalFunctional out;
  std::vector<LocalTerm> cur;
  std::function<void(std::size_t)> rec = [&](std::size_t i) {
    if (i == args.size()) {
      out += apply_component(z, cur);
      return;
    }
    for (auto& t : args[i].terms) {
      cur.push_back(t);
      rec(i + 1);
      cur.pop_back();
    }
  };
  rec(0);
  return out;
}

// Z(V) = sum_n (1/n!) Z^(n)(V, ..., V)
inline LocalFunctional apply(const ZMap& z, const LocalFunctional& V, int N) {
  LocalFunctional out;
  for (int n = 1; n <= N; ++n)
    out += ExactScalar(Rational(1) / factorial(n)) * apply_multilinear(z, std::vector<LocalFunctional>(n, V));
  return out;
}

namespace detail {

inline LocalTerm unit_input(Shape s, int j) {
  return LocalTerm{{ExactScalar(1), s.first, s.second}, {{"x" + std::to_string(j), 1}}, {}, {}};
}

inline void shape_tuples(const std::vector<Shape>& shapes, int n, std::size_t from, std::vector<Shape>& cur,
                         const std::function<void(const std::vector<Shape>&)>& f) {
  if (static_cast<int>(cur.size()) == n) {
    f(cur);
    return;
  }
  for (std::size_t j = from; j < shapes.size(); ++j) {
    cur.push_back(shapes[j]);
    shape_tuples(shapes, n, j, cur, f);
    cur.pop_back();
  }
}

inline Smearing all_inputs(int n) {
  Smearing s;
  for (int j = 0; j < n; ++j) s["x" + std::to_string(j)] = 1;
  return s;
}

// Reads a functional of unit inputs x_0..x_{n-1} into a table entry.
inline void read_entry(ZMap& z, const std::vector<Shape>& key, const LocalFunctional& f) {
  const Smearing expect = all_inputs(static_cast<int>(key.size()));
  for (auto& t : f.terms) {
    if (t.smear != expect) throw std::domain_error("read_entry: output is not local in all inputs");
    z.add(key, {t.mono.plain, t.mono.deriv}, t.mono.coefficient);
  }
}

}  // namespace detail

// Tabulates a multilinear map on all shape tuples up to order N.
inline ZMap tabulate(const std::function<LocalFunctional(const std::vector<LocalTerm>&)>& f,
                     const std::vector<Shape>& shapes, int N, int d, bool identityDefault = true) {
  ZMap z;
  z.d = d;
  z.identityDefault = identityDefault;
  for (int n = 1; n <= N; ++n) {
    std::vector<Shape> cur;
    detail::shape_tuples(shapes, n, 0, cur, [&](const std::vector<Shape>& key) {
      std::vector<LocalTerm> in;
      for (std::size_t j = 0; j < key.size(); ++j) in.push_back(detail::unit_input(key[j], static_cast<int>(j)));
      LocalFunctional out = f(in);
      if (n == 1 && identityDefault && !z.comps.count(key)) {
        // record explicitly so that identity parts survive normalization only if nontrivial
      }
      detail::read_entry(z, key, out);
    });
  }
  return z;
}

// (Z1 o Z2)^(n) = sum over partitions of Z1^(k)(Z2^(|B_1|), ..., Z2^(|B_k|)).
inline LocalFunctional compose_component(const ZMap& z1, const ZMap& z2, const std::vector<LocalTerm>& in) {
  std::vector<int> items(in.size());
  std::iota(items.begin(), items.end(), 0);
  LocalFunctional out;
  for (auto& part : detail::set_partitions(items)) {
    std::vector<LocalFunctional> args;
    for (auto& block : part) {
      std::vector<LocalTerm> sub;
      for (int j : block) sub.push_back(in[j]);
      args.push_back(apply_component(z2, sub));
    }
    out += apply_multilinear(z1, args);
  }
  return out;
}

inline ZMap compose(const ZMap& z1, const ZMap& z2, int N, const std::vector<Shape>& shapes) {
  return tabulate([&](const std::vector<LocalTerm>& in) { return compose_component(z1, z2, in); }, shapes, N, z1.d);
}

// ---------------------------------------------------------------------------
// Inductive construction: Z^(n) = S_hat^(n) - (S o Z_{n-1})^(n) must be local.

namespace detail {

// (S o Z)^(n)(t) restricted to partitions accepted by `use`, flattened.
inline GraphSum s_after_z(const SMatrix& S, const ZMap& z, const std::vector<LocalTerm>& in,
                          const std::function<bool(const std::vector<std::vector<int>>&)>& use) {
  std::vector<int> items(in.size());
  std::iota(items.begin(), items.end(), 0);
  GraphSum out = GraphSum::zero(S.trunc);
  for (auto& part : set_partitions(items)) {
    if (!use(part)) continue;
    std::vector<LocalFunctional> blocks;
    std::vector<int> labels;
    for (auto& b : part) {
      std::vector<LocalTerm> sub;
      for (int j : b) sub.push_back(in[j]);
      blocks.push_back(apply_component(z, sub));
      labels.push_back(b.front());
    }
    std::vector<LocalTerm> cur;
    std::function<void(std::size_t)> rec = [&](std::size_t i) {
      if (i == blocks.size()) {
        out += flattened(s_matrix_term(cur, labels, S));
        return;
      }
      for (auto& t : blocks[i].terms) {
        cur.push_back(t);
        rec(i + 1);
        cur.pop_back();
      }
    };
    rec(0);
  }
  return out;
}

}  // namespace detail

inline ZMap z_from_smatrices(const SMatrix& S, const SMatrix& Shat, int N, const std::vector<Shape>& shapes) {
  if (S.d != Shat.d) throw std::invalid_argument("z_from_smatrices: dimension mismatch");
  ZMap z = identity_map(S.d);
  for (int n = 2; n <= N; ++n) {
    std::vector<Shape> cur;
    detail::shape_tuples(shapes, n, 0, cur, [&](const std::vector<Shape>& key) {
      std::vector<LocalTerm> in;
      std::vector<int> labels;
      for (std::size_t j = 0; j < key.size(); ++j) {
        in.push_back(detail::unit_input(key[j], static_cast<int>(j)));
        labels.push_back(static_cast<int>(j));
      }
      GraphSum diff = flattened(s_matrix_term(in, labels, Shat)) -
                      detail::s_after_z(S, z, in, [](auto& part) { return part.size() > 1; });
      const Smearing expect = detail::all_inputs(n);
      for (auto& [k, e] : diff.entries) {
        const Graph& g = e.graph;
        if (g.vertices.size() != 1 || !g.edges.empty() || smear_from_key(g.vertices[0].slot) != expect)
          throw std::domain_error("z_from_smatrices: non-local residue at order " + std::to_string(n) + ": " + k);
        z.add(key, {g.vertices[0].plain, g.vertices[0].deriv}, e.prefactor.at({0, 0}));
      }
    });
  }
  return z;
}

// S o Z reproduces S_hat at orders 1..N on all shape tuples.
inline bool round_trip(const SMatrix& S, const SMatrix& Shat, const ZMap& z, int N, const std::vector<Shape>& shapes) {
  bool ok = true;
  for (int n = 1; n <= N; ++n) {
    std::vector<Shape> cur;
    detail::shape_tuples(shapes, n, 0, cur, [&](const std::vector<Shape>& key) {
      std::vector<LocalTerm> in;
      std::vector<int> labels;
      for (std::size_t j = 0; j < key.size(); ++j) {
        in.push_back(detail::unit_input(key[j], static_cast<int>(j)));
        labels.push_back(static_cast<int>(j));
      }
      GraphSum diff = flattened(s_matrix_term(in, labels, Shat)) -
                      detail::s_after_z(S, z, in, [](auto&) { return true; });
      ok = ok && diff.empty();
    });
  }
  return ok;
}

// ---------------------------------------------------------------------------
// alpha_w = exp(hbar Gamma_w), Gamma_w = (1/2) int w(x, x) d^2/dphi(x)^2.

inline ZMap gamma_map(const ExactScalar& w, int maxPlain = 4, int d = 4) {
  ZMap z;
  z.d = d;
  z.identityDefault = false;
  for (int a = 2; a <= maxPlain; ++a) z.add({{a, 0}}, {a - 2, 0}, Rational(a * (a - 1), 2) * w);
  return z;
}

inline ZMap alpha_map(const ExactScalar& w, int maxPlain = 4, int d = 4) {
  ZMap z;
  z.d = d;
  const ExactScalar hw = ExactScalar::atom(Atom::Hbar) * w;
  for (int a = 0; a <= maxPlain; ++a)
    for (int j = 0; 2 * j <= a; ++j)
      z.add({{a, 0}}, {a - 2 * j, 0},
            hw.pow(j) * ExactScalar(factorial(a) / (factorial(a - 2 * j) * factorial(j) * rational_pow(2, j))));
  return z;
}

// w = sign * v(x, x) * log rho^2
inline ZMap alpha_v_log(int d, const ExactScalar& logRho, int sign, int maxPlain = 4) {
  ExactScalar v = kernels::v_coincidence(d, 0.0, 1.0).exact;
  return alpha_map(ExactScalar(2 * sign) * v * logRho, maxPlain, d);
}

// sigma_rho o S o sigma_rho^(-1) = S o Z(rho); scaling moves every extension scale by log rho.
inline ZMap gml_cocycle(const SMatrix& S, const ExactScalar& logRho, int N, const std::vector<Shape>& shapes) {
  return z_from_smatrices(S, S.with_scale_shift(logRho), N, shapes);
}

inline bool cocycle_identity(const SMatrix& S, int N, const std::vector<Shape>& shapes, int maxPlain = 4) {
  const ExactScalar lr = ExactScalar::atom(Atom::LogRho), lt = ExactScalar::atom(Atom::LogTau);
  ZMap zrt = gml_cocycle(S, lr + lt, N, shapes);
  ZMap zr = gml_cocycle(S, lr, N, shapes), zt = gml_cocycle(S, lt, N, shapes);
  ZMap a = alpha_v_log(S.d, lr, 1, maxPlain), ainv = alpha_v_log(S.d, lr, -1, maxPlain);
  ZMap inner = compose(zt, a, N, shapes);
  ZMap mid = compose(ainv, inner, N, shapes);
  ZMap rhs = compose(zr, mid, N, shapes);
  return zrt == rhs;
}

// B_hat = rho d/drho Z(rho) at rho = 1 minus 2 hbar Gamma_v.
inline ZMap bhat_function(const SMatrix& S, int N, const std::vector<Shape>& shapes, int maxPlain = 4) {
  ZMap zr = gml_cocycle(S, ExactScalar::atom(Atom::LogRho), N, shapes);
  ZMap b;
  b.d = S.d;
  b.identityDefault = false;
  for (auto& [key, outs] : zr.comps) {
    if (key.size() < 2) continue;
    for (auto& [shape, c] : outs) b.add(key, shape, c.derivative(Atom::LogRho).substitute(Atom::LogRho, 0));
  }
  ExactScalar v = kernels::v_coincidence(S.d, 0.0, 1.0).exact;
  ZMap gv = gamma_map(v, maxPlain, S.d);
  for (auto& [key, outs] : gv.comps)
    for (auto& [shape, c] : outs) b.add(key, shape, ExactScalar(-2) * ExactScalar::atom(Atom::Hbar) * c);
  return b;
}

// B_hat_1^(2) - B_hat_2^(2) = 4 hbar^2 Z^(2) o (Gamma_v x Gamma_v) + 2 hbar Gamma_v o Z^(2), S_2 = S_1 o Z.
inline bool relation_b2_check(const SMatrix& S1, const SMatrix& S2, const std::vector<Shape>& shapes, int maxPlain = 4) {
  ZMap b1 = bhat_function(S1, 2, shapes, maxPlain), b2 = bhat_function(S2, 2, shapes, maxPlain);
  ZMap z = z_from_smatrices(S1, S2, 2, shapes);
  ZMap gv = gamma_map(kernels::v_coincidence(S1.d, 0.0, 1.0).exact, maxPlain, S1.d);
  const ExactScalar h = ExactScalar::atom(Atom::Hbar);
  bool ok = true;
  std::vector<Shape> cur;
  detail::shape_tuples(shapes, 2, 0, cur, [&](const std::vector<Shape>& key) {
    std::vector<LocalTerm> in{detail::unit_input(key[0], 0), detail::unit_input(key[1], 1)};
    LocalFunctional lhs = apply_component(b1, in) - apply_component(b2, in);
    LocalFunctional g0 = apply_component(gv, {in[0]}), g1 = apply_component(gv, {in[1]});
    LocalFunctional rhs = ExactScalar(4) * h * h * apply_multilinear(z, {g0, g1}) +
                          ExactScalar(2) * h * apply_multilinear(gv, {apply_component(z, in)});
    ok = ok && lhs == rhs;
  });
  return ok;
}

// ---------------------------------------------------------------------------
// Conditions on group elements.

// Z_bar(-V) + Z(V) = 0 componentwise: z + (-1)^n conj(z) = 0.
inline bool z_unitarity_condition(const ZMap& z) {
  for (auto& [key, outs] : z.comps)
    for (auto& [shape, c] : outs) {
      ExactScalar t = key.size() % 2 ? c - c.conj() : c + c.conj();
      if (!t.is_zero()) return false;
    }
  return true;
}

// (rho d/drho)^n of every coefficient has hbar order >= n + 1.
inline bool c7_audit(const ZMap& z) {
  for (auto& [key, outs] : z.comps)
    for (auto& [shape, c] : outs) {
      ExactScalar x = c;
      for (int n = 1; n <= c.max_power(Atom::LogRho); ++n) {
        x = x.derivative(Atom::LogRho);
        for (auto& [k, q] : x.terms())
          if (k.exponent(Atom::Hbar) < n + 1) return false;
      }
    }
  return true;
}

struct Conditions {
  bool c5 = false;  // unitarity
  bool c6 = true;   // Poincare covariance: kernels depend on x^2 only
  bool c7 = false;  // almost scale invariance
};

inline Conditions conditions(const ZMap& z) { return {z_unitarity_condition(z), true, c7_audit(z)}; }

// supp Z(V) is contained in supp V: output test functions are products of input ones.
inline bool support_preserved(const ZMap& z, const LocalFunctional& V, int N) {
  std::set<std::string> in;
  for (auto& t : V.terms)
    for (auto& [n, p] : t.smear) in.insert(n);
  for (auto& t : apply(z, V, N).terms)
    for (auto& [n, p] : t.smear)
      if (!in.count(n)) return false;
  return true;
}

// Z(A + B + C) = Z(A + B) - Z(B) + Z(B + C) for supp A and supp C disjoint.
inline bool z_additivity(const ZMap& z, const LocalFunctional& A, const LocalFunctional& B, const LocalFunctional& C,
                         const SlotTable& slots, int N) {
  LocalFunctional lhs = apply(z, A + B + C, N);
  LocalFunctional rhs = apply(z, A + B, N) - apply(z, B, N) + apply(z, B + C, N);
  return (lhs - rhs).pruned(slots).terms.empty();
}

// ---------------------------------------------------------------------------
// Causal factorization and unitarity at graph level.

namespace detail {

using Expansion = std::vector<std::pair<ExactScalar, KernelTag>>;

inline KernelTag with_kind(KernelTag t, Kind k) {
  t.kind = k;
  t.power = 0;
  return t;
}

// Off-diagonal content in the basis {H, Delta_R, Delta_A} of the edge u < v.
inline Expansion off_diagonal(const KernelTag& t) {
  const ExactScalar half_i = ExactScalar::i() / Rational(2);
  KernelTag h = with_kind(t, Kind::Hadamard), r = with_kind(t, Kind::DeltaRet), a = with_kind(t, Kind::DeltaAdv);
  switch (t.kind) {
    case Kind::FeynmanH:
    case Kind::Extended: return {{1, h}, {half_i, r}, {half_i, a}};
    case Kind::AntiFeynmanH:
    case Kind::AntiExtended: return {{1, h}, {-half_i, r}, {-half_i, a}};
    case Kind::Wightman: return {{1, h}, {half_i, r}, {-half_i, a}};
    case Kind::WightmanRev: return {{1, h}, {-half_i, r}, {half_i, a}};
    default: return {{1, t}};
  }
}

// Delta_R Delta_A on the same pair vanishes off the diagonal.
inline GraphSum drop_mixed_pairs(const GraphSum& s) {
  GraphSum out = GraphSum::zero(s.trunc);
  for (auto& [k, e] : s.entries) {
    std::set<std::pair<int, int>> ret, adv;
    for (auto& x : e.graph.edges) {
      if (x.tag.kind == Kind::DeltaRet) ret.insert({x.u, x.v});
      if (x.tag.kind == Kind::DeltaAdv) adv.insert({x.u, x.v});
    }
    bool mixed = false;
    for (auto& p : ret) mixed = mixed || adv.count(p);
    if (!mixed) out.add(e.graph, e.prefactor);
  }
  return out;
}

}  // namespace detail

inline products::EdgeRule wightman_rule(int d) { return {kernels::minkowski(Kind::Wightman, d), ExactScalar(1)}; }

// Complex conjugation of S-matrix graph sums: H_F <-> conj(H_F), Delta_+(x,y) <-> Delta_+(y,x).
inline GraphSum conj_graphs(const GraphSum& s) {
  GraphSum r = GraphSum::zero(s.trunc);
  for (auto& [k, e] : s.entries) {
    Graph g = e.graph;
    for (auto& x : g.edges) {
      switch (x.tag.kind) {
        case Kind::FeynmanH: x.tag.kind = Kind::AntiFeynmanH; break;
        case Kind::AntiFeynmanH: x.tag.kind = Kind::FeynmanH; break;
        case Kind::Extended: x.tag.kind = Kind::AntiExtended; break;
        case Kind::AntiExtended: x.tag.kind = Kind::Extended; break;
        case Kind::Wightman: x.tag.kind = Kind::WightmanRev; break;
        case Kind::WightmanRev: x.tag.kind = Kind::Wightman; break;
        case Kind::Hadamard:
        case Kind::DeltaComm:
        case Kind::DeltaRet:
        case Kind::DeltaAdv:
        case Kind::DeltaDirac:
        case Kind::DeltaDistrib: break;
        default: throw std::invalid_argument("conj_graphs: kernel without conjugation rule");
      }
    }
    ScalarSeries p(s.trunc);
    for (auto& [d, v] : e.prefactor.coeffs()) p.set(d, v.conj());
    r.add(g, p);
  }
  return r;
}

inline GraphSum expand_off_diagonal(const GraphSum& s) {
  return detail::drop_mixed_pairs(
      products::rewrite_edges(s, [](const Edge& e) { return detail::off_diagonal(e.tag); }));
}

// S(A + B) = S(A) * S(B) for supp A later than supp B, all mixed orders p + q <= N.
inline bool causal_factorization(const SMatrix& S, const LocalTerm& A, const LocalTerm& B, const SlotTable& slots, int N) {
  for (int p = 1; p < N; ++p)
    for (int q = 1; p + q <= N; ++q) {
      std::vector<LocalTerm> in, ina, inb;
      std::vector<int> labels, la, lb;
      for (int j = 0; j < p; ++j) {
        in.push_back(A), ina.push_back(A), labels.push_back(j), la.push_back(j);
      }
      for (int j = 0; j < q; ++j) {
        in.push_back(B), inb.push_back(B), labels.push_back(p + j), lb.push_back(p + j);
      }
      GraphSum lhs = s_matrix_term(in, labels, S, slots);
      GraphSum rhs = products::contract(s_matrix_term(ina, la, S, slots), s_matrix_term(inb, lb, S, slots),
                                        wightman_rule(S.d));
      if (!(products::pruned(expand_off_diagonal(lhs)) == products::pruned(expand_off_diagonal(rhs)))) return false;
    }
  return true;
}

// Order-2 part of S_bar(-V) * S(V) for imaginary V vanishes at graph level.
inline bool unitarity_check(const SMatrix& S, const LocalFunctional& V, const SlotTable& slots = {}) {
  for (auto& t : V.terms)
    if (!(t.mono.coefficient.conj() == -t.mono.coefficient))
      throw std::invalid_argument("unitarity_check: interaction must be imaginary");
  auto s = s_matrix(V, S, 2, slots);
  LocalFunctional Vbar = ExactScalar(-1) * V;
  GraphSum v0 = GraphSum::zero(S.trunc), v1 = GraphSum::zero(S.trunc);
  GraphSum b0 = GraphSum::zero(S.trunc), b1 = GraphSum::zero(S.trunc);
  for (auto& t : V.terms) {
    v0 += vertex_sum(t, 0, slots, S.trunc);
    v1 += vertex_sum(t, 1, slots, S.trunc);
  }
  for (auto& t : Vbar.terms) {
    b0 += vertex_sum(t, 0, slots, S.trunc);
    b1 += vertex_sum(t, 1, slots, S.trunc);
  }
  GraphSum cross = ExactScalar(Rational(1, 2)) *
                   (products::contract(b0, v1, wightman_rule(S.d)) + products::contract(b1, v0, wightman_rule(S.d)));
  GraphSum total = s[2] + conj_graphs(s[2]) + cross;
  GraphSum first = s[1] + conj_graphs(s[1]);
  return expand_off_diagonal(flattened(total)).empty() && first.empty();
}

// ---------------------------------------------------------------------------
// Flow of the effective potential V_Lambda = S_Lambda^(-1) o S(V).

struct FlowSetup {
  int d = 4;
  int family = 0;
  double lambda = 1.0;
  Truncation trunc{12, 0};
};

namespace detail {

inline GraphSum labeled_vertex(const LocalTerm& v, int label, const FlowSetup& f) {
  return GraphSum::monomial(v.mono.coefficient, label, smear_key(v.smear), v.mono.plain, v.mono.deriv, {}, f.trunc);
}

// Leibniz over regularized edges joining the two label sets.
inline GraphSum differentiate_cross(const GraphSum& s, const std::set<int>& left) {
  GraphSum out = GraphSum::zero(s.trunc);
  for (auto& [k, e] : s.entries)
    for (std::size_t i = 0; i < e.graph.edges.size(); ++i) {
      const Edge& x = e.graph.edges[i];
      if (x.tag.kind != Kind::Regularized || left.count(x.u) == left.count(x.v)) continue;
      Graph g = e.graph;
      g.edges[i].tag.kind = Kind::RegularizedDot;
      out.add(g, e.prefactor);
    }
  return out;
}

class FlowCache {
 public:
  FlowCache(const LocalTerm& v, const FlowSetup& f) : vertex_(v), setup_(f) {}

  // V_Lambda^(|mask|) on the labels in mask: connected moments of S with respect to the
  // regularized product.
  const GraphSum& potential(unsigned mask) {
    auto it = memo_.find(mask);
    if (it != memo_.end()) return it->second;
    std::vector<int> items;
    for (int j = 0; j < 32; ++j)
      if (mask >> j & 1) items.push_back(j);
    GraphSum total = GraphSum::zero(setup_.trunc);
    for (auto& part : set_partitions(items)) {
      const int k = static_cast<int>(part.size());
      GraphSum prod = block(part[0]);
      for (int b = 1; b < k; ++b)
        prod = products::regularized_product(prod, block(part[b]), setup_.lambda, setup_.d, setup_.family);
      Rational c = factorial(k - 1) * (k % 2 ? 1 : -1);
      total += ExactScalar(c) * prod;
    }
    return memo_.emplace(mask, total).first->second;
  }

 private:
  GraphSum block(const std::vector<int>& labels) {
    GraphSum acc = labeled_vertex(vertex_, labels[0], setup_);
    for (std::size_t j = 1; j < labels.size(); ++j)
      acc = products::contract(acc, labeled_vertex(vertex_, labels[j], setup_), products::feynman_rule(setup_.d));
    return acc;
  }

  LocalTerm vertex_;
  FlowSetup setup_;
  std::map<unsigned, GraphSum> memo_;
};

}  // namespace detail

inline GraphSum flow_effective_potential(const LocalTerm& vertex, int n, const FlowSetup& f) {
  if (n < 1 || n > 16) throw std::invalid_argument("flow_effective_potential: order out of range");
  detail::FlowCache cache(vertex, f);
  return cache.potential((1u << n) - 1);
}

// d/dLambda V_Lambda + (1/2) (d/dLambda M_Lambda)(V_Lambda x V_Lambda) at order n.
inline GraphSum flow_equation_residual(const LocalTerm& vertex, int n, const FlowSetup& f) {
  detail::FlowCache cache(vertex, f);
  const unsigned full = (1u << n) - 1;
  GraphSum res = products::differentiate_cutoff(cache.potential(full));
  for (unsigned s = (full - 1) & full; s > 0; s = (s - 1) & full) {
    std::set<int> left;
    for (int j = 0; j < n; ++j)
      if (s >> j & 1) left.insert(j);
    GraphSum prod =
        products::regularized_product(cache.potential(s), cache.potential(full & ~s), f.lambda, f.d, f.family);
    res += ExactScalar(Rational(1, 2)) * detail::differentiate_cross(prod, left);
  }
  return res;
}

// ---------------------------------------------------------------------------
// Counterterms of the phi^2 model from the regularized fish.

struct CountertermFit {
  int family = 0;
  std::vector<double> logLambda;
  std::vector<double> values;  // Euclidean fish E(Lambda)
  double slope = 0;
  double intercept = 0;
  double rms = 0;
};

struct CountertermResult {
  double sigma = 0;
  double profileSquare = 0;        // int f^2
  CountertermFit fits[2];
  std::complex<double> zSlope[2];  // d/dlog rho of Z(rho)^(2)/2 per g^2 int f^2
  std::complex<double> exactSlope; // i / (8 pi^2)
  double relativeError[2] = {0, 0};
  double familySpread = 0;
  double finiteDifference = 0;      // intercept difference between the families
  bool ok = false;
};

// E(Lambda) = int d^4z D_Lambda(z)^2 A(z), D_Lambda = 1/(4 pi^2 (z^2 + a/Lambda^2)) and A the
// autocorrelation of the Gaussian profile exp(-x^2 / (2 sigma^2)).
inline double euclidean_fish(double lambda, int family, double sigma) {
  const double eps = kernels::regulator_shift(family) / (lambda * lambda);
  const double a0 = std::pow(M_PI * sigma * sigma, 2);
  // t = z^2 = eps e^s; d^4z = pi^2 t dt
  auto f = [&](double s) {
    const double t = eps * std::exp(s);
    const double A = a0 * std::exp(-t / (4 * sigma * sigma));
    return M_PI * M_PI * t * t * A / std::pow(4 * M_PI * M_PI * (t + eps), 2);
  };
  const double hi = std::log(4 * sigma * sigma * 60 / eps);
  return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, -60.0, hi, 20, 1e-14);
}

inline CountertermFit fit_log(int family, double sigma, const std::vector<double>& grid) {
  CountertermFit fit;
  fit.family = family;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (double l : grid) {
    double x = std::log(l), y = euclidean_fish(l, family, sigma);
    fit.logLambda.push_back(x);
    fit.values.push_back(y);
    sx += x, sy += y, sxx += x * x, sxy += x * y;
  }
  const double n = static_cast<double>(grid.size());
  fit.slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  fit.intercept = (sy - fit.slope * sx) / n;
  double r = 0;
  for (std::size_t j = 0; j < grid.size(); ++j) {
    double e = fit.values[j] - fit.intercept - fit.slope * fit.logLambda[j];
    r += e * e;
  }
  fit.rms = std::sqrt(r / n);
  return fit;
}

inline std::vector<double> default_lambda_grid() {
  std::vector<double> g;
  for (int j = 0; j <= 4; ++j) g.push_back(std::pow(10.0, 1.0 + 0.5 * j));
  return g;
}

// S_Lambda^(2) fish = (ig/hbar)^2 * 2 hbar^2 * (-i) E(Lambda); Z_Lambda^(2) removes its log Lambda part and
// Z(rho)^(2) = Z_Lambda^(2) - Z_{rho Lambda}^(2).
inline CountertermResult counterterm_extraction(double sigma = 5.0, double tol = 1e-3,
                                                const std::vector<double>& grid = default_lambda_grid()) {
  CountertermResult r;
  r.sigma = sigma;
  r.profileSquare = std::pow(M_PI * sigma * sigma, 2);
  r.exactSlope = {0.0, 1.0 / (8 * M_PI * M_PI)};
  for (int fam = 0; fam < 2; ++fam) {
    r.fits[fam] = fit_log(fam, sigma, grid);
    const double rel = r.fits[fam].rms / std::abs(r.fits[fam].intercept + r.fits[fam].slope * std::log(grid.back()));
    if (rel > tol) throw std::runtime_error("counterterm_extraction: fit residual above tolerance");
    const std::complex<double> fishSlope = std::complex<double>(0, 2) * r.fits[fam].slope;  // per g^2
    const std::complex<double> zLambdaSlope = -fishSlope;
    // Z(rho)^(2) = -zLambdaSlope * log rho; halve for the exponential normalization
    r.zSlope[fam] = -zLambdaSlope / 2.0 / r.profileSquare;
    r.relativeError[fam] = std::abs(r.zSlope[fam] - r.exactSlope) / std::abs(r.exactSlope);
  }
  r.familySpread = std::abs(r.zSlope[0] - r.zSlope[1]) / std::abs(r.exactSlope);
  r.finiteDifference = r.fits[0].intercept - r.fits[1].intercept;
  r.ok = r.relativeError[0] < tol && r.relativeError[1] < tol && r.familySpread < tol;
  return r;
}

}  // namespace pqft::rgroups
