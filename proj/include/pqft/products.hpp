#pragma once

#include "pqft/exact.hpp"
#include "pqft/functionals.hpp"
#include "pqft/kernels.hpp"

#include <algorithm>
#include <functional>
#include <limits>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace pqft::products {

using functionals::SupportRegion;
using kernels::Kind;
using kernels::KernelTag;
using ScalarSeries = FormalSeries<ExactScalar>;

// One factor of a multilinear functional: phi^plain (dphi)^deriv smeared with a
// named slot at a distinct position label. kleinGordon marks a smearing P f.
struct Vertex {
  int label = 0;
  std::string slot;
  int plain = 0;
  int deriv = 0;
  bool kleinGordon = false;
  SupportRegion region;
};

// Edge between labels u < v; du/dv mark attachment to a derivative leg.
struct Edge {
  int u = 0;
  int v = 0;
  KernelTag tag;
  int du = 0;
  int dv = 0;

  friend bool operator<(const Edge& a, const Edge& b) {
    return std::tie(a.u, a.v, a.tag, a.du, a.dv) < std::tie(b.u, b.v, b.tag, b.du, b.dv);
  }
  friend bool operator==(const Edge& a, const Edge& b) {
    return a.u == b.u && a.v == b.v && a.tag == b.tag && a.du == b.du && a.dv == b.dv;
  }
};

inline std::string tag_str(const KernelTag& t) {
  std::ostringstream os;
  os << kernels::kind_name(t.kind) << "[d=" << t.dim;
  if (t.power) os << ",p=" << t.power;
  if (t.derivs) os << ",der=" << t.derivs;
  if (t.kind == Kind::Regularized || t.kind == Kind::RegularizedDot)
    os << ",fam=" << t.family << ",L=" << t.lambda;
  if (t.kind == Kind::LogOverX2pow) os << ",log=" << atom_name(t.logScale);
  if (!t.alpha.empty()) {
    os << ",alpha=";
    for (int a : t.alpha) os << a;
  }
  os << "]";
  return os.str();
}

struct Graph {
  std::vector<Vertex> vertices;  // sorted by label
  std::vector<Edge> edges;       // sorted

  void canonicalize() {
    std::sort(vertices.begin(), vertices.end(), [](auto& a, auto& b) { return a.label < b.label; });
    std::sort(edges.begin(), edges.end());
  }

  const Vertex& vertex(int label) const {
    for (auto& v : vertices)
      if (v.label == label) return v;
    throw std::out_of_range("Graph: unknown vertex label");
  }

  // Legs of each type already used by edges at `label`.
  std::pair<int, int> used(int label) const {
    int p = 0, q = 0;
    for (auto& e : edges) {
      if (e.u == label) (e.du ? q : p)++;
      if (e.v == label) (e.dv ? q : p)++;
    }
    return {p, q};
  }
  std::pair<int, int> remaining(int label) const {
    auto [p, q] = used(label);
    auto& v = vertex(label);
    return {v.plain - p, v.deriv - q};
  }

  std::string key() const {
    std::ostringstream os;
    for (auto& v : vertices)
      os << v.label << ":" << v.slot << "[" << v.plain << "," << v.deriv << "]" << (v.kleinGordon ? "P" : "")
         << " ";
    os << "|";
    for (auto& e : edges) os << " (" << tag_str(e.tag) << "," << e.u << "-" << e.v << "," << e.du << e.dv << ")";
    return os.str();
  }
};

inline std::string series_str(const ScalarSeries& s) {
  std::ostringstream os;
  bool first = true;
  for (auto& [d, v] : s.coeffs()) {
    if (!first) os << " ; ";
    first = false;
    os << "h^" << d.first << " g^" << d.second << ": " << v.str();
  }
  if (first) os << "0";
  return os.str();
}

struct GraphSum {
  struct Entry {
    Graph graph;
    ScalarSeries prefactor;
  };
  std::map<std::string, Entry> entries;
  Truncation trunc{};

  static GraphSum unit(Truncation t = {}) {
    GraphSum s;
    s.trunc = t;
    s.add(Graph{}, ScalarSeries::constant(ExactScalar(1), t));
    return s;
  }
  static GraphSum zero(Truncation t = {}) {
    GraphSum s;
    s.trunc = t;
    return s;
  }
  // coefficient * phi^plain (dphi)^deriv (raw powers) smeared with `slot`.
  static GraphSum monomial(const ExactScalar& coefficient, int label, const std::string& slot, int plain,
                           int deriv = 0, SupportRegion region = {}, Truncation t = {}) {
    GraphSum s;
    s.trunc = t;
    Graph g;
    g.vertices.push_back(Vertex{label, slot, plain, deriv, false, std::move(region)});
    s.add(g, ScalarSeries::constant(coefficient, t));
    return s;
  }
  // phi(P f): one plain leg, smearing hit by the Klein-Gordon operator.
  static GraphSum field_kg(int label, const std::string& slot, SupportRegion region = {}, Truncation t = {}) {
    GraphSum s = monomial(ExactScalar(1), label, slot, 1, 0, std::move(region), t);
    Graph g = s.entries.begin()->second.graph;
    g.vertices[0].kleinGordon = true;
    GraphSum r = zero(t);
    r.add(g, ScalarSeries::constant(ExactScalar(1), t));
    return r;
  }

  void add(Graph g, const ScalarSeries& p) {
    g.canonicalize();
    std::string k = g.key();
    auto it = entries.find(k);
    if (it == entries.end()) {
      if (p.empty()) return;
      entries.emplace(k, Entry{std::move(g), p});
      return;
    }
    it->second.prefactor += p;
    if (it->second.prefactor.empty()) entries.erase(it);
  }

  GraphSum& operator+=(const GraphSum& o) {
    for (auto& [k, e] : o.entries) add(e.graph, e.prefactor);
    return *this;
  }
  friend GraphSum operator+(GraphSum a, const GraphSum& b) { return a += b; }
  friend GraphSum operator-(GraphSum a, const GraphSum& b) {
    for (auto& [k, e] : b.entries) a.add(e.graph, -e.prefactor);
    return a;
  }
  friend GraphSum operator*(const ExactScalar& c, const GraphSum& a) {
    GraphSum r = zero(a.trunc);
    for (auto& [k, e] : a.entries) {
      ScalarSeries p(a.trunc);
      for (auto& [d, v] : e.prefactor.coeffs()) p.set(d, c * v);
      r.add(e.graph, p);
    }
    return r;
  }
  friend bool operator==(const GraphSum& a, const GraphSum& b) { return (a - b).entries.empty(); }

  bool empty() const { return entries.empty(); }

  std::set<int> labels() const {
    std::set<int> s;
    for (auto& [k, e] : entries)
      for (auto& v : e.graph.vertices) s.insert(v.label);
    return s;
  }

  // Deterministic text form: "vertices | edges(tag, pair, derivs) | prefactor".
  std::string dump() const {
    std::ostringstream os;
    for (auto& [k, e] : entries) os << k << " | " << series_str(e.prefactor) << "\n";
    return os.str();
  }
};

// ---------------------------------------------------------------------------
// Support pruning from kernel metadata.

inline bool edge_vanishes(const KernelTag& tag, const SupportRegion& x, const SupportRegion& y) {
  if (x.empty() || y.empty()) return false;
  switch (kernels::support_rule(tag)) {
    case kernels::SupportRule::PastOfSecond: return !functionals::causally_precedes(x, y);
    case kernels::SupportRule::FutureOfSecond: return !functionals::causally_precedes(y, x);
    case kernels::SupportRule::Coincidence: return functionals::disjoint(x, y);
    case kernels::SupportRule::None: break;
  }
  if (tag.kind == Kind::DeltaComm) return functionals::spacelike(x, y);
  return false;
}

inline bool graph_vanishes(const Graph& g) {
  for (auto& e : g.edges)
    if (edge_vanishes(e.tag, g.vertex(e.u).region, g.vertex(e.v).region)) return true;
  return false;
}

inline GraphSum pruned(const GraphSum& s) {
  GraphSum r = GraphSum::zero(s.trunc);
  for (auto& [k, e] : s.entries)
    if (!graph_vanishes(e.graph)) r.add(e.graph, e.prefactor);
  return r;
}

// ---------------------------------------------------------------------------
// Cross-contraction expansion.

// Kernel placed on an edge oriented from the first factor to the second, with
// its scalar weight per edge (the hbar of each edge is carried by the grading).
struct EdgeRule {
  KernelTag tag;
  ExactScalar weight;
};

namespace detail {

struct Leg {
  int label;
  int type;  // 0 plain, 1 derivative
  int available;
};

inline Edge oriented_edge(int x, int tx, int y, int ty, const KernelTag& tag, int& sign) {
  sign = 1;
  if (x < y) return Edge{x, y, tag, tx, ty};
  auto sw = kernels::swap_arguments(tag.kind);
  KernelTag t = tag;
  t.kind = sw.kind;
  sign = sw.sign;
  return Edge{y, x, t, ty, tx};
}

}  // namespace detail

inline void check_disjoint_labels(const GraphSum& a, const GraphSum& b) {
  auto la = a.labels(), lb = b.labels();
  for (int x : la)
    if (lb.count(x)) throw std::invalid_argument("products: factors share a vertex label");
}

inline ScalarSeries hbar_power(int n, const ExactScalar& c, Truncation t) {
  ScalarSeries s(t);
  s.set({n, 0}, c);
  return s;
}

// Sum over all multisets of edges between a vertex of `ga` and one of `gb`,
// weighted by prod_u a_u!/(a_u - deg_u)! / prod_e n_e! per leg type.
inline void contract_pair(const Graph& ga, const ScalarSeries& pa, const Graph& gb, const ScalarSeries& pb,
                          const EdgeRule& rule, GraphSum& out) {
  std::vector<detail::Leg> left, right;
  for (auto& v : ga.vertices) {
    auto [p, q] = ga.remaining(v.label);
    if (p > 0) left.push_back({v.label, 0, p});
    if (q > 0) left.push_back({v.label, 1, q});
  }
  for (auto& v : gb.vertices) {
    auto [p, q] = gb.remaining(v.label);
    if (p > 0) right.push_back({v.label, 0, p});
    if (q > 0) right.push_back({v.label, 1, q});
  }
  Graph base;
  base.vertices = ga.vertices;
  base.vertices.insert(base.vertices.end(), gb.vertices.begin(), gb.vertices.end());
  base.edges = ga.edges;
  base.edges.insert(base.edges.end(), gb.edges.begin(), gb.edges.end());
  const ScalarSeries prod = series_mul(pa, pb);
  const int hmax = pa.truncation().h_max;

  const std::size_t nl = left.size(), nr = right.size();
  std::vector<int> mult(nl * nr, 0);
  std::vector<int> usedL(nl, 0), usedR(nr, 0);

  std::function<void(std::size_t, int)> rec = [&](std::size_t cell, int edges) {
    if (cell == mult.size()) {
      Rational count = 1;
      for (std::size_t i = 0; i < nl; ++i) count *= factorial(left[i].available) / factorial(left[i].available - usedL[i]);
      for (std::size_t j = 0; j < nr; ++j) count *= factorial(right[j].available) / factorial(right[j].available - usedR[j]);
      Graph g = base;
      int sign = 1;
      for (std::size_t c = 0; c < mult.size(); ++c) {
        if (!mult[c]) continue;
        count /= factorial(mult[c]);
        auto& l = left[c / nr];
        auto& r = right[c % nr];
        for (int k = 0; k < mult[c]; ++k) {
          int s;
          g.edges.push_back(detail::oriented_edge(l.label, l.type, r.label, r.type, rule.tag, s));
          sign *= s;
        }
      }
      ExactScalar w = rule.weight.pow(edges) * ExactScalar(Rational(sign) * count);
      out.add(g, series_mul(prod, hbar_power(edges, w, prod.truncation())));
      return;
    }
    const std::size_t i = cell / nr, j = cell % nr;
    int cap = std::min(left[i].available - usedL[i], right[j].available - usedR[j]);
    cap = std::min(cap, hmax - edges);
    for (int m = 0; m <= cap; ++m) {
      mult[cell] = m;
      usedL[i] += m;
      usedR[j] += m;
      rec(cell + 1, edges + m);
      usedL[i] -= m;
      usedR[j] -= m;
    }
    mult[cell] = 0;
  };
  rec(0, 0);
}

inline GraphSum contract(const GraphSum& a, const GraphSum& b, const EdgeRule& rule) {
  check_disjoint_labels(a, b);
  GraphSum out = GraphSum::zero(a.trunc);
  for (auto& [ka, ea] : a.entries)
    for (auto& [kb, eb] : b.entries) contract_pair(ea.graph, ea.prefactor, eb.graph, eb.prefactor, rule, out);
  return pruned(out);
}

inline GraphSum pointwise(const GraphSum& a, const GraphSum& b) {
  check_disjoint_labels(a, b);
  GraphSum out = GraphSum::zero(a.trunc);
  for (auto& [ka, ea] : a.entries)
    for (auto& [kb, eb] : b.entries) {
      Graph g = ea.graph;
      g.vertices.insert(g.vertices.end(), eb.graph.vertices.begin(), eb.graph.vertices.end());
      g.edges.insert(g.edges.end(), eb.graph.edges.begin(), eb.graph.edges.end());
      out.add(g, series_mul(ea.prefactor, eb.prefactor));
    }
  return out;
}

inline EdgeRule star_rule(int d = 4) {
  return {kernels::minkowski(Kind::DeltaComm, d), ExactScalar::i() / Rational(2)};
}
inline EdgeRule timeordered_rule(int d = 4) { return {kernels::minkowski(Kind::DeltaDirac, d), ExactScalar::i()}; }
inline EdgeRule feynman_rule(int d) { return {kernels::minkowski(Kind::FeynmanH, d), ExactScalar(1)}; }

inline GraphSum star(const GraphSum& f, const GraphSum& g, int d = 4) { return contract(f, g, star_rule(d)); }
inline GraphSum timeordered(const GraphSum& f, const GraphSum& g, int d = 4) {
  return contract(f, g, timeordered_rule(d));
}
inline GraphSum commutator(const GraphSum& f, const GraphSum& g, int d = 4) {
  return star(f, g, d) - star(g, f, d);
}

// Complex conjugation; the causal propagators are real.
inline GraphSum conj(const GraphSum& s) {
  GraphSum r = GraphSum::zero(s.trunc);
  for (auto& [k, e] : s.entries) {
    for (auto& edge : e.graph.edges) {
      switch (edge.tag.kind) {
        case Kind::DeltaComm:
        case Kind::DeltaRet:
        case Kind::DeltaAdv:
        case Kind::DeltaDirac:
        case Kind::DeltaDistrib:
        case Kind::Hadamard:
        case Kind::SmoothV: break;
        default: throw std::invalid_argument("conj: kernel is not real");
      }
    }
    ScalarSeries p(s.trunc);
    for (auto& [d, v] : e.prefactor.coeffs()) p.set(d, v.conj());
    r.add(e.graph, p);
  }
  return r;
}

// hbar degree equals edge count in every graph.
inline bool grading_conserved(const GraphSum& s) {
  for (auto& [k, e] : s.entries)
    for (auto& [d, v] : e.prefactor.coeffs())
      if (d.first != static_cast<int>(e.graph.edges.size())) return false;
  return true;
}

// Part of the sum of a given hbar degree.
inline GraphSum hbar_part(const GraphSum& s, int n) {
  GraphSum r = GraphSum::zero(s.trunc);
  for (auto& [k, e] : s.entries) {
    ScalarSeries p(s.trunc);
    for (auto& [d, v] : e.prefactor.coeffs())
      if (d.first == n) p.set(d, v);
    r.add(e.graph, p);
  }
  return r;
}

// Replaces every edge by the linear combination `rewrite(tag)` and expands.
inline GraphSum rewrite_edges(const GraphSum& s,
                              const std::function<std::vector<std::pair<ExactScalar, KernelTag>>(const Edge&)>& rewrite) {
  GraphSum out = GraphSum::zero(s.trunc);
  for (auto& [k, e] : s.entries) {
    std::vector<std::pair<Graph, ExactScalar>> partial{{e.graph, ExactScalar(1)}};
    for (auto& g : partial) g.first.edges.clear();
    for (auto& edge : e.graph.edges) {
      std::vector<std::pair<Graph, ExactScalar>> next;
      for (auto& [g, c] : partial)
        for (auto& [w, tag] : rewrite(edge)) {
          Graph h = g;
          Edge ne = edge;
          ne.tag = tag;
          h.edges.push_back(ne);
          next.push_back({h, c * w});
        }
      partial = std::move(next);
    }
    for (auto& [g, c] : partial) {
      ScalarSeries p(s.trunc);
      for (auto& [d, v] : e.prefactor.coeffs()) p.set(d, c * v);
      out.add(g, p);
    }
  }
  return pruned(out);
}

// A later than B: A ._T B - A * B reduces to graphs with a vanishing Delta_A edge.
inline bool causal_factorization_check(const GraphSum& a, const GraphSum& b, int d = 4) {
  for (auto& [ka, ea] : a.entries)
    for (auto& va : ea.graph.vertices)
      for (auto& [kb, eb] : b.entries)
        for (auto& vb : eb.graph.vertices)
          if (!functionals::later(va.region, vb.region))
            throw std::invalid_argument("causal_factorization_check: supports are not causally ordered");
  auto split = [](const Edge& e) {
    std::vector<std::pair<ExactScalar, KernelTag>> out;
    for (auto& [q, k] : kernels::ret_adv_decomposition(e.tag.kind)) {
      KernelTag t = e.tag;
      t.kind = k;
      out.push_back({ExactScalar(q), t});
    }
    return out;
  };
  GraphSum diff = rewrite_edges(timeordered(a, b, d), split) - rewrite_edges(star(a, b, d), split);
  return pruned(diff).empty();
}

// F ._T phi(P f) with P Delta_D = delta applied to edges at the P-smeared vertex.
inline GraphSum apply_green_identity(const GraphSum& s) {
  GraphSum out = GraphSum::zero(s.trunc);
  for (auto& [k, e] : s.entries) {
    Graph g = e.graph;
    for (auto& edge : g.edges) {
      bool atKg = g.vertex(edge.u).kleinGordon || g.vertex(edge.v).kleinGordon;
      if (atKg && edge.tag.kind == Kind::DeltaDirac) edge.tag = kernels::delta_distrib(edge.tag.dim);
    }
    out.add(g, e.prefactor);
  }
  return out;
}

// <F^(1), f> paired through a delta edge with the P-smeared vertex.
inline GraphSum first_derivative_pairing(const GraphSum& f, const GraphSum& kgField, int d = 4) {
  if (kgField.entries.size() != 1) throw std::invalid_argument("first_derivative_pairing: single field expected");
  const Vertex kg = kgField.entries.begin()->second.graph.vertices.at(0);
  GraphSum out = GraphSum::zero(f.trunc);
  for (auto& [k, e] : f.entries)
    for (auto& v : e.graph.vertices) {
      auto [p, q] = e.graph.remaining(v.label);
      for (int type = 0; type < 2; ++type) {
        int n = type == 0 ? p : q;
        if (n == 0) continue;
        Graph g = e.graph;
        g.vertices.push_back(kg);
        int sign;
        g.edges.push_back(detail::oriented_edge(v.label, type, kg.label, 0, kernels::delta_distrib(d), sign));
        out.add(g, series_mul(e.prefactor, hbar_power(1, ExactScalar::i() * ExactScalar(n * sign), f.trunc)));
      }
    }
  return out;
}

inline bool dyson_schwinger_check(const GraphSum& f, const GraphSum& kgField, int d = 4) {
  GraphSum lhs = apply_green_identity(timeordered(f, kgField, d));
  GraphSum rhs = pointwise(f, kgField) + first_derivative_pairing(f, kgField, d);
  return lhs == rhs;
}

// ---------------------------------------------------------------------------
// Regularized products. Edges carry h_Lambda in the alpha_H picture, so that
// Lambda = 0 is the pointwise product and Lambda -> infinity gives H_F edges.

inline constexpr double kInfiniteCutoff = std::numeric_limits<double>::infinity();

inline EdgeRule regularized_rule(int d, int family, double lambda) {
  if (lambda == kInfiniteCutoff) return feynman_rule(d);
  return {kernels::regularized(d, family, lambda), ExactScalar(1)};
}

inline GraphSum regularized_product(const GraphSum& f, const GraphSum& g, double lambda, int d = 4, int family = 0) {
  if (lambda < 0) throw std::invalid_argument("regularized_product: cutoff must be non-negative");
  if (lambda == 0) return pointwise(f, g);
  return contract(f, g, regularized_rule(d, family, lambda));
}

// Limit of the regularized edge in the T picture: h_Lambda - H -> i Delta_D.
inline std::pair<ExactScalar, KernelTag> regularized_limit_tag(int d) {
  return {ExactScalar::i(), kernels::minkowski(Kind::DeltaDirac, d)};
}

// Leibniz: each graph contributes once per edge with that edge differentiated.
inline GraphSum differentiate_cutoff(const GraphSum& s) {
  GraphSum out = GraphSum::zero(s.trunc);
  for (auto& [k, e] : s.entries)
    for (std::size_t i = 0; i < e.graph.edges.size(); ++i) {
      if (e.graph.edges[i].tag.kind != Kind::Regularized) continue;
      Graph g = e.graph;
      g.edges[i].tag.kind = Kind::RegularizedDot;
      out.add(g, e.prefactor);
    }
  return out;
}

inline GraphSum dM_dLambda(const GraphSum& f, const GraphSum& g, double lambda, int d = 4, int family = 0) {
  if (lambda <= 0 || lambda == kInfiniteCutoff) throw std::invalid_argument("dM_dLambda: finite positive cutoff");
  return differentiate_cutoff(regularized_product(f, g, lambda, d, family));
}

// ---------------------------------------------------------------------------
// Reference path: literal differentiation of polynomial functionals by
// exp(lambda Gamma) with Gamma = sum k(x,y) d/dphi(x) d/dphi(y).

namespace reference {

struct Term {
  ExactScalar coefficient;
  std::map<std::pair<int, int>, int> powers;  // (label, leg type) -> exponent
  std::vector<Edge> edges;
  std::set<int> labels;
};

inline std::vector<Term> from_graph_sum(const GraphSum& s) {
  std::vector<Term> out;
  for (auto& [k, e] : s.entries) {
    if (!e.graph.edges.empty()) throw std::invalid_argument("reference: edge-free inputs only");
    Term t;
    t.coefficient = e.prefactor.at({0, 0});
    for (auto& v : e.graph.vertices) {
      t.labels.insert(v.label);
      if (v.plain) t.powers[{v.label, 0}] = v.plain;
      if (v.deriv) t.powers[{v.label, 1}] = v.deriv;
    }
    out.push_back(t);
  }
  return out;
}

// One application of Gamma between the label sets.
inline std::vector<Term> apply_gamma(const std::vector<Term>& in, const std::set<int>& first,
                                     const std::set<int>& second, const EdgeRule& rule) {
  std::vector<Term> out;
  for (auto& t : in)
    for (auto& [lx, ex] : t.powers) {
      if (!first.count(lx.first) || ex == 0) continue;
      for (auto& [ly, ey] : t.powers) {
        if (!second.count(ly.first) || ey == 0) continue;
        Term u = t;
        u.coefficient = u.coefficient * ExactScalar(ex * ey) * rule.weight;
        u.powers[lx] -= 1;
        u.powers[ly] -= 1;
        int sign;
        u.edges.push_back(detail::oriented_edge(lx.first, lx.second, ly.first, ly.second, rule.tag, sign));
        u.coefficient = u.coefficient * ExactScalar(sign);
        out.push_back(u);
      }
    }
  return out;
}

// Order-by-order exponential; returns the graph sum of the product.
inline GraphSum product(const GraphSum& f, const GraphSum& g, const EdgeRule& rule, int maxOrder) {
  GraphSum out = GraphSum::zero(f.trunc);
  std::set<int> lf = f.labels(), lg = g.labels();
  std::vector<Term> current;
  for (auto& a : from_graph_sum(f))
    for (auto& b : from_graph_sum(g)) {
      Term t = a;
      t.coefficient = a.coefficient * b.coefficient;
      for (auto& [k, p] : b.powers) t.powers[k] += p;
      t.labels.insert(b.labels.begin(), b.labels.end());
      current.push_back(t);
    }
  auto vertexOf = [&](const GraphSum& s, int label) -> Vertex {
    for (auto& [k, e] : s.entries)
      for (auto& v : e.graph.vertices)
        if (v.label == label) return v;
    throw std::out_of_range("reference: label");
  };
  Rational fact = 1;
  for (int n = 0; n <= maxOrder; ++n) {
    if (n > 0) {
      current = apply_gamma(current, lf, lg, rule);
      fact *= n;
    }
    for (auto& t : current) {
      Graph gr;
      for (int l : t.labels) gr.vertices.push_back(lf.count(l) ? vertexOf(f, l) : vertexOf(g, l));
      gr.edges = t.edges;
      out.add(gr, hbar_power(n, t.coefficient / fact, f.trunc));
    }
  }
  return pruned(out);
}

}  // namespace reference

}  // namespace pqft::products
