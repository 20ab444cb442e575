#pragma once

// Test-side reference implementations, written independently of the library
// code they check.

#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "hosdp/rng.hpp"
#include "hosdp/sdp.hpp"

namespace hosdp::testing {

// Graph over n tokens: each (head, dep) pair is an edge with probability p;
// labels come from `labels` except on ROOT arcs.
inline SemanticGraph random_graph(Rng& rng, std::size_t n, double p,
                                  const std::vector<std::string>& labels) {
  SemanticGraph g(n);
  for (std::size_t d = 1; d <= n; ++d)
    for (std::size_t h = 0; h <= n; ++h) {
      if (h == d || !rng.bernoulli(p)) continue;
      g.add_edge(h, d, h == 0 ? std::string(kRootLabel) : labels[rng.below(labels.size())]);
    }
  return g;
}

// Copy of `g` with each edge dropped, relabeled or kept, plus a few new edges.
inline SemanticGraph perturb(Rng& rng, const SemanticGraph& g, const std::vector<std::string>& labels) {
  SemanticGraph out(g.size());
  for (const Edge& e : g.edges()) {
    double u = rng.uniform(0.0, 1.0);
    if (u < 0.2) continue;
    std::string label = e.label;
    if (u < 0.35 && e.head != 0) label = labels[rng.below(labels.size())];
    out.add_edge(e.head, e.dep, label);
  }
  for (int k = 0; k < 2 && g.size() > 1; ++k) {
    std::size_t h = rng.below(g.size() + 1), d = 1 + rng.below(g.size());
    if (h != d && !out.has_edge(h, d))
      out.add_edge(h, d, h == 0 ? std::string(kRootLabel) : labels[rng.below(labels.size())]);
  }
  return out;
}

struct BruteCounts {
  std::size_t gold = 0, predicted = 0, labeled = 0, unlabeled = 0;
};

// Counts by set intersection of (sentence, head, dep[, label]) tuples.
inline BruteCounts brute_force_counts(const std::vector<SemanticGraph>& pred,
                                      const std::vector<SemanticGraph>& gold) {
  using Lab = std::tuple<std::size_t, std::size_t, std::size_t, std::string>;
  using Unl = std::tuple<std::size_t, std::size_t, std::size_t>;
  std::set<Lab> pl, gl;
  std::set<Unl> pu, gu;
  for (std::size_t s = 0; s < pred.size(); ++s) {
    for (const Edge& e : pred[s].edges()) {
      pl.insert({s, e.head, e.dep, e.label});
      pu.insert({s, e.head, e.dep});
    }
    for (const Edge& e : gold[s].edges()) {
      gl.insert({s, e.head, e.dep, e.label});
      gu.insert({s, e.head, e.dep});
    }
  }
  BruteCounts c;
  c.gold = gl.size();
  c.predicted = pl.size();
  for (const auto& t : pl) c.labeled += gl.count(t);
  for (const auto& t : pu) c.unlabeled += gu.count(t);
  return c;
}

inline double brute_f1(std::size_t correct, std::size_t predicted, std::size_t gold) {
  double p = predicted ? static_cast<double>(correct) / predicted : 0.0;
  double r = gold ? static_cast<double>(correct) / gold : 0.0;
  return p + r > 0 ? 2 * p * r / (p + r) : 0.0;
}

}  // namespace hosdp::testing
