#include <gtest/gtest.h>

#include "gradcheck.hpp"
#include "hosdp/decoder.hpp"
#include "hosdp/error.hpp"
#include "hosdp/ops.hpp"

namespace hosdp {
namespace {

using testing::grad_check;
using testing::param_grad_check;
using testing::random_tensor;
using testing::weighted_sum;

std::vector<std::string> label_names(std::size_t c) {
  std::vector<std::string> out;
  for (std::size_t k = 0; k < c; ++k) out.push_back("L" + std::to_string(k));
  return out;
}

TEST(MlpSplit, DefaultShapesAre600) {
  ParameterStore store;
  Rng rng(1);
  MlpHeads h = make_mlp_heads(store, "mlp", 800, 600, rng);
  Graph g;
  Var r = g.constant(random_tensor(rng, {4, 800}));
  Splits s = mlp_split(g, r, h, 0.33);
  for (Var v : {s.edge_head, s.edge_dep, s.label_head, s.label_dep})
    EXPECT_EQ(v.shape(), (Shape{4, 600}));
}

TEST(MlpSplit, ZeroWeightsGiveReluOfBiasOnEveryRow) {
  ParameterStore store;
  Rng rng(2);
  MlpHeads h = make_mlp_heads(store, "mlp", 5, 3, rng);
  for (Affine* a : {&h.edge_head, &h.edge_dep, &h.label_head, &h.label_dep}) {
    a->w->value.fill(0.0);
    a->b->value = Tensor::row({-1.0, 0.5, 2.0});
  }
  Graph g;
  Splits s = mlp_split(g, g.constant(random_tensor(rng, {3, 5})), h, 0.0);
  for (Var v : {s.edge_head, s.edge_dep, s.label_head, s.label_dep})
    for (std::size_t i = 0; i < 3; ++i) {
      EXPECT_EQ(v.value().at(i, 0), 0.0);
      EXPECT_EQ(v.value().at(i, 1), 0.5);
      EXPECT_EQ(v.value().at(i, 2), 2.0);
    }
}

TEST(MlpSplit, Gradients) {
  ParameterStore store;
  Rng rng(3);
  MlpHeads h = make_mlp_heads(store, "mlp", 4, 3, rng);
  Parameter& r = store.add("r", random_tensor(rng, {3, 4}));
  auto res = param_grad_check(
      [&](Graph& g) {
        Splits s = mlp_split(g, g.param(r), h, 0.0);
        return add(add(weighted_sum(s.edge_head, 1), weighted_sum(s.edge_dep, 2)),
                   add(weighted_sum(s.label_head, 3), weighted_sum(s.label_dep, 4)));
      },
      store.all());
  EXPECT_TRUE(res.ok) << res.detail;
}

TEST(Biaffine, AllZeroParamsGiveZero) {
  Graph g;
  Var out = biaffine(g.constant(Tensor::row({1, 2})), g.constant(Tensor::row({3, 4})),
                     g.constant(Tensor({2, 2, 2})), g.constant(Tensor({2, 4})),
                     g.constant(Tensor({1, 2})));
  EXPECT_EQ(out.value(), Tensor({1, 2}));
}

TEST(Biaffine, HandExampleIsFive) {
  Graph g;
  Var u = g.constant(Tensor({1, 2, 2}, {1, 2, 3, 4}));
  Var out = biaffine(g.constant(Tensor::row({1, 0})), g.constant(Tensor::row({0, 1})), u,
                     g.constant(Tensor::row({1, 1, 1, 1})), g.constant(Tensor::scalar(1.0)));
  EXPECT_EQ(out.value().at(0, 0), 5.0);
}

TEST(Biaffine, LinearInFirstArgumentWithoutAffinePart) {
  Rng rng(4);
  Graph g;
  Var u = g.constant(random_tensor(rng, {3, 4, 4}));
  Var w = g.constant(Tensor({3, 8}));
  Var b = g.constant(Tensor({1, 3}));
  Tensor a = random_tensor(rng, {1, 4}), c = random_tensor(rng, {1, 4});
  Var x2 = g.constant(random_tensor(rng, {1, 4}));
  Tensor sum_ac({1, 4});
  for (std::size_t k = 0; k < 4; ++k) sum_ac[k] = 2.0 * a[k] - 3.0 * c[k];
  Tensor lhs = biaffine(g.constant(sum_ac), x2, u, w, b).value();
  Tensor fa = biaffine(g.constant(a), x2, u, w, b).value();
  Tensor fc = biaffine(g.constant(c), x2, u, w, b).value();
  for (std::size_t k = 0; k < 3; ++k) EXPECT_NEAR(lhs[k], 2.0 * fa[k] - 3.0 * fc[k], 1e-12);
}

TEST(Biaffine, GradientsOfComposedForm) {
  Rng rng(5);
  std::vector<Tensor> in{random_tensor(rng, {1, 3}), random_tensor(rng, {1, 3}),
                         random_tensor(rng, {2, 3, 3}), random_tensor(rng, {2, 6}),
                         random_tensor(rng, {1, 2})};
  auto r = grad_check(
      [](Graph&, const std::vector<Var>& v) {
        return weighted_sum(biaffine(v[0], v[1], v[2], v[3], v[4]));
      },
      in);
  EXPECT_TRUE(r.ok) << r.detail;
}

struct ScoreFixture {
  ParameterStore store;
  Rng rng{6};
  BiaffineParams edge, label;
  Tensor eh, ed, lh, ld;

  ScoreFixture(std::size_t n, std::size_t d, std::size_t c) {
    edge = make_biaffine(store, "edge", d, 1, rng);
    label = make_biaffine(store, "label", d, c, rng);
    for (Parameter* p : store.all())
      for (double& x : p->value.data()) x = rng.uniform(-1, 1);
    eh = random_tensor(rng, {n, d});
    ed = random_tensor(rng, {n, d});
    lh = random_tensor(rng, {n, d});
    ld = random_tensor(rng, {n, d});
  }
  Scores score(Graph& g, const Tensor& edge_head) {
    Splits s{g.constant(edge_head), g.constant(ed), g.constant(lh), g.constant(ld)};
    return score_graph(g, s, edge, label);
  }
};

TEST(ScoreGraph, ShapesForThreeTokensAndFiveLabels) {
  ScoreFixture f(4, 3, 5);
  Graph g;
  Scores s = f.score(g, f.eh);
  EXPECT_EQ(s.edge.shape(), (Shape{4, 4}));
  EXPECT_EQ(s.label.shape(), (Shape{4, 4, 5}));
}

TEST(ScoreGraph, MatchesPairwiseLoopOracle) {
  const std::size_t n = 5, d = 4, c = 3;
  ScoreFixture f(n, d, c);
  Graph g;
  Scores s = f.score(g, f.eh);
  auto row = [&](const Tensor& t, std::size_t i) {
    return g.constant(Tensor({1, d}, std::vector<double>(t.data().begin() + i * d,
                                                         t.data().begin() + (i + 1) * d)));
  };
  Var eu = g.param(*f.edge.u), ew = g.param(*f.edge.w), eb = g.param(*f.edge.b);
  Var lu = g.param(*f.label.u), lw = g.param(*f.label.w), lb = g.param(*f.label.b);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      double e = biaffine(row(f.ed, i), row(f.eh, j), eu, ew, eb).value()[0];
      EXPECT_NEAR(s.edge.value().at(i, j), e, 1e-10);
      Tensor l = biaffine(row(f.ld, i), row(f.lh, j), lu, lw, lb).value();
      for (std::size_t k = 0; k < c; ++k) EXPECT_NEAR(s.label.value().at(i, j, k), l[k], 1e-10);
    }
}

TEST(ScoreGraph, HeadRowOnlyMovesItsColumn) {
  ScoreFixture f(4, 3, 2);
  Graph g;
  Tensor base = f.score(g, f.eh).edge.value();
  Tensor moved = f.eh;
  for (std::size_t k = 0; k < 3; ++k) moved.at(2, k) += 0.7;
  Tensor after = f.score(g, moved).edge.value();
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 4; ++j) {
      if (j == 2) EXPECT_NE(after.at(i, j), base.at(i, j));
      else EXPECT_EQ(after.at(i, j), base.at(i, j));
    }
}

TEST(ScoreGraph, GradientsThroughBothScorers) {
  ParameterStore store;
  Rng rng(7);
  BiaffineParams edge = make_biaffine(store, "edge", 3, 1, rng);
  BiaffineParams label = make_biaffine(store, "label", 3, 2, rng);
  Parameter& h = store.add("h", random_tensor(rng, {3, 3}));
  Parameter& d = store.add("d", random_tensor(rng, {3, 3}));
  auto r = param_grad_check(
      [&](Graph& g) {
        Splits s{g.param(h), g.param(d), g.param(d), g.param(h)};
        Scores sc = score_graph(g, s, edge, label);
        return add(weighted_sum(sc.edge, 1), weighted_sum(sc.label, 2));
      },
      store.all());
  EXPECT_TRUE(r.ok) << r.detail;
}

TEST(Decode, AllNegativeScoresGiveEmptyGraph) {
  Tensor e({4, 4}, -1.0);
  Tensor l({4, 4, 2}, 0.0);
  auto names = label_names(2);
  EXPECT_TRUE(decode(e, l, names).empty());
}

TEST(Decode, PositiveRootCellWithRootArgmax) {
  Tensor e({3, 3}, -1.0);
  e.at(2, 0) = 1.5;
  Tensor l({3, 3, 4}, 0.0);
  l.at(2, 0, 3) = 2.0;
  std::vector<std::string> names{"A", "B", "C", kRootLabel};
  SemanticGraph g = decode(e, l, names);
  ASSERT_EQ(g.edges().size(), 1u);
  EXPECT_EQ(g.edges()[0], (Edge{0, 2, kRootLabel}));
}

TEST(Decode, ZeroScoreIsNotAnEdge) {
  Tensor e({3, 3}, -1.0);
  e.at(1, 2) = 0.0;
  Tensor l({3, 3, 1}, 0.0);
  auto names = label_names(1);
  EXPECT_TRUE(decode(e, l, names).empty());
  e.at(1, 2) = 1e-300;
  EXPECT_EQ(decode(e, l, names).edges().size(), 1u);
}

TEST(Decode, NothingPointsAtRootOrItself) {
  Tensor e({4, 4}, 3.0);
  Tensor l({4, 4, 2}, 0.0);
  auto names = label_names(2);
  SemanticGraph g = decode(e, l, names);
  for (const Edge& x : g.edges()) {
    EXPECT_NE(x.dep, 0u);
    EXPECT_NE(x.dep, x.head);
  }
  EXPECT_EQ(g.edges().size(), 3u * 3u);
}

TEST(Decode, LabelTiesGoToLowestId) {
  Tensor e({3, 3}, -1.0);
  e.at(1, 2) = 1.0;
  Tensor l({3, 3, 3}, 0.0);
  l.at(1, 2, 1) = 5.0;
  l.at(1, 2, 2) = 5.0;
  auto names = label_names(3);
  EXPECT_EQ(decode(e, l, names).edges()[0].label, "L1");
}

TEST(Decode, RootLabelFromNonRootHeadIsKept) {
  Tensor e({3, 3}, -1.0);
  e.at(1, 2) = 1.0;
  Tensor l({3, 3, 2}, 0.0);
  l.at(1, 2, 1) = 1.0;
  std::vector<std::string> names{"A", kRootLabel};
  EXPECT_EQ(decode(e, l, names).edges()[0], (Edge{2, 1, kRootLabel}));
}

TEST(Decode, Properties) {
  Rng rng(8);
  auto names = label_names(4);
  for (int trial = 0; trial < 200; ++trial) {
    std::size_t n = 2 + rng.below(6);
    Tensor e = random_tensor(rng, {n, n});
    Tensor l = random_tensor(rng, {n, n, 4});
    SemanticGraph base = decode(e, l, names);

    // Raising one cell never removes another edge.
    std::size_t i = rng.below(n), j = rng.below(n);
    Tensor raised = e;
    raised.at(i, j) += rng.uniform(0.0, 2.0);
    SemanticGraph up = decode(raised, l, names);
    for (const Edge& x : base.edges()) EXPECT_TRUE(up.has_edge(x.head, x.dep));

    // Shifting every channel of one cell keeps its argmax.
    Tensor shifted = l;
    double cshift = rng.uniform(-5, 5);
    for (std::size_t k = 0; k < 4; ++k) shifted.at(i, j, k) += cshift;
    EXPECT_EQ(decode(e, shifted, names), base);
  }
}

TEST(Decode, ShapeMismatchIsDimensionError) {
  auto names = label_names(2);
  EXPECT_THROW(decode(Tensor({3, 3}), Tensor({3, 3, 3}), names), DimensionError);
  EXPECT_THROW(decode(Tensor({3, 2}), Tensor({3, 3, 2}), names), DimensionError);
}

TEST(Decoder, ScoresHaveExpectedShapes) {
  ParameterStore store;
  Rng rng(9);
  Decoder dec(store, "dec", 6, 4, 0.33, 3, rng);
  Graph g;
  Scores s = dec.score(g, g.constant(random_tensor(rng, {5, 6})));
  EXPECT_EQ(s.edge.shape(), (Shape{5, 5}));
  EXPECT_EQ(s.label.shape(), (Shape{5, 5, 3}));
  EXPECT_EQ(dec.edge().u->value.shape(), (Shape{1, 4, 4}));
  EXPECT_EQ(dec.label().w->value.shape(), (Shape{3, 8}));
}

}  // namespace
}  // namespace hosdp
