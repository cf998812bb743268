#include <gtest/gtest.h>

#include <random>

#include "helpers.hpp"

using namespace cpwlnet;
using testing_util::points_1d;

namespace {

ScalarAffine lin(double a, double b) { return {Eigen::VectorXd::Constant(1, a), b}; }

AffinePiece piece(double a, double b) {
  return {Eigen::MatrixXd::Constant(1, 1, a), Eigen::VectorXd::Constant(1, b)};
}

// x+1 on [-3,0], -x+1 on [0,2], 3x-7 on [2,4]
Partition three_regions() {
  Partition p;
  p.domain = Polytope::interval(-3, 4);
  p.regions = {Polytope::interval(-3, 0), Polytope::interval(0, 2), Polytope::interval(2, 4)};
  p.auxiliary.assign(3, false);
  return p;
}

std::vector<ScalarAffine> three_pieces() { return {lin(1, 1), lin(-1, 1), lin(3, -7)}; }

Eigen::VectorXd at(double x) { return Eigen::VectorXd::Constant(1, x); }

}  // namespace

TEST(Dominates, VertexChecks) {
  const Polytope unit = Polytope::interval(0, 1);
  EXPECT_TRUE(dominates(lin(-1, 2), lin(1, 0), unit));
  EXPECT_FALSE(dominates(lin(1, 0), lin(-1, 2), unit));
  EXPECT_FALSE(dominates(lin(3, -7), lin(1, 1), Polytope::interval(-3, 0)));
  Polytope empty;
  empty.dim = 1;
  EXPECT_THROW(dominates(lin(1, 0), lin(0, 0), empty), ArgumentError);
}

TEST(Dominates, TiesCount) {
  EXPECT_TRUE(dominates(lin(1, 0), lin(1, -1e-10), Polytope::interval(0, 1)));
}

TEST(BuildMaxMin, ThreeRegionSets) {
  const MaxMinForm f = build_maxmin(three_pieces(), three_regions(), 0);
  // oracle: sign of f_j - f_i at both endpoints of R_i, for all nine pairs
  const auto p = three_pieces();
  const auto regions = three_regions().regions;
  for (int i = 0; i < 3; ++i) {
    std::vector<int> expect;
    for (int j = 0; j < 3; ++j) {
      const auto [lo, hi] = regions[i].bounds1d();
      if (p[j](at(lo)) >= p[i](at(lo)) && p[j](at(hi)) >= p[i](at(hi))) expect.push_back(j);
    }
    EXPECT_EQ(f.psi_sets[i], expect);
  }
  EXPECT_EQ(f.psi_sets, (std::vector<std::vector<int>>{{0, 1}, {0, 1}, {0, 2}}));
}

TEST(BuildMaxMin, SingleAndIdentical) {
  Partition one;
  one.domain = Polytope::interval(0, 1);
  one.regions = {Polytope::interval(0, 1)};
  EXPECT_EQ(build_maxmin({lin(2, 1)}, one, 0).psi_sets, (std::vector<std::vector<int>>{{0}}));
  Partition two;
  two.domain = Polytope::interval(0, 2);
  two.regions = {Polytope::interval(0, 1), Polytope::interval(1, 2)};
  EXPECT_EQ(build_maxmin({lin(2, 1), lin(2, 1)}, two, 0).psi_sets,
            (std::vector<std::vector<int>>{{0, 1}, {0, 1}}));
  EXPECT_THROW(build_maxmin({lin(1, 0)}, two, 0), ArgumentError);
}

TEST(EvalMaxMin, ThreeRegionPoints) {
  const MaxMinForm f = build_maxmin(three_pieces(), three_regions(), 0);
  EXPECT_EQ(eval_maxmin(f, at(-1)), 0.0);
  EXPECT_EQ(eval_maxmin(f, at(3)), 2.0);
  EXPECT_EQ(eval_maxmin(f, at(1)), 0.0);
  Partition one;
  one.domain = Polytope::interval(0, 1);
  one.regions = {Polytope::interval(0, 1)};
  const MaxMinForm g = build_maxmin({lin(2, 1)}, one, 0);
  for (double x : {-5.0, 0.3, 7.0}) EXPECT_EQ(eval_maxmin(g, at(x)), 2 * x + 1);
}

TEST(EvalMaxMin, GridMatchesRegionPieces) {
  const MaxMinForm f = build_maxmin(three_pieces(), three_regions(), 0);
  const auto p = three_pieces();
  for (int g = 0; g <= 1000; ++g) {
    const double x = -3 + 7.0 * g / 1000;
    const double truth = x <= 0 ? p[0](at(x)) : x <= 2 ? p[1](at(x)) : p[2](at(x));
    EXPECT_NEAR(eval_maxmin(f, at(x)), truth, 1e-9);
  }
}

TEST(EvalMaxMin, DominatedPieceChangesNothing) {
  const MaxMinForm f = build_maxmin(three_pieces(), three_regions(), 0);
  MaxMinForm g = f;
  // an extra max-term that lies far below every other term
  g.pieces.push_back(lin(1, -1000));
  g.psi_sets.push_back({3});
  for (int k = 0; k <= 100; ++k) {
    const double x = -3 + 7.0 * k / 100;
    EXPECT_EQ(eval_maxmin(f, at(x)), eval_maxmin(g, at(x)));
  }
}

TEST(EvalMaxMin, LipschitzOnGrid) {
  const MaxMinForm f = build_maxmin(three_pieces(), three_regions(), 0);
  const double h = 7.0 / 1000, lip = 3.0;
  for (int k = 0; k < 1000; ++k) {
    const double x = -3 + k * h;
    EXPECT_LE(std::abs(eval_maxmin(f, at(x + h)) - eval_maxmin(f, at(x))), lip * h + 1e-12);
  }
}

TEST(Consistency, AssembledWithAuxiliaries) {
  const Dataset d = gen_parabola(40, -1, 1);
  for (int P = 1; P <= 6; ++P) {
    const Partition part = partition_1d(d, even_boundaries_1d(d, P));
    const CpwlPredictor pred = assemble(d, part, fit_all(d, part, LossFn::mse()));
    EXPECT_TRUE(check_consistency(pred, d).ok);
  }
}

TEST(Consistency, DiscontinuousPiecesFail) {
  const Dataset d = points_1d({{0.1, 0.1}, {0.4, 0.4}, {0.6, -9.4}, {0.9, -9.1}});
  Partition p = partition_1d(d, {0.5});
  const CpwlPredictor pred = make_predictor(p, {piece(1, 0), piece(1, -10)});
  const ConsistencyReport rep = check_consistency(pred, d);
  EXPECT_FALSE(rep.ok);
  EXPECT_FALSE(rep.violations.empty());
}

TEST(Consistency, SingleRegion) {
  const Dataset d = gen_parabola(5, -1, 1);
  const Partition p = trivial_partition(d);
  EXPECT_TRUE(check_consistency(make_predictor(p, {piece(0.5, 0.1)}), d).ok);
}

TEST(Assemble, EveryPartitionUpToSixGroups) {
  // every assembled 1-D predictor agrees with its own region pieces on a fine grid
  const Dataset d = gen_parabola(12, -1, 1);
  for (int P = 1; P <= 6; ++P) {
    auto it = contiguous_partitions_1d(d, P);
    while (auto part = it.next()) {
      const CpwlPredictor pred = assemble(d, *part, fit_all(d, *part, LossFn::mse()));
      const auto [lo, hi] = pred.partition.domain.bounds1d();
      for (int g = 0; g < 1000; ++g) {
        const Eigen::VectorXd x = at(lo + (hi - lo) * g / 999);
        const int r = pred.locate(x);
        ASSERT_GE(r, 0);
        ASSERT_NEAR(pred.eval(x)(0), pred.pieces_by_region[r](x)(0), 1e-9);
      }
    }
  }
}

TEST(Assemble, MultiOutputSharesRegions) {
  std::vector<Sample> s;
  for (int i = 0; i < 20; ++i) {
    const double x = -1 + 2.0 * i / 19;
    s.push_back({at(x), Eigen::Vector2d(x * x, std::abs(x) + 0.3 * x)});
  }
  const Dataset d(s, 1, 2);
  const Partition part = partition_1d(d, {-0.3, 0.35});
  const CpwlPredictor pred = assemble(d, part, fit_all(d, part, LossFn::mse()));
  EXPECT_EQ(pred.dy(), 2);
  EXPECT_TRUE(check_consistency(pred, d).ok);
  const auto [lo, hi] = pred.partition.domain.bounds1d();
  for (int g = 0; g < 1000; ++g) {
    const Eigen::VectorXd x = at(lo + (hi - lo) * g / 999);
    const Eigen::VectorXd want = pred.pieces_by_region[pred.locate(x)](x);
    EXPECT_NEAR((pred.eval(x) - want).cwiseAbs().maxCoeff(), 0.0, 1e-9);
  }
}

TEST(Assemble, MultiDimInconsistentRefused) {
  // two halves of the square fitted by pieces that cross away from the cut
  std::vector<Sample> s;
  std::mt19937 rng(2);
  std::uniform_real_distribution<double> u(-1, 1);
  for (int i = 0; i < 60; ++i) {
    Eigen::Vector2d x(u(rng), u(rng));
    s.push_back({x, Eigen::VectorXd::Constant(1, x(0) < 0 ? 5 * x(1) : -5 * x(1) + 3)});
  }
  const Dataset d(s, 2, 1);
  const Polytope dom = default_domain(d);
  const Partition part = assign_regions(d, dom, {dom.clip({Eigen::Vector2d(1, 0), 0.0}),
                                                 dom.clip({Eigen::Vector2d(-1, 0), 0.0})});
  EXPECT_THROW(assemble(d, part, fit_all(d, part, LossFn::mse())), ConsistencyError);
}

TEST(Predictor, JsonRoundTrip) {
  const Dataset d = gen_parabola(20, -1, 1);
  const Partition part = partition_1d(d, {-0.2, 0.5});
  const CpwlPredictor pred = assemble(d, part, fit_all(d, part, LossFn::mse()));
  const CpwlPredictor back = predictor_from_json(nlohmann::json::parse(to_json(pred).dump()));
  for (int g = 0; g < 100; ++g) {
    const Eigen::VectorXd x = at(-1.2 + 2.4 * g / 99);
    EXPECT_EQ(back.eval(x)(0), pred.eval(x)(0));
  }
}
