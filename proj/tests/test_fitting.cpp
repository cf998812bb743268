#include <gtest/gtest.h>

#include <random>

#include "helpers.hpp"

using namespace cpwlnet;
using testing_util::points_1d;

TEST(FitMse, TwoPoints) {
  const Dataset d = points_1d({{0, 0}, {1, 1}});
  const GroupFit f = fit_group_mse(d, trivial_partition(d), 0);
  EXPECT_NEAR(f.piece.A(0, 0), 1.0, 1e-12);
  EXPECT_NEAR(f.piece.b(0), 0.0, 1e-12);
  EXPECT_NEAR(f.group_risk, 0.0, 1e-20);
}

TEST(FitMse, ThreePointParabola) {
  const Dataset d = points_1d({{-1, 1}, {0, 0}, {1, 1}});
  const GroupFit f = fit_group_mse(d, trivial_partition(d), 0);
  EXPECT_NEAR(f.piece.A(0, 0), 0.0, 1e-12);
  EXPECT_NEAR(f.piece.b(0), 2.0 / 3.0, 1e-12);
  EXPECT_NEAR(f.group_risk, 2.0 / 3.0, 1e-12);
}

TEST(FitMse, SingleSampleInterpolated) {
  const Dataset d = points_1d({{0.3, -2}, {5, 5}});
  const Partition p = partition_1d(d, {1.0});
  const GroupFit f = fit_group_mse(d, p, 0);
  EXPECT_NEAR(f.piece(d[0].x)(0), -2.0, 1e-12);
  EXPECT_NEAR(f.group_risk, 0.0, 1e-20);
}

TEST(FitMse, MatchesClosedForm) {
  const Dataset d = gen_parabola(40, -1, 1);
  const auto x = testing_util::parabola_x(40, -1, 1);
  std::vector<long double> y;
  for (auto v : x) y.push_back(v * v);
  const GroupFit f = fit_group_mse(d, trivial_partition(d), 0);
  EXPECT_NEAR(f.group_risk, static_cast<double>(testing_util::line_rss(x, y)), 1e-12);
}

TEST(FitMse, BeatsRandomPieces) {
  std::mt19937 rng(5);
  std::normal_distribution<double> g;
  std::vector<Sample> s;
  for (int i = 0; i < 25; ++i) {
    Eigen::Vector2d x(g(rng), g(rng));
    s.push_back({x, Eigen::Vector2d(std::sin(x(0)) + x(1) * x(1), x(0) * x(1))});
  }
  const Dataset d(s, 2, 2);
  const GroupFit f = fit_group_mse(d, trivial_partition(d), 0);
  std::vector<int> all(25);
  std::iota(all.begin(), all.end(), 0);
  EXPECT_NEAR(f.group_risk, group_loss(d, all, f.piece, LossFn::mse()), 1e-9);
  for (int t = 0; t < 100; ++t) {
    AffinePiece q{f.piece.A + 0.5 * Eigen::MatrixXd::NullaryExpr(2, 2, [&] { return g(rng); }),
                  f.piece.b + 0.5 * Eigen::VectorXd::NullaryExpr(2, [&] { return g(rng); })};
    EXPECT_LE(f.group_risk, group_loss(d, all, q, LossFn::mse()));
  }
  // small perturbations never help
  std::uniform_real_distribution<double> u(-1e-3, 1e-3);
  for (int t = 0; t < 100; ++t) {
    AffinePiece q{f.piece.A + Eigen::MatrixXd::NullaryExpr(2, 2, [&] { return u(rng); }),
                  f.piece.b + Eigen::VectorXd::NullaryExpr(2, [&] { return u(rng); })};
    EXPECT_GE(group_loss(d, all, q, LossFn::mse()), f.group_risk);
  }
}

TEST(FitGeneric, MseAgrees) {
  const Dataset d = gen_parabola(11, -1, 1);
  const Partition p = trivial_partition(d);
  EXPECT_NEAR(fit_group_generic(d, p, 0, LossFn::mse()).group_risk, fit_group_mse(d, p, 0).group_risk, 1e-6);
}

TEST(FitGeneric, RealizableGoesToZero) {
  const Dataset d = points_1d({{0, 1}, {1, 3}, {2, 5}, {3, 7}});
  const GroupFit f = fit_group_generic(d, trivial_partition(d), 0, LossFn::absolute());
  EXPECT_NEAR(f.group_risk, 0.0, 1e-9);
}

TEST(FitGeneric, AbsoluteLossGridOracle) {
  const Dataset d = points_1d({{-1, 1}, {0, 0}, {1, 1}});
  const LossFn abs = LossFn::absolute();
  const GroupFit mse = fit_group_mse(d, trivial_partition(d), 0);
  const GroupFit f = fit_group_generic(d, trivial_partition(d), 0, abs);
  const std::vector<int> all{0, 1, 2};
  EXPECT_LE(f.group_risk, group_loss(d, all, mse.piece, abs) + 1e-9);
  double best = INFINITY;
  for (int i = 0; i <= 400; ++i)
    for (int j = 0; j <= 400; ++j) {
      const double a = -2 + 4.0 * i / 400, b = -2 + 4.0 * j / 400;
      best = std::min(best, std::abs(-a + b - 1) + std::abs(b) + std::abs(a + b - 1));
    }
  // the line y = 1 through the outer points leaves only the middle residual
  EXPECT_NEAR(best, 1.0, 1e-12);
  EXPECT_LE(f.group_risk, best + 1e-3);
  EXPECT_NEAR(f.group_risk, group_loss(d, all, f.piece, abs), 1e-12);
}

TEST(FitGeneric, ArgumentChecks) {
  const Dataset d = gen_parabola(4, -1, 1);
  EXPECT_THROW(fit_group_generic(d, trivial_partition(d), 0, LossFn::absolute(), 0), ArgumentError);
  EXPECT_THROW(fit_group_generic(d, trivial_partition(d), 0, LossFn::absolute(), 10, 0.0), ArgumentError);
  const LossFn bad = LossFn::custom("bad", [](const Eigen::VectorXd&, const Eigen::VectorXd&) { return NAN; });
  EXPECT_THROW(fit_group_generic(d, trivial_partition(d), 0, bad), NumericalError);
}

namespace {
GroupFit line(double a, double b) {
  GroupFit g;
  g.piece.A = Eigen::MatrixXd::Constant(1, 1, a);
  g.piece.b = Eigen::VectorXd::Constant(1, b);
  return g;
}
}  // namespace

TEST(Auxiliary, CrossingInsideGap) {
  const AuxiliaryJoin j = auxiliary_segment_1d(line(1, 0), line(-1, 2), {0.5, 1.5});
  EXPECT_FALSE(j.piece);
  ASSERT_EQ(j.boundaries.size(), 1u);
  EXPECT_DOUBLE_EQ(j.boundaries[0], 1.0);
}

TEST(Auxiliary, IdenticalPieces) {
  const AuxiliaryJoin j = auxiliary_segment_1d(line(0, 0), line(0, 0), {0, 1});
  EXPECT_FALSE(j.piece);
  ASSERT_EQ(j.boundaries.size(), 1u);
  EXPECT_DOUBLE_EQ(j.boundaries[0], 0.5);
}

TEST(Auxiliary, ParallelPiecesGetConnector) {
  const AuxiliaryJoin j = auxiliary_segment_1d(line(1, 0), line(1, -10), {0, 1});
  ASSERT_TRUE(j.piece);
  ASSERT_EQ(j.boundaries.size(), 2u);
  EXPECT_DOUBLE_EQ(j.boundaries[0], 0.25);
  EXPECT_DOUBLE_EQ(j.boundaries[1], 0.75);
  // two-point line through (0.25, 0.25) and (0.75, -9.25)
  const double slope = (-9.25 - 0.25) / 0.5;
  EXPECT_NEAR(j.piece->A(0, 0), slope, 1e-12);
  EXPECT_NEAR((*j.piece)(Eigen::VectorXd::Constant(1, 0.25))(0), 0.25, 1e-12);
  EXPECT_NEAR((*j.piece)(Eigen::VectorXd::Constant(1, 0.75))(0), -9.25, 1e-12);
}

TEST(Auxiliary, AssembledPredictorIsContinuousAndKeepsSamples) {
  const Dataset d = gen_parabola(40, -1, 1);
  for (auto b : std::vector<std::vector<double>>{{0.0}, {-0.5, 0.5}, {-0.6, -0.1, 0.35, 0.7}}) {
    const Partition p = partition_1d(d, b);
    const auto fits = fit_all(d, p, LossFn::mse());
    const CpwlPredictor pred = assemble(d, p, fits);
    for (std::size_t i = 0; i < d.size(); ++i)
      EXPECT_NEAR(pred.eval(d[i].x)(0), fits[p.assignment[i]].piece(d[i].x)(0), 1e-12);
    for (std::size_t r = 0; r < pred.partition.regions.size(); ++r) {
      const auto [lo, hi] = pred.partition.regions[r].bounds1d();
      for (double x : {lo, hi}) {
        const Eigen::VectorXd xv = Eigen::VectorXd::Constant(1, x);
        EXPECT_NEAR(pred.pieces_by_region[r](xv)(0), pred.eval(xv)(0), 1e-9);
      }
    }
  }
}
