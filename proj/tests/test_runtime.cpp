#include <gtest/gtest.h>

#include <random>

#include "helpers.hpp"

using namespace cpwlnet;

namespace {
Eigen::VectorXd at(double x) { return Eigen::VectorXd::Constant(1, x); }
}  // namespace

TEST(ForwardFc, IdentityLayer) {
  ReluNetwork net;
  net.layers.push_back({Eigen::MatrixXd::Identity(1, 1), Eigen::VectorXd::Zero(1), LayerKind::relu});
  net.layers.push_back({Eigen::MatrixXd::Constant(1, 1, 2.0), Eigen::VectorXd::Constant(1, 0.5), LayerKind::linear_output});
  const ForwardTrace t = forward(net, at(1));
  EXPECT_EQ(t.output(0), 2.5);
  EXPECT_EQ(t.pattern, (ActivationPattern{{1}}));
  EXPECT_EQ(t.margin, 1.0);
}

TEST(ForwardFc, WidthMismatch) {
  const Dataset d = gen_parabola(5, -1, 1);
  const Pipeline pl = run_pipeline(d, trivial_partition(d), LossFn::mse());
  EXPECT_THROW(forward(pl.net, Eigen::Vector2d(0, 0)), ShapeError);
}

TEST(ForwardFc, ZeroPreActivationIsInactive) {
  ReluNetwork net;
  net.layers.push_back({Eigen::MatrixXd::Identity(1, 1), Eigen::VectorXd::Zero(1), LayerKind::relu});
  net.layers.push_back({Eigen::MatrixXd::Identity(1, 1), Eigen::VectorXd::Zero(1), LayerKind::linear_output});
  const ForwardTrace t = forward(net, at(0));
  EXPECT_EQ(t.pattern[0][0], 0);
  EXPECT_EQ(t.margin, 0.0);
}

TEST(ForwardFc, BuiltNetworkAtSamples) {
  const Dataset d = gen_parabola(40, -1, 1);
  const Pipeline pl = run_pipeline(d, partition_1d(d, {0.0}), LossFn::mse());
  for (std::size_t i = 0; i < d.size(); ++i)
    EXPECT_NEAR(forward(pl.net, d[i].x).output(0), eval_maxmin(pl.predictor.forms[0], d[i].x), 1e-12);
}

TEST(ForwardFc, MarginNearBoundary) {
  // at the breakpoint the two pieces agree, so the comparing neuron sits at zero
  const Dataset d = gen_parabola(40, -1, 1);
  const Pipeline pl = run_pipeline(d, partition_1d(d, {0.0}), LossFn::mse());
  const auto [lo, hi] = pl.predictor.partition.regions[0].bounds1d();
  EXPECT_LT(forward(pl.net, at(hi)).margin, 1e-12);
  EXPECT_GT(network_risk(pl.net, d, LossFn::mse()).min_margin(), 1e-3);
}

TEST(ForwardFc, FixedPatternProduct) {
  // with the pattern frozen, the output is W_L D_{L-1} W_{L-1} ... D_1 (W_1 x + b_1) ... + b_L
  const Dataset d = gen_parabola(40, -1, 1);
  const Pipeline pl = run_pipeline(d, partition_1d(d, {-0.5, 0.1, 0.5}), LossFn::mse());
  std::mt19937 rng(1);
  std::uniform_real_distribution<double> u(-1.2, 1.2);
  for (int t = 0; t < 100; ++t) {
    const Eigen::VectorXd x = at(u(rng));
    const ForwardTrace tr = forward(pl.net, x);
    Eigen::VectorXd y = x;
    for (std::size_t l = 0; l < pl.net.layers.size(); ++l) {
      y = pl.net.layers[l].W * y + pl.net.layers[l].b;
      if (l < tr.pattern.size())
        for (Eigen::Index k = 0; k < y.size(); ++k) y(k) *= tr.pattern[l][k];
    }
    EXPECT_NEAR(y(0), tr.output(0), 1e-12);
  }
}

TEST(ForwardCnn, SingleInnerProduct) {
  CnnNetwork net;
  net.input_length = 2;
  ConvStage st;
  st.conv.filters = Eigen::MatrixXd::Ones(1, 2);
  st.conv.biases = Eigen::VectorXd::Zero(1);
  st.conv.patch = 2;
  st.conv.stride = 1;
  net.stages.push_back(st);
  net.fc_layers.push_back({Eigen::MatrixXd::Identity(1, 1), Eigen::VectorXd::Zero(1), LayerKind::linear_output});
  net.validate();
  EXPECT_EQ(forward(net, Eigen::Vector2d(1, 2)).output(0), 3.0);
  EXPECT_THROW(forward(net, Eigen::Vector3d(1, 2, 3)), ShapeError);
}

TEST(Pooling, AverageAndMax) {
  const Eigen::Vector2d v(2, 4);
  EXPECT_EQ(pool_1d(v, 1, {PoolKind::average, 2, 2})(0), 3.0);
  EXPECT_EQ(pool_1d(v, 1, {PoolKind::max, 2, 2})(0), 4.0);
}

TEST(ForwardCnn, MaxPoolEvaluates) {
  CnnNetwork net;
  net.input_length = 4;
  ConvStage st;
  st.conv.filters = Eigen::MatrixXd::Ones(1, 2);
  st.conv.biases = Eigen::VectorXd::Zero(1);
  st.conv.patch = 2;
  st.conv.stride = 2;
  st.pool = PoolLayer{PoolKind::max, 2, 2};
  net.stages.push_back(st);
  net.fc_layers.push_back({Eigen::MatrixXd::Identity(1, 1), Eigen::VectorXd::Zero(1), LayerKind::linear_output});
  Eigen::VectorXd x(4);
  x << 1, 1, 3, 4;
  EXPECT_EQ(forward(net, x).output(0), 7.0);
}

TEST(NetworkRisk, PerfectAndBestLine) {
  const Dataset d = gen_parabola(40, -1, 1);
  const Pipeline one = run_pipeline(d, trivial_partition(d), LossFn::mse());
  const auto x = testing_util::parabola_x(40, -1, 1);
  std::vector<long double> y;
  for (auto v : x) y.push_back(v * v);
  EXPECT_NEAR(network_risk(one.net, d, LossFn::mse()).risk, static_cast<double>(testing_util::line_rss(x, y) / 40), 1e-12);
  const Pipeline two = run_pipeline(d, partition_1d(d, {0.0}), LossFn::mse());
  EXPECT_LT(network_risk(two.net, d, LossFn::mse()).risk, network_risk(one.net, d, LossFn::mse()).risk);
  const Dataset line = testing_util::points_1d({{0, 1}, {1, 3}, {2, 5}});
  EXPECT_NEAR(network_risk(run_pipeline(line, trivial_partition(line), LossFn::mse()).net, line, LossFn::mse()).risk, 0.0, 1e-20);
}

TEST(NetworkRisk, OutputWidthMismatch) {
  const Dataset d = gen_parabola(5, -1, 1);
  const Pipeline pl = run_pipeline(d, trivial_partition(d), LossFn::mse());
  std::vector<Sample> s{{at(0), Eigen::Vector2d(0, 0)}};
  EXPECT_THROW(network_risk(pl.net, Dataset(s, 1, 2), LossFn::mse()), ShapeError);
}

TEST(NetworkRisk, IndependentOfThreadCount) {
  const Dataset d = gen_parabola(200, -1, 1);
  const Pipeline pl = run_pipeline(d, partition_1d(d, even_boundaries_1d(d, 5)), LossFn::mse());
  setenv("CPWL_THREADS", "1", 1);
  const double a = network_risk(pl.net, d, LossFn::mse()).risk;
  setenv("CPWL_THREADS", "7", 1);
  const double b = network_risk(pl.net, d, LossFn::mse()).risk;
  unsetenv("CPWL_THREADS");
  EXPECT_EQ(a, b);
}

TEST(Patterns, ConstantWithinGroups) {
  const Dataset d = gen_parabola(40, -1, 1);
  for (int P = 1; P <= 3; ++P) {
    const Pipeline pl = run_pipeline(d, partition_1d(d, even_boundaries_1d(d, P)), LossFn::mse());
    EXPECT_TRUE(group_patterns_constant(pl.net, d, pl.predictor.partition.assignment)) << "P=" << P;
    EXPECT_GT(network_risk(pl.net, d, LossFn::mse()).min_margin(), 0.0);
  }
}
