#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "helpers.hpp"

using namespace cpwlnet;
using testing_util::points_1d;

TEST(Csv, ParsesThreeRows) {
  std::istringstream in("x0,y0\n-1,1\n0,0\n1,1\n");
  const Dataset d = parse_csv(in);
  ASSERT_EQ(d.size(), 3u);
  EXPECT_EQ(d.dx(), 1);
  EXPECT_EQ(d.dy(), 1);
  EXPECT_EQ(d[0].x(0), -1.0);
  EXPECT_EQ(d[2].y(0), 1.0);
}

TEST(Csv, MultiColumnHeader) {
  std::istringstream in("x0,x1,y0,y1,y2\n1,2,3,4,5\n");
  const Dataset d = parse_csv(in);
  EXPECT_EQ(d.dx(), 2);
  EXPECT_EQ(d.dy(), 3);
  EXPECT_EQ(d[0].y(2), 5.0);
}

TEST(Csv, EmptyDataSectionRejected) {
  std::istringstream in("x0,y0\n");
  try {
    parse_csv(in);
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("N >= 1 required"), std::string::npos);
  }
}

TEST(Csv, NanNamesLine) {
  std::istringstream in("x0,y0\n0,0\n1,NaN\n");
  try {
    parse_csv(in);
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos) << e.what();
  }
}

TEST(Csv, MissingHeaderIsFormatError) {
  std::istringstream in("1,2\n3,4\n");
  EXPECT_THROW(parse_csv(in), FormatError);
}

TEST(Csv, MalformedRowIsParseErrorWithLine) {
  std::istringstream in("x0,y0\n0,0\n1,abc\n");
  try {
    parse_csv(in);
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos) << e.what();
  }
}

TEST(Csv, RoundTripIsBitExact) {
  const Dataset d = gen_parabola(40, -1, 1);
  std::stringstream ss;
  write_csv(ss, d);
  const Dataset back = parse_csv(ss);
  ASSERT_EQ(back.size(), d.size());
  for (std::size_t i = 0; i < d.size(); ++i) {
    EXPECT_EQ(back[i].x(0), d[i].x(0));
    EXPECT_EQ(back[i].y(0), d[i].y(0));
  }
}

TEST(Parabola, FortySamples) {
  const Dataset d = gen_parabola(40, -1, 1);
  ASSERT_EQ(d.size(), 40u);
  EXPECT_EQ(d[0].x(0), -1.0);
  EXPECT_EQ(d[39].x(0), 1.0);
  for (std::size_t i = 1; i < 40; ++i) EXPECT_NEAR(d[i].x(0) - d[i - 1].x(0), 2.0 / 39, 1e-15);
  for (const auto& s : d.samples()) EXPECT_EQ(s.y(0), s.x(0) * s.x(0));
}

TEST(Parabola, SmallCases) {
  const Dataset two = gen_parabola(2, 0, 1);
  EXPECT_EQ(two[0].x(0), 0.0);
  EXPECT_EQ(two[1].y(0), 1.0);
  const Dataset three = gen_parabola(3, -1, 1);
  EXPECT_EQ(three[1].x(0), 0.0);
  EXPECT_EQ(three[1].y(0), 0.0);
  EXPECT_EQ(three[2].y(0), 1.0);
  EXPECT_THROW(gen_parabola(1, 0, 1), ArgumentError);
  EXPECT_THROW(gen_parabola(5, 1, 1), ArgumentError);
}

TEST(Parabola, NotFittedByALine) {
  for (int n : {3, 5, 40}) {
    const Dataset d = gen_parabola(n, -1, 1);
    const GroupFit f = fit_group_mse(d, trivial_partition(d), 0);
    EXPECT_GT(f.group_risk, 0.0);
  }
}

TEST(Risk, PerfectFitIsZero) {
  const Dataset d = gen_parabola(5, -1, 1);
  std::vector<Eigen::VectorXd> p;
  for (const auto& s : d.samples()) p.push_back(s.y);
  EXPECT_EQ(risk(d, p, LossFn::mse()), 0.0);
}

TEST(Risk, ConstantTwoThirds) {
  const Dataset d = points_1d({{-1, 1}, {0, 0}, {1, 1}});
  std::vector<Eigen::VectorXd> p(3, Eigen::VectorXd::Constant(1, 2.0 / 3.0));
  EXPECT_NEAR(risk(d, p, LossFn::mse()), 2.0 / 9.0, 1e-15);
}

TEST(Risk, UnitResidual) {
  std::vector<Sample> s{{Eigen::Vector2d(0, 0), Eigen::Vector2d(1, 2)}};
  const Dataset d(s, 2, 2);
  std::vector<Eigen::VectorXd> p{Eigen::Vector2d(1, 3)};
  EXPECT_EQ(risk(d, p, LossFn::mse()), 1.0);
}

TEST(Risk, LengthMismatch) {
  const Dataset d = gen_parabola(3, -1, 1);
  std::vector<Eigen::VectorXd> p(2, Eigen::VectorXd::Zero(1));
  EXPECT_THROW(risk(d, p, LossFn::mse()), ArgumentError);
}

TEST(Risk, PermutationInvariantAndNonnegative) {
  std::mt19937 rng(11);
  std::normal_distribution<double> g;
  for (int rep = 0; rep < 20; ++rep) {
    std::vector<Sample> s;
    std::vector<Eigen::VectorXd> p;
    for (int i = 0; i < 17; ++i) {
      s.push_back({Eigen::VectorXd::Constant(1, g(rng)), Eigen::VectorXd::Constant(1, g(rng))});
      p.push_back(Eigen::VectorXd::Constant(1, g(rng)));
    }
    std::vector<int> perm(17);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<Sample> s2;
    std::vector<Eigen::VectorXd> p2;
    for (int i : perm) {
      s2.push_back(s[i]);
      p2.push_back(p[i]);
    }
    const double a = risk(Dataset(s, 1, 1), p, LossFn::mse());
    const double b = risk(Dataset(s2, 1, 1), p2, LossFn::mse());
    EXPECT_GE(a, 0.0);
    EXPECT_NEAR(a, b, 1e-14 * std::max(1.0, a));
  }
}

TEST(Dataset, RejectsBadSamples) {
  std::vector<Sample> s{{Eigen::VectorXd::Constant(1, 0), Eigen::VectorXd::Constant(2, 0)}};
  EXPECT_THROW(Dataset(s, 1, 1), ValidationError);
  EXPECT_THROW(Dataset({}, 1, 1), ValidationError);
  std::vector<Sample> inf{{Eigen::VectorXd::Constant(1, INFINITY), Eigen::VectorXd::Constant(1, 0)}};
  EXPECT_THROW(Dataset(inf, 1, 1), ValidationError);
}

TEST(Loss, ByName) {
  EXPECT_TRUE(LossFn::by_name("mse").is_mse());
  EXPECT_EQ(LossFn::by_name("abs")(Eigen::Vector2d(1, 2), Eigen::Vector2d(0, 4)), 3.0);
  EXPECT_THROW(LossFn::by_name("hinge"), ArgumentError);
}
