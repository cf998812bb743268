#pragma once

#include <cmath>
#include <utility>
#include <vector>

#include "cpwlnet/cpwlnet.hpp"

namespace testing_util {

inline cpwlnet::Dataset points_1d(const std::vector<std::pair<double, double>>& xy) {
  std::vector<cpwlnet::Sample> s;
  for (auto [x, y] : xy) s.push_back({Eigen::VectorXd::Constant(1, x), Eigen::VectorXd::Constant(1, y)});
  return cpwlnet::Dataset(std::move(s), 1, 1);
}

// Closed-form simple regression in long double, independent of the library's
// solver. Returns the residual sum of squares of the best line.
inline long double line_rss(const std::vector<long double>& x, const std::vector<long double>& y) {
  const std::size_t n = x.size();
  long double mx = 0, my = 0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  long double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  const long double slope = sxx > 0 ? sxy / sxx : 0;
  long double rss = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const long double r = y[i] - (my + slope * (x[i] - mx));
    rss += r * r;
  }
  return rss;
}

// Best mean risk over all ways to cut the sorted samples into exactly p
// contiguous groups, by exhaustive recursion.
inline long double brute_best_risk(const std::vector<long double>& x, const std::vector<long double>& y, int p) {
  const int n = static_cast<int>(x.size());
  long double best = INFINITY;
  std::vector<int> cuts;
  auto rec = [&](auto&& self, int start, int left) -> void {
    if (left == 1) {
      long double total = 0;
      int a = 0;
      std::vector<int> all = cuts;
      all.push_back(n);
      for (int c : all) {
        total += line_rss({x.begin() + a, x.begin() + c}, {y.begin() + a, y.begin() + c});
        a = c;
      }
      best = std::min(best, total / n);
      return;
    }
    for (int c = start + 1; c <= n - left + 1; ++c) {
      cuts.push_back(c);
      self(self, c, left - 1);
      cuts.pop_back();
    }
  };
  rec(rec, 0, p);
  return best;
}

inline std::vector<long double> parabola_x(int n, long double lo, long double hi) {
  std::vector<long double> x(n);
  for (int i = 0; i < n; ++i) x[i] = lo + (hi - lo) * i / (n - 1);
  return x;
}

}  // namespace testing_util
