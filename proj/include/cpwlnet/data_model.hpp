#pragma once

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "cpwlnet/error.hpp"
#include "cpwlnet/numeric.hpp"

namespace cpwlnet {

struct Sample {
  Eigen::VectorXd x;
  Eigen::VectorXd y;
};

/// Immutable labelled training set. Every sample has the same input and output
/// widths and only finite entries.
class Dataset {
 public:
  Dataset(std::vector<Sample> samples, int dx, int dy)
      : samples_(std::move(samples)), dx_(dx), dy_(dy) {
    if (dx_ < 1 || dy_ < 1) throw ValidationError("dataset: dx >= 1 and dy >= 1 required");
    if (samples_.empty()) throw ValidationError("dataset: N >= 1 required");
    for (std::size_t i = 0; i < samples_.size(); ++i) {
      const Sample& s = samples_[i];
      if (s.x.size() != dx_ || s.y.size() != dy_)
        throw ValidationError("dataset: sample " + std::to_string(i) + " has wrong width");
      if (!s.x.allFinite() || !s.y.allFinite())
        throw ValidationError("dataset: sample " + std::to_string(i) + " is not finite");
    }
  }

  std::size_t size() const noexcept { return samples_.size(); }
  int dx() const noexcept { return dx_; }
  int dy() const noexcept { return dy_; }
  const Sample& operator[](std::size_t i) const { return samples_[i]; }
  const std::vector<Sample>& samples() const noexcept { return samples_; }

 private:
  std::vector<Sample> samples_;
  int dx_;
  int dy_;
};

/// Per-sample loss l(prediction, target). Must be nonnegative; continuity in
/// the prediction is assumed, not checked.
struct LossFn {
  enum class Kind { mse, custom };
  using Callback = std::function<double(const Eigen::VectorXd&, const Eigen::VectorXd&)>;

  Kind kind = Kind::mse;
  std::string name = "mse";
  Callback fn;

  double operator()(const Eigen::VectorXd& prediction, const Eigen::VectorXd& target) const {
    if (kind == Kind::mse) return (prediction - target).squaredNorm();
    return fn(prediction, target);
  }

  bool is_mse() const noexcept { return kind == Kind::mse; }

  static LossFn mse() { return {}; }

  static LossFn custom(std::string name, Callback fn) {
    return {Kind::custom, std::move(name), std::move(fn)};
  }

  /// Sum of absolute residuals.
  static LossFn absolute() {
    return custom("abs", [](const Eigen::VectorXd& p, const Eigen::VectorXd& t) {
      return (p - t).cwiseAbs().sum();
    });
  }

  /// Looks up a built-in loss by the name used on the command line.
  static LossFn by_name(const std::string& name) {
    if (name == "mse") return mse();
    if (name == "abs" || name == "mae") return absolute();
    throw ArgumentError("unknown loss '" + name + "' (expected mse or abs)");
  }
};

/// Empirical risk (1/N) sum_i loss(prediction_i, y_i).
inline double risk(const Dataset& data, std::span<const Eigen::VectorXd> predictions,
                   const LossFn& loss) {
  if (predictions.size() != data.size())
    throw ArgumentError("risk: expected " + std::to_string(data.size()) + " predictions, got " +
                        std::to_string(predictions.size()));
  std::vector<double> terms(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (predictions[i].size() != data.dy())
      throw ArgumentError("risk: prediction " + std::to_string(i) + " has wrong width");
    terms[i] = loss(predictions[i], data[i].y);
  }
  return pairwise_sum(terms) / static_cast<double>(data.size());
}

/// n samples of y = x^2 with x evenly spaced on [lo, hi], both ends included.
inline Dataset gen_parabola(int n, double lo, double hi) {
  if (n < 2) throw ArgumentError("gen_parabola: n >= 2 required");
  if (!(lo < hi)) throw ArgumentError("gen_parabola: lo < hi required");
  std::vector<Sample> samples;
  samples.reserve(n);
  const double step = (hi - lo) / (n - 1);
  for (int i = 0; i < n; ++i) {
    const double x = (i == n - 1) ? hi : lo + step * i;
    samples.push_back({Eigen::VectorXd::Constant(1, x), Eigen::VectorXd::Constant(1, x * x)});
  }
  return Dataset(std::move(samples), 1, 1);
}

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split_commas(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(trim(cell));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

}  // namespace detail

/// Parses CSV text with header x0..x{dx-1},y0..y{dy-1}. `source` names the
/// input in error messages.
inline Dataset parse_csv(std::istream& in, const std::string& source = "<csv>") {
  std::string line;
  int line_no = 0;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++line_no;
    if (!detail::trim(line).empty()) {
      header = detail::split_commas(detail::trim(line));
      break;
    }
  }
  if (header.empty()) throw FormatError(source + ": missing header row");

  int dx = 0;
  while (dx < static_cast<int>(header.size()) && header[dx] == "x" + std::to_string(dx)) ++dx;
  int dy = 0;
  while (dx + dy < static_cast<int>(header.size()) && header[dx + dy] == "y" + std::to_string(dy))
    ++dy;
  if (dx < 1 || dy < 1 || dx + dy != static_cast<int>(header.size()))
    throw FormatError(source + ": header must be x0,...,x{dx-1},y0,...,y{dy-1}");

  std::vector<Sample> samples;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = detail::trim(line);
    if (t.empty()) continue;
    const auto cells = detail::split_commas(t);
    if (cells.size() != header.size())
      throw ParseError(source + ", line " + std::to_string(line_no) + ": expected " +
                       std::to_string(header.size()) + " fields, got " +
                       std::to_string(cells.size()));
    Sample s{Eigen::VectorXd(dx), Eigen::VectorXd(dy)};
    for (std::size_t c = 0; c < cells.size(); ++c) {
      const char* begin = cells[c].c_str();
      char* end = nullptr;
      const double v = std::strtod(begin, &end);
      if (cells[c].empty() || end != begin + cells[c].size())
        throw ParseError(source + ", line " + std::to_string(line_no) + ": cannot parse '" + cells[c] +
                         "'");
      if (!std::isfinite(v))
        throw ValidationError(source + ", line " + std::to_string(line_no) + ": non-finite value '" +
                              cells[c] + "'");
      if (static_cast<int>(c) < dx)
        s.x(c) = v;
      else
        s.y(c - dx) = v;
    }
    samples.push_back(std::move(s));
  }
  if (samples.empty()) throw ValidationError(source + ": N >= 1 required");
  return Dataset(std::move(samples), dx, dy);
}

inline Dataset load_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ArgumentError("cannot open '" + path + "'");
  return parse_csv(in, path);
}

inline void write_csv(std::ostream& out, const Dataset& data) {
  for (int j = 0; j < data.dx(); ++j) out << (j ? "," : "") << 'x' << j;
  for (int k = 0; k < data.dy(); ++k) out << ",y" << k;
  out << '\n';
  for (const Sample& s : data.samples()) {
    for (int j = 0; j < data.dx(); ++j) out << (j ? "," : "") << format_real(s.x(j));
    for (int k = 0; k < data.dy(); ++k) out << ',' << format_real(s.y(k));
    out << '\n';
  }
}

inline void save_csv(const std::string& path, const Dataset& data) {
  std::ofstream out(path);
  if (!out) throw ArgumentError("cannot write '" + path + "'");
  write_csv(out, data);
}

}  // namespace cpwlnet
