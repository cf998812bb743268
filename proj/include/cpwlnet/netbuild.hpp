#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "cpwlnet/cpwl.hpp"
#include "cpwlnet/data_model.hpp"
#include "cpwlnet/error.hpp"
#include "cpwlnet/fitting.hpp"
#include "cpwlnet/network.hpp"
#include "cpwlnet/partition.hpp"

namespace cpwlnet {

/// `c` is the positive shift added to every piece neuron so that it stays in
/// the linear part of the ReLU on the domain; 0 selects it automatically.
struct BuildConfig {
  double c = 0.0;
  static constexpr int tree_fanin = 2;
};

/// min(a, b) = relu(relu(b) - relu(b - a)) for a, b >= 0.
inline ReluNetwork build_min_gadget() {
  ReluNetwork net;
  net.layers.push_back({(Eigen::MatrixXd(2, 2) << 0, 1, -1, 1).finished(), Eigen::VectorXd::Zero(2),
                        LayerKind::relu});
  net.layers.push_back(
      {(Eigen::MatrixXd(1, 2) << 1, -1).finished(), Eigen::VectorXd::Zero(1), LayerKind::relu});
  net.layers.push_back(
      {Eigen::MatrixXd::Identity(1, 1), Eigen::VectorXd::Zero(1), LayerKind::linear_output});
  return net;
}

/// max(a, b) = relu(relu(a) + relu(b - a)) for a, b >= 0.
inline ReluNetwork build_max_gadget() {
  ReluNetwork net;
  net.layers.push_back({(Eigen::MatrixXd(2, 2) << 1, 0, -1, 1).finished(), Eigen::VectorXd::Zero(2),
                        LayerKind::relu});
  net.layers.push_back(
      {(Eigen::MatrixXd(1, 2) << 1, 1).finished(), Eigen::VectorXd::Zero(1), LayerKind::relu});
  net.layers.push_back(
      {Eigen::MatrixXd::Identity(1, 1), Eigen::VectorXd::Zero(1), LayerKind::linear_output});
  return net;
}

/// Largest |piece value| over the domain vertices, plus one.
inline double auto_shift(const CpwlPredictor& pred) {
  double m = 0.0;
  for (const auto& piece : pred.pieces_by_region)
    for (const auto& v : pred.partition.domain.vertices)
      m = std::max(m, piece(v).cwiseAbs().maxCoeff());
  return m + 1.0;
}

/// The shift actually used for a build; rejects a user value that would let a
/// piece neuron reach the flat part of the ReLU on the domain.
inline double resolve_shift(const CpwlPredictor& pred, const BuildConfig& cfg) {
  const double needed = auto_shift(pred) - 1.0;
  if (cfg.c == 0.0) return needed + 1.0;
  if (!(cfg.c > needed))
    throw ConfigError("build: shift c = " + format_real(cfg.c) +
                      " does not keep every piece positive on the domain; use c > " +
                      format_real(needed));
  return cfg.c;
}

/// Smallest-found subset S of `psi` (the set of term i) that still keeps the
/// term below f on every region: each region j needs some k in S with
/// f_k <= f_j at all vertices of R_j. Greedy cover; returns `psi` unchanged
/// when some region has no such witness. Fewer pieces per term make it rare
/// for two terms to share their minimizing piece at a point, which would put
/// a max-gadget neuron exactly on its kink.
inline std::vector<int> minimal_psi(const MaxMinForm& form, const std::vector<Polytope>& regions,
                                    int i) {
  const auto& psi = form.psi_sets[i];
  const int n = static_cast<int>(form.pieces.size());
  std::vector<std::vector<int>> witnesses(n);
  for (int j = 0; j < n; ++j) {
    for (int k : psi)
      if (dominates(form.pieces[j], form.pieces[k], regions[j])) witnesses[j].push_back(k);
    if (witnesses[j].empty()) return psi;
  }
  std::vector<int> chosen{i};
  std::vector<bool> covered(n, false);
  auto mark = [&](int k) {
    for (int j = 0; j < n; ++j)
      if (std::find(witnesses[j].begin(), witnesses[j].end(), k) != witnesses[j].end()) covered[j] = true;
  };
  mark(i);
  while (std::find(covered.begin(), covered.end(), false) != covered.end()) {
    int best = -1, best_gain = 0;
    for (int k : psi) {
      int gain = 0;
      for (int j = 0; j < n; ++j)
        if (!covered[j] && std::find(witnesses[j].begin(), witnesses[j].end(), k) != witnesses[j].end()) ++gain;
      if (gain > best_gain) {
        best_gain = gain;
        best = k;
      }
    }
    chosen.push_back(best);
    mark(best);
  }
  std::sort(chosen.begin(), chosen.end());
  return chosen;
}

/// Max-min structure as the network realizes it: each set shrunk by
/// minimal_psi when regions are given, identical pieces merged, and sets that
/// contain another set dropped (their minimum can never win the max).
inline std::vector<std::vector<int>> reduced_psi_sets(const MaxMinForm& form,
                                                      const std::vector<Polytope>* regions = nullptr) {
  const int n = static_cast<int>(form.pieces.size());
  std::vector<int> canon(n);
  for (int j = 0; j < n; ++j) {
    canon[j] = j;
    for (int q = 0; q < j; ++q)
      if (form.pieces[q] == form.pieces[j]) {
        canon[j] = canon[q];
        break;
      }
  }
  std::vector<std::vector<int>> sets;
  for (int i = 0; i < static_cast<int>(form.psi_sets.size()); ++i) {
    const std::vector<int> psi = regions ? minimal_psi(form, *regions, i) : form.psi_sets[i];
    std::vector<int> s;
    for (int j : psi) s.push_back(canon[j]);
    std::sort(s.begin(), s.end());
    s.erase(std::unique(s.begin(), s.end()), s.end());
    if (std::find(sets.begin(), sets.end(), s) == sets.end()) sets.push_back(std::move(s));
  }
  std::vector<std::vector<int>> kept;
  for (std::size_t a = 0; a < sets.size(); ++a) {
    bool superset = false;
    for (std::size_t b = 0; b < sets.size() && !superset; ++b)
      if (a != b && sets[b].size() < sets[a].size() &&
          std::includes(sets[a].begin(), sets[a].end(), sets[b].begin(), sets[b].end()))
        superset = true;
    if (!superset) kept.push_back(sets[a]);
  }
  return kept;
}

namespace detail {

/// A nonnegative quantity expressed as a linear combination of the current
/// layer's outputs.
using Value = Eigen::VectorXd;

struct Lane {
  int component = 0;
  std::vector<Value> values;
};

enum class Reduce { min, max };

/// Adds hidden layers until every lane holds one value. Each layer takes one
/// tree level: pairs become a min/max gadget (two neurons), a leftover value
/// passes through one identity neuron.
inline void reduce_lanes(std::vector<Lane>& lanes, Reduce op, std::vector<DenseLayer>& layers,
                         int& width) {
  auto unfinished = [&] {
    return std::any_of(lanes.begin(), lanes.end(), [](const Lane& l) { return l.values.size() > 1; });
  };
  while (unfinished()) {
    std::vector<Eigen::VectorXd> rows;
    std::vector<std::vector<std::pair<int, double>>> next;  // per lane value: (row, sign) terms
    for (Lane& lane : lanes) {
      std::vector<std::vector<std::pair<int, double>>> out;
      const auto& v = lane.values;
      std::size_t k = 0;
      for (; k + 1 < v.size(); k += 2) {
        const Value& a = v[k];
        const Value& b = v[k + 1];
        const int r0 = static_cast<int>(rows.size());
        if (op == Reduce::min) {
          rows.push_back(b);      // relu(b)
          rows.push_back(b - a);  // relu(b - a)
          out.push_back({{r0, 1.0}, {r0 + 1, -1.0}});
        } else {
          rows.push_back(a);      // relu(a)
          rows.push_back(b - a);  // relu(b - a)
          out.push_back({{r0, 1.0}, {r0 + 1, 1.0}});
        }
      }
      if (k < v.size()) {
        rows.push_back(v[k]);
        out.push_back({{static_cast<int>(rows.size()) - 1, 1.0}});
      }
      next.insert(next.end(), out.begin(), out.end());
      lane.values.resize(out.size());
    }
    DenseLayer L;
    L.kind = LayerKind::relu;
    L.W.resize(static_cast<Eigen::Index>(rows.size()), width);
    for (std::size_t r = 0; r < rows.size(); ++r) L.W.row(r) = rows[r].transpose();
    L.b = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(rows.size()));
    width = static_cast<int>(rows.size());
    layers.push_back(std::move(L));
    std::size_t idx = 0;
    for (Lane& lane : lanes)
      for (auto& val : lane.values) {
        val = Value::Zero(width);
        for (auto [row, sign] : next[idx++]) val(row) += sign;
      }
  }
}

}  // namespace detail

/// Layers stacked on a piece layer whose neuron k * n + i carries region i's
/// piece for component k plus `shift`: per-component min trees over each
/// reduced set, a max tree over the set minima, and an affine output layer
/// that removes the shift.
inline std::vector<DenseLayer> maxmin_layers(const std::vector<MaxMinForm>& forms,
                                             const std::vector<Polytope>& regions, int n,
                                             double shift) {
  const int dy = static_cast<int>(forms.size());
  int width = n * dy;
  std::vector<DenseLayer> layers;
  std::vector<detail::Lane> mins;
  std::vector<int> sets_per_component(dy, 0);
  for (int k = 0; k < dy; ++k) {
    for (const auto& set : reduced_psi_sets(forms[k], &regions)) {
      detail::Lane lane{k, {}};
      for (int j : set) {
        detail::Value v = detail::Value::Zero(width);
        v(k * n + j) = 1.0;
        lane.values.push_back(std::move(v));
      }
      mins.push_back(std::move(lane));
      ++sets_per_component[k];
    }
  }
  detail::reduce_lanes(mins, detail::Reduce::min, layers, width);

  std::vector<detail::Lane> maxes(dy);
  for (int k = 0; k < dy; ++k) maxes[k].component = k;
  for (auto& lane : mins) maxes[lane.component].values.push_back(std::move(lane.values.front()));
  detail::reduce_lanes(maxes, detail::Reduce::max, layers, width);

  DenseLayer out;
  out.kind = LayerKind::linear_output;
  out.W.resize(dy, width);
  for (int k = 0; k < dy; ++k) out.W.row(k) = maxes[k].values.front().transpose();
  out.b = Eigen::VectorXd::Constant(dy, -shift);
  layers.push_back(std::move(out));
  return layers;
}

inline int floor_log2(std::size_t n) {
  int r = 0;
  while (n > 1) {
    n >>= 1;
    ++r;
  }
  return r;
}

/// Throws if a built network exceeds the depth 1 + 4 floor(log2 n) or width
/// n^2 dy limits for n pieces.
inline void check_size_bounds(const std::vector<int>& hidden_widths, std::size_t n, int dy) {
  const int depth_cap = 1 + 4 * floor_log2(n);
  if (static_cast<int>(hidden_widths.size()) > depth_cap)
    throw NumericalError("build: hidden depth " + std::to_string(hidden_widths.size()) +
                         " exceeds " + std::to_string(depth_cap));
  const std::size_t width_cap = n * n * static_cast<std::size_t>(dy);
  for (int w : hidden_widths)
    if (static_cast<std::size_t>(w) > width_cap)
      throw NumericalError("build: hidden width " + std::to_string(w) + " exceeds " +
                           std::to_string(width_cap));
}

/// Fully-connected ReLU network computing the predictor on its domain. The
/// first hidden layer emits relu(w x + b + c) = piece + c for every (region,
/// component); the remaining layers evaluate the max-min form with exact
/// min/max gadgets, and the output layer subtracts c.
inline ReluNetwork build_fc_network(const CpwlPredictor& pred, const BuildConfig& cfg = {}) {
  const double c = resolve_shift(pred, cfg);
  const int n = static_cast<int>(pred.piece_count());
  const int dy = pred.dy();
  const int dx = pred.dx();
  ReluNetwork net;
  DenseLayer first;
  first.kind = LayerKind::relu;
  first.W.resize(n * dy, dx);
  first.b.resize(n * dy);
  for (int k = 0; k < dy; ++k)
    for (int i = 0; i < n; ++i) {
      first.W.row(k * n + i) = pred.pieces_by_region[i].A.row(k);
      first.b(k * n + i) = pred.pieces_by_region[i].b(k) + c;
    }
  net.layers.push_back(std::move(first));
  for (auto& L : maxmin_layers(pred.forms, pred.partition.regions, n, c)) net.layers.push_back(std::move(L));
  net.validate();
  check_size_bounds(net.hidden_widths(), pred.piece_count(), dy);
  return net;
}

// CNN construction

struct CnnStageSpec {
  int conv_patch = 2;
  int conv_stride = 2;
  std::optional<PoolLayer> pool;
};

using CnnArch = std::vector<CnnStageSpec>;

/// The affine map a CNN channel computes when every layer after the first
/// convolution has all-ones filters, zero biases and average pooling:
/// sum_p alpha_p (w . x_p + b) = w . z(x) + b * alpha_sum.
struct StructuredMap {
  int input_length = 0;
  int patch = 1;
  int stride = 1;
  Eigen::VectorXd alpha;  // weight of each first-layer patch position
  double alpha_sum = 0.0;

  Eigen::VectorXd z(const Eigen::VectorXd& x) const {
    Eigen::VectorXd out = Eigen::VectorXd::Zero(patch);
    for (Eigen::Index p = 0; p < alpha.size(); ++p)
      out += alpha(p) * x.segment(p * stride, patch);
    return out;
  }

  /// Row vector a with a . x = w . z(x).
  Eigen::RowVectorXd expand(const Eigen::VectorXd& w) const {
    Eigen::RowVectorXd a = Eigen::RowVectorXd::Zero(input_length);
    for (Eigen::Index p = 0; p < alpha.size(); ++p)
      a.segment(p * stride, patch) += alpha(p) * w.transpose();
    return a;
  }
};

inline StructuredMap structured_map(int input_length, const CnnArch& arch) {
  if (arch.empty()) throw ArgumentError("cnn: at least one convolution stage required");
  StructuredMap m;
  m.input_length = input_length;
  m.patch = arch[0].conv_patch;
  m.stride = arch[0].conv_stride;
  const int p0 = patch_count(input_length, m.patch, m.stride);
  if (p0 < 1)
    throw ArgumentError("cnn: first convolution (patch " + std::to_string(m.patch) + ", stride " +
                        std::to_string(m.stride) + ") does not tile input length " +
                        std::to_string(input_length));
  m.alpha.resize(p0);
  for (int p = 0; p < p0; ++p) {
    Eigen::VectorXd y = Eigen::VectorXd::Zero(p0);
    y(p) = 1.0;
    for (std::size_t s = 0; s < arch.size(); ++s) {
      if (s > 0) {
        const int len = patch_count(static_cast<int>(y.size()), arch[s].conv_patch, arch[s].conv_stride);
        if (len < 1) throw ArgumentError("cnn: stage " + std::to_string(s) + " conv does not tile");
        Eigen::VectorXd z(len);
        for (int q = 0; q < len; ++q) z(q) = y.segment(q * arch[s].conv_stride, arch[s].conv_patch).sum();
        y = std::move(z);
      }
      if (const auto& pool = arch[s].pool) {
        if (pool->kind != PoolKind::average)
          throw UnsupportedError("cnn: the construction supports average pooling only");
        const int len = patch_count(static_cast<int>(y.size()), pool->patch, pool->stride);
        if (len < 1) throw ArgumentError("cnn: stage " + std::to_string(s) + " pool does not tile");
        Eigen::VectorXd z(len);
        for (int q = 0; q < len; ++q) z(q) = y.segment(q * pool->stride, pool->patch).mean();
        y = std::move(z);
      }
    }
    m.alpha(p) = y.sum();
  }
  m.alpha_sum = m.alpha.sum();
  return m;
}

/// First-layer filter and bias per output component for one region.
struct FilterParams {
  Eigen::MatrixXd w;  // dy x patch
  Eigen::VectorXd b;  // dy
};

/// Least-squares fit of the structured map w . z(x) + b alpha_sum to the
/// samples in `indices`.
inline FilterParams fit_structured(const Dataset& data, const std::vector<int>& indices,
                                   const StructuredMap& map) {
  if (indices.empty()) throw ArgumentError("fit_structured: group has no samples");
  const int n = static_cast<int>(indices.size());
  Eigen::MatrixXd phi(n, map.patch + 1), y(n, data.dy());
  for (int r = 0; r < n; ++r) {
    phi.row(r).head(map.patch) = map.z(data[indices[r]].x).transpose();
    phi(r, map.patch) = map.alpha_sum;
    y.row(r) = data[indices[r]].y.transpose();
  }
  const Eigen::MatrixXd theta = least_squares(phi, y);
  return {theta.topRows(map.patch).transpose(), theta.row(map.patch).transpose()};
}

inline AffinePiece structured_piece(const FilterParams& f, const StructuredMap& map) {
  AffinePiece p;
  p.A.resize(f.w.rows(), map.input_length);
  for (Eigen::Index k = 0; k < f.w.rows(); ++k) p.A.row(k) = map.expand(f.w.row(k).transpose());
  p.b = f.b * map.alpha_sum;
  return p;
}

/// Filter parameters reproducing an arbitrary affine piece, if the structured
/// class contains it (always the case for scalar inputs with patch 1).
inline FilterParams filters_for_piece(const AffinePiece& piece, const StructuredMap& map) {
  Eigen::MatrixXd basis(map.input_length, map.patch);
  for (int e = 0; e < map.patch; ++e) basis.col(e) = map.expand(Eigen::VectorXd::Unit(map.patch, e)).transpose();
  FilterParams f;
  f.w = least_squares(basis, piece.A.transpose()).transpose();
  f.b = piece.b / map.alpha_sum;
  if ((basis * f.w.transpose() - piece.A.transpose()).cwiseAbs().maxCoeff() > 1e-12 * (1.0 + piece.A.cwiseAbs().maxCoeff()))
    throw UnsupportedError("cnn: auxiliary piece is not expressible by a first-layer filter");
  return f;
}

struct CnnBuild {
  CnnNetwork net;
  CpwlPredictor predictor;
  std::vector<GroupFit> fits;
  std::vector<FilterParams> filters;  // per predictor region
  StructuredMap map;
  double c = 0.0;             // added to every first-layer neuron
  double output_shift = 0.0;  // c * alpha_sum, removed at the output
};

/// CNN whose first convolution holds one filter per (region, component), fitted
/// by least squares on the structured map; later convolutions and the first
/// dense layer are all-ones with zero biases, and the dense layers above it
/// evaluate the max-min form exactly as in the fully-connected build.
inline CnnBuild build_cnn_network(const Dataset& data, const Partition& part, const CnnArch& arch,
                                  const BuildConfig& cfg = {}) {
  for (const auto& st : arch)
    if (st.pool && st.pool->kind != PoolKind::average)
      throw UnsupportedError("cnn: max pooling is supported for evaluation only, not construction");
  CnnBuild out;
  out.map = structured_map(data.dx(), arch);
  const StructuredMap& map = out.map;
  if (!(map.alpha_sum > 0.0)) throw ArgumentError("cnn: degenerate architecture");

  for (int r = 0; r < static_cast<int>(part.regions.size()); ++r) {
    const auto idx = part.members(r);
    if (idx.empty()) continue;
    GroupFit g;
    g.region = r;
    g.piece = structured_piece(fit_structured(data, idx, map), map);
    g.group_risk = group_loss(data, idx, g.piece, LossFn::mse());
    g.n_samples = static_cast<int>(idx.size());
    out.fits.push_back(std::move(g));
  }
  out.predictor = assemble(data, part, out.fits);
  const CpwlPredictor& pred = out.predictor;
  const int n = static_cast<int>(pred.piece_count());
  const int dy = data.dy();
  for (const auto& piece : pred.pieces_by_region) out.filters.push_back(filters_for_piece(piece, map));

  // Every first-layer neuron, for every patch of every domain vertex and sample.
  double worst = 0.0;
  auto scan = [&](const Eigen::VectorXd& x) {
    for (const auto& f : out.filters)
      for (Eigen::Index p = 0; p < map.alpha.size(); ++p)
        for (Eigen::Index k = 0; k < f.w.rows(); ++k)
          worst = std::max(worst, std::abs(f.w.row(k).dot(x.segment(p * map.stride, map.patch)) + f.b(k)));
  };
  for (const auto& v : pred.partition.domain.vertices) scan(v);
  for (const auto& s : data.samples()) scan(s.x);
  if (cfg.c == 0.0) {
    out.c = worst + 1.0;
  } else if (cfg.c > worst) {
    out.c = cfg.c;
  } else {
    throw ConfigError("cnn build: shift c = " + format_real(cfg.c) +
                      " does not keep first-layer neurons positive; use c > " + format_real(worst));
  }
  out.output_shift = out.c * map.alpha_sum;

  CnnNetwork& net = out.net;
  net.input_length = data.dx();
  const int channels = n * dy;
  for (std::size_t s = 0; s < arch.size(); ++s) {
    ConvStage st;
    st.conv.patch = arch[s].conv_patch;
    st.conv.stride = arch[s].conv_stride;
    if (s == 0) {
      st.conv.filters.resize(channels, map.patch);
      st.conv.biases.resize(channels);
      for (int k = 0; k < dy; ++k)
        for (int j = 0; j < n; ++j) {
          st.conv.filters.row(k * n + j) = out.filters[j].w.row(k);
          st.conv.biases(k * n + j) = out.filters[j].b(k) + out.c;
        }
    } else {
      st.conv.depthwise = true;
      st.conv.filters = Eigen::MatrixXd::Ones(channels, st.conv.patch);
      st.conv.biases = Eigen::VectorXd::Zero(channels);
    }
    st.pool = arch[s].pool;
    net.stages.push_back(std::move(st));
  }
  const auto shapes = net.shapes();
  const int len = shapes.back().second;
  DenseLayer sum;
  sum.kind = LayerKind::relu;
  sum.W = Eigen::MatrixXd::Zero(channels, channels * len);
  for (int t = 0; t < channels; ++t) sum.W.row(t).segment(t * len, len).setOnes();
  sum.b = Eigen::VectorXd::Zero(channels);
  net.fc_layers.push_back(std::move(sum));
  for (auto& L : maxmin_layers(pred.forms, pred.partition.regions, n, out.output_shift)) net.fc_layers.push_back(std::move(L));
  net.validate();
  std::vector<int> widths;
  for (std::size_t l = 0; l + 1 < net.fc_layers.size(); ++l) widths.push_back(net.fc_layers[l].out());
  check_size_bounds(widths, pred.piece_count(), dy);
  return out;
}

}  // namespace cpwlnet
