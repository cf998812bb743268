#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "cpwlnet/data_model.hpp"
#include "cpwlnet/error.hpp"
#include "cpwlnet/network.hpp"
#include "cpwlnet/numeric.hpp"

namespace cpwlnet {

/// One 0/1 vector per hidden layer (convolution feature maps included); 1 means
/// the pre-activation was strictly positive.
using ActivationPattern = std::vector<std::vector<std::uint8_t>>;

struct ForwardTrace {
  Eigen::VectorXd output;
  ActivationPattern pattern;
  double margin = std::numeric_limits<double>::infinity();  // min |pre-activation|
  std::vector<double> layer_max_abs;  // max |activation| entering each weight layer
};

namespace detail {

inline Eigen::VectorXd relu_record(const Eigen::VectorXd& z, ForwardTrace& tr) {
  std::vector<std::uint8_t> bits(z.size());
  Eigen::VectorXd y(z.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    bits[i] = z(i) > 0.0 ? 1 : 0;
    y(i) = z(i) > 0.0 ? z(i) : 0.0;
    tr.margin = std::min(tr.margin, std::abs(z(i)));
  }
  tr.pattern.push_back(std::move(bits));
  return y;
}

inline double max_abs(const Eigen::VectorXd& v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; }

inline Eigen::VectorXd run_dense(const std::vector<DenseLayer>& layers, Eigen::VectorXd y,
                                 ForwardTrace& tr) {
  for (const DenseLayer& L : layers) {
    tr.layer_max_abs.push_back(max_abs(y));
    Eigen::VectorXd z = L.W * y + L.b;
    y = L.kind == LayerKind::relu ? relu_record(z, tr) : std::move(z);
  }
  return y;
}

}  // namespace detail

inline ForwardTrace forward_fc(const ReluNetwork& net, const Eigen::VectorXd& x) {
  if (net.layers.empty()) throw ArgumentError("forward_fc: empty network");
  if (x.size() != net.input_width())
    throw ShapeError("forward_fc: input width " + std::to_string(x.size()) + ", network expects " +
                     std::to_string(net.input_width()));
  ForwardTrace tr;
  tr.output = detail::run_dense(net.layers, x, tr);
  return tr;
}

/// Per-channel pooling of a channel-major feature map.
inline Eigen::VectorXd pool_1d(const Eigen::VectorXd& in, int channels, const PoolLayer& pool) {
  const int len = static_cast<int>(in.size()) / channels;
  const int out_len = patch_count(len, pool.patch, pool.stride);
  if (out_len < 1) throw ShapeError("pool: patches do not tile the feature map");
  Eigen::VectorXd out(channels * out_len);
  for (int c = 0; c < channels; ++c)
    for (int q = 0; q < out_len; ++q) {
      const auto seg = in.segment(c * len + q * pool.stride, pool.patch);
      out(c * out_len + q) = pool.kind == PoolKind::average ? seg.mean() : seg.maxCoeff();
    }
  return out;
}

inline ForwardTrace forward_cnn(const CnnNetwork& net, const Eigen::VectorXd& x) {
  if (x.size() != net.input_length)
    throw ShapeError("forward_cnn: input length " + std::to_string(x.size()) +
                     ", network expects " + std::to_string(net.input_length));
  ForwardTrace tr;
  Eigen::VectorXd y = x;
  int channels = 1;
  for (const ConvStage& st : net.stages) {
    const ConvLayer& c = st.conv;
    const int len = static_cast<int>(y.size()) / channels;
    const int patches = patch_count(len, c.patch, c.stride);
    if (patches < 1) throw ShapeError("forward_cnn: conv patches do not tile the input");
    if (c.depthwise ? c.filter_count() != channels : channels != 1)
      throw ShapeError("forward_cnn: channel mismatch");
    tr.layer_max_abs.push_back(detail::max_abs(y));
    Eigen::VectorXd z(c.filter_count() * patches);
    for (int t = 0; t < c.filter_count(); ++t) {
      const int src = c.depthwise ? t : 0;
      for (int p = 0; p < patches; ++p)
        z(t * patches + p) =
            c.filters.row(t).dot(y.segment(src * len + p * c.stride, c.patch)) + c.biases(t);
    }
    y = detail::relu_record(z, tr);
    channels = c.filter_count();
    if (st.pool) y = pool_1d(y, channels, *st.pool);
  }
  if (net.fc_layers.empty() || y.size() != net.fc_layers.front().in())
    throw ShapeError("forward_cnn: feature width does not match the first dense layer");
  tr.output = detail::run_dense(net.fc_layers, std::move(y), tr);
  return tr;
}

inline ForwardTrace forward(const ReluNetwork& net, const Eigen::VectorXd& x) {
  return forward_fc(net, x);
}
inline ForwardTrace forward(const CnnNetwork& net, const Eigen::VectorXd& x) {
  return forward_cnn(net, x);
}

struct NetworkEvaluation {
  double risk = 0.0;
  std::vector<double> losses;
  std::vector<ForwardTrace> traces;

  double min_margin() const {
    double m = std::numeric_limits<double>::infinity();
    for (const auto& t : traces) m = std::min(m, t.margin);
    return m;
  }

  /// Lowest-index sample attaining the minimum margin.
  int min_margin_sample() const {
    int best = 0;
    for (std::size_t i = 1; i < traces.size(); ++i)
      if (traces[i].margin < traces[best].margin) best = static_cast<int>(i);
    return best;
  }

  std::vector<Eigen::VectorXd> outputs() const {
    std::vector<Eigen::VectorXd> out;
    for (const auto& t : traces) out.push_back(t.output);
    return out;
  }
};

/// Empirical risk (1/N) sum loss(net(x_i), y_i) together with every sample's
/// trace. Samples are evaluated in parallel; the sum is pairwise over sample
/// order, so the result is independent of the worker count.
template <typename Net>
NetworkEvaluation network_risk(const Net& net, const Dataset& data, const LossFn& loss) {
  if (net.output_width() != data.dy())
    throw ShapeError("network_risk: network emits " + std::to_string(net.output_width()) +
                     " outputs, dataset has dy = " + std::to_string(data.dy()));
  NetworkEvaluation ev;
  ev.losses.resize(data.size());
  ev.traces.resize(data.size());
  parallel_for(data.size(), [&](std::size_t i) {
    ev.traces[i] = forward(net, data[i].x);
    ev.losses[i] = loss(ev.traces[i].output, data[i].y);
  });
  ev.risk = pairwise_sum(ev.losses) / static_cast<double>(data.size());
  return ev;
}

}  // namespace cpwlnet
