#pragma once

#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "cpwlnet/error.hpp"
#include "cpwlnet/partition.hpp"
#include "json.hpp"

namespace cpwlnet {

enum class LayerKind { relu, linear_output };

inline const char* to_string(LayerKind k) { return k == LayerKind::relu ? "relu" : "linear_output"; }

struct DenseLayer {
  Eigen::MatrixXd W;  // out x in
  Eigen::VectorXd b;
  LayerKind kind = LayerKind::relu;

  int in() const noexcept { return static_cast<int>(W.cols()); }
  int out() const noexcept { return static_cast<int>(W.rows()); }
};

/// Fully-connected ReLU network: hidden layers apply max(0, W y + b), the last
/// layer is affine.
struct ReluNetwork {
  std::vector<DenseLayer> layers;

  int input_width() const { return layers.front().in(); }
  int output_width() const { return layers.back().out(); }
  int hidden_depth() const { return static_cast<int>(layers.size()) - 1; }

  std::vector<int> hidden_widths() const {
    std::vector<int> w;
    for (std::size_t l = 0; l + 1 < layers.size(); ++l) w.push_back(layers[l].out());
    return w;
  }

  void validate() const {
    if (layers.empty()) throw ArgumentError("network: no layers");
    for (std::size_t l = 0; l < layers.size(); ++l) {
      const DenseLayer& L = layers[l];
      if (L.b.size() != L.out()) throw ArgumentError("network: bias width mismatch");
      if (l > 0 && L.in() != layers[l - 1].out())
        throw ArgumentError("network: layer " + std::to_string(l) + " input width mismatch");
      const bool last = l + 1 == layers.size();
      if ((L.kind == LayerKind::linear_output) != last)
        throw ArgumentError("network: only the final layer is linear");
    }
  }
};

/// Multiplies hidden layer `l` (weights and bias) by a > 0 and the weights of
/// layer l + 1 by 1 / a. ReLU is positively homogeneous, so the function is
/// unchanged.
inline ReluNetwork rescale_layer(ReluNetwork net, int l, double a) {
  if (!(a > 0.0)) throw ArgumentError("rescale: factor must be positive");
  if (l < 0 || l + 1 >= static_cast<int>(net.layers.size()))
    throw ArgumentError("rescale: layer " + std::to_string(l) + " is not a hidden layer");
  net.layers[l].W *= a;
  net.layers[l].b *= a;
  net.layers[l + 1].W /= a;
  return net;
}

enum class PoolKind { average, max };

inline const char* to_string(PoolKind k) { return k == PoolKind::average ? "average" : "max"; }

/// Convolution over 1-D feature maps. A layer reading a single channel applies
/// every filter to it; a depthwise layer applies filter t to channel t only.
struct ConvLayer {
  Eigen::MatrixXd filters;  // T x patch
  Eigen::VectorXd biases;   // one per filter
  int patch = 1;
  int stride = 1;
  bool depthwise = false;

  int filter_count() const noexcept { return static_cast<int>(filters.rows()); }
};

struct PoolLayer {
  PoolKind kind = PoolKind::average;
  int patch = 1;
  int stride = 1;
};

struct ConvStage {
  ConvLayer conv;
  std::optional<PoolLayer> pool;
};

inline int patch_count(int length, int patch, int stride) {
  if (patch < 1 || stride < 1 || length < patch || (length - patch) % stride != 0) return -1;
  return (length - patch) / stride + 1;
}

/// Convolution stages followed by a fully-connected stack. Feature maps are
/// flattened channel-major before the first fully-connected layer.
struct CnnNetwork {
  int input_length = 0;
  std::vector<ConvStage> stages;
  std::vector<DenseLayer> fc_layers;

  /// Index (1-based, counting weight layers) of the first fully-connected layer.
  int l_fc() const { return static_cast<int>(stages.size()) + 1; }
  int output_width() const { return fc_layers.back().out(); }

  /// (channels, length) after every stage, validating the patch chain.
  std::vector<std::pair<int, int>> shapes() const {
    std::vector<std::pair<int, int>> out;
    int channels = 1, length = input_length;
    for (std::size_t s = 0; s < stages.size(); ++s) {
      const ConvLayer& c = stages[s].conv;
      if (c.filters.cols() != c.patch || c.biases.size() != c.filter_count())
        throw ArgumentError("cnn: stage " + std::to_string(s) + " filter shape mismatch");
      if (c.depthwise ? c.filter_count() != channels : channels != 1)
        throw ArgumentError("cnn: stage " + std::to_string(s) + " channel mismatch");
      length = patch_count(length, c.patch, c.stride);
      if (length < 1)
        throw ArgumentError("cnn: stage " + std::to_string(s) + " conv patches do not tile");
      channels = c.filter_count();
      if (stages[s].pool) {
        length = patch_count(length, stages[s].pool->patch, stages[s].pool->stride);
        if (length < 1)
          throw ArgumentError("cnn: stage " + std::to_string(s) + " pool patches do not tile");
      }
      out.emplace_back(channels, length);
    }
    return out;
  }

  void validate() const {
    if (input_length < 1) throw ArgumentError("cnn: input length must be positive");
    const auto sh = shapes();
    const int flat = sh.empty() ? input_length : sh.back().first * sh.back().second;
    ReluNetwork fc{fc_layers};
    fc.validate();
    if (fc.input_width() != flat) throw ArgumentError("cnn: first fully-connected width mismatch");
  }
};

// JSON

inline nlohmann::ordered_json dense_to_json(const DenseLayer& L) {
  nlohmann::ordered_json j;
  j["kind"] = to_string(L.kind);
  j["rows"] = L.out();
  j["cols"] = L.in();
  auto w = nlohmann::ordered_json::array();
  for (int r = 0; r < L.out(); ++r)
    for (int c = 0; c < L.in(); ++c) w.push_back(L.W(r, c));
  j["weights"] = std::move(w);
  j["biases"] = vector_to_json(L.b);
  return j;
}

inline Eigen::MatrixXd matrix_from_json(const nlohmann::json& w, int rows, int cols) {
  if (rows < 0 || cols < 0 || !w.is_array() ||
      w.size() != static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols))
    throw ParseError("weights: expected " + std::to_string(rows) + "x" + std::to_string(cols) +
                     " row-major values");
  Eigen::MatrixXd m(rows, cols);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) m(r, c) = w[static_cast<std::size_t>(r) * cols + c].get<double>();
  return m;
}

inline DenseLayer dense_from_json(const nlohmann::json& j) {
  DenseLayer L;
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "relu")
    L.kind = LayerKind::relu;
  else if (kind == "linear_output")
    L.kind = LayerKind::linear_output;
  else
    throw ParseError("unknown layer kind '" + kind + "'");
  L.W = matrix_from_json(j.at("weights"), j.at("rows").get<int>(), j.at("cols").get<int>());
  L.b = vector_from_json(j.at("biases"));
  return L;
}

inline nlohmann::ordered_json to_json(const ReluNetwork& net) {
  nlohmann::ordered_json j;
  j["type"] = "fc";
  auto layers = nlohmann::ordered_json::array();
  for (const auto& L : net.layers) layers.push_back(dense_to_json(L));
  j["layers"] = std::move(layers);
  return j;
}

inline ReluNetwork relu_network_from_json(const nlohmann::json& j) {
  ReluNetwork net;
  for (const auto& L : j.at("layers")) net.layers.push_back(dense_from_json(L));
  net.validate();
  return net;
}

inline nlohmann::ordered_json to_json(const CnnNetwork& net) {
  nlohmann::ordered_json j;
  j["type"] = "cnn";
  j["input_length"] = net.input_length;
  auto stages = nlohmann::ordered_json::array();
  for (const auto& s : net.stages) {
    nlohmann::ordered_json st;
    const ConvLayer& c = s.conv;
    nlohmann::ordered_json conv;
    conv["rows"] = c.filter_count();
    conv["cols"] = c.patch;
    auto w = nlohmann::ordered_json::array();
    for (int r = 0; r < c.filter_count(); ++r)
      for (int k = 0; k < c.patch; ++k) w.push_back(c.filters(r, k));
    conv["weights"] = std::move(w);
    conv["biases"] = vector_to_json(c.biases);
    conv["patch"] = c.patch;
    conv["stride"] = c.stride;
    conv["depthwise"] = c.depthwise;
    st["conv"] = std::move(conv);
    if (s.pool)
      st["pool"] = {{"kind", to_string(s.pool->kind)},
                    {"patch", s.pool->patch},
                    {"stride", s.pool->stride}};
    else
      st["pool"] = nullptr;
    stages.push_back(std::move(st));
  }
  j["conv_stages"] = std::move(stages);
  j["l_fc"] = net.l_fc();
  auto fc = nlohmann::ordered_json::array();
  for (const auto& L : net.fc_layers) fc.push_back(dense_to_json(L));
  j["fc_layers"] = std::move(fc);
  return j;
}

inline CnnNetwork cnn_network_from_json(const nlohmann::json& j) {
  CnnNetwork net;
  net.input_length = j.at("input_length").get<int>();
  for (const auto& st : j.at("conv_stages")) {
    ConvStage s;
    const auto& c = st.at("conv");
    s.conv.patch = c.at("patch").get<int>();
    s.conv.stride = c.at("stride").get<int>();
    s.conv.depthwise = c.value("depthwise", false);
    s.conv.filters = matrix_from_json(c.at("weights"), c.at("rows").get<int>(), c.at("cols").get<int>());
    s.conv.biases = vector_from_json(c.at("biases"));
    if (st.contains("pool") && !st.at("pool").is_null()) {
      const auto& p = st.at("pool");
      const std::string kind = p.at("kind").get<std::string>();
      PoolLayer pool;
      if (kind == "average" || kind == "avg")
        pool.kind = PoolKind::average;
      else if (kind == "max")
        pool.kind = PoolKind::max;
      else
        throw ParseError("unknown pool kind '" + kind + "'");
      pool.patch = p.at("patch").get<int>();
      pool.stride = p.at("stride").get<int>();
      s.pool = pool;
    }
    net.stages.push_back(std::move(s));
  }
  for (const auto& L : j.at("fc_layers")) net.fc_layers.push_back(dense_from_json(L));
  net.validate();
  return net;
}

}  // namespace cpwlnet
