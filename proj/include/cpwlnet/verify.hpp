#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "cpwlnet/cpwl.hpp"
#include "cpwlnet/data_model.hpp"
#include "cpwlnet/error.hpp"
#include "cpwlnet/fitting.hpp"
#include "cpwlnet/netbuild.hpp"
#include "cpwlnet/network.hpp"
#include "cpwlnet/numeric.hpp"
#include "cpwlnet/partition.hpp"
#include "cpwlnet/pipeline.hpp"
#include "cpwlnet/runtime.hpp"
#include "json.hpp"

namespace cpwlnet {

inline constexpr double kProbeTol = 1e-12;

// ---------------------------------------------------------------------------
// Weight-layer views shared by the fully-connected and convolutional networks.

/// Weight layer `l` (0-based; convolutions first for CNNs) as a matrix/bias pair.
struct WeightLayerRef {
  Eigen::MatrixXd* W;
  Eigen::VectorXd* b;
  bool hidden;  // followed by a ReLU
};

inline std::vector<WeightLayerRef> weight_layers(ReluNetwork& net) {
  std::vector<WeightLayerRef> out;
  for (auto& L : net.layers) out.push_back({&L.W, &L.b, L.kind == LayerKind::relu});
  return out;
}

inline std::vector<WeightLayerRef> weight_layers(CnnNetwork& net) {
  std::vector<WeightLayerRef> out;
  for (auto& st : net.stages) out.push_back({&st.conv.filters, &st.conv.biases, true});
  for (auto& L : net.fc_layers) out.push_back({&L.W, &L.b, L.kind == LayerKind::relu});
  return out;
}

template <typename Net>
std::size_t weight_layer_count(const Net& net) {
  return weight_layers(const_cast<Net&>(net)).size();
}

struct EpsilonBound {
  double epsilon = 0.0;
  double min_margin = 0.0;
  int margin_sample = -1;
  double sensitivity = 0.0;  // max over hidden layers of the per-unit-epsilon shift bound
};

/// Radius eps such that no entrywise perturbation of every weight and bias by
/// at most eps can flip any sample's activation pattern.
///
/// With e_l the max-norm change of the activations entering weight layer l,
/// H_l their largest magnitude over samples and d_l the fan-in, a
/// pre-activation moves by at most |W_l|_inf e_l + eps (d_l + 1)(max(H_l, 1) + e_l).
/// Unrolling gives e_{l+1} <= eps S_{l+1} with
///   S_{l+1} = |W_l|_inf S_l + (d_l + 1)(max(H_l, 1) + [l > 0]),
/// valid while eps S_l <= 1. The result is half of
/// min(margin / max S, 1 / max S over layers feeding another hidden layer).
template <typename Net>
EpsilonBound derive_epsilon(const Net& net, const Dataset& data) {
  const NetworkEvaluation ev = network_risk(net, data, LossFn::mse());
  EpsilonBound out;
  out.min_margin = ev.min_margin();
  out.margin_sample = ev.min_margin_sample();
  if (!(out.min_margin > 0.0))
    throw MarginError("derive_epsilon: sample " + std::to_string(out.margin_sample) +
                      " has a zero-margin neuron (it sits on an activation boundary)");

  const auto layers = weight_layers(const_cast<Net&>(net));
  std::vector<double> h(layers.size(), 0.0);
  for (const auto& tr : ev.traces)
    for (std::size_t l = 0; l < layers.size(); ++l) h[l] = std::max(h[l], tr.layer_max_abs[l]);

  double s = 0.0, worst_hidden = 0.0, worst_feeding = 0.0;
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const Eigen::MatrixXd& W = *layers[l].W;
    const double row_norm = W.rows() ? W.cwiseAbs().rowwise().sum().maxCoeff() : 0.0;
    const double fan_in = static_cast<double>(W.cols());
    s = row_norm * s + (fan_in + 1.0) * (std::max(h[l], 1.0) + (l > 0 ? 1.0 : 0.0));
    if (!layers[l].hidden) break;
    worst_hidden = std::max(worst_hidden, s);
    if (l + 1 < layers.size() && layers[l + 1].hidden) worst_feeding = std::max(worst_feeding, s);
  }
  out.sensitivity = worst_hidden;
  if (worst_hidden == 0.0) {
    out.epsilon = 0.5;
    return out;
  }
  double eps = out.min_margin / worst_hidden;
  if (worst_feeding > 0.0) eps = std::min(eps, 1.0 / worst_feeding);
  out.epsilon = 0.5 * eps;
  return out;
}

// ---------------------------------------------------------------------------
// Perturbation probe

struct ProbeConfig {
  int trials = 1000;
  double epsilon = 0.0;
  std::uint64_t seed = 0;
  std::vector<double> scales{1.0, 0.5, 0.25};
  std::vector<int> layers;  // weight layers to perturb; empty = all
};

struct ScaleOutcome {
  double scale = 1.0;
  double min_delta = std::numeric_limits<double>::infinity();
  double max_delta = -std::numeric_limits<double>::infinity();
  int pattern_change_trials = 0;
};

struct ProbeOutcome {
  double base_risk = 0.0;
  double epsilon = 0.0;
  int trials = 0;  // per scale
  double min_delta = std::numeric_limits<double>::infinity();
  int pattern_change_trials = 0;
  long long pattern_flips = 0;  // (trial, sample) pairs whose pattern changed
  std::vector<ScaleOutcome> by_scale;
  std::vector<int> layers;
  bool certified = false;
  /// Every trial kept the patterns but some lowered the risk: the fitted
  /// pieces are not locally optimal for this loss (as opposed to the
  /// construction breaking, which shows up as pattern changes).
  bool descent_with_fixed_patterns = false;
};

namespace detail {

inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
  std::uint64_t z = seed ^ (a * 0x9E3779B97F4A7C15ull) ^ (b * 0xBF58476D1CE4E5B9ull);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

template <typename Net>
std::vector<ForwardTrace> eval_sequential(const Net& net, const Dataset& data) {
  std::vector<ForwardTrace> out(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) out[i] = forward(net, data[i].x);
  return out;
}

}  // namespace detail

/// Copy of `net` with every entry of the chosen weight layers shifted by an
/// independent uniform draw from [-amplitude, amplitude].
template <typename Net>
Net perturb(const Net& net, const std::vector<int>& layers, double amplitude, std::mt19937_64& rng) {
  Net out = net;
  auto refs = weight_layers(out);
  std::uniform_real_distribution<double> u(-amplitude, amplitude);
  for (std::size_t l = 0; l < refs.size(); ++l) {
    if (!layers.empty() && std::find(layers.begin(), layers.end(), static_cast<int>(l)) == layers.end())
      continue;
    for (Eigen::Index i = 0; i < refs[l].W->size(); ++i) refs[l].W->data()[i] += u(rng);
    for (Eigen::Index i = 0; i < refs[l].b->size(); ++i) (*refs[l].b)(i) += u(rng);
  }
  return out;
}

/// Random entrywise perturbations of size at most eps * scale. Certifies when
/// no trial changes any activation pattern and no trial lowers the risk by
/// more than 1e-12.
template <typename Net>
ProbeOutcome probe_local_min(const Net& net, const Dataset& data, const LossFn& loss,
                             const ProbeConfig& cfg) {
  if (cfg.trials < 1) throw ArgumentError("probe: trials >= 1 required");
  if (!(cfg.epsilon > 0.0)) throw ArgumentError("probe: epsilon > 0 required");
  const std::size_t nl = weight_layer_count(net);
  for (int l : cfg.layers)
    if (l < 0 || static_cast<std::size_t>(l) >= nl)
      throw ArgumentError("probe: no weight layer " + std::to_string(l));

  const NetworkEvaluation base = network_risk(net, data, loss);
  ProbeOutcome out;
  out.base_risk = base.risk;
  out.epsilon = cfg.epsilon;
  out.trials = cfg.trials;
  out.layers = cfg.layers;

  struct Trial {
    double delta = 0.0;
    int flips = 0;
  };
  for (std::size_t si = 0; si < cfg.scales.size(); ++si) {
    const double scale = cfg.scales[si];
    if (!(scale > 0.0 && scale <= 1.0)) throw ArgumentError("probe: scales must lie in (0, 1]");
    std::vector<Trial> results(cfg.trials);
    parallel_for(static_cast<std::size_t>(cfg.trials), [&](std::size_t t) {
      std::mt19937_64 rng(detail::mix_seed(cfg.seed, si, t));
      const Net moved = perturb(net, cfg.layers, cfg.epsilon * scale, rng);
      const auto traces = detail::eval_sequential(moved, data);
      std::vector<double> losses(data.size());
      int flips = 0;
      for (std::size_t i = 0; i < data.size(); ++i) {
        losses[i] = loss(traces[i].output, data[i].y);
        if (traces[i].pattern != base.traces[i].pattern) ++flips;
      }
      const double r = pairwise_sum(losses) / static_cast<double>(data.size());
      results[t] = {r - base.risk, flips};
    });
    ScaleOutcome so;
    so.scale = scale;
    for (const Trial& t : results) {
      so.min_delta = std::min(so.min_delta, t.delta);
      so.max_delta = std::max(so.max_delta, t.delta);
      if (t.flips > 0) ++so.pattern_change_trials;
      out.pattern_flips += t.flips;
    }
    out.min_delta = std::min(out.min_delta, so.min_delta);
    out.pattern_change_trials += so.pattern_change_trials;
    out.by_scale.push_back(so);
  }
  out.certified = out.pattern_change_trials == 0 && out.min_delta >= -kProbeTol;
  out.descent_with_fixed_patterns = out.pattern_change_trials == 0 && out.min_delta < -kProbeTol;
  return out;
}

/// True iff all samples of each region share one activation pattern.
template <typename Net>
bool group_patterns_constant(const Net& net, const Dataset& data, const std::vector<int>& assignment) {
  const auto traces = detail::eval_sequential(net, data);
  std::vector<int> first(*std::max_element(assignment.begin(), assignment.end()) + 1, -1);
  for (std::size_t i = 0; i < data.size(); ++i) {
    int& f = first[assignment[i]];
    if (f < 0)
      f = static_cast<int>(i);
    else if (traces[i].pattern != traces[f].pattern)
      return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// Spuriousness by refinement

inline constexpr double kZeroLoss = 1e-20;

struct SubgroupRefit {
  int region = -1;      // region index in the refined partition
  int n_samples = 0;
  double parent_risk = 0.0;  // parent piece's loss on this subgroup
  double refit_risk = 0.0;
  bool isolated = false;  // holds only the isolated sample
};

struct NetworkSummary {
  double risk = 0.0;
  std::size_t pieces = 0;
  std::vector<int> hidden_widths;
  double shift = 0.0;
  EpsilonBound epsilon;
  std::optional<ProbeOutcome> probe;
  bool patterns_constant_per_group = false;
};

struct CertificationReport {
  std::string loss;
  NetworkSummary base;
  std::vector<double> group_risks;  // per fitted group, un-normalized

  bool refined = false;
  int refined_group_region = -1;
  int isolated_sample = -1;
  double isolated_sample_loss = 0.0;
  std::vector<SubgroupRefit> subgroups;
  NetworkSummary refinement;
  bool refined_certified = false;
  std::string refined_note;  // why the refined network could not be probed
  bool strict_decrease = false;

  bool is_local_min_certified = false;
  bool is_spurious_demonstrated = false;
  bool is_global = false;
  std::string verdict;
  std::string note;
};

namespace detail {

template <typename Net>
NetworkSummary summarize(const Net& net, const Dataset& data, const LossFn& loss,
                         const std::vector<int>& assignment, std::size_t pieces, double shift,
                         const ProbeConfig& probe) {
  NetworkSummary s;
  s.risk = network_risk(net, data, loss).risk;
  s.pieces = pieces;
  if constexpr (requires { net.hidden_widths(); }) s.hidden_widths = net.hidden_widths();
  s.shift = shift;
  s.patterns_constant_per_group = group_patterns_constant(net, data, assignment);
  s.epsilon = derive_epsilon(net, data);
  ProbeConfig cfg = probe;
  cfg.epsilon = s.epsilon.epsilon;
  s.probe = probe_local_min(net, data, loss, cfg);
  return s;
}

}  // namespace detail

/// Certifies the pipeline's network as a local minimum, then refines the group
/// with the largest loss by isolating its worst sample, refits, rebuilds and
/// checks that the risk drops strictly. A zero margin on the base network
/// propagates as MarginError; on the refined network it is recorded.
inline CertificationReport demonstrate_spurious(const Pipeline& base, const Dataset& data,
                                                const LossFn& loss, const ProbeConfig& probe,
                                                const BuildConfig& build = {}) {
  CertificationReport rep;
  rep.loss = loss.name;
  rep.base = detail::summarize(base.net, data, loss, base.predictor.partition.assignment,
                               base.predictor.piece_count(), base.shift, probe);
  rep.is_local_min_certified = rep.base.probe->certified && rep.base.patterns_constant_per_group;

  // Worst group, then worst sample in it; ties go to the lowest index.
  int k = -1;
  double worst_group = -1.0;
  for (const auto& f : base.fits) {
    rep.group_risks.push_back(f.group_risk);
    if (f.group_risk > worst_group) {
      worst_group = f.group_risk;
      k = f.region;
    }
  }
  const GroupFit& parent = *std::find_if(base.fits.begin(), base.fits.end(),
                                         [&](const GroupFit& f) { return f.region == k; });
  int n = -1;
  double worst_loss = 0.0;
  for (int i : base.partition.members(k)) {
    const double l = loss(parent.piece(data[i].x), data[i].y);
    if (n < 0 || l > worst_loss) {
      worst_loss = l;
      n = i;
    }
  }
  if (!(worst_loss > kZeroLoss)) {
    rep.is_global = true;
    rep.verdict = "not spurious, global";
    rep.note = "every sample is fitted with zero loss; risk 0 is the global minimum";
    return rep;
  }

  rep.refined_group_region = k;
  rep.isolated_sample = n;
  rep.isolated_sample_loss = worst_loss;
  const Partition fine = refine_isolate(base.partition, data, k, n);
  const int added = static_cast<int>(fine.regions.size() - base.partition.regions.size());

  std::vector<GroupFit> fits;
  for (const auto& f : base.fits) {
    if (f.region < k) {
      fits.push_back(f);
    } else if (f.region > k) {
      GroupFit moved = f;
      moved.region += added;
      fits.push_back(std::move(moved));
    } else {
      for (int r = k; r <= k + added; ++r) {
        const auto idx = fine.members(r);
        if (idx.empty()) continue;
        SubgroupRefit sub;
        sub.region = r;
        sub.n_samples = static_cast<int>(idx.size());
        sub.isolated = idx.size() == 1 && idx.front() == n;
        sub.parent_risk = group_loss(data, idx, parent.piece, loss);
        GroupFit g;
        g.region = r;
        g.n_samples = sub.n_samples;
        if (sub.isolated) {
          g.piece = fit_indices_mse(data, idx);  // exact interpolation of one sample
          g.group_risk = group_loss(data, idx, g.piece, loss);
        } else {
          auto [piece, value] = fit_indices_generic(data, idx, loss);
          if (value <= sub.parent_risk) {
            g.piece = std::move(piece);
            g.group_risk = value;
          } else {
            g.piece = parent.piece;
            g.group_risk = sub.parent_risk;
          }
        }
        sub.refit_risk = g.group_risk;
        rep.subgroups.push_back(sub);
        fits.push_back(std::move(g));
      }
    }
  }

  const Pipeline next = build_from_fits(data, fine, std::move(fits), build);
  rep.refined = true;
  bool refined_certified = false;
  try {
    rep.refinement = detail::summarize(next.net, data, loss, next.predictor.partition.assignment,
                                       next.predictor.piece_count(), next.shift, probe);
    refined_certified = rep.refinement.probe->certified && rep.refinement.patterns_constant_per_group;
  } catch (const MarginError& e) {
    rep.refinement.risk = network_risk(next.net, data, loss).risk;
    rep.refinement.pieces = next.predictor.piece_count();
    rep.refinement.hidden_widths = next.net.hidden_widths();
    rep.refinement.shift = next.shift;
    rep.refined_note = e.what();
  }
  rep.refined_certified = refined_certified;
  rep.strict_decrease = rep.refinement.risk < rep.base.risk - kProbeTol;
  rep.is_spurious_demonstrated = rep.is_local_min_certified && rep.strict_decrease;
  if (rep.is_spurious_demonstrated)
    rep.verdict = "spurious local minimum";
  else if (!rep.is_local_min_certified)
    rep.verdict = "local minimum not certified";
  else
    rep.verdict = "no strictly better refinement found";
  if (!rep.base.patterns_constant_per_group)
    rep.note = "activation patterns differ inside a group: some gadget compares two terms that "
               "cross among that group's samples, so the network is not a local minimum here";
  else if (rep.base.probe->descent_with_fixed_patterns)
    rep.note = "probe found descent with unchanged activation patterns: the fitted pieces are "
               "not locally optimal for this loss";
  else if (rep.base.probe->pattern_change_trials > 0)
    rep.note = "probe changed activation patterns: perturbation radius too large for this build";
  return rep;
}

/// Builds the pipeline for `part` and certifies it; a convenience wrapper.
inline CertificationReport certify(const Dataset& data, const Partition& part, const LossFn& loss,
                                   const ProbeConfig& probe, const BuildConfig& build = {}) {
  return demonstrate_spurious(run_pipeline(data, part, loss, build), data, loss, probe, build);
}

// ---------------------------------------------------------------------------
// Enumeration of contiguous fitting patterns

struct PatternRow {
  long long id = 0;
  int groups = 0;
  std::vector<double> boundaries;
  double risk = 0.0;
};

struct PatternTable {
  std::vector<PatternRow> rows;        // sorted by risk, then id
  int distinct_levels = 0;             // risks differing by more than 1e-9
  std::vector<double> best_risk_by_p;  // index P - 1
};

inline constexpr double kDistinctRiskTol = 1e-9;
inline constexpr long double kMaxEnumeration = 1e5L;

inline long double pattern_count_1d(std::size_t distinct, int p_max) {
  long double total = 0.0L;
  for (int p = 1; p <= p_max; ++p) total += binomial(static_cast<long long>(distinct) - 1, p - 1);
  return total;
}

/// Risk of the optimal piecewise fit for every contiguous partition into at
/// most p_max groups (auxiliary pieces predict no sample, so they do not enter).
inline PatternTable enumerate_patterns_1d(const Dataset& data, int p_max, const LossFn& loss) {
  detail::require_1d(data, "enumerate_patterns_1d");
  const auto xs = detail::distinct_sorted_x(data);
  const int m = static_cast<int>(xs.size());
  if (p_max < 1) throw ArgumentError("enumerate: p_max >= 1 required");
  const int p_top = std::min(p_max, m);
  const long double total = pattern_count_1d(xs.size(), p_top);
  if (p_max > m)
    throw ArgumentError("enumerate: p_max = " + std::to_string(p_max) + " exceeds the " + std::to_string(m) +
                        " distinct x-values (at most " + format_real(static_cast<double>(total)) +
                        " partitions exist); use p_max <= " + std::to_string(m));
  if (total > kMaxEnumeration)
    throw ArgumentError("enumerate: p_max = " + std::to_string(p_max) + " would enumerate about " +
                        format_real(static_cast<double>(total)) + " partitions (limit 1e5)");

  // members[a] = samples whose x equals xs[a]
  std::vector<std::vector<int>> members(m);
  for (std::size_t i = 0; i < data.size(); ++i)
    members[std::lower_bound(xs.begin(), xs.end(), data[i].x(0)) - xs.begin()].push_back(static_cast<int>(i));
  // cost[a][b]: best group loss for distinct values a..b-1
  std::vector<std::vector<double>> cost(m, std::vector<double>(m + 1, 0.0));
  parallel_for(static_cast<std::size_t>(m), [&](std::size_t a) {
    std::vector<int> idx;
    for (int b = static_cast<int>(a) + 1; b <= m; ++b) {
      idx.insert(idx.end(), members[b - 1].begin(), members[b - 1].end());
      cost[a][b] = fit_indices_generic(data, idx, loss).second;
    }
  });

  PatternTable table;
  table.best_risk_by_p.assign(p_top, std::numeric_limits<double>::infinity());
  long long id = 0;
  for (int p = 1; p <= p_top; ++p) {
    ContiguousPartitions it(data, p);
    while (auto cuts = it.next_cuts()) {
      std::vector<double> terms;
      int a = 0;
      for (int c : *cuts) {
        terms.push_back(cost[a][c]);
        a = c;
      }
      terms.push_back(cost[a][m]);
      PatternRow row{id++, p, it.boundaries(*cuts), pairwise_sum(terms) / static_cast<double>(data.size())};
      table.best_risk_by_p[p - 1] = std::min(table.best_risk_by_p[p - 1], row.risk);
      table.rows.push_back(std::move(row));
    }
  }
  std::stable_sort(table.rows.begin(), table.rows.end(),
                   [](const PatternRow& a, const PatternRow& b) { return a.risk < b.risk; });
  for (std::size_t r = 0; r < table.rows.size(); ++r)
    if (r == 0 || table.rows[r].risk - table.rows[r - 1].risk > kDistinctRiskTol) ++table.distinct_levels;
  return table;
}

// ---------------------------------------------------------------------------
// JSON

inline nlohmann::ordered_json to_json(const EpsilonBound& e) {
  return {{"epsilon", e.epsilon},
          {"min_margin", e.min_margin},
          {"margin_sample", e.margin_sample},
          {"sensitivity", e.sensitivity}};
}

inline nlohmann::ordered_json to_json(const ProbeOutcome& p) {
  nlohmann::ordered_json j;
  j["trials_per_scale"] = p.trials;
  j["epsilon"] = p.epsilon;
  j["layers"] = p.layers.empty() ? nlohmann::ordered_json("all") : nlohmann::ordered_json(p.layers);
  j["min_risk_delta"] = p.min_delta;
  j["pattern_change_trials"] = p.pattern_change_trials;
  j["pattern_flips"] = p.pattern_flips;
  auto scales = nlohmann::ordered_json::array();
  for (const auto& s : p.by_scale)
    scales.push_back({{"scale", s.scale},
                      {"min_risk_delta", s.min_delta},
                      {"max_risk_delta", s.max_delta},
                      {"pattern_change_trials", s.pattern_change_trials}});
  j["scales"] = std::move(scales);
  j["certified"] = p.certified;
  j["descent_with_fixed_patterns"] = p.descent_with_fixed_patterns;
  return j;
}

inline nlohmann::ordered_json to_json(const NetworkSummary& s) {
  nlohmann::ordered_json j;
  j["risk"] = s.risk;
  j["pieces"] = s.pieces;
  j["hidden_widths"] = s.hidden_widths;
  j["shift"] = s.shift;
  j["patterns_constant_per_group"] = s.patterns_constant_per_group;
  j["epsilon"] = to_json(s.epsilon);
  j["probe"] = s.probe ? to_json(*s.probe) : nlohmann::ordered_json(nullptr);
  return j;
}

inline nlohmann::ordered_json to_json(const CertificationReport& r) {
  nlohmann::ordered_json j;
  j["loss"] = r.loss;
  j["base"] = to_json(r.base);
  j["base_risk"] = r.base.risk;
  j["group_risks"] = r.group_risks;
  if (r.refined) {
    nlohmann::ordered_json ref;
    ref["region"] = r.refined_group_region;
    ref["isolated_sample"] = r.isolated_sample;
    ref["isolated_sample_loss"] = r.isolated_sample_loss;
    auto subs = nlohmann::ordered_json::array();
    for (const auto& s : r.subgroups)
      subs.push_back({{"region", s.region},
                      {"n_samples", s.n_samples},
                      {"isolated", s.isolated},
                      {"parent_risk", s.parent_risk},
                      {"refit_risk", s.refit_risk}});
    ref["subgroups"] = std::move(subs);
    ref["network"] = to_json(r.refinement);
    ref["refined_risk"] = r.refinement.risk;
    ref["strict_decrease"] = r.strict_decrease;
    ref["certified"] = r.refined_certified;
    if (!r.refined_note.empty()) ref["note"] = r.refined_note;
    j["refinement"] = std::move(ref);
  } else {
    j["refinement"] = nullptr;
  }
  j["is_local_min_certified"] = r.is_local_min_certified;
  j["is_spurious_demonstrated"] = r.is_spurious_demonstrated;
  j["is_global"] = r.is_global;
  j["verdict"] = r.verdict;
  j["certification"] = "empirical: random perturbation probe within the derived radius";
  if (!r.note.empty()) j["note"] = r.note;
  return j;
}

}  // namespace cpwlnet
