#pragma once

#include <utility>
#include <vector>

#include "cpwlnet/cpwl.hpp"
#include "cpwlnet/data_model.hpp"
#include "cpwlnet/fitting.hpp"
#include "cpwlnet/netbuild.hpp"
#include "cpwlnet/network.hpp"
#include "cpwlnet/partition.hpp"

namespace cpwlnet {

/// Everything produced from one partition: per-group fits, the continuous
/// predictor built from them, and the network realizing it.
struct Pipeline {
  Partition partition;
  std::vector<GroupFit> fits;
  CpwlPredictor predictor;
  ReluNetwork net;
  double shift = 0.0;
};

inline Pipeline build_from_fits(const Dataset& data, Partition part, std::vector<GroupFit> fits,
                                const BuildConfig& cfg = {}) {
  Pipeline p;
  p.predictor = assemble(data, part, fits);
  p.shift = resolve_shift(p.predictor, cfg);
  p.net = build_fc_network(p.predictor, cfg);
  p.partition = std::move(part);
  p.fits = std::move(fits);
  return p;
}

/// partition -> fit -> max-min form -> fully-connected network.
inline Pipeline run_pipeline(const Dataset& data, const Partition& part, const LossFn& loss,
                             const BuildConfig& cfg = {}) {
  part.validate(data);
  return build_from_fits(data, part, fit_all(data, part, loss), cfg);
}

/// Splits the sorted distinct x-values into `groups` contiguous groups of
/// (nearly) equal size and returns the midpoint boundaries.
inline std::vector<double> even_boundaries_1d(const Dataset& data, int groups) {
  detail::require_1d(data, "even_boundaries_1d");
  const auto xs = detail::distinct_sorted_x(data);
  const int m = static_cast<int>(xs.size());
  if (groups < 1 || groups > m)
    throw ArgumentError("groups: need 1 <= P <= " + std::to_string(m) + " distinct x-values");
  std::vector<double> b;
  for (int g = 1; g < groups; ++g) {
    const int cut = static_cast<int>((static_cast<long long>(g) * m) / groups);
    b.push_back(0.5 * (xs[cut - 1] + xs[cut]));
  }
  return b;
}

}  // namespace cpwlnet
