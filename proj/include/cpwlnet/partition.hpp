#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "cpwlnet/data_model.hpp"
#include "cpwlnet/error.hpp"
#include "json.hpp"

namespace cpwlnet {

inline constexpr double kContainTol = 1e-9;

/// normal . x <= offset
struct Halfspace {
  Eigen::VectorXd normal;
  double offset = 0.0;

  double slack(const Eigen::VectorXd& x) const { return offset - normal.dot(x); }
};

/// Bounded convex polytope carried in both H- and V-representation. The
/// vertex list is what dominance checks iterate over; it may contain redundant
/// interior points but always spans the polytope.
struct Polytope {
  int dim = 0;
  std::vector<Halfspace> halfspaces;
  std::vector<Eigen::VectorXd> vertices;

  static Polytope interval(double lo, double hi) {
    if (!(lo <= hi)) throw ArgumentError("interval: lo <= hi required");
    Polytope p;
    p.dim = 1;
    p.halfspaces.push_back({Eigen::VectorXd::Constant(1, -1.0), -lo});
    p.halfspaces.push_back({Eigen::VectorXd::Constant(1, 1.0), hi});
    p.vertices.push_back(Eigen::VectorXd::Constant(1, lo));
    p.vertices.push_back(Eigen::VectorXd::Constant(1, hi));
    return p;
  }

  static Polytope box(const Eigen::VectorXd& lo, const Eigen::VectorXd& hi) {
    const int d = static_cast<int>(lo.size());
    if (d < 1 || hi.size() != d) throw ArgumentError("box: mismatched corner widths");
    if (d > 20) throw ArgumentError("box: dimension too large for an explicit vertex list");
    Polytope p;
    p.dim = d;
    for (int j = 0; j < d; ++j) {
      if (!(lo(j) <= hi(j))) throw ArgumentError("box: lo <= hi required");
      Eigen::VectorXd e = Eigen::VectorXd::Zero(d);
      e(j) = -1.0;
      p.halfspaces.push_back({e, -lo(j)});
      e(j) = 1.0;
      p.halfspaces.push_back({e, hi(j)});
    }
    for (unsigned long mask = 0; mask < (1ul << d); ++mask) {
      Eigen::VectorXd v(d);
      for (int j = 0; j < d; ++j) v(j) = (mask >> j) & 1ul ? hi(j) : lo(j);
      p.vertices.push_back(std::move(v));
    }
    return p;
  }

  bool contains(const Eigen::VectorXd& x, double tol = kContainTol) const {
    for (const Halfspace& h : halfspaces)
      if (h.slack(x) < -tol) return false;
    return true;
  }

  bool strictly_contains(const Eigen::VectorXd& x, double tol = kContainTol) const {
    for (const Halfspace& h : halfspaces)
      if (h.slack(x) <= tol) return false;
    return true;
  }

  /// Smallest and largest coordinate along axis 0; the interval for dim 1.
  std::pair<double, double> bounds1d() const {
    double lo = vertices.front()(0), hi = lo;
    for (const auto& v : vertices) {
      lo = std::min(lo, v(0));
      hi = std::max(hi, v(0));
    }
    return {lo, hi};
  }

  /// Intersection with normal . x <= offset. The result's vertices are the
  /// points tight on at least `dim` independent constraints, so redundant
  /// points do not accumulate over repeated clipping.
  Polytope clip(const Halfspace& cut) const {
    Polytope out;
    out.dim = dim;
    out.halfspaces = halfspaces;
    out.halfspaces.push_back(cut);
    std::vector<Eigen::VectorXd> candidates;
    for (const auto& v : vertices)
      if (cut.slack(v) >= -kContainTol) candidates.push_back(v);
    for (std::size_t a = 0; a < vertices.size(); ++a) {
      const double sa = cut.slack(vertices[a]);
      for (std::size_t b = a + 1; b < vertices.size(); ++b) {
        const double sb = cut.slack(vertices[b]);
        if ((sa > kContainTol && sb < -kContainTol) || (sa < -kContainTol && sb > kContainTol)) {
          const double t = sa / (sa - sb);
          candidates.push_back(vertices[a] + t * (vertices[b] - vertices[a]));
        }
      }
    }
    for (const auto& c : candidates) {
      std::vector<const Eigen::VectorXd*> tight;
      for (const auto& h : out.halfspaces)
        if (std::abs(h.slack(c)) <= 1e-8 * (1.0 + h.normal.norm())) tight.push_back(&h.normal);
      if (static_cast<int>(tight.size()) < dim) continue;
      Eigen::MatrixXd rows(tight.size(), dim);
      for (std::size_t r = 0; r < tight.size(); ++r) rows.row(r) = tight[r]->transpose();
      Eigen::FullPivLU<Eigen::MatrixXd> lu(rows);
      lu.setThreshold(1e-10);
      if (lu.rank() < dim) continue;
      const bool duplicate = std::any_of(out.vertices.begin(), out.vertices.end(),
                                         [&](const auto& v) { return (v - c).norm() <= 1e-10; });
      if (!duplicate) out.vertices.push_back(c);
    }
    return out;
  }

  /// A full-dimensional polytope needs at least dim + 1 vertices.
  bool is_solid() const { return static_cast<int>(vertices.size()) >= dim + 1; }
};

/// Disjoint convex regions covering a bounded domain, plus the map from sample
/// index to region index.
struct Partition {
  Polytope domain;
  std::vector<Polytope> regions;
  std::vector<int> assignment;
  std::vector<bool> auxiliary;

  int dim() const noexcept { return domain.dim; }
  std::size_t region_count() const noexcept { return regions.size(); }

  std::vector<int> members(int region) const {
    std::vector<int> out;
    for (std::size_t i = 0; i < assignment.size(); ++i)
      if (assignment[i] == region) out.push_back(static_cast<int>(i));
    return out;
  }

  std::vector<int> group_sizes() const {
    std::vector<int> n(regions.size(), 0);
    for (int r : assignment) ++n[r];
    return n;
  }

  /// Checks containment and the auxiliary flags against a dataset; throws on
  /// the first violation.
  void validate(const Dataset& data) const {
    if (assignment.size() != data.size())
      throw ArgumentError("partition: assignment covers " + std::to_string(assignment.size()) +
                          " samples, dataset has " + std::to_string(data.size()));
    if (auxiliary.size() != regions.size())
      throw ArgumentError("partition: one auxiliary flag per region required");
    for (const auto& r : regions) {
      if (r.dim != domain.dim) throw ArgumentError("partition: region dimension mismatch");
      if (r.vertices.empty()) throw ArgumentError("partition: region without vertices");
      for (const auto& v : r.vertices)
        if (!r.contains(v)) throw ArgumentError("partition: vertex outside its own region");
    }
    for (std::size_t i = 0; i < data.size(); ++i) {
      const int r = assignment[i];
      if (r < 0 || r >= static_cast<int>(regions.size()))
        throw ArgumentError("partition: sample " + std::to_string(i) + " assigned to no region");
      if (auxiliary[r])
        throw ArgumentError("partition: sample " + std::to_string(i) + " in auxiliary region");
      if (!regions[r].contains(data[i].x))
        throw ArgumentError("partition: sample " + std::to_string(i) +
                            " lies outside its region");
      for (std::size_t q = 0; q < regions.size(); ++q)
        if (static_cast<int>(q) != r && regions[q].strictly_contains(data[i].x))
          throw ArgumentError("partition: sample " + std::to_string(i) +
                              " strictly inside two regions");
    }
    if (dim() == 1) {
      std::vector<std::pair<double, double>> iv;
      for (const auto& r : regions) iv.push_back(r.bounds1d());
      std::sort(iv.begin(), iv.end());
      for (std::size_t k = 1; k < iv.size(); ++k)
        if (iv[k].first < iv[k - 1].second - kContainTol)
          throw ArgumentError("partition: overlapping intervals");
    }
  }
};

/// Bounding box of the inputs, widened by 10% of its extent on every side
/// (0.5 on sides of zero extent).
inline Polytope default_domain(const Dataset& data) {
  Eigen::VectorXd lo = data[0].x, hi = data[0].x;
  for (const Sample& s : data.samples()) {
    lo = lo.cwiseMin(s.x);
    hi = hi.cwiseMax(s.x);
  }
  for (int j = 0; j < data.dx(); ++j) {
    const double w = hi(j) - lo(j);
    const double pad = w > 0.0 ? 0.1 * w : 0.5;
    lo(j) -= pad;
    hi(j) += pad;
  }
  return data.dx() == 1 ? Polytope::interval(lo(0), hi(0)) : Polytope::box(lo, hi);
}

/// Single region equal to the domain.
inline Partition trivial_partition(const Dataset& data) {
  Partition p;
  p.domain = default_domain(data);
  p.regions = {p.domain};
  p.assignment.assign(data.size(), 0);
  p.auxiliary = {false};
  return p;
}

namespace detail {

inline void require_1d(const Dataset& data, const char* op) {
  if (data.dx() != 1) throw ArgumentError(std::string(op) + ": requires dx = 1");
}

/// Builds a 1-D partition over `domain` from sorted interior boundaries.
inline Partition intervals_from_boundaries(const Dataset& data, const Polytope& domain,
                                           const std::vector<double>& boundaries) {
  const auto [lo, hi] = domain.bounds1d();
  Partition p;
  p.domain = domain;
  double left = lo;
  for (double b : boundaries) {
    p.regions.push_back(Polytope::interval(left, b));
    left = b;
  }
  p.regions.push_back(Polytope::interval(left, hi));
  p.assignment.resize(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    const double x = data[i].x(0);
    p.assignment[i] = static_cast<int>(
        std::upper_bound(boundaries.begin(), boundaries.end(), x) - boundaries.begin());
  }
  p.auxiliary.assign(p.regions.size(), false);
  return p;
}

inline std::vector<double> distinct_sorted_x(const Dataset& data) {
  std::vector<double> xs;
  for (const Sample& s : data.samples()) xs.push_back(s.x(0));
  std::sort(xs.begin(), xs.end());
  xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
  return xs;
}

}  // namespace detail

/// Splits the default 1-D domain at the given boundaries and assigns samples
/// by interval membership.
inline Partition partition_1d(const Dataset& data, const std::vector<double>& boundaries) {
  detail::require_1d(data, "partition_1d");
  const Polytope domain = default_domain(data);
  const auto [lo, hi] = domain.bounds1d();
  for (std::size_t k = 0; k < boundaries.size(); ++k) {
    if (!std::isfinite(boundaries[k])) throw ArgumentError("partition_1d: non-finite boundary");
    if (k > 0 && !(boundaries[k] > boundaries[k - 1]))
      throw ArgumentError("partition_1d: boundaries must be strictly increasing");
    if (!(boundaries[k] > lo && boundaries[k] < hi))
      throw ArgumentError("partition_1d: boundary " + format_real(boundaries[k]) +
                          " outside the domain");
    for (std::size_t i = 0; i < data.size(); ++i)
      if (std::abs(data[i].x(0) - boundaries[k]) <= 1e-12)
        throw ArgumentError("partition_1d: degenerate boundary " + format_real(boundaries[k]) +
                            " coincides with sample " + std::to_string(i));
  }
  return detail::intervals_from_boundaries(data, domain, boundaries);
}

inline long double binomial(long long n, long long k) {
  if (k < 0 || k > n) return 0.0L;
  k = std::min(k, n - k);
  long double r = 1.0L;
  for (long long i = 1; i <= k; ++i) r = r * static_cast<long double>(n - k + i) / i;
  return std::round(r);
}

/// Enumerates every way of splitting the sorted distinct x-values of a 1-D
/// dataset into `p` contiguous nonempty groups. Boundaries sit at midpoints
/// between adjacent distinct values.
class ContiguousPartitions {
 public:
  ContiguousPartitions(const Dataset& data, int p) : data_(data), p_(p) {
    detail::require_1d(data, "contiguous_partitions_1d");
    xs_ = detail::distinct_sorted_x(data);
    if (p < 1 || p > static_cast<int>(xs_.size()))
      throw ArgumentError("contiguous_partitions_1d: p = " + std::to_string(p) +
                          " exceeds the " + std::to_string(xs_.size()) + " distinct x-values");
    domain_ = default_domain(data);
    cuts_.resize(p - 1);
    for (int k = 0; k < p - 1; ++k) cuts_[k] = k + 1;
  }

  /// C(M-1, p-1), the number of partitions this enumerator yields.
  long double count() const { return binomial(static_cast<long long>(xs_.size()) - 1, p_ - 1); }

  const std::vector<double>& distinct_x() const noexcept { return xs_; }

  /// Next set of cut positions: group g spans distinct values [cut_{g-1}, cut_g).
  std::optional<std::vector<int>> next_cuts() {
    if (done_) return std::nullopt;
    std::vector<int> current = cuts_;
    advance();
    return current;
  }

  std::optional<Partition> next() {
    auto cuts = next_cuts();
    if (!cuts) return std::nullopt;
    return materialize(*cuts);
  }

  std::vector<double> boundaries(const std::vector<int>& cuts) const {
    std::vector<double> b;
    for (int c : cuts) b.push_back(0.5 * (xs_[c - 1] + xs_[c]));
    return b;
  }

  Partition materialize(const std::vector<int>& cuts) const {
    return detail::intervals_from_boundaries(data_, domain_, boundaries(cuts));
  }

 private:
  void advance() {
    const int m = static_cast<int>(xs_.size());
    const int k = p_ - 1;
    int i = k - 1;
    while (i >= 0 && cuts_[i] == m - k + i) --i;
    if (i < 0) {
      done_ = true;
      return;
    }
    ++cuts_[i];
    for (int j = i + 1; j < k; ++j) cuts_[j] = cuts_[j - 1] + 1;
  }

  Dataset data_;  // owned, so enumerators may outlive temporaries
  int p_;
  std::vector<double> xs_;
  Polytope domain_;
  std::vector<int> cuts_;
  bool done_ = false;
};

inline ContiguousPartitions contiguous_partitions_1d(const Dataset& data, int p) {
  return ContiguousPartitions(data, p);
}

namespace detail {

inline Partition replace_region(const Partition& part, int region,
                                const std::vector<Polytope>& pieces, const Dataset& data) {
  Partition out;
  out.domain = part.domain;
  const int extra = static_cast<int>(pieces.size()) - 1;
  for (int r = 0; r < static_cast<int>(part.regions.size()); ++r) {
    if (r == region) {
      for (const auto& p : pieces) {
        out.regions.push_back(p);
        out.auxiliary.push_back(false);
      }
    } else {
      out.regions.push_back(part.regions[r]);
      out.auxiliary.push_back(part.auxiliary[r]);
    }
  }
  out.assignment.resize(part.assignment.size());
  for (std::size_t i = 0; i < part.assignment.size(); ++i) {
    const int r = part.assignment[i];
    if (r < region) {
      out.assignment[i] = r;
    } else if (r > region) {
      out.assignment[i] = r + extra;
    } else {
      int chosen = -1;
      for (int q = 0; q < static_cast<int>(pieces.size()) && chosen < 0; ++q)
        if (pieces[q].contains(data[i].x)) chosen = q;
      if (chosen < 0) throw NumericalError("refine_isolate: sample left uncovered by split");
      out.assignment[i] = region + chosen;
    }
  }
  for (int q = 0; q < static_cast<int>(pieces.size()); ++q)
    if (part.auxiliary[region]) out.auxiliary[region + q] = true;
  return out;
}

}  // namespace detail

/// Splits one region so that `sample` ends up alone in a convex subregion.
/// Other regions are untouched (indices after `region` shift by the number of
/// added subregions). In 1-D the cuts sit at midpoints to the nearest
/// in-group neighbours; in higher dimensions the isolated cell is bounded by
/// perpendicular bisectors and the rest of the region is split into convex
/// slabs.
inline Partition refine_isolate(const Partition& part, const Dataset& data, int region,
                                int sample) {
  if (region < 0 || region >= static_cast<int>(part.regions.size()))
    throw ArgumentError("refine_isolate: no region " + std::to_string(region));
  if (sample < 0 || sample >= static_cast<int>(data.size()) ||
      part.assignment[sample] != region)
    throw ArgumentError("refine_isolate: sample " + std::to_string(sample) +
                        " is not in region " + std::to_string(region));
  const std::vector<int> group = part.members(region);
  if (group.size() < 2)
    throw ArgumentError("refine_isolate: cannot refine a region holding a single sample");
  const Eigen::VectorXd& xn = data[sample].x;
  for (int m : group)
    if (m != sample && (data[m].x - xn).norm() == 0.0)
      throw ArgumentError("refine_isolate: sample " + std::to_string(sample) +
                          " shares its input with sample " + std::to_string(m));

  const Polytope& r = part.regions[region];
  std::vector<Polytope> pieces;
  if (part.dim() == 1) {
    const auto [lo, hi] = r.bounds1d();
    const double x = xn(0);
    std::optional<double> left, right;
    for (int m : group) {
      const double xm = data[m].x(0);
      if (xm < x && (!left || xm > *left)) left = xm;
      if (xm > x && (!right || xm < *right)) right = xm;
    }
    double a = lo;
    if (left) {
      const double cut = 0.5 * (*left + x);
      pieces.push_back(Polytope::interval(lo, cut));
      a = cut;
    }
    double b = hi;
    if (right) b = 0.5 * (x + *right);
    pieces.push_back(Polytope::interval(a, b));
    if (right) pieces.push_back(Polytope::interval(b, hi));
  } else {
    std::vector<int> others;
    for (int m : group)
      if (m != sample) others.push_back(m);
    std::sort(others.begin(), others.end(), [&](int a, int b) {
      return (data[a].x - xn).squaredNorm() < (data[b].x - xn).squaredNorm();
    });
    Polytope cell = r;
    std::vector<Halfspace> cuts;
    for (int m : others) {
      if (!cell.contains(data[m].x)) continue;
      const Eigen::VectorXd& xm = data[m].x;
      Halfspace h{xm - xn, 0.5 * (xm.squaredNorm() - xn.squaredNorm())};
      cell = cell.clip(h);
      cuts.push_back(std::move(h));
    }
    Polytope rest = r;
    for (const Halfspace& h : cuts) {
      Polytope slab = rest.clip({-h.normal, -h.offset});
      if (slab.is_solid()) pieces.push_back(std::move(slab));
      rest = rest.clip(h);
    }
    pieces.insert(pieces.begin(), cell);
  }
  return detail::replace_region(part, region, pieces, data);
}

/// The open interval between the largest sample of `left` and the smallest
/// sample of `right`. Only empty regions may lie between the two.
inline std::pair<double, double> gap_interval(const Partition& part, const Dataset& data,
                                              int left, int right) {
  detail::require_1d(data, "gap_interval");
  const int n = static_cast<int>(part.regions.size());
  if (left < 0 || right < 0 || left >= n || right >= n)
    throw ArgumentError("gap_interval: region index out of range");
  const auto gl = part.members(left);
  const auto gr = part.members(right);
  if (gl.empty() || gr.empty()) throw ArgumentError("gap_interval: both regions need samples");
  double u = -INFINITY, v = INFINITY;
  for (int i : gl) u = std::max(u, data[i].x(0));
  for (int i : gr) v = std::min(v, data[i].x(0));
  if (!(u < v))
    throw ArgumentError("gap_interval: regions " + std::to_string(left) + " and " +
                        std::to_string(right) + " are not separated by a gap");
  for (std::size_t i = 0; i < data.size(); ++i) {
    const double x = data[i].x(0);
    if (x > u && x < v)
      throw ArgumentError("gap_interval: regions " + std::to_string(left) + " and " +
                          std::to_string(right) + " are not adjacent");
  }
  return {u, v};
}

// JSON

inline nlohmann::ordered_json vector_to_json(const Eigen::VectorXd& v) {
  auto a = nlohmann::ordered_json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

inline Eigen::VectorXd vector_from_json(const nlohmann::json& j) {
  if (!j.is_array()) throw ParseError("expected a numeric array");
  Eigen::VectorXd v(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) v(i) = j[i].get<double>();
  return v;
}

inline nlohmann::ordered_json to_json(const Polytope& p) {
  nlohmann::ordered_json j;
  j["dim"] = p.dim;
  auto hs = nlohmann::ordered_json::array();
  for (const auto& h : p.halfspaces)
    hs.push_back({{"normal", vector_to_json(h.normal)}, {"offset", h.offset}});
  j["halfspaces"] = std::move(hs);
  auto vs = nlohmann::ordered_json::array();
  for (const auto& v : p.vertices) vs.push_back(vector_to_json(v));
  j["vertices"] = std::move(vs);
  return j;
}

inline Polytope polytope_from_json(const nlohmann::json& j) {
  Polytope p;
  p.dim = j.at("dim").get<int>();
  for (const auto& h : j.at("halfspaces"))
    p.halfspaces.push_back({vector_from_json(h.at("normal")), h.at("offset").get<double>()});
  for (const auto& v : j.at("vertices")) p.vertices.push_back(vector_from_json(v));
  for (const auto& h : p.halfspaces)
    if (h.normal.size() != p.dim) throw ParseError("polytope: halfspace width mismatch");
  for (const auto& v : p.vertices) {
    if (v.size() != p.dim) throw ParseError("polytope: vertex width mismatch");
    if (!p.contains(v)) throw ParseError("polytope: vertex violates a halfspace");
  }
  if (p.vertices.empty()) throw ParseError("polytope: bounded polytopes need vertices");
  return p;
}

inline nlohmann::ordered_json to_json(const Partition& p) {
  nlohmann::ordered_json j;
  j["domain"] = to_json(p.domain);
  auto rs = nlohmann::ordered_json::array();
  for (const auto& r : p.regions) rs.push_back(to_json(r));
  j["regions"] = std::move(rs);
  j["assignment"] = p.assignment;
  auto aux = nlohmann::ordered_json::array();
  for (bool a : p.auxiliary) aux.push_back(static_cast<bool>(a));
  j["auxiliary"] = std::move(aux);
  return j;
}

inline Partition partition_from_json(const nlohmann::json& j) {
  Partition p;
  p.domain = polytope_from_json(j.at("domain"));
  for (const auto& r : j.at("regions")) p.regions.push_back(polytope_from_json(r));
  p.assignment = j.at("assignment").get<std::vector<int>>();
  if (j.contains("auxiliary")) {
    for (const auto& a : j.at("auxiliary")) p.auxiliary.push_back(a.get<bool>());
  } else {
    p.auxiliary.assign(p.regions.size(), false);
  }
  return p;
}

/// Assigns each sample to the first region containing it; regions left empty
/// are flagged auxiliary. Used for user-supplied multi-dimensional regions.
inline Partition assign_regions(const Dataset& data, Polytope domain,
                                std::vector<Polytope> regions) {
  Partition p;
  p.domain = std::move(domain);
  p.regions = std::move(regions);
  p.assignment.assign(data.size(), -1);
  for (std::size_t i = 0; i < data.size(); ++i) {
    for (std::size_t r = 0; r < p.regions.size() && p.assignment[i] < 0; ++r)
      if (p.regions[r].contains(data[i].x)) p.assignment[i] = static_cast<int>(r);
    if (p.assignment[i] < 0)
      throw ArgumentError("assign_regions: sample " + std::to_string(i) + " lies in no region");
  }
  p.auxiliary.assign(p.regions.size(), true);
  for (int r : p.assignment) p.auxiliary[r] = false;
  return p;
}

}  // namespace cpwlnet
