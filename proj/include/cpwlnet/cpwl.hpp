#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "cpwlnet/data_model.hpp"
#include "cpwlnet/error.hpp"
#include "cpwlnet/fitting.hpp"
#include "cpwlnet/partition.hpp"
#include "json.hpp"

namespace cpwlnet {

inline constexpr double kDominanceTol = 1e-9;

/// Scalar affine function w . x + b.
struct ScalarAffine {
  Eigen::VectorXd w;
  double b = 0.0;

  double operator()(const Eigen::VectorXd& x) const { return w.dot(x) + b; }
  bool operator==(const ScalarAffine& o) const { return b == o.b && w == o.w; }

  /// Row `component` of an affine piece.
  static ScalarAffine row(const AffinePiece& p, int component) {
    return {p.A.row(component).transpose(), p.b(component)};
  }
};

/// f = max_i min_{j in psi_sets[i]} pieces[j] for one output component.
struct MaxMinForm {
  std::vector<ScalarAffine> pieces;
  std::vector<std::vector<int>> psi_sets;
  int component = 0;
};

/// True iff f_j >= f_i everywhere on `region` (ties count). Affine functions
/// reach their extremes at vertices, so checking the vertex list suffices.
inline bool dominates(const ScalarAffine& fj, const ScalarAffine& fi, const Polytope& region) {
  if (region.vertices.empty()) throw ArgumentError("dominates: region has no vertices");
  for (const auto& v : region.vertices)
    if (fj(v) - fi(v) < -kDominanceTol) return false;
  return true;
}

inline MaxMinForm build_maxmin(std::vector<ScalarAffine> pieces,
                               const std::vector<Polytope>& regions, int component) {
  if (pieces.size() != regions.size())
    throw ArgumentError("build_maxmin: need exactly one piece per region");
  if (pieces.empty()) throw ArgumentError("build_maxmin: no pieces");
  MaxMinForm form;
  form.component = component;
  form.psi_sets.resize(pieces.size());
  for (std::size_t i = 0; i < pieces.size(); ++i)
    for (std::size_t j = 0; j < pieces.size(); ++j)
      if (j == i || dominates(pieces[j], pieces[i], regions[i]))
        form.psi_sets[i].push_back(static_cast<int>(j));
  form.pieces = std::move(pieces);
  return form;
}

inline MaxMinForm build_maxmin(std::vector<ScalarAffine> pieces, const Partition& part,
                               int component) {
  return build_maxmin(std::move(pieces), part.regions, component);
}

inline double eval_maxmin(const MaxMinForm& form, const Eigen::VectorXd& x) {
  double best = -std::numeric_limits<double>::infinity();
  for (const auto& psi : form.psi_sets) {
    double m = std::numeric_limits<double>::infinity();
    for (int j : psi) m = std::min(m, form.pieces[j](x));
    best = std::max(best, m);
  }
  return best;
}

/// A continuous piecewise-linear predictor: one affine piece per region and
/// the equivalent max-min form for every output component.
struct CpwlPredictor {
  Partition partition;
  std::vector<AffinePiece> pieces_by_region;
  std::vector<MaxMinForm> forms;

  int dx() const { return pieces_by_region.front().dx(); }
  int dy() const { return static_cast<int>(forms.size()); }
  std::size_t piece_count() const { return pieces_by_region.size(); }

  Eigen::VectorXd eval(const Eigen::VectorXd& x) const {
    Eigen::VectorXd out(forms.size());
    for (std::size_t k = 0; k < forms.size(); ++k) out(k) = eval_maxmin(forms[k], x);
    return out;
  }

  /// Index of the first region containing x, or -1.
  int locate(const Eigen::VectorXd& x) const {
    for (std::size_t r = 0; r < partition.regions.size(); ++r)
      if (partition.regions[r].contains(x)) return static_cast<int>(r);
    return -1;
  }
};

inline CpwlPredictor make_predictor(Partition part, std::vector<AffinePiece> pieces) {
  if (pieces.size() != part.regions.size())
    throw ArgumentError("make_predictor: need one piece per region");
  CpwlPredictor pred;
  const int dy = pieces.front().dy();
  for (int k = 0; k < dy; ++k) {
    std::vector<ScalarAffine> rows;
    for (const auto& p : pieces) rows.push_back(ScalarAffine::row(p, k));
    pred.forms.push_back(build_maxmin(std::move(rows), part, k));
  }
  pred.partition = std::move(part);
  pred.pieces_by_region = std::move(pieces);
  return pred;
}

struct ConsistencyViolation {
  int sample = 0;
  int component = 0;
  double maxmin_value = 0.0;
  double piece_value = 0.0;
};

struct ConsistencyReport {
  bool ok = true;
  std::vector<ConsistencyViolation> violations;
};

/// Compares the max-min value with the assigned region's piece at every sample.
inline ConsistencyReport check_consistency(const CpwlPredictor& pred, const Dataset& data,
                                           double tol = 1e-9) {
  if (pred.partition.assignment.size() != data.size())
    throw ArgumentError("check_consistency: predictor was built for a different dataset");
  ConsistencyReport rep;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const Eigen::VectorXd piece = pred.pieces_by_region[pred.partition.assignment[i]](data[i].x);
    for (int k = 0; k < pred.dy(); ++k) {
      const double mm = eval_maxmin(pred.forms[k], data[i].x);
      if (!(std::abs(mm - piece(k)) <= tol * std::max(1.0, std::abs(piece(k))))) {
        rep.ok = false;
        rep.violations.push_back({static_cast<int>(i), k, mm, piece(k)});
      }
    }
  }
  return rep;
}

/// Joins the per-group fits of a 1-D partition into a continuous predictor.
/// Neighbouring groups either meet at their crossing inside the gap or are
/// bridged by an auxiliary piece; every sample keeps its own group's piece.
inline CpwlPredictor assemble_1d(const Dataset& data, const Partition& part,
                                 const std::vector<GroupFit>& fits) {
  detail::require_1d(data, "assemble_1d");
  if (fits.empty()) throw ArgumentError("assemble_1d: no fits");
  std::vector<const GroupFit*> order;
  for (const auto& f : fits) order.push_back(&f);
  auto lowest_x = [&](const GroupFit* f) {
    double lo = INFINITY;
    for (int i : part.members(f->region)) lo = std::min(lo, data[i].x(0));
    return lo;
  };
  std::sort(order.begin(), order.end(),
            [&](const GroupFit* a, const GroupFit* b) { return lowest_x(a) < lowest_x(b); });

  const auto [dom_lo, dom_hi] = part.domain.bounds1d();
  Partition out;
  out.domain = part.domain;
  std::vector<AffinePiece> pieces;
  std::vector<int> region_of_group(part.regions.size(), -1);
  double left_edge = dom_lo;
  for (std::size_t g = 0; g < order.size(); ++g) {
    const GroupFit& cur = *order[g];
    if (g + 1 == order.size()) {
      out.regions.push_back(Polytope::interval(left_edge, dom_hi));
      out.auxiliary.push_back(false);
      pieces.push_back(cur.piece);
      region_of_group[cur.region] = static_cast<int>(out.regions.size()) - 1;
      break;
    }
    const GroupFit& nxt = *order[g + 1];
    const auto gap = gap_interval(part, data, cur.region, nxt.region);
    const AuxiliaryJoin join = auxiliary_segment_1d(cur, nxt, gap);
    out.regions.push_back(Polytope::interval(left_edge, join.boundaries.front()));
    out.auxiliary.push_back(false);
    pieces.push_back(cur.piece);
    region_of_group[cur.region] = static_cast<int>(out.regions.size()) - 1;
    if (join.piece) {
      out.regions.push_back(Polytope::interval(join.boundaries[0], join.boundaries[1]));
      out.auxiliary.push_back(true);
      pieces.push_back(*join.piece);
    }
    left_edge = join.boundaries.back();
  }
  out.assignment.resize(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    const int r = region_of_group[part.assignment[i]];
    if (r < 0) throw ArgumentError("assemble_1d: sample in a region without a fit");
    out.assignment[i] = r;
  }
  return make_predictor(std::move(out), std::move(pieces));
}

/// Predictor over user-supplied regions without auxiliary synthesis. Regions
/// holding no samples have no fitted piece and are left out.
inline CpwlPredictor assemble_regions(const Dataset& data, const Partition& part,
                                      const std::vector<GroupFit>& fits) {
  Partition out;
  out.domain = part.domain;
  std::vector<AffinePiece> pieces;
  std::vector<int> remap(part.regions.size(), -1);
  for (const auto& f : fits) {
    remap[f.region] = static_cast<int>(out.regions.size());
    out.regions.push_back(part.regions[f.region]);
    out.auxiliary.push_back(false);
    pieces.push_back(f.piece);
  }
  out.assignment.resize(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    out.assignment[i] = remap[part.assignment[i]];
    if (out.assignment[i] < 0) throw ArgumentError("assemble_regions: sample without a fit");
  }
  return make_predictor(std::move(out), std::move(pieces));
}

/// Dispatches to the 1-D assembly (with auxiliary pieces) or the plain region
/// form, and refuses predictors whose max-min form disagrees with the pieces.
inline CpwlPredictor assemble(const Dataset& data, const Partition& part,
                              const std::vector<GroupFit>& fits) {
  CpwlPredictor pred =
      data.dx() == 1 ? assemble_1d(data, part, fits) : assemble_regions(data, part, fits);
  const ConsistencyReport rep = check_consistency(pred, data);
  if (!rep.ok) {
    const auto& v = rep.violations.front();
    throw ConsistencyError("max-min form disagrees with region pieces at " +
                           std::to_string(rep.violations.size()) + " sample outputs (first: sample " +
                           std::to_string(v.sample) + ", component " + std::to_string(v.component) +
                           ": " + format_real(v.maxmin_value) + " vs " +
                           format_real(v.piece_value) + ")");
  }
  return pred;
}

inline nlohmann::ordered_json to_json(const AffinePiece& p) {
  nlohmann::ordered_json rows = nlohmann::ordered_json::array();
  for (Eigen::Index r = 0; r < p.A.rows(); ++r) rows.push_back(vector_to_json(p.A.row(r).transpose()));
  return {{"A", std::move(rows)}, {"b", vector_to_json(p.b)}};
}

inline AffinePiece affine_piece_from_json(const nlohmann::json& j) {
  AffinePiece p;
  const auto& rows = j.at("A");
  p.b = vector_from_json(j.at("b"));
  const Eigen::Index dy = p.b.size();
  if (static_cast<Eigen::Index>(rows.size()) != dy) throw ParseError("piece: A/b height mismatch");
  const Eigen::Index dx = dy ? static_cast<Eigen::Index>(rows[0].size()) : 0;
  p.A.resize(dy, dx);
  for (Eigen::Index r = 0; r < dy; ++r) {
    const Eigen::VectorXd row = vector_from_json(rows[r]);
    if (row.size() != dx) throw ParseError("piece: ragged A");
    p.A.row(r) = row.transpose();
  }
  return p;
}

inline nlohmann::ordered_json to_json(const CpwlPredictor& pred) {
  nlohmann::ordered_json j;
  j["partition"] = to_json(pred.partition);
  auto pieces = nlohmann::ordered_json::array();
  for (const auto& p : pred.pieces_by_region) pieces.push_back(to_json(p));
  j["pieces"] = std::move(pieces);
  auto forms = nlohmann::ordered_json::array();
  for (const auto& f : pred.forms)
    forms.push_back({{"component", f.component}, {"psi_sets", f.psi_sets}});
  j["forms"] = std::move(forms);
  return j;
}

inline CpwlPredictor predictor_from_json(const nlohmann::json& j) {
  Partition part = partition_from_json(j.at("partition"));
  std::vector<AffinePiece> pieces;
  for (const auto& p : j.at("pieces")) pieces.push_back(affine_piece_from_json(p));
  return make_predictor(std::move(part), std::move(pieces));
}

}  // namespace cpwlnet
