#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "cpwlnet/data_model.hpp"
#include "cpwlnet/error.hpp"
#include "cpwlnet/numeric.hpp"
#include "cpwlnet/partition.hpp"

namespace cpwlnet {

/// x -> A x + b with A of shape dy x dx.
struct AffinePiece {
  Eigen::MatrixXd A;
  Eigen::VectorXd b;

  Eigen::VectorXd operator()(const Eigen::VectorXd& x) const { return A * x + b; }
  int dx() const noexcept { return static_cast<int>(A.cols()); }
  int dy() const noexcept { return static_cast<int>(A.rows()); }
};

struct GroupFit {
  int region = -1;
  AffinePiece piece;
  double group_risk = 0.0;  // un-normalized sum of per-sample losses
  int n_samples = 0;
};

/// Least-squares coefficients for Y ~ Phi * Theta (one column of Theta per
/// target column). Rank-deficient systems get the minimum-norm solution.
inline Eigen::MatrixXd least_squares(const Eigen::MatrixXd& phi, const Eigen::MatrixXd& targets) {
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(phi);
  cod.setThreshold(1e-12);
  Eigen::MatrixXd theta = cod.solve(targets);
  if (!theta.allFinite()) throw NumericalError("least_squares: non-finite solution");
  return theta;
}

/// Sum of per-sample losses of `piece` over `indices`.
inline double group_loss(const Dataset& data, const std::vector<int>& indices,
                         const AffinePiece& piece, const LossFn& loss) {
  std::vector<double> terms;
  terms.reserve(indices.size());
  for (int i : indices) terms.push_back(loss(piece(data[i].x), data[i].y));
  return pairwise_sum(terms);
}

/// Least-squares affine fit of an explicit list of samples.
inline AffinePiece fit_indices_mse(const Dataset& data, const std::vector<int>& indices) {
  if (indices.empty()) throw ArgumentError("fit: group has no samples");
  const int n = static_cast<int>(indices.size());
  Eigen::MatrixXd phi(n, data.dx() + 1);
  Eigen::MatrixXd y(n, data.dy());
  for (int r = 0; r < n; ++r) {
    const Sample& s = data[indices[r]];
    phi.row(r).head(data.dx()) = s.x.transpose();
    phi(r, data.dx()) = 1.0;
    y.row(r) = s.y.transpose();
  }
  const Eigen::MatrixXd theta = least_squares(phi, y);
  AffinePiece piece;
  piece.A = theta.topRows(data.dx()).transpose();
  piece.b = theta.row(data.dx()).transpose();
  return piece;
}

/// Globally optimal affine predictor of one region's samples under MSE.
inline GroupFit fit_group_mse(const Dataset& data, const Partition& part, int region) {
  const auto idx = part.members(region);
  if (idx.empty())
    throw ArgumentError("fit_group_mse: region " + std::to_string(region) + " has no samples");
  GroupFit fit;
  fit.region = region;
  fit.piece = fit_indices_mse(data, idx);
  fit.group_risk = group_loss(data, idx, fit.piece, LossFn::mse());
  fit.n_samples = static_cast<int>(idx.size());
  return fit;
}

/// Approximate minimizer of a generic loss over affine pieces for the samples
/// in `idx`: finite-difference gradient descent with backtracking, started at
/// the least-squares fit. Every accepted step strictly lowers the group loss.
inline std::pair<AffinePiece, double> fit_indices_generic(const Dataset& data,
                                                          const std::vector<int>& idx,
                                                          const LossFn& loss, int iters = 200,
                                                          double step = 0.1) {
  if (iters < 1) throw ArgumentError("fit_group_generic: iters >= 1 required");
  if (!(step > 0.0)) throw ArgumentError("fit_group_generic: step > 0 required");
  AffinePiece start = fit_indices_mse(data, idx);
  const int dx = data.dx(), dy = data.dy();
  const int np = dy * (dx + 1);
  auto unpack = [&](const Eigen::VectorXd& theta) {
    AffinePiece p;
    p.A = Eigen::Map<const Eigen::MatrixXd>(theta.data(), dy, dx);
    p.b = theta.tail(dy);
    return p;
  };
  auto objective = [&](const Eigen::VectorXd& theta) {
    const double v = group_loss(data, idx, unpack(theta), loss);
    if (!std::isfinite(v)) throw NumericalError("fit_group_generic: non-finite loss");
    return v;
  };

  Eigen::VectorXd theta(np);
  theta.head(dy * dx) = Eigen::Map<const Eigen::VectorXd>(start.A.data(), dy * dx);
  theta.tail(dy) = start.b;
  double best = objective(theta);
  if (loss.is_mse()) return {unpack(theta), best};

  for (int it = 0; it < iters; ++it) {
    Eigen::VectorXd grad(np);
    for (int k = 0; k < np; ++k) {
      const double h = 1e-6 * std::max(1.0, std::abs(theta(k)));
      Eigen::VectorXd tp = theta, tm = theta;
      tp(k) += h;
      tm(k) -= h;
      grad(k) = (objective(tp) - objective(tm)) / (2.0 * h);
    }
    const double g2 = grad.squaredNorm();
    if (!(g2 > 0.0)) break;
    double t = step;
    bool moved = false;
    while (t > 1e-14) {
      const Eigen::VectorXd cand = theta - t * grad;
      const double v = objective(cand);
      if (v < best - 1e-4 * t * g2) {
        theta = cand;
        best = v;
        moved = true;
        break;
      }
      t *= 0.5;
    }
    if (!moved) break;
  }
  return {unpack(theta), best};
}

inline GroupFit fit_group_generic(const Dataset& data, const Partition& part, int region,
                                  const LossFn& loss, int iters = 200, double step = 0.1) {
  const auto idx = part.members(region);
  if (idx.empty())
    throw ArgumentError("fit_group_generic: region " + std::to_string(region) + " has no samples");
  auto [piece, value] = fit_indices_generic(data, idx, loss, iters, step);
  return {region, std::move(piece), value, static_cast<int>(idx.size())};
}

/// Fits every sample-bearing region; auxiliary or empty regions get no entry.
inline std::vector<GroupFit> fit_all(const Dataset& data, const Partition& part,
                                     const LossFn& loss) {
  std::vector<GroupFit> fits;
  const auto sizes = part.group_sizes();
  for (int r = 0; r < static_cast<int>(part.regions.size()); ++r) {
    if (sizes[r] == 0) continue;
    fits.push_back(loss.is_mse() ? fit_group_mse(data, part, r)
                                 : fit_group_generic(data, part, r, loss));
  }
  return fits;
}

struct AuxiliaryJoin {
  std::optional<AffinePiece> piece;  // empty when the neighbours meet inside the gap
  std::vector<double> boundaries;    // one breakpoint, or [u', v'] around the auxiliary piece
};

inline constexpr double kAuxAnchor = 0.25;

/// Joins two neighbouring 1-D pieces across the empty gap (u, v) between their
/// groups. If every output component of the two pieces crosses at one common
/// point inside the gap, that point is the breakpoint. Otherwise an auxiliary
/// piece runs from the left piece at u' = u + 0.25(v - u) to the right piece at
/// v' = v - 0.25(v - u).
inline AuxiliaryJoin auxiliary_segment_1d(const GroupFit& left, const GroupFit& right,
                                          std::pair<double, double> gap) {
  const auto [u, v] = gap;
  if (left.piece.dx() != 1 || right.piece.dx() != 1)
    throw ArgumentError("auxiliary_segment_1d: requires dx = 1");
  if (left.piece.dy() != right.piece.dy())
    throw ArgumentError("auxiliary_segment_1d: output widths differ");
  if (!(u < v)) throw ArgumentError("auxiliary_segment_1d: empty gap");

  const int dy = left.piece.dy();
  std::optional<double> crossing;
  bool common = true;
  for (int k = 0; k < dy && common; ++k) {
    const double al = left.piece.A(k, 0), bl = left.piece.b(k);
    const double ar = right.piece.A(k, 0), br = right.piece.b(k);
    if (al == ar) {
      if (bl == br) continue;  // identical component, agrees everywhere
      common = false;
      break;
    }
    const double x = (br - bl) / (al - ar);
    if (!(x > u && x < v)) {
      common = false;
    } else if (!crossing) {
      crossing = x;
    } else if (std::abs(*crossing - x) > 1e-12 * std::max(1.0, std::abs(x))) {
      common = false;
    }
  }
  if (common) return {std::nullopt, {crossing.value_or(0.5 * (u + v))}};

  const double u2 = u + kAuxAnchor * (v - u);
  const double v2 = v - kAuxAnchor * (v - u);
  const Eigen::VectorXd at_u = left.piece(Eigen::VectorXd::Constant(1, u2));
  const Eigen::VectorXd at_v = right.piece(Eigen::VectorXd::Constant(1, v2));
  AffinePiece aux;
  aux.A = (at_v - at_u) / (v2 - u2);
  aux.b = at_u - aux.A * u2;
  return {std::move(aux), {u2, v2}};
}

}  // namespace cpwlnet
