// Copyright (C) 2026 The RPS Authors
// SPDX-License-Identifier: Apache-2.0
#include "rps/anchor_survey.hpp"

#include <Eigen/Dense>
#include <Eigen/SparseCholesky>
#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "rps/error.hpp"
#include "rps/kernels.hpp"
#include "rps/multilateration.hpp"

namespace rps {

namespace {

constexpr double kMinDistance = 1e-3;

struct Problem {
  std::size_t sweeps;
  std::size_t anchors;
  std::vector<double> log_ranges;  // T x K
  double meas_weight;              // 1 / sigma of a log-range
  double prior_weight;             // 1 / sigma of a second difference, 0 = off
};

struct Estimate {
  std::vector<double> xs, ys;  // track
  std::vector<Vec2> anchors;
};

/// Sum of squared weighted residuals; fills `dist` (K x T, anchor-major).
/// `measurement_cost`, when given, receives the part due to the ranges alone.
double evaluate(const Problem& pb, const Estimate& est, std::vector<double>& dist,
                double* measurement_cost = nullptr) {
  const std::size_t t = pb.sweeps;
  dist.resize(pb.anchors * t);
  double cost = 0.0;
  for (std::size_t j = 0; j < pb.anchors; ++j) {
    std::span<double> out(dist.data() + j * t, t);
    kernels::distances_to_point(est.xs, est.ys, est.anchors[j].x(), est.anchors[j].y(), out);
    for (std::size_t i = 0; i < t; ++i) {
      const double r =
          pb.meas_weight * (std::log(std::max(out[i], kMinDistance)) - pb.log_ranges[i * pb.anchors + j]);
      cost += r * r;
    }
  }
  if (measurement_cost != nullptr) *measurement_cost = cost;
  if (pb.prior_weight > 0.0) {
    for (std::size_t i = 1; i + 1 < t; ++i) {
      const double ax = est.xs[i + 1] - 2.0 * est.xs[i] + est.xs[i - 1];
      const double ay = est.ys[i + 1] - 2.0 * est.ys[i] + est.ys[i - 1];
      cost += pb.prior_weight * pb.prior_weight * (ax * ax + ay * ay);
    }
  }
  return cost;
}

/// Gauss-Newton normal equations split into track (p) and anchor (q) blocks:
/// [hpp hpq; hpq' hqq] [dp; dq] = -[gp; gq]. hpp is block-diagonal plus the
/// banded smoothness prior; hqq is block-diagonal.
struct NormalEquations {
  Eigen::SparseMatrix<double> hpp;
  Eigen::MatrixXd hpq;
  Eigen::MatrixXd hqq;
  Eigen::VectorXd gp;
  Eigen::VectorXd gq;
};

NormalEquations assemble(const Problem& pb, const Estimate& est, const std::vector<double>& dist) {
  const std::size_t t = pb.sweeps;
  const std::size_t k = pb.anchors;
  const auto np = static_cast<Eigen::Index>(2 * t);
  const auto nq = static_cast<Eigen::Index>(2 * k);
  NormalEquations ne;
  ne.hpq = Eigen::MatrixXd::Zero(np, nq);
  ne.hqq = Eigen::MatrixXd::Zero(nq, nq);
  ne.gp = Eigen::VectorXd::Zero(np);
  ne.gq = Eigen::VectorXd::Zero(nq);
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(4 * t + 18 * t);
  const double w2 = pb.meas_weight * pb.meas_weight;

  for (std::size_t i = 0; i < t; ++i) {
    Mat2 hii = Mat2::Zero();
    const auto pi = static_cast<Eigen::Index>(2 * i);
    for (std::size_t j = 0; j < k; ++j) {
      const double d = std::max(dist[j * t + i], kMinDistance);
      const Vec2 diff(est.xs[i] - est.anchors[j].x(), est.ys[i] - est.anchors[j].y());
      const Vec2 grad = diff / (d * d);
      const double r = std::log(d) - pb.log_ranges[i * k + j];
      const Mat2 outer = w2 * grad * grad.transpose();
      const auto qj = static_cast<Eigen::Index>(2 * j);
      hii += outer;
      ne.hqq.block<2, 2>(qj, qj) += outer;
      ne.hpq.block<2, 2>(pi, qj) -= outer;
      ne.gp.segment<2>(pi) += w2 * r * grad;
      ne.gq.segment<2>(qj) -= w2 * r * grad;
    }
    for (int a = 0; a < 2; ++a) {
      for (int b = 0; b < 2; ++b) trip.emplace_back(pi + a, pi + b, hii(a, b));
    }
  }
  if (pb.prior_weight > 0.0) {
    const double pw2 = pb.prior_weight * pb.prior_weight;
    const double coef[3] = {1.0, -2.0, 1.0};
    for (std::size_t i = 1; i + 1 < t; ++i) {
      const double ax = est.xs[i + 1] - 2.0 * est.xs[i] + est.xs[i - 1];
      const double ay = est.ys[i + 1] - 2.0 * est.ys[i] + est.ys[i - 1];
      for (int u = 0; u < 3; ++u) {
        const auto pu = static_cast<Eigen::Index>(2 * (i - 1 + static_cast<std::size_t>(u)));
        ne.gp(pu) += pw2 * coef[u] * ax;
        ne.gp(pu + 1) += pw2 * coef[u] * ay;
        for (int v = 0; v < 3; ++v) {
          const auto pv = static_cast<Eigen::Index>(2 * (i - 1 + static_cast<std::size_t>(v)));
          trip.emplace_back(pu, pv, pw2 * coef[u] * coef[v]);
          trip.emplace_back(pu + 1, pv + 1, pw2 * coef[u] * coef[v]);
        }
      }
    }
  }
  ne.hpp.resize(np, np);
  ne.hpp.setFromTriplets(trip.begin(), trip.end());
  return ne;
}

/// Solves the damped system by eliminating the track block. Returns false if
/// a factorization fails. `schur` receives the reduced anchor matrix.
bool solve_step(const NormalEquations& ne, double lambda, double floor,
                Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>>& solver, bool& analyzed,
                Eigen::VectorXd& dp, Eigen::VectorXd& dq, Eigen::MatrixXd* schur = nullptr) {
  Eigen::SparseMatrix<double> hpp = ne.hpp;
  for (Eigen::Index d = 0; d < hpp.rows(); ++d) hpp.coeffRef(d, d) += lambda * hpp.coeff(d, d) + floor;
  Eigen::MatrixXd hqq = ne.hqq;
  hqq.diagonal() += lambda * ne.hqq.diagonal();
  hqq.diagonal().array() += floor;
  if (!analyzed) {
    solver.analyzePattern(hpp);
    analyzed = true;
  }
  solver.factorize(hpp);
  if (solver.info() != Eigen::Success) return false;
  Eigen::MatrixXd rhs(ne.hpq.rows(), ne.hpq.cols() + 1);
  rhs.leftCols(ne.hpq.cols()) = ne.hpq;
  rhs.col(ne.hpq.cols()) = ne.gp;
  const Eigen::MatrixXd y = solver.solve(rhs);
  if (solver.info() != Eigen::Success) return false;
  const auto nq = ne.hpq.cols();
  Eigen::MatrixXd s = hqq - ne.hpq.transpose() * y.leftCols(nq);
  s = 0.5 * (s + s.transpose());
  const Eigen::VectorXd reduced = -ne.gq + ne.hpq.transpose() * y.col(nq);
  const Eigen::LDLT<Eigen::MatrixXd> ldlt(s);
  if (ldlt.info() != Eigen::Success) return false;
  dq = ldlt.solve(reduced);
  dp = -y.col(nq) - y.leftCols(nq) * dq;
  if (schur != nullptr) *schur = std::move(s);
  return dp.allFinite() && dq.allFinite();
}

/// Levenberg-Marquardt on the joint track/anchor problem. Returns the final cost.
double refine(const Problem& pb, Estimate& est, int max_iterations) {
  std::vector<double> dist;
  double cost = evaluate(pb, est, dist);
  double lambda = 1e-3;
  const std::size_t t = pb.sweeps;
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver;
  bool analyzed = false;
  Eigen::VectorXd dp, dq;
  for (int it = 0; it < max_iterations; ++it) {
    const NormalEquations ne = assemble(pb, est, dist);
    const double scale = std::max(1.0, std::max(ne.hqq.diagonal().maxCoeff(),
                                                Eigen::VectorXd(ne.hpp.diagonal()).maxCoeff()));
    const double floor = 1e-12 * scale;
    bool improved = false;
    while (lambda < 1e12) {
      if (!solve_step(ne, lambda, floor, solver, analyzed, dp, dq)) {
        lambda *= 4.0;
        continue;
      }
      Estimate trial = est;
      for (std::size_t i = 0; i < t; ++i) {
        trial.xs[i] += dp(static_cast<Eigen::Index>(2 * i));
        trial.ys[i] += dp(static_cast<Eigen::Index>(2 * i + 1));
      }
      for (std::size_t j = 0; j < pb.anchors; ++j) {
        trial.anchors[j] += dq.segment<2>(static_cast<Eigen::Index>(2 * j));
      }
      std::vector<double> trial_dist;
      const double trial_cost = evaluate(pb, trial, trial_dist);
      if (std::isfinite(trial_cost) && trial_cost < cost) {
        const bool converged = cost - trial_cost <= 1e-10 * cost;
        est = std::move(trial);
        dist = std::move(trial_dist);
        cost = trial_cost;
        lambda = std::max(lambda / 3.0, 1e-12);
        improved = !converged;
        break;
      }
      lambda *= 4.0;
    }
    if (!improved) break;
  }
  return cost;
}

/// Multilaterated track for a candidate constellation (initial guess only).
void track_from_anchors(const Problem& pb, Estimate& est, std::span<const double> ranges) {
  const std::size_t k = pb.anchors;
  std::vector<Anchor> anchors(k);
  for (std::size_t j = 0; j < k; ++j) anchors[j] = Anchor{static_cast<BandId>(j), est.anchors[j]};
  est.xs.assign(pb.sweeps, 0.0);
  est.ys.assign(pb.sweeps, 0.0);
  Vec2 last = Vec2::Zero();
  for (std::size_t j = 0; j < k; ++j) last += est.anchors[j] / static_cast<double>(k);
  for (std::size_t i = 0; i < pb.sweeps; ++i) {
    try {
      const auto fix = fix_position(anchors, ranges.subspan(i * k, k), 0.0);
      last = fix.position;
    } catch (const Error&) {
      // keep the previous point
    }
    est.xs[i] = last.x();
    est.ys[i] = last.y();
  }
}

void observability(const Problem& pb, const Estimate& est, double sigma_fraction,
                   SurveyResult& out) {
  const std::size_t t = pb.sweeps;
  const std::size_t k = pb.anchors;

  Vec2 mean = Vec2::Zero();
  for (std::size_t i = 0; i < t; ++i) mean += Vec2(est.xs[i], est.ys[i]);
  mean /= static_cast<double>(t);
  Mat2 cov = Mat2::Zero();
  for (std::size_t i = 0; i < t; ++i) {
    const Vec2 d = Vec2(est.xs[i], est.ys[i]) - mean;
    cov += d * d.transpose();
  }
  cov /= static_cast<double>(t);
  const Eigen::SelfAdjointEigenSolver<Mat2> track_eig(cov, Eigen::EigenvaluesOnly);
  out.track_minor_extent_m = std::sqrt(std::max(0.0, track_eig.eigenvalues()(0)));

  // Marginal information of the anchors: H_qq - H_qp H_pp^-1 H_pq.
  std::vector<double> dist;
  double measurement_cost = 0.0;
  evaluate(pb, est, dist, &measurement_cost);
  const NormalEquations ne = assemble(pb, est, dist);
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver;
  bool analyzed = false;
  Eigen::VectorXd dp, dq;
  Eigen::MatrixXd schur;
  const double floor = 1e-9 * std::max(1.0, Eigen::VectorXd(ne.hpp.diagonal()).maxCoeff());
  if (!solve_step(ne, 0.0, floor, solver, analyzed, dp, dq, &schur)) {
    out.worst_anchor_sigma_m = std::numeric_limits<double>::infinity();
    out.observable = false;
    return;
  }
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(schur, Eigen::EigenvaluesOnly);
  // Three gauge directions (translation, rotation) carry no information.
  const double lambda4 = eig.eigenvalues()(3);
  const double dof = std::max(1.0, static_cast<double>(t * k) - static_cast<double>(2 * (t + k)) + 3.0);
  const double variance_scale = std::max(1.0, measurement_cost / dof);
  out.worst_anchor_sigma_m = lambda4 > 0.0 ? std::sqrt(variance_scale / lambda4)
                                           : std::numeric_limits<double>::infinity();

  Vec2 centroid = Vec2::Zero();
  for (const auto& a : est.anchors) centroid += a;
  centroid /= static_cast<double>(k);
  double radius2 = 0.0;
  for (const auto& a : est.anchors) radius2 += (a - centroid).squaredNorm();
  const double rms_radius = std::sqrt(radius2 / static_cast<double>(k));
  out.rms_log_residual = std::sqrt(measurement_cost / static_cast<double>(t * k)) / pb.meas_weight;
  out.observable = std::isfinite(out.worst_anchor_sigma_m) &&
                   out.worst_anchor_sigma_m <= sigma_fraction * rms_radius;
}

}  // namespace

bool unfold_constellation(std::span<const double> ranges, std::size_t sweeps, std::size_t anchors,
                          std::vector<Vec2>& track, std::vector<Vec2>& constellation) {
  const auto t = static_cast<Eigen::Index>(sweeps);
  const auto k = static_cast<Eigen::Index>(anchors);
  if (t < 3 || k < 3 || ranges.size() != sweeps * anchors) return false;
  Eigen::MatrixXd d2(t, k);
  for (Eigen::Index i = 0; i < t; ++i) {
    for (Eigen::Index j = 0; j < k; ++j) {
      const double r = ranges[static_cast<std::size_t>(i * k + j)];
      d2(i, j) = r * r;
    }
  }
  const Eigen::VectorXd row_mean = d2.rowwise().mean();
  const Eigen::RowVectorXd col_mean = d2.colwise().mean();
  const double grand = d2.mean();
  Eigen::MatrixXd b(t, k);
  for (Eigen::Index i = 0; i < t; ++i) {
    for (Eigen::Index j = 0; j < k; ++j) {
      b(i, j) = -0.5 * (d2(i, j) - row_mean(i) - col_mean(j) + grand);
    }
  }
  const Eigen::JacobiSVD<Eigen::MatrixXd> svd(b, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Eigen::VectorXd s = svd.singularValues();
  if (!(s(1) > 1e-12 * s(0))) return false;
  const Eigen::MatrixXd x = svd.matrixU().leftCols(2) * s.head(2).cwiseSqrt().asDiagonal();
  const Eigen::MatrixXd y = svd.matrixV().leftCols(2) * s.head(2).cwiseSqrt().asDiagonal();

  // Centred row means are quadratic in the track coordinates: fit the metric S and offset w.
  Eigen::MatrixXd design(t, 5);
  for (Eigen::Index i = 0; i < t; ++i) {
    design(i, 0) = x(i, 0) * x(i, 0);
    design(i, 1) = 2.0 * x(i, 0) * x(i, 1);
    design(i, 2) = x(i, 1) * x(i, 1);
    design(i, 3) = 2.0 * x(i, 0);
    design(i, 4) = 2.0 * x(i, 1);
  }
  for (Eigen::Index c = 0; c < 3; ++c) design.col(c).array() -= design.col(c).mean();
  const Eigen::VectorXd rhs = (row_mean.array() - row_mean.mean()).matrix();
  const Eigen::VectorXd sol = design.colPivHouseholderQr().solve(rhs);
  Mat2 metric;
  metric << sol(0), sol(1), sol(1), sol(2);
  const Eigen::SelfAdjointEigenSolver<Mat2> eig(metric);
  const double top = eig.eigenvalues()(1);
  if (!(top > 0.0)) return false;
  const Eigen::Vector2d ev = eig.eigenvalues().cwiseMax(1e-9 * top);
  const Mat2 root = eig.eigenvectors() * ev.cwiseSqrt().asDiagonal() * eig.eigenvectors().transpose();
  const Mat2 root_inv = root.inverse();
  const Vec2 track_mean = root_inv * Vec2(sol(3), sol(4));

  track.resize(sweeps);
  constellation.resize(anchors);
  for (Eigen::Index i = 0; i < t; ++i) {
    track[static_cast<std::size_t>(i)] = root * Vec2(x(i, 0), x(i, 1)) + track_mean;
  }
  for (Eigen::Index j = 0; j < k; ++j) {
    constellation[static_cast<std::size_t>(j)] = root_inv * Vec2(y(j, 0), y(j, 1));
  }
  for (const auto& v : track) {
    if (!v.allFinite()) return false;
  }
  for (const auto& v : constellation) {
    if (!v.allFinite()) return false;
  }
  return true;
}

RigidTransform fit_rigid(std::span<const Vec2> points, std::span<const Vec2> reference) {
  if (points.size() != reference.size() || points.empty()) {
    throw ContractError("fit_rigid: point sets differ in size");
  }
  const double n = static_cast<double>(points.size());
  Vec2 cp = Vec2::Zero();
  Vec2 cr = Vec2::Zero();
  for (std::size_t i = 0; i < points.size(); ++i) {
    cp += points[i] / n;
    cr += reference[i] / n;
  }
  Mat2 cross = Mat2::Zero();
  for (std::size_t i = 0; i < points.size(); ++i) {
    cross += (points[i] - cp) * (reference[i] - cr).transpose();
  }
  const Eigen::JacobiSVD<Mat2> svd(cross, Eigen::ComputeFullU | Eigen::ComputeFullV);
  // Reflections are allowed: the handedness of a range-only frame is arbitrary.
  RigidTransform tf;
  tf.rotation = svd.matrixV() * svd.matrixU().transpose();
  tf.translation = cr - tf.rotation * cp;
  return tf;
}

std::vector<Vec2> align_rigid(std::span<const Vec2> points, std::span<const Vec2> reference) {
  const RigidTransform tf = fit_rigid(points, reference);
  std::vector<Vec2> out(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) out[i] = tf.apply(points[i]);
  return out;
}

SurveyResult survey_anchors(std::span<const double> ranges, std::size_t sweeps,
                            std::size_t anchors, std::span<const Vec2> seed_layout,
                            const SurveyOptions& options) {
  if (anchors < static_cast<std::size_t>(kMinAnchors)) {
    throw InsufficientAnchorsError("anchor survey needs at least 4 anchors");
  }
  if (sweeps < 3 || ranges.size() != sweeps * anchors) {
    throw ContractError("survey_anchors: ranges must be a sweeps x anchors matrix, sweeps >= 3");
  }
  if (seed_layout.size() != anchors) throw ContractError("survey_anchors: seed layout size mismatch");
  for (double r : ranges) {
    if (!(r > 0.0) || !std::isfinite(r)) throw ContractError("survey_anchors: ranges must be > 0");
  }

  Problem pb;
  pb.sweeps = sweeps;
  pb.anchors = anchors;
  pb.log_ranges.resize(ranges.size());
  std::transform(ranges.begin(), ranges.end(), pb.log_ranges.begin(),
                 [](double r) { return std::log(r); });
  pb.meas_weight = 1.0 / std::max(options.log_range_sigma, 1e-6);
  pb.prior_weight = options.smoothness_sigma_m > 0.0 ? 1.0 / options.smoothness_sigma_m : 0.0;

  std::vector<double> sorted(ranges.begin(), ranges.end());
  std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(sorted.size() / 2),
                   sorted.end());
  const double span = sorted[sorted.size() / 2];

  std::mt19937_64 rng(options.seed);
  std::uniform_real_distribution<double> uni(-span, span);

  SurveyResult best;
  best.cost = std::numeric_limits<double>::infinity();
  Estimate best_est;
  // Starts: unfolding of time-smoothed ranges, unfolding of the raw ranges,
  // the seed layout, then random constellations.
  std::vector<double> smoothed(ranges.size());
  const auto half = static_cast<std::ptrdiff_t>(std::max(0, options.init_smoothing_sweeps) / 2);
  for (std::size_t j = 0; j < anchors; ++j) {
    for (std::size_t i = 0; i < sweeps; ++i) {
      const auto lo = std::max<std::ptrdiff_t>(0, static_cast<std::ptrdiff_t>(i) - half);
      const auto hi = std::min<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(sweeps) - 1,
                                               static_cast<std::ptrdiff_t>(i) + half);
      double acc = 0.0;
      for (auto r = lo; r <= hi; ++r) acc += pb.log_ranges[static_cast<std::size_t>(r) * anchors + j];
      smoothed[i * anchors + j] = std::exp(acc / static_cast<double>(hi - lo + 1));
    }
  }
  for (int start = 0; start < std::max(1, options.starts); ++start) {
    Estimate est;
    if (start <= 1) {
      std::vector<Vec2> track;
      const std::span<const double> source = start == 0 ? std::span<const double>(smoothed) : ranges;
      if (!unfold_constellation(source, sweeps, anchors, track, est.anchors)) continue;
      est.xs.resize(sweeps);
      est.ys.resize(sweeps);
      for (std::size_t i = 0; i < sweeps; ++i) {
        est.xs[i] = track[i].x();
        est.ys[i] = track[i].y();
      }
    } else if (start == 2) {
      est.anchors.assign(seed_layout.begin(), seed_layout.end());
      track_from_anchors(pb, est, ranges);
    } else {
      est.anchors.resize(anchors);
      for (auto& a : est.anchors) a = Vec2(uni(rng), uni(rng));
      track_from_anchors(pb, est, ranges);
    }
    const double cost = refine(pb, est, options.max_iterations);
    if (std::isfinite(cost) && cost < best.cost) {
      best.cost = cost;
      best.best_start = start;
      best_est = std::move(est);
    }
  }
  if (best.best_start < 0) return best;

  observability(pb, best_est, options.max_anchor_sigma_fraction, best);
  best.observable = best.observable && best.track_minor_extent_m >= options.min_track_extent_m;
  const RigidTransform tf = fit_rigid(best_est.anchors, seed_layout);
  best.anchors.resize(anchors);
  for (std::size_t j = 0; j < anchors; ++j) best.anchors[j] = tf.apply(best_est.anchors[j]);
  best.track.resize(sweeps);
  for (std::size_t i = 0; i < sweeps; ++i) best.track[i] = tf.apply(Vec2(best_est.xs[i], best_est.ys[i]));
  return best;
}

}  // namespace rps
