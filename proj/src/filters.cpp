#include "eqf/filters.hpp"

#include <algorithm>
#include <chrono>
#include <string>

#include "eqf/errors.hpp"
#include "eqf/flops.hpp"

namespace eqf {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

}  // namespace

std::string_view strategy_name(Strategy s) {
  switch (s) {
    case Strategy::Naive: return "Naive";
    case Strategy::TP: return "TP";
    case Strategy::TC: return "TC";
  }
  return "?";
}

Strategy parse_strategy(std::string_view name) {
  for (Strategy s : {Strategy::Naive, Strategy::TP, Strategy::TC})
    if (strategy_name(s) == name) return s;
  throw Error(ErrorKind::InvalidConfig, "unknown strategy '" + std::string(name) + "'");
}

std::string_view anchor_name(LandmarkAnchor a) { return a == LandmarkAnchor::World ? "world" : "pose"; }

LandmarkAnchor parse_anchor(std::string_view name) {
  for (LandmarkAnchor a : {LandmarkAnchor::World, LandmarkAnchor::Pose})
    if (anchor_name(a) == name) return a;
  throw Error(ErrorKind::InvalidConfig, "unknown landmark anchor '" + std::string(name) + "'");
}

void require_psd(const Eigen::MatrixXd& P, const char* what) {
  if (P.rows() != P.cols()) throw Error(ErrorKind::DimensionMismatch, std::string(what) + " is not square");
  const double scale = std::max(P.cwiseAbs().maxCoeff(), 1e-300);
  if ((P - P.transpose()).cwiseAbs().maxCoeff() > 1e-9 * scale)
    throw Error(ErrorKind::NotPSD, std::string(what) + " is not symmetric");
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(0.5 * (P + P.transpose()), Eigen::EigenvaluesOnly);
  if (eig.eigenvalues().minCoeff() < -1e-10 * std::abs(P.trace()))
    throw Error(ErrorKind::NotPSD, std::string(what) + " has a negative eigenvalue");
}

Eigen::MatrixXd eskf_prior(const PriorSpec& prior, int m) {
  Eigen::VectorXd sd(state_dim(m));
  sd.segment<3>(layout::kTheta).setConstant(prior.attitude);
  sd.segment<3>(layout::kVel).setConstant(prior.velocity);
  sd.segment<3>(layout::kPos).setConstant(prior.position);
  sd.segment<3>(layout::kGyroBias).setConstant(prior.gyro_bias);
  sd.segment<3>(layout::kAccelBias).setConstant(prior.accel_bias);
  sd.tail(3 * m).setConstant(prior.landmark);
  return sd.array().square().matrix().asDiagonal();
}

Eigen::MatrixXd initial_covariance(Variant variant, const VinsState& x0, const PriorSpec& prior) {
  return transform_from_eskf(variant, x0).sandwich(eskf_prior(prior, x0.m()));
}

Filter::Filter(const FilterConfig& config, const VinsState& x0, const Eigen::MatrixXd& P0_target,
               std::vector<int> landmark_ids, double t0)
    : config_(config), x_(x0), ids_(std::move(landmark_ids)), t_(t0) {
  if (config_.batches < 1) throw Error(ErrorKind::InvalidConfig, "batches must be >= 1");
  if (static_cast<int>(ids_.size()) != x0.m())
    throw Error(ErrorKind::DimensionMismatch, "landmark id list does not match the state");
  if (P0_target.rows() != x0.dim()) throw Error(ErrorKind::DimensionMismatch, "initial covariance size");
  require_psd(P0_target, "initial covariance");
  for (int i = 0; i < static_cast<int>(ids_.size()); ++i) index_[ids_[i]] = i;
  if (config_.strategy == Strategy::TC)
    P_ = transform_closed_form(config_.variant, config_.aux, x_).sandwich(P0_target);
  else
    P_ = P0_target;
}

int Filter::landmark_index(int id) const {
  const auto it = index_.find(id);
  if (it == index_.end()) throw Error(ErrorKind::DimensionMismatch, "landmark id " + std::to_string(id) + " not in state");
  return it->second;
}

Variant Filter::tracked_variant() const {
  return config_.strategy == Strategy::TC ? config_.aux : config_.variant;
}

Eigen::MatrixXd Filter::target_covariance() const {
  if (config_.strategy != Strategy::TC) return P_;
  return transform_closed_form(config_.aux, config_.variant, x_).sandwich(P_);
}

Mat15 Filter::target_covariance_imu() const {
  const Mat15 Pii = P_.topLeftCorner<15, 15>();
  if (config_.strategy != Strategy::TC) return Pii;
  const Mat15 A = transform_closed_form(config_.aux, config_.variant, x_.imu_part()).core;
  return A * Pii * A.transpose();
}

void Filter::symmetrize() {
  const double asym = (P_ - P_.transpose()).cwiseAbs().maxCoeff();
  if (asym > 1e-9 * std::max(P_.cwiseAbs().maxCoeff(), 1e-300)) ++symmetry_repairs_;
  P_ = 0.5 * (P_ + P_.transpose());
}

void Filter::propagate(std::span<const ImuSample> window, double t_end) {
  const auto start = Clock::now();
  flops::PhaseScope phase(flops::Phase::Propagate);
  const bool naive = config_.strategy == Strategy::Naive;
  const Variant step_variant = naive ? config_.variant : config_.aux;
  const bool dense = naive && variant_has_landmark_coupling(step_variant);
  const VinsState x_start = x_;

  PhiQAccumulator structured(x_.m());
  DensePhiQAccumulator dense_acc(dense ? x_.dim() : 0);
  if (t_end < t_) throw Error(ErrorKind::NonMonotonicTime, "propagation target before filter time");
  for (std::size_t i = 0; i < window.size(); ++i) {
    if (i + 1 < window.size() && window[i + 1].t < window[i].t)
      throw Error(ErrorKind::NonMonotonicTime, "IMU window out of order");
    if (window[i].t >= t_end) break;
    const double t1 = i + 1 < window.size() ? std::min(window[i + 1].t, t_end) : t_end;
    // A sample that started before the filter time only covers the remainder of its interval.
    const double dt = t1 - std::max(window[i].t, t_);
    if (dt <= 0.0) continue;
    const StructuredPhiQ step = discrete_step(step_variant, x_, window[i], dt, config_.noise, config_.substeps);
    if (dense)
      dense_acc.push(step);
    else
      structured.push(step);
    x_ = propagate_mean(x_, window[i], dt);
  }
  t_ = t_end;

  if (dense) {
    const DensePhiQ& acc = dense_acc.result();
    const auto n = static_cast<std::uint64_t>(P_.rows());
    P_ = acc.phi * P_ * acc.phi.transpose() + acc.q;
    flops::add(2 * flops::gemm(n, n, n));
  } else if (config_.strategy == Strategy::TP) {
    const StructuredPhiQ& acc = structured.result();
    const ArrowMatrix lift_end = transform_closed_form(config_.aux, config_.variant, x_);
    const ArrowMatrix drop_start = transform_closed_form(config_.variant, config_.aux, x_start);
    const ArrowMatrix phi = lift_end * acc.phi * drop_start;
    const Eigen::MatrixXd q = acc.coupled() ? lift_end.sandwich(acc.q_full) : lift_end.sandwich_core(acc.q_core);
    P_ = phi.sandwich(P_) + q;
  } else {
    const StructuredPhiQ& acc = structured.result();
    P_ = acc.phi.sandwich(P_);
    if (acc.coupled())
      P_ += acc.q_full;
    else
      P_.topLeftCorner<15, 15>() += acc.q_core;
  }
  symmetrize();
  propagate_seconds_ += seconds_since(start);
}

void Filter::correct(std::span<const Feature> batch) {
  const auto start = Clock::now();
  flops::PhaseScope phase(flops::Phase::Correct);
  std::vector<int> idx;
  std::vector<Vec2> z;
  for (const Feature& f : batch) {
    const int i = landmark_index(f.id);
    if (camera_point(x_, i, config_.cam).z() <= kMinDepth) continue;
    idx.push_back(i);
    z.push_back(f.uv);
  }
  if (idx.empty()) {
    correct_seconds_ += seconds_since(start);
    return;
  }
  const int rows = 2 * static_cast<int>(idx.size());
  const int n = x_.dim();
  const Variant h_variant = tracked_variant();
  const Eigen::MatrixXd H = measurement_H(h_variant, x_, idx, config_.cam);
  Eigen::VectorXd residual(rows);
  for (std::size_t r = 0; r < idx.size(); ++r) residual.segment<2>(2 * r) = z[r] - measure(x_, idx[r], config_.cam);

  // H only touches the IMU columns and the observed landmarks.
  std::vector<int> cols;
  for (int c = 0; c < 15; ++c) cols.push_back(c);
  for (int i : idx)
    for (int k = 0; k < 3; ++k) cols.push_back(layout::landmark(i) + k);
  const int nc = static_cast<int>(cols.size());
  Eigen::MatrixXd Hs(rows, nc);
  Eigen::MatrixXd Ps(nc, n);
  for (int c = 0; c < nc; ++c) {
    Hs.col(c) = H.col(cols[c]);
    Ps.row(c) = P_.row(cols[c]);
  }
  const Eigen::MatrixXd HP = Hs * Ps;
  Eigen::MatrixXd HPs(rows, nc);
  for (int c = 0; c < nc; ++c) HPs.col(c) = HP.col(cols[c]);
  const double var_px = config_.noise.sigma_pixel * config_.noise.sigma_pixel;
  Eigen::MatrixXd S = HPs * Hs.transpose();
  S.diagonal().array() += var_px;
  const Eigen::LLT<Eigen::MatrixXd> llt(S);
  if (llt.info() != Eigen::Success) throw Error(ErrorKind::SingularInnovation, "innovation covariance not positive definite");
  const Eigen::MatrixXd Kt = llt.solve(HP);  // K^T, since P is symmetric
  const Eigen::VectorXd delta = Kt.transpose() * residual;
  flops::add(flops::gemm(rows, nc, n) + flops::gemm(rows, nc, rows) + flops::gemm(rows, rows, n) +
             flops::gemm(n, rows, 1));

  if (config_.joseph) {
    Eigen::MatrixXd IKH = Eigen::MatrixXd::Identity(n, n) - Kt.transpose() * H;
    P_ = IKH * P_ * IKH.transpose() + var_px * Kt.transpose() * Kt;
    flops::add(3 * flops::gemm(n, n, n));
  } else {
    P_.noalias() -= Kt.transpose() * HP;
    flops::add(flops::gemm(n, rows, n));
  }
  symmetrize();

  if (config_.strategy == Strategy::TC && h_variant != config_.variant) {
    const VinsState prior = x_;
    const ErrorState eps = transform_closed_form(h_variant, config_.variant, prior) * delta;
    x_ = chart_inverse(config_.variant, prior, eps);
    const ArrowMatrix relative =
        transform_closed_form(config_.variant, h_variant, x_) * transform_closed_form(h_variant, config_.variant, prior);
    P_ = relative.sandwich(P_);
  } else {
    x_ = chart_inverse(config_.variant, x_, delta);
  }
  correct_seconds_ += seconds_since(start);
}

void Filter::correct_frame(const CameraObservation& frame) {
  const int p = config_.batches;
  std::vector<std::vector<Feature>> batches(p);
  int k = 0;
  for (const Feature& f : frame.features) {
    if (!has_landmark(f.id)) continue;
    batches[k++ % p].push_back(f);
  }
  for (const auto& b : batches)
    if (!b.empty()) correct(b);
}

void Filter::add_landmark(int id, const Vec3& estimate, double sigma) {
  if (has_landmark(id)) throw Error(ErrorKind::DimensionMismatch, "landmark id " + std::to_string(id) + " already in state");
  const Variant v = tracked_variant();
  const int n = x_.dim();
  // New landmark rows of the ESKF hub for the tracked coordinates, composed with the old hub inverse.
  const Mat15 old_inv = transform_to_eskf(v, x_.imu_part()).core;
  VinsState grown = x_;
  grown.f.push_back(estimate);
  VinsState probe = x_.imu_part();
  probe.f.push_back(estimate);
  const ArrowMatrix hub_new = transform_from_eskf(v, probe);
  const Mat3 D = hub_new.diag[0];
  Coupling world_error = Coupling::Zero();
  if (config_.anchor == LandmarkAnchor::Pose) {
    // f = p + R b with b fixed in the body: the landmark error follows the position error and
    // the attitude error acting on b.
    const Vec3 body = x_.R.transpose() * (estimate - x_.p);
    world_error.block<3, 3>(0, layout::kPos) = Mat3::Identity();
    world_error.block<3, 3>(0, layout::kTheta) = -x_.R * skew(body);
  }
  const Coupling J = (hub_new.coupling[0] + D * world_error) * old_inv;

  Eigen::MatrixXd P = Eigen::MatrixXd::Zero(n + 3, n + 3);
  P.topLeftCorner(n, n) = P_;
  const Eigen::MatrixXd cross = J * P_.topRows<15>();  // 3 x n
  P.block(n, 0, 3, n) = cross;
  P.block(0, n, n, 3) = cross.transpose();
  P.block<3, 3>(n, n) = J * P_.topLeftCorner<15, 15>() * J.transpose() + sigma * sigma * D * D.transpose();
  P_ = std::move(P);
  x_ = std::move(grown);
  index_[id] = static_cast<int>(ids_.size());
  ids_.push_back(id);
}

void run_sequence(Filter& filter, std::span<const ImuSample> imu, std::span<const CameraObservation> frames,
                  const LandmarkInitializer& init, const std::function<void(const Filter&)>& on_frame) {
  // next is the sample in force at the filter time.
  std::size_t next = 0;
  while (next + 1 < imu.size() && imu[next + 1].t <= filter.time() + 1e-12) ++next;
  for (const CameraObservation& frame : frames) {
    std::size_t end = next;
    while (end < imu.size() && imu[end].t < frame.t - 1e-12) ++end;
    if (frame.t > filter.time()) filter.propagate(imu.subspan(next, end - next), frame.t);
    if (end < imu.size() && imu[end].t <= frame.t + 1e-12)
      next = end;
    else if (end > next)
      next = end - 1;
    for (const Feature& f : frame.features) {
      if (filter.has_landmark(f.id) || !init) continue;
      const auto [estimate, sigma] = init(f.id);
      filter.add_landmark(f.id, estimate, sigma);
    }
    filter.correct_frame(frame);
    if (on_frame) on_frame(filter);
  }
}

std::vector<FrameEstimate> run_sequence(Filter& filter, std::span<const ImuSample> imu,
                                        std::span<const CameraObservation> frames, const LandmarkInitializer& init) {
  std::vector<FrameEstimate> out;
  run_sequence(filter, imu, frames, init, [&](const Filter& f) {
    out.push_back({f.time(), f.state(), f.target_covariance()});
  });
  return out;
}

}  // namespace eqf
