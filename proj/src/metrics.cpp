#include "eqf/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <boost/math/distributions/chi_squared.hpp>

#include "eqf/errors.hpp"

namespace eqf {

namespace {

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

void check_aligned(const FrameRecord& f) {
  if (std::abs(f.t - f.truth_t) > 1e-9) throw Error(ErrorKind::Misaligned, "estimate and truth timestamps differ");
}

}  // namespace

FrameRecord make_frame_record(Variant variant, double t, const VinsState& estimate, const Mat15& P_imu, double truth_t,
                              const VinsState& truth) {
  FrameRecord r;
  r.t = t;
  r.truth_t = truth_t;
  r.estimate = estimate.imu_part();
  r.truth = truth.imu_part();
  r.error = chart_forward(variant, r.estimate, r.truth);
  r.P = P_imu;
  return r;
}

Rmse rmse(std::span<const RunRecord> runs) {
  double sp = 0.0, so = 0.0;
  std::size_t n = 0;
  for (const RunRecord& run : runs)
    for (const FrameRecord& f : run.frames) {
      check_aligned(f);
      sp += (f.estimate.p - f.truth.p).squaredNorm();
      so += so3_log(f.estimate.R.transpose() * f.truth.R).squaredNorm();
      ++n;
    }
  if (n == 0) throw Error(ErrorKind::Misaligned, "no frames to score");
  const double deg = 180.0 / std::numbers::pi;
  return {std::sqrt(sp / n), std::sqrt(so / n) * deg};
}

Rmse rmse(const RunRecord& run) { return rmse(std::span<const RunRecord>(&run, 1)); }

double aligned_position_rmse(const RunRecord& run) {
  if (run.frames.empty()) throw Error(ErrorKind::Misaligned, "aligned RMSE of an empty run");
  const double n = static_cast<double>(run.frames.size());
  Vec3 est_mean = Vec3::Zero(), truth_mean = Vec3::Zero();
  for (const FrameRecord& f : run.frames) {
    est_mean += f.estimate.p;
    truth_mean += f.truth.p;
  }
  est_mean /= n;
  truth_mean /= n;
  // Least-squares yaw from the horizontal cross-covariance.
  double sin_part = 0.0, cos_part = 0.0;
  for (const FrameRecord& f : run.frames) {
    const Vec3 e = f.estimate.p - est_mean;
    const Vec3 t = f.truth.p - truth_mean;
    sin_part += e.x() * t.y() - e.y() * t.x();
    cos_part += e.x() * t.x() + e.y() * t.y();
  }
  const Mat3 yaw = Eigen::AngleAxisd(std::atan2(sin_part, cos_part), Vec3::UnitZ()).toRotationMatrix();
  double sum = 0.0;
  for (const FrameRecord& f : run.frames) sum += (f.truth.p - truth_mean - yaw * (f.estimate.p - est_mean)).squaredNorm();
  return std::sqrt(sum / n);
}

double nees(const Eigen::VectorXd& e, const Eigen::MatrixXd& P) {
  if (P.rows() != e.size() || P.cols() != e.size()) throw Error(ErrorKind::DimensionMismatch, "nees operands");
  const Eigen::LLT<Eigen::MatrixXd> llt(P);
  if (llt.info() != Eigen::Success) throw Error(ErrorKind::SingularCovariance, "covariance block is not positive definite");
  return e.dot(llt.solve(e));
}

double nees(const FrameRecord& frame, Block block) {
  const int at = block == Block::Orientation ? layout::kTheta : layout::kPos;
  return nees(frame.error.segment<3>(at), frame.P.block<3, 3>(at, at));
}

NeesBounds nees_bounds(int dof, int runs, double confidence) {
  if (dof < 1 || runs < 1 || !(confidence > 0.0 && confidence < 1.0))
    throw Error(ErrorKind::InvalidConfig, "nees_bounds arguments");
  const boost::math::chi_squared dist(static_cast<double>(dof) * runs);
  const double tail = 0.5 * (1.0 - confidence);
  return {boost::math::quantile(dist, tail) / runs, boost::math::quantile(dist, 1.0 - tail) / runs};
}

double yaw_exceedance(std::span<const RunRecord> runs) {
  std::size_t out = 0, n = 0;
  for (const RunRecord& run : runs)
    for (const FrameRecord& f : run.frames) {
      const double sigma = std::sqrt(std::max(f.P(2, 2), 0.0));
      if (std::abs(f.error[2]) > 3.0 * sigma) ++out;
      ++n;
    }
  return n ? static_cast<double>(out) / n : 0.0;
}

double mean_over(const std::vector<double>& v, std::size_t begin, std::size_t end) {
  end = std::min(end, v.size());
  if (begin >= end) return 0.0;
  double s = 0.0;
  for (std::size_t i = begin; i < end; ++i) s += v[i];
  return s / static_cast<double>(end - begin);
}

EnsembleSummary summarize(std::span<const RunRecord> runs) {
  if (runs.empty()) throw Error(ErrorKind::Misaligned, "empty ensemble");
  EnsembleSummary s;
  s.variant = runs.front().variant;
  s.strategy = runs.front().strategy;
  s.runs = static_cast<int>(runs.size());
  const std::size_t frames = runs.front().frames.size();
  s.t.resize(frames);
  s.nees_orientation.assign(frames, 0.0);
  s.nees_position.assign(frames, 0.0);
  for (const RunRecord& run : runs) {
    if (run.frames.size() != frames) throw Error(ErrorKind::Misaligned, "runs have different frame counts");
    for (std::size_t k = 0; k < frames; ++k) {
      const FrameRecord& f = run.frames[k];
      if (std::abs(f.t - runs.front().frames[k].t) > 1e-9) throw Error(ErrorKind::Misaligned, "runs have different frame times");
      s.t[k] = f.t;
      s.nees_orientation[k] += nees(f, Block::Orientation) / s.runs;
      s.nees_position[k] += nees(f, Block::Position) / s.runs;
    }
    const Rmse r = rmse(run);
    s.run_position_rmse.push_back(r.position);
    s.run_orientation_rmse.push_back(r.orientation);
    s.run_aligned_position_rmse.push_back(aligned_position_rmse(run));
    s.propagate_seconds.push_back(run.propagate_seconds);
    s.correct_seconds.push_back(run.correct_seconds);
  }
  s.bounds = nees_bounds(3, s.runs);
  s.rmse = rmse(runs);
  s.yaw_exceedance = yaw_exceedance(runs);
  return s;
}

BenchResult bench_case(const BenchCase& c, const BenchOptions& options) {
  SimConfig cfg;
  cfg.landmarks = c.m;
  cfg.min_covisible = 0;
  cfg.cam_rate = 10.0;
  cfg.imu_rate = 10.0 * c.q;
  cfg.seed = options.seed;
  cfg.trajectory.duration = (options.frames + 1) / cfg.cam_rate;
  const SimWorld world = make_world(cfg);
  const ImuStream imu = gen_imu(world);
  const std::vector<CameraObservation> frames = gen_camera(world, imu);

  FilterConfig fc;
  fc.variant = c.variant;
  fc.strategy = c.strategy;
  fc.aux = c.aux;
  fc.batches = c.batches;
  const VinsState x0 = truth_with_landmarks(world, imu, 0);
  const Eigen::MatrixXd P0 = initial_covariance(c.variant, x0, PriorSpec{});
  std::vector<int> ids(c.m);
  for (int i = 0; i < c.m; ++i) ids[i] = i;
  const std::span<const CameraObservation> timed(frames.data(), std::min<std::size_t>(frames.size(), options.frames));

  auto pass = [&] {
    Filter f(fc, x0, P0, ids, 0.0);
    run_sequence(f, imu.samples, timed, nullptr, nullptr);
    return std::pair{f.propagate_seconds(), f.correct_seconds()};
  };

  pass();  // warm-up
  std::vector<double> prop, corr;
  for (int r = 0; r < options.repeats; ++r) {
    const auto [p, q] = pass();
    prop.push_back(p);
    corr.push_back(q);
  }
  flops::Counts counts;
  {
    flops::Recorder rec(counts);
    pass();
  }
  const double per_frame = 1.0 / static_cast<double>(timed.size());
  BenchResult out;
  out.c = c;
  out.propagate_ms = 1e3 * median(prop) * per_frame;
  out.correct_ms = 1e3 * median(corr) * per_frame;
  out.propagate_flops = static_cast<double>(counts.propagate) * per_frame;
  out.correct_flops = static_cast<double>(counts.correct) * per_frame;
  return out;
}

double loglog_slope(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw Error(ErrorKind::DimensionMismatch, "slope fit needs matching series of length >= 2");
  const std::size_t n = x.size();
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += std::log(x[i]) / n;
    my += std::log(y[i]) / n;
  }
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = std::log(x[i]) - mx;
    sxy += dx * (std::log(y[i]) - my);
    sxx += dx * dx;
  }
  return sxy / sxx;
}

bool monotone_nondecreasing(std::span<const double> ys, double tolerance) {
  for (std::size_t i = 1; i < ys.size(); ++i)
    if (ys[i] < ys[i - 1] * (1.0 - tolerance)) return false;
  return true;
}

}  // namespace eqf
