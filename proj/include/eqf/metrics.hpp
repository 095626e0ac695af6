#pragma once

#include <span>
#include <string>
#include <vector>

#include "eqf/filters.hpp"
#include "eqf/flops.hpp"
#include "eqf/sim.hpp"

namespace eqf {

using Vec15 = Eigen::Matrix<double, 15, 1>;

struct FrameRecord {
  double t = 0.0;
  double truth_t = 0.0;
  VinsState estimate;  // IMU part only
  VinsState truth;     // IMU part only
  Vec15 error;         // chart_forward(variant, estimate, truth) on the IMU block
  Mat15 P;             // target-variant covariance, IMU block
};

struct RunRecord {
  Variant variant = Variant::TEqf;
  Strategy strategy = Strategy::Naive;
  std::vector<FrameRecord> frames;
  double propagate_seconds = 0.0;
  double correct_seconds = 0.0;
  flops::Counts flops;
};

FrameRecord make_frame_record(Variant variant, double t, const VinsState& estimate, const Mat15& P_imu, double truth_t,
                              const VinsState& truth);

struct Rmse {
  double position = 0.0;     // metres
  double orientation = 0.0;  // degrees
};

/// Root mean square over every frame of every run; throws Misaligned on timestamp mismatch.
Rmse rmse(std::span<const RunRecord> runs);
Rmse rmse(const RunRecord& run);
/// Position RMSE of one run after the best rotation about gravity and translation are removed,
/// so drift along the unobservable directions does not count as error.
double aligned_position_rmse(const RunRecord& run);

enum class Block { Orientation, Position };

/// e^T P^-1 e; throws SingularCovariance unless P is positive definite.
double nees(const Eigen::VectorXd& e, const Eigen::MatrixXd& P);
/// NEES of one 3x3 block in the filter's own error coordinates.
double nees(const FrameRecord& frame, Block block);

struct NeesBounds {
  double lo = 0.0;
  double hi = 0.0;
};

/// Two-sided chi-square envelope for the mean of `runs` independent dof-dimensional NEES values.
NeesBounds nees_bounds(int dof, int runs, double confidence = 0.95);

/// Fraction of (run, frame) pairs whose yaw error component leaves the filter's own 3-sigma bound.
double yaw_exceedance(std::span<const RunRecord> runs);

struct EnsembleSummary {
  Variant variant = Variant::TEqf;
  Strategy strategy = Strategy::Naive;
  int runs = 0;
  std::vector<double> t;
  std::vector<double> nees_orientation;  // per-time mean over runs
  std::vector<double> nees_position;
  NeesBounds bounds;
  Rmse rmse;
  std::vector<double> run_position_rmse;
  std::vector<double> run_orientation_rmse;
  std::vector<double> run_aligned_position_rmse;
  double yaw_exceedance = 0.0;
  std::vector<double> propagate_seconds;
  std::vector<double> correct_seconds;
};

/// Runs must share frame times.
EnsembleSummary summarize(std::span<const RunRecord> runs);

/// Mean of v over indices [begin, end).
double mean_over(const std::vector<double>& v, std::size_t begin, std::size_t end);

struct BenchCase {
  Variant variant = Variant::TEqf;
  Strategy strategy = Strategy::Naive;
  Variant aux = Variant::SdEqf;
  int m = 40;
  int q = 20;
  int batches = 1;
};

struct BenchResult {
  BenchCase c;
  double propagate_ms = 0.0;  // median per camera frame
  double correct_ms = 0.0;
  double propagate_flops = 0.0;  // per camera frame
  double correct_flops = 0.0;
};

struct BenchOptions {
  int repeats = 5;  // median of this many timed passes
  int frames = 2;   // camera frames per pass
  std::uint64_t seed = 7;
};

/// Times one configuration on a synthetic scene with all m landmarks in the state from the start.
BenchResult bench_case(const BenchCase& c, const BenchOptions& options = {});

/// Least-squares slope of log(y) against log(x).
double loglog_slope(std::span<const double> x, std::span<const double> y);

/// True if ys never drops by more than `tolerance` (relative) from one entry to the next.
bool monotone_nondecreasing(std::span<const double> ys, double tolerance);

}  // namespace eqf
