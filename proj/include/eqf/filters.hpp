#pragma once

#include <functional>
#include <span>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "eqf/jacobians.hpp"
#include "eqf/transforms.hpp"

namespace eqf {

enum class Strategy { Naive, TP, TC };

std::string_view strategy_name(Strategy s);
Strategy parse_strategy(std::string_view name);

/// How a newly inserted landmark's error relates to the rest of the state.
/// World: independent of the pose, isotropic in world coordinates.
/// Pose: placed relative to the estimated pose (as a triangulation would), so its world-frame
/// error inherits the pose error plus independent isotropic noise.
enum class LandmarkAnchor { World, Pose };

std::string_view anchor_name(LandmarkAnchor a);
LandmarkAnchor parse_anchor(std::string_view name);

struct FilterConfig {
  Variant variant = Variant::TEqf;
  Strategy strategy = Strategy::Naive;
  Variant aux = Variant::SdEqf;  // auxiliary filter for TP and TC
  NoiseSpec noise;
  CameraModel cam;
  int batches = 1;  // corrections per camera frame
  bool joseph = false;
  int substeps = 4;
  LandmarkAnchor anchor = LandmarkAnchor::World;
};

/// One estimator: mean, covariance and the bookkeeping for the chosen strategy.
///
/// For Naive and TP the stored covariance is the target variant's own. For TC it is the
/// equivalent covariance in the auxiliary variant's coordinates, P = T^-1 P* T^-T with
/// T = T_aux->target at the current estimate.
class Filter {
 public:
  Filter(const FilterConfig& config, const VinsState& x0, const Eigen::MatrixXd& P0_target,
         std::vector<int> landmark_ids = {}, double t0 = 0.0);

  /// Integrates sample i over [t_i, t_{i+1}) and the last sample up to t_end.
  void propagate(std::span<const ImuSample> window, double t_end);
  /// One EKF update with features whose ids are already in the state.
  void correct(std::span<const Feature> batch);
  /// Splits the frame's known features round-robin into `batches` updates.
  void correct_frame(const CameraObservation& frame);
  /// Appends a landmark with isotropic noise variance sigma^2, correlated with the current
  /// state according to config().anchor.
  void add_landmark(int id, const Vec3& estimate, double sigma);

  bool has_landmark(int id) const { return index_.count(id) != 0; }
  int landmark_index(int id) const;
  const std::vector<int>& landmark_ids() const { return ids_; }

  const VinsState& state() const { return x_; }
  double time() const { return t_; }
  const FilterConfig& config() const { return config_; }
  /// The covariance actually stored (see class comment).
  const Eigen::MatrixXd& tracked_covariance() const { return P_; }
  /// Covariance in the target variant's coordinates; for TC this is the optional recovery step.
  Eigen::MatrixXd target_covariance() const;
  /// IMU 15x15 block of target_covariance() in O(m).
  Mat15 target_covariance_imu() const;
  Variant tracked_variant() const;

  double propagate_seconds() const { return propagate_seconds_; }
  double correct_seconds() const { return correct_seconds_; }
  int symmetry_repairs() const { return symmetry_repairs_; }

 private:
  void symmetrize();

  FilterConfig config_;
  VinsState x_;
  Eigen::MatrixXd P_;
  std::vector<int> ids_;
  std::unordered_map<int, int> index_;
  double t_ = 0.0;
  double propagate_seconds_ = 0.0;
  double correct_seconds_ = 0.0;
  int symmetry_repairs_ = 0;
};

/// Initial standard deviations, expressed in ESKF error coordinates.
struct PriorSpec {
  double attitude = 0.01;    // rad
  double velocity = 0.02;    // m/s
  double position = 0.005;   // m
  double gyro_bias = 0.005;  // rad/s
  double accel_bias = 0.03;  // m/s^2
  double landmark = 0.05;    // m
};

/// Diagonal prior in ESKF coordinates.
Eigen::MatrixXd eskf_prior(const PriorSpec& prior, int m);
/// The same prior mapped into `variant`'s coordinates at x0.
Eigen::MatrixXd initial_covariance(Variant variant, const VinsState& x0, const PriorSpec& prior);

/// Verifies symmetry and PSD-ness (min eigenvalue >= -1e-10 trace); throws NotPSD.
void require_psd(const Eigen::MatrixXd& P, const char* what);

struct FrameEstimate {
  double t = 0.0;
  VinsState estimate;
  Eigen::MatrixXd P_target;
};

/// Called when a frame references a landmark id that is not in the state yet; returns the
/// initial estimate and its standard deviation.
using LandmarkInitializer = std::function<std::pair<Vec3, double>(int id)>;

/// Alternating propagate/correct over interleaved streams. on_frame (optional) sees the
/// filter after each frame's correction.
void run_sequence(Filter& filter, std::span<const ImuSample> imu, std::span<const CameraObservation> frames,
                  const LandmarkInitializer& init, const std::function<void(const Filter&)>& on_frame);

/// Convenience form that records the posterior at every camera time.
std::vector<FrameEstimate> run_sequence(Filter& filter, std::span<const ImuSample> imu,
                                        std::span<const CameraObservation> frames, const LandmarkInitializer& init);

}  // namespace eqf
