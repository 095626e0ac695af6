#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "json.hpp"

#include "eqf/metrics.hpp"
#include "eqf/observability.hpp"

namespace eqf {

inline constexpr int kSchemaVersion = 1;

struct BenchGrid {
  std::vector<int> m_grid{20, 40, 80, 160};
  std::vector<int> q_grid{20};
  std::vector<int> batch_grid{1, 4};
  int repeats = 5;
  int frames = 2;
};

struct ExperimentConfig {
  SimConfig sim;
  PriorSpec prior;
  std::vector<Variant> variants{Variant::TEqf};
  std::vector<Strategy> strategies{Strategy::Naive};
  Variant aux = Variant::SdEqf;
  int batches = 1;
  bool joseph = false;
  int substeps = 4;
  LandmarkAnchor anchor = LandmarkAnchor::Pose;
  int runs = 100;
  int workers = 1;
  BenchGrid bench;
  std::string output = "out";

  nlohmann::json resolved;  // the validated key tree, defaults filled in
  std::uint64_t hash = 0;   // FNV-1a of resolved.dump()

  FilterConfig filter_config(Variant variant, Strategy strategy) const;
  /// "config=<hash hex> seed=<seed>", embedded in every output file.
  std::string provenance() const;
};

nlohmann::json default_config_json();

/// Validates `user` against the default key tree (unknown keys and wrong types are rejected with
/// InvalidConfig), applies "a.b.c=value" overrides, and parses the result.
ExperimentConfig make_config(const nlohmann::json& user, const std::vector<std::string>& overrides = {});
ExperimentConfig load_config_file(const std::string& path, const std::vector<std::string>& overrides = {});

/// Sensor streams for one Monte Carlo run.
struct RunData {
  ImuStream imu;
  std::vector<CameraObservation> frames;
  VinsState x0;                         // initial estimate drawn from the prior around the truth
  std::vector<Vec3> landmark_noise;      // standard normal draws indexed by landmark id
};

RunData make_run_data(const ExperimentConfig& cfg, const SimWorld& world, std::uint64_t run);

/// Initial guess for a landmark first seen at the filter's current time: the truth perturbed by
/// sigma * noise, either in the world or relative to the estimated pose (see LandmarkAnchor).
Vec3 initial_landmark_guess(LandmarkAnchor anchor, const Vec3& truth_landmark, const VinsState& truth,
                            const VinsState& estimate, const Vec3& noise, double sigma);

/// Initializer that inserts landmarks into `filter` with initial_landmark_guess at the filter's time.
LandmarkInitializer landmark_initializer(const ExperimentConfig& cfg, const SimWorld& world, const RunData& data,
                                         const Filter& filter);

RunRecord run_filter(const ExperimentConfig& cfg, const SimWorld& world, const RunData& data, Variant variant,
                     Strategy strategy);

struct EnsembleResult {
  Variant variant;
  Strategy strategy;
  std::vector<RunRecord> runs;  // ordered by run index
};

/// Every (variant, strategy) pair of the config over cfg.runs runs, fanned out over cfg.workers threads.
std::vector<EnsembleResult> run_monte_carlo(const ExperimentConfig& cfg, const SimWorld& world);

void write_run_csv(std::ostream& os, const RunRecord& run, const std::string& provenance);
void write_nees_csv(std::ostream& os, const EnsembleSummary& s, const std::string& provenance);
nlohmann::json summary_json(const EnsembleSummary& s);

struct BenchRow {
  BenchResult result;
  double propagate_slope = 0.0;  // fit over the m grid of the same (variant, strategy, q, p)
  double correct_slope = 0.0;
};

std::vector<BenchRow> run_bench(const ExperimentConfig& cfg, const std::vector<BenchCase>& cases);
/// The default grid: Naive/TP/TC T-EqF and Naive SD-EqF over m_grid x q_grid x batch_grid.
std::vector<BenchCase> default_bench_cases(const ExperimentConfig& cfg);
void write_bench_csv(std::ostream& os, const std::vector<BenchRow>& rows, const std::string& provenance);

/// Noise-free scene for stack analysis: `landmarks` landmarks over `duration` seconds.
struct ObservabilityScene {
  std::vector<VinsState> states;
  std::vector<ImuSample> imu;
  std::vector<std::size_t> frames;
  CameraModel cam;
};

ObservabilityScene make_observability_scene(const ExperimentConfig& cfg, int landmarks, double duration);
nlohmann::json observability_report(const ExperimentConfig& cfg);

struct Check {
  std::string name;
  bool passed = false;
  double value = 0.0;
  double tolerance = 0.0;
};

/// Cross-strategy and cross-variant oracle checks on a short scene.
std::vector<Check> verify_suite(const ExperimentConfig& cfg);

/// Max absolute difference of the IMU pose and landmarks between two estimates.
double state_distance(const VinsState& a, const VinsState& b);
/// ||A - B||_F / ||B||_F.
double relative_frobenius(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B);

}  // namespace eqf
