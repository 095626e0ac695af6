#include <gtest/gtest.h>

#include <sstream>

#include "eqf/errors.hpp"
#include "eqf/experiment.hpp"

namespace eqf {
namespace {

using nlohmann::json;

ErrorKind kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorKind::NumericalFailure;
}

TEST(Config, DefaultsResolve) {
  const ExperimentConfig c = make_config(json::object());
  EXPECT_EQ(c.sim.imu_rate, 200.0);
  EXPECT_EQ(c.sim.cam_rate, 10.0);
  EXPECT_EQ(c.sim.landmarks, 40);
  EXPECT_EQ(c.variants, std::vector<Variant>{Variant::TEqf});
  EXPECT_EQ(c.resolved["schema_version"], kSchemaVersion);
  EXPECT_EQ(c.resolved, default_config_json());
}

TEST(Config, RejectsUnknownKeysAndWrongTypes) {
  EXPECT_EQ(kind_of([] { make_config(json{{"colour", 1}}); }), ErrorKind::InvalidConfig);
  EXPECT_EQ(kind_of([] { make_config(json{{"world", {{"imu_hz", 100}}}}); }), ErrorKind::InvalidConfig);
  EXPECT_EQ(kind_of([] { make_config(json{{"world", {{"landmarks", "many"}}}}); }), ErrorKind::InvalidConfig);
  EXPECT_EQ(kind_of([] { make_config(json{{"world", {{"landmarks", 2.5}}}}); }), ErrorKind::InvalidConfig);
  EXPECT_EQ(kind_of([] { make_config(json{{"filter", {{"variants", {1, 2}}}}}); }), ErrorKind::InvalidConfig);
  EXPECT_EQ(kind_of([] { make_config(json{{"filter", {{"variants", {"UKF"}}}}}); }), ErrorKind::InvalidConfig);
  EXPECT_EQ(kind_of([] { make_config(json{{"schema_version", 2}}); }), ErrorKind::InvalidConfig);
  EXPECT_EQ(kind_of([] { make_config(json{{"world", {{"imu_rate", 205.0}}}}); }), ErrorKind::InvalidConfig);
  EXPECT_EQ(kind_of([] { make_config(json{{"mc", {{"runs", 0}}}}); }), ErrorKind::InvalidConfig);
  EXPECT_EQ(kind_of([] { make_config(json::array()); }), ErrorKind::InvalidConfig);
  EXPECT_EQ(kind_of([] { load_config_file("/nonexistent/config.json"); }), ErrorKind::InvalidConfig);
}

TEST(Config, OverridesApplyWithTypes) {
  const ExperimentConfig c = make_config(json{{"mc", {{"runs", 5}}}},
                                         {"world.seed=9", "trajectory.shape=circle", "filter.variants=[\"ESKF\",\"SD_EQF\"]",
                                          "filter.joseph=true", "noise.sigma_pixel=0.5"});
  EXPECT_EQ(c.sim.seed, 9u);
  EXPECT_EQ(c.sim.trajectory.shape, Shape::Circle);
  EXPECT_EQ(c.variants, (std::vector<Variant>{Variant::Eskf, Variant::SdEqf}));
  EXPECT_TRUE(c.joseph);
  EXPECT_EQ(c.sim.noise.sigma_pixel, 0.5);
  EXPECT_EQ(c.runs, 5);
  EXPECT_EQ(kind_of([] { make_config(json::object(), {"world.seed"}); }), ErrorKind::InvalidConfig);
  EXPECT_EQ(kind_of([] { make_config(json::object(), {"world.nope=1"}); }), ErrorKind::InvalidConfig);
  EXPECT_EQ(kind_of([] { make_config(json::object(), {"world=1"}); }), ErrorKind::InvalidConfig);
  EXPECT_EQ(kind_of([] { make_config(json::object(), {"world.seed=abc"}); }), ErrorKind::InvalidConfig);
}

TEST(Config, HashTracksResolvedContent) {
  const ExperimentConfig a = make_config(json::object());
  const ExperimentConfig b = make_config(json{{"world", {{"seed", 1}}}});
  const ExperimentConfig c = make_config(json::object(), {"world.seed=2"});
  EXPECT_EQ(a.hash, b.hash);
  EXPECT_NE(a.hash, c.hash);
  EXPECT_EQ(a.provenance().rfind("config=", 0), 0u);
  EXPECT_NE(a.provenance().find("seed=1"), std::string::npos);
  EXPECT_NE(c.provenance().find("seed=2"), std::string::npos);
}

TEST(Config, FilterConfigCarriesSettings) {
  const ExperimentConfig c = make_config(json::object(), {"filter.batches=3", "noise.sigma_pixel=2.0", "filter.aux=ESKF"});
  const FilterConfig f = c.filter_config(Variant::RiEkf, Strategy::TC);
  EXPECT_EQ(f.variant, Variant::RiEkf);
  EXPECT_EQ(f.strategy, Strategy::TC);
  EXPECT_EQ(f.aux, Variant::Eskf);
  EXPECT_EQ(f.batches, 3);
  EXPECT_EQ(f.noise.sigma_pixel, 2.0);
}

ExperimentConfig short_config() {
  return make_config(json::object(), {"trajectory.duration=2.0", "mc.runs=3"});
}

TEST(Runs, RunDataIsDeterministic) {
  const ExperimentConfig c = short_config();
  const SimWorld w = make_world(c.sim);
  const RunData a = make_run_data(c, w, 1);
  const RunData b = make_run_data(c, w, 1);
  const RunData other = make_run_data(c, w, 2);
  EXPECT_EQ(a.x0.p, b.x0.p);
  EXPECT_NE(a.x0.p, other.x0.p);
  EXPECT_EQ(a.landmark_noise.size(), w.landmarks.size());
  EXPECT_EQ(a.frames.size(), 20u);
}

TEST(Runs, FilterRecordsEveryFrame) {
  const ExperimentConfig c = short_config();
  const SimWorld w = make_world(c.sim);
  const RunData d = make_run_data(c, w, 0);
  const RunRecord r = run_filter(c, w, d, Variant::SdEqf, Strategy::Naive);
  ASSERT_EQ(r.frames.size(), d.frames.size());
  for (std::size_t k = 0; k < r.frames.size(); ++k) {
    EXPECT_NEAR(r.frames[k].t, d.frames[k].t, 1e-12);
    EXPECT_NEAR(r.frames[k].truth_t, r.frames[k].t, 1e-12);
  }
  EXPECT_LT(rmse(r).position, 0.1);
  EXPECT_GT(r.propagate_seconds, 0.0);
}

TEST(Runs, MonteCarloIsIndependentOfWorkerCount) {
  ExperimentConfig c = short_config();
  c.variants = {Variant::Eskf, Variant::SdEqf};
  const SimWorld w = make_world(c.sim);
  const auto serial = run_monte_carlo(c, w);
  c.workers = 3;
  const auto parallel = run_monte_carlo(c, w);
  ASSERT_EQ(serial.size(), 2u);
  for (std::size_t e = 0; e < serial.size(); ++e)
    for (int r = 0; r < c.runs; ++r) {
      const auto& a = serial[e].runs[r].frames.back();
      const auto& b = parallel[e].runs[r].frames.back();
      EXPECT_EQ(a.estimate.p, b.estimate.p);
      EXPECT_EQ(a.P, b.P);
    }
}

TEST(Outputs, CsvAndSummaryCarryProvenance) {
  const ExperimentConfig c = short_config();
  const SimWorld w = make_world(c.sim);
  std::vector<RunRecord> runs;
  for (std::uint64_t r = 0; r < 2; ++r) runs.push_back(run_filter(c, w, make_run_data(c, w, r), Variant::Eskf, Strategy::Naive));
  std::ostringstream run_csv, nees_csv;
  write_run_csv(run_csv, runs[0], c.provenance());
  const EnsembleSummary s = summarize(runs);
  write_nees_csv(nees_csv, s, c.provenance());
  EXPECT_EQ(run_csv.str().rfind("# " + c.provenance(), 0), 0u);
  EXPECT_EQ(nees_csv.str().rfind("# " + c.provenance(), 0), 0u);
  const json j = summary_json(s);
  EXPECT_EQ(j["runs"], 2);
  EXPECT_EQ(j["variant"], "ESKF");
  EXPECT_GT(j["rmse"]["position_m"].get<double>(), 0.0);
}

TEST(Bench, DefaultGridAndCsv) {
  const ExperimentConfig c = make_config(json::object(), {"bench.m_grid=[4,8]", "bench.repeats=1", "bench.frames=1"});
  const auto cases = default_bench_cases(c);
  EXPECT_EQ(cases.size(), 2u * (2 + 2 * 2));
  const auto rows = run_bench(c, cases);
  ASSERT_EQ(rows.size(), cases.size());
  std::ostringstream os;
  write_bench_csv(os, rows, c.provenance());
  std::istringstream lines(os.str());
  std::string line;
  int count = 0;
  while (std::getline(lines, line)) ++count;
  EXPECT_EQ(count, 2 + 2 * static_cast<int>(rows.size()));
}

TEST(Verify, SuitePassesOnDefaults) {
  for (const Check& c : verify_suite(make_config(json::object())))
    EXPECT_TRUE(c.passed) << c.name << " value " << c.value << " tolerance " << c.tolerance;
}

TEST(Observability, ReportHasEveryVariant) {
  const json r = observability_report(make_config(json::object()));
  ASSERT_EQ(r["variants"].size(), kAllVariants.size());
  for (const json& v : r["variants"]) {
    EXPECT_EQ(v["nullity"], 4) << v["variant"];
    EXPECT_LT(v["basis_residual"].get<double>(), 1e-6) << v["variant"];
  }
}

}  // namespace
}  // namespace eqf
