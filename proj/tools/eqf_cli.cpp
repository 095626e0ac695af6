// Command-line driver for simulation, filtering, Monte Carlo, benchmarks and oracle checks.
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "eqf/errors.hpp"
#include "eqf/experiment.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace eqf;

namespace {

struct Common {
  std::string config_path;
  std::vector<std::string> overrides;
  std::string out;
};

ExperimentConfig resolve(const Common& c) {
  ExperimentConfig cfg = c.config_path.empty() ? make_config(json::object(), c.overrides)
                                               : load_config_file(c.config_path, c.overrides);
  if (!c.out.empty()) cfg.output = c.out;
  fs::create_directories(cfg.output);
  std::ofstream(fs::path(cfg.output) / "config.json") << cfg.resolved.dump(2) << "\n";
  return cfg;
}

std::ofstream open_out(const ExperimentConfig& cfg, const std::string& name) {
  std::ofstream os(fs::path(cfg.output) / name);
  if (!os) throw Error(ErrorKind::InvalidConfig, "cannot write " + (fs::path(cfg.output) / name).string());
  return os;
}

std::string tag(Variant v, Strategy s) { return std::string(variant_name(v)) + "_" + std::string(strategy_name(s)); }

int cmd_simulate(const Common& common, std::uint64_t run) {
  const ExperimentConfig cfg = resolve(common);
  const SimWorld world = make_world(cfg.sim);
  const ImuStream imu = gen_imu(world, run);
  const auto frames = gen_camera(world, imu, run);
  const std::string prov = cfg.provenance() + " run=" + std::to_string(run);
  auto imu_os = open_out(cfg, "imu.csv");
  write_imu_csv(imu_os, imu.samples, prov);
  auto cam_os = open_out(cfg, "camera.csv");
  write_camera_csv(cam_os, frames, prov);
  auto lm_os = open_out(cfg, "landmarks.csv");
  write_landmark_csv(lm_os, world.landmarks, prov);
  std::cout << json{{"imu_samples", imu.samples.size()}, {"frames", frames.size()}, {"output", cfg.output}}.dump() << "\n";
  return 0;
}

int cmd_run(const Common& common, std::uint64_t run) {
  const ExperimentConfig cfg = resolve(common);
  const SimWorld world = make_world(cfg.sim);
  const RunData data = make_run_data(cfg, world, run);
  json report = json::array();
  for (Variant v : cfg.variants)
    for (Strategy s : cfg.strategies) {
      const RunRecord rec = run_filter(cfg, world, data, v, s);
      auto os = open_out(cfg, "run_" + tag(v, s) + ".csv");
      write_run_csv(os, rec, cfg.provenance() + " run=" + std::to_string(run));
      const Rmse r = rmse(rec);
      report.push_back({{"variant", variant_name(v)},
                        {"strategy", strategy_name(s)},
                        {"rmse_position_m", r.position},
                        {"rmse_orientation_deg", r.orientation},
                        {"propagate_seconds", rec.propagate_seconds},
                        {"correct_seconds", rec.correct_seconds}});
    }
  const json out{{"provenance", cfg.provenance()}, {"runs", report}};
  open_out(cfg, "run_summary.json") << out.dump(2) << "\n";
  std::cout << out.dump(2) << "\n";
  return 0;
}

int cmd_mc(const Common& common) {
  const ExperimentConfig cfg = resolve(common);
  const SimWorld world = make_world(cfg.sim);
  const auto ensembles = run_monte_carlo(cfg, world);
  json summaries = json::array();
  for (const EnsembleResult& e : ensembles) {
    const EnsembleSummary s = summarize(e.runs);
    auto os = open_out(cfg, "nees_" + tag(e.variant, e.strategy) + ".csv");
    write_nees_csv(os, s, cfg.provenance());
    summaries.push_back(summary_json(s));
  }
  const json out{{"provenance", cfg.provenance()}, {"ensembles", summaries}};
  open_out(cfg, "summary.json") << out.dump(2) << "\n";
  std::cout << out.dump(2) << "\n";
  return 0;
}

int cmd_bench(const Common& common) {
  const ExperimentConfig cfg = resolve(common);
  const auto rows = run_bench(cfg, default_bench_cases(cfg));
  auto os = open_out(cfg, "bench.csv");
  write_bench_csv(os, rows, cfg.provenance());
  write_bench_csv(std::cout, rows, cfg.provenance());
  return 0;
}

int cmd_observability(const Common& common) {
  const ExperimentConfig cfg = resolve(common);
  const json report = observability_report(cfg);
  open_out(cfg, "observability.json") << report.dump(2) << "\n";
  std::cout << report.dump(2) << "\n";
  return 0;
}

int cmd_verify(const Common& common) {
  const ExperimentConfig cfg = resolve(common);
  const auto checks = verify_suite(cfg);
  json list = json::array();
  bool ok = true;
  for (const Check& c : checks) {
    ok = ok && c.passed;
    list.push_back({{"name", c.name}, {"passed", c.passed}, {"value", c.value}, {"tolerance", c.tolerance}});
    std::cout << (c.passed ? "PASS " : "FAIL ") << c.name << " value=" << c.value << " tol=" << c.tolerance << "\n";
  }
  open_out(cfg, "verify.json") << json{{"provenance", cfg.provenance()}, {"passed", ok}, {"checks", list}}.dump(2) << "\n";
  return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Equivariant-filter VINS experiments.\n\n"
               "Outputs (each starts with a '# config=<hash> seed=<seed>' line):\n"
               "  imu.csv          t,wx,wy,wz,ax,ay,az\n"
               "  camera.csv       t,id,u,v\n"
               "  run_<V>_<S>.csv  t, est_* and true_* (rotation log, v, p, gyro bias, accel bias), sig_th_*, sig_p_*\n"
               "  nees_<V>_<S>.csv t,mean_orientation,mean_position,lo95,hi95\n"
               "  bench.csv        variant,strategy,m,q,p,phase,median_ms,flops,slope\n"};
  app.require_subcommand(1);
  Common common;
  std::uint64_t run = 0;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("-c,--config", common.config_path, "JSON config file (schema_version 1)");
    sub->add_option("--set", common.overrides, "Override a leaf, e.g. --set mc.runs=10")->take_all();
    sub->add_option("-o,--out", common.out, "Output directory (overrides 'output')");
  };
  auto* simulate = app.add_subcommand("simulate", "Write the sensor streams of one run");
  auto* run_cmd = app.add_subcommand("run", "Run every configured variant and strategy once");
  auto* mc = app.add_subcommand("mc", "Monte Carlo ensemble: NEES CSVs and summary.json");
  auto* bench = app.add_subcommand("bench", "Timing and FLOP tables over the bench grid");
  auto* obs = app.add_subcommand("observability", "Stack rank, nullspace and basis report");
  auto* verify = app.add_subcommand("verify", "Cross-strategy and cross-variant oracle checks");
  for (auto* sub : {simulate, run_cmd, mc, bench, obs, verify}) add_common(sub);
  for (auto* sub : {simulate, run_cmd}) sub->add_option("--run", run, "Run index for the noise streams");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }
  try {
    if (*simulate) return cmd_simulate(common, run);
    if (*run_cmd) return cmd_run(common, run);
    if (*mc) return cmd_mc(common);
    if (*bench) return cmd_bench(common);
    if (*obs) return cmd_observability(common);
    if (*verify) return cmd_verify(common);
  } catch (const Error& e) {
    std::cerr << json{{"error", error_kind_name(e.kind())}, {"message", e.what()}}.dump() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << json{{"error", "Internal"}, {"message", e.what()}}.dump() << "\n";
    return 2;
  }
  return 0;
}
