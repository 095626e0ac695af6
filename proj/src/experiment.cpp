#include "eqf/experiment.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>
#include <tuple>

#include "eqf/errors.hpp"
#include "eqf/rng.hpp"

namespace eqf {

using nlohmann::json;

namespace {

json vec_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

Vec3 vec_from(const json& j, const std::string& what) {
  if (!j.is_array() || j.size() != 3) throw Error(ErrorKind::InvalidConfig, what + " must be a 3-vector");
  return Vec3(j[0].get<double>(), j[1].get<double>(), j[2].get<double>());
}

bool same_kind(const json& def, const json& val) {
  if (def.is_number_integer()) return val.is_number_integer() || (val.is_number_float() && std::floor(val.get<double>()) == val.get<double>());
  if (def.is_number()) return val.is_number();
  return def.type() == val.type();
}

void validate_against(const json& def, const json& val, const std::string& path) {
  if (def.is_object()) {
    if (!val.is_object()) throw Error(ErrorKind::InvalidConfig, "'" + path + "' must be an object");
    for (auto it = val.begin(); it != val.end(); ++it) {
      const std::string child = path.empty() ? it.key() : path + "." + it.key();
      if (!def.contains(it.key())) throw Error(ErrorKind::InvalidConfig, "unknown config key '" + child + "'");
      validate_against(def[it.key()], it.value(), child);
    }
    return;
  }
  if (def.is_array()) {
    if (!val.is_array()) throw Error(ErrorKind::InvalidConfig, "'" + path + "' must be an array");
    if (!def.empty())
      for (const json& e : val)
        if (!same_kind(def.front(), e)) throw Error(ErrorKind::InvalidConfig, "'" + path + "' has an element of the wrong type");
    return;
  }
  if (!same_kind(def, val)) throw Error(ErrorKind::InvalidConfig, "'" + path + "' has the wrong type");
}

void merge_into(json& base, const json& patch) {
  for (auto it = patch.begin(); it != patch.end(); ++it) {
    if (it.value().is_object() && base[it.key()].is_object())
      merge_into(base[it.key()], it.value());
    else
      base[it.key()] = it.value();
  }
}

void apply_override(json& tree, const json& defaults, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) throw Error(ErrorKind::InvalidConfig, "override '" + assignment + "' is not key=value");
  const std::string path = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  json value = json::parse(text, nullptr, false);
  if (value.is_discarded()) value = text;

  json* node = &tree;
  const json* def = &defaults;
  std::stringstream ss(path);
  std::string part;
  std::vector<std::string> parts;
  while (std::getline(ss, part, '.')) parts.push_back(part);
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (!def->is_object() || !def->contains(parts[i])) throw Error(ErrorKind::InvalidConfig, "unknown config key '" + path + "'");
    def = &(*def)[parts[i]];
    node = &(*node)[parts[i]];
  }
  if (def->is_object()) throw Error(ErrorKind::InvalidConfig, "override '" + path + "' does not name a leaf");
  validate_against(*def, value, path);
  *node = value;
}

template <typename T, typename Parse>
std::vector<T> parse_list(const json& j, Parse parse) {
  std::vector<T> out;
  for (const json& e : j) out.push_back(parse(e.get<std::string>()));
  return out;
}

std::string hex64(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

VinsState random_state(std::mt19937_64& gen, int m) {
  std::normal_distribution<double> n(0.0, 1.0);
  auto r3 = [&](double s) {
    const double x = n(gen);
    const double y = n(gen);
    const double z = n(gen);
    return Vec3(s * x, s * y, s * z);
  };
  VinsState x;
  x.R = so3_exp(r3(1.0));
  x.v = r3(1.0);
  x.p = r3(3.0);
  x.bw = r3(0.05);
  x.ba = r3(0.2);
  for (int i = 0; i < m; ++i) x.f.push_back(r3(5.0));
  return x;
}

}  // namespace

json default_config_json() {
  const SimConfig sim;
  const PriorSpec prior;
  const BenchGrid bench;
  const auto& tr = sim.trajectory;
  return json{
      {"schema_version", kSchemaVersion},
      {"trajectory",
       {{"shape", shape_name(tr.shape)},
        {"scale", tr.scale},
        {"period", tr.period},
        {"yaw_mode", yaw_mode_name(tr.yaw_mode)},
        {"yaw_rate", tr.yaw_rate},
        {"tilt", tr.tilt},
        {"duration", tr.duration}}},
      {"world",
       {{"imu_rate", sim.imu_rate},
        {"cam_rate", sim.cam_rate},
        {"landmarks", sim.landmarks},
        {"max_visible", sim.max_visible},
        {"min_covisible", sim.min_covisible},
        {"seed", sim.seed},
        {"gyro_bias0", vec_json(sim.gyro_bias0)},
        {"accel_bias0", vec_json(sim.accel_bias0)}}},
      {"noise",
       {{"sigma_gyro", sim.noise.sigma_gyro},
        {"sigma_accel", sim.noise.sigma_accel},
        {"sigma_gyro_walk", sim.noise.sigma_gyro_walk},
        {"sigma_accel_walk", sim.noise.sigma_accel_walk},
        {"sigma_pixel", sim.noise.sigma_pixel}}},
      {"camera",
       {{"fx", sim.cam.fx}, {"fy", sim.cam.fy}, {"cx", sim.cam.cx}, {"cy", sim.cam.cy}, {"width", sim.cam.width},
        {"height", sim.cam.height}}},
      {"prior",
       {{"attitude", prior.attitude},
        {"velocity", prior.velocity},
        {"position", prior.position},
        {"gyro_bias", prior.gyro_bias},
        {"accel_bias", prior.accel_bias},
        {"landmark", prior.landmark}}},
      {"filter",
       {{"variants", json::array({"T_EQF"})},
        {"strategies", json::array({"Naive"})},
        {"aux", "SD_EQF"},
        {"batches", 1},
        {"joseph", false},
        {"substeps", 4},
        {"landmark_anchor", "pose"}}},
      {"mc", {{"runs", 100}, {"workers", 1}}},
      {"bench",
       {{"m_grid", bench.m_grid},
        {"q_grid", bench.q_grid},
        {"batch_grid", bench.batch_grid},
        {"repeats", bench.repeats},
        {"frames", bench.frames}}},
      {"output", "out"},
  };
}

ExperimentConfig make_config(const json& user, const std::vector<std::string>& overrides) {
  const json defaults = default_config_json();
  validate_against(defaults, user, "");
  json tree = defaults;
  merge_into(tree, user);
  for (const std::string& o : overrides) apply_override(tree, defaults, o);
  if (tree["schema_version"].get<int>() != kSchemaVersion)
    throw Error(ErrorKind::InvalidConfig, "unsupported schema_version " + tree["schema_version"].dump());

  ExperimentConfig c;
  const json& tr = tree["trajectory"];
  c.sim.trajectory.shape = parse_shape(tr["shape"].get<std::string>());
  c.sim.trajectory.scale = tr["scale"].get<double>();
  c.sim.trajectory.period = tr["period"].get<double>();
  c.sim.trajectory.yaw_mode = parse_yaw_mode(tr["yaw_mode"].get<std::string>());
  c.sim.trajectory.yaw_rate = tr["yaw_rate"].get<double>();
  c.sim.trajectory.tilt = tr["tilt"].get<double>();
  c.sim.trajectory.duration = tr["duration"].get<double>();
  const json& w = tree["world"];
  c.sim.imu_rate = w["imu_rate"].get<double>();
  c.sim.cam_rate = w["cam_rate"].get<double>();
  c.sim.landmarks = w["landmarks"].get<int>();
  c.sim.max_visible = w["max_visible"].get<int>();
  c.sim.min_covisible = w["min_covisible"].get<int>();
  c.sim.seed = w["seed"].get<std::uint64_t>();
  c.sim.gyro_bias0 = vec_from(w["gyro_bias0"], "world.gyro_bias0");
  c.sim.accel_bias0 = vec_from(w["accel_bias0"], "world.accel_bias0");
  const json& n = tree["noise"];
  c.sim.noise.sigma_gyro = n["sigma_gyro"].get<double>();
  c.sim.noise.sigma_accel = n["sigma_accel"].get<double>();
  c.sim.noise.sigma_gyro_walk = n["sigma_gyro_walk"].get<double>();
  c.sim.noise.sigma_accel_walk = n["sigma_accel_walk"].get<double>();
  c.sim.noise.sigma_pixel = n["sigma_pixel"].get<double>();
  const json& cam = tree["camera"];
  c.sim.cam.fx = cam["fx"].get<double>();
  c.sim.cam.fy = cam["fy"].get<double>();
  c.sim.cam.cx = cam["cx"].get<double>();
  c.sim.cam.cy = cam["cy"].get<double>();
  c.sim.cam.width = cam["width"].get<int>();
  c.sim.cam.height = cam["height"].get<int>();
  const json& pr = tree["prior"];
  c.prior.attitude = pr["attitude"].get<double>();
  c.prior.velocity = pr["velocity"].get<double>();
  c.prior.position = pr["position"].get<double>();
  c.prior.gyro_bias = pr["gyro_bias"].get<double>();
  c.prior.accel_bias = pr["accel_bias"].get<double>();
  c.prior.landmark = pr["landmark"].get<double>();
  const json& f = tree["filter"];
  c.variants = parse_list<Variant>(f["variants"], parse_variant);
  c.strategies = parse_list<Strategy>(f["strategies"], parse_strategy);
  c.aux = parse_variant(f["aux"].get<std::string>());
  c.batches = f["batches"].get<int>();
  c.joseph = f["joseph"].get<bool>();
  c.substeps = f["substeps"].get<int>();
  c.anchor = parse_anchor(f["landmark_anchor"].get<std::string>());
  c.runs = tree["mc"]["runs"].get<int>();
  c.workers = tree["mc"]["workers"].get<int>();
  const json& b = tree["bench"];
  c.bench.m_grid = b["m_grid"].get<std::vector<int>>();
  c.bench.q_grid = b["q_grid"].get<std::vector<int>>();
  c.bench.batch_grid = b["batch_grid"].get<std::vector<int>>();
  c.bench.repeats = b["repeats"].get<int>();
  c.bench.frames = b["frames"].get<int>();
  c.output = tree["output"].get<std::string>();

  c.sim.validate();
  if (c.variants.empty() || c.strategies.empty()) throw Error(ErrorKind::InvalidConfig, "variant and strategy lists must be non-empty");
  if (c.batches < 1 || c.substeps < 1 || c.runs < 1 || c.workers < 1 || c.bench.repeats < 1 || c.bench.frames < 1)
    throw Error(ErrorKind::InvalidConfig, "counts must be positive");
  for (int v : c.bench.m_grid)
    if (v < 0) throw Error(ErrorKind::InvalidConfig, "bench.m_grid entries must be non-negative");
  for (int v : c.bench.q_grid)
    if (v < 1) throw Error(ErrorKind::InvalidConfig, "bench.q_grid entries must be positive");
  for (int v : c.bench.batch_grid)
    if (v < 1) throw Error(ErrorKind::InvalidConfig, "bench.batch_grid entries must be positive");
  if (c.prior.attitude < 0 || c.prior.velocity < 0 || c.prior.position < 0 || c.prior.gyro_bias < 0 ||
      c.prior.accel_bias < 0 || c.prior.landmark < 0)
    throw Error(ErrorKind::InvalidConfig, "prior standard deviations must be non-negative");

  c.resolved = std::move(tree);
  c.hash = fnv1a(c.resolved.dump());
  return c;
}

ExperimentConfig load_config_file(const std::string& path, const std::vector<std::string>& overrides) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::InvalidConfig, "cannot read config file '" + path + "'");
  const json user = json::parse(in, nullptr, false);
  if (user.is_discarded()) throw Error(ErrorKind::InvalidConfig, "config file '" + path + "' is not valid JSON");
  return make_config(user, overrides);
}

FilterConfig ExperimentConfig::filter_config(Variant variant, Strategy strategy) const {
  FilterConfig fc;
  fc.variant = variant;
  fc.strategy = strategy;
  fc.aux = aux;
  fc.noise = sim.noise;
  fc.cam = sim.cam;
  fc.batches = batches;
  fc.joseph = joseph;
  fc.substeps = substeps;
  fc.anchor = anchor;
  return fc;
}

std::string ExperimentConfig::provenance() const {
  return "config=" + hex64(hash) + " seed=" + std::to_string(sim.seed) + " schema=" + std::to_string(kSchemaVersion);
}

RunData make_run_data(const ExperimentConfig& cfg, const SimWorld& world, std::uint64_t run) {
  RunData d;
  d.imu = gen_imu(world, run);
  d.frames = gen_camera(world, d.imu, run);
  auto gen = substream(cfg.sim.seed, "initial-error", run);
  std::normal_distribution<double> n(0.0, 1.0);
  const Eigen::MatrixXd P0 = eskf_prior(cfg.prior, 0);
  ErrorState e(15);
  for (int i = 0; i < 15; ++i) e[i] = std::sqrt(P0(i, i)) * n(gen);
  d.x0 = chart_inverse(Variant::Eskf, d.imu.truth.front(), e);
  for (std::size_t i = 0; i < world.landmarks.size(); ++i) {
    const double x = n(gen);
    const double y = n(gen);
    const double z = n(gen);
    d.landmark_noise.emplace_back(x, y, z);
  }
  return d;
}

Vec3 initial_landmark_guess(LandmarkAnchor anchor, const Vec3& truth_landmark, const VinsState& truth,
                            const VinsState& estimate, const Vec3& noise, double sigma) {
  if (anchor == LandmarkAnchor::World) return truth_landmark + sigma * noise;
  return estimate.p + estimate.R * (truth.R.transpose() * (truth_landmark - truth.p)) + sigma * noise;
}

LandmarkInitializer landmark_initializer(const ExperimentConfig& cfg, const SimWorld& world, const RunData& data,
                                         const Filter& filter) {
  return [&cfg, &world, &data, &filter](int id) {
    const auto k = static_cast<std::size_t>(std::llround(filter.time() * cfg.sim.imu_rate));
    const double sigma = cfg.prior.landmark;
    const Vec3 guess = initial_landmark_guess(cfg.anchor, world.landmarks.at(id), data.imu.truth.at(k), filter.state(),
                                              data.landmark_noise.at(id), sigma);
    return std::pair{guess, sigma};
  };
}

RunRecord run_filter(const ExperimentConfig& cfg, const SimWorld& world, const RunData& data, Variant variant,
                     Strategy strategy) {
  RunRecord rec;
  rec.variant = variant;
  rec.strategy = strategy;
  Filter filter(cfg.filter_config(variant, strategy), data.x0, initial_covariance(variant, data.x0, cfg.prior), {}, 0.0);
  const LandmarkInitializer init = landmark_initializer(cfg, world, data, filter);
  run_sequence(filter, data.imu.samples, data.frames, init, [&](const Filter& f) {
    const auto k = static_cast<std::size_t>(std::llround(f.time() * cfg.sim.imu_rate));
    rec.frames.push_back(make_frame_record(variant, f.time(), f.state(), f.target_covariance_imu(),
                                           static_cast<double>(k) / cfg.sim.imu_rate, data.imu.truth.at(k)));
  });
  rec.propagate_seconds = filter.propagate_seconds();
  rec.correct_seconds = filter.correct_seconds();
  return rec;
}

std::vector<EnsembleResult> run_monte_carlo(const ExperimentConfig& cfg, const SimWorld& world) {
  std::vector<EnsembleResult> out;
  for (Variant v : cfg.variants)
    for (Strategy s : cfg.strategies) out.push_back({v, s, std::vector<RunRecord>(cfg.runs)});
  std::atomic<int> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (int r = next++; r < cfg.runs; r = next++) {
      try {
        const RunData data = make_run_data(cfg, world, static_cast<std::uint64_t>(r));
        for (EnsembleResult& e : out) e.runs[r] = run_filter(cfg, world, data, e.variant, e.strategy);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = cfg.runs;
      }
    }
  };
  const int threads = std::min(cfg.workers, cfg.runs);
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int i = 0; i < threads; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);
  return out;
}

void write_run_csv(std::ostream& os, const RunRecord& run, const std::string& provenance) {
  os << "# " << provenance << " variant=" << variant_name(run.variant) << " strategy=" << strategy_name(run.strategy) << "\n";
  os << "t";
  for (const char* who : {"est", "true"})
    for (const char* q : {"rx", "ry", "rz", "vx", "vy", "vz", "px", "py", "pz", "bwx", "bwy", "bwz", "bax", "bay", "baz"})
      os << ',' << who << '_' << q;
  os << ",sig_th_x,sig_th_y,sig_th_z,sig_p_x,sig_p_y,sig_p_z\n";
  os.precision(12);
  auto state = [&](const VinsState& x) {
    const Vec3 r = so3_log(x.R);
    for (const Vec3* v : {&r, &x.v, &x.p, &x.bw, &x.ba}) os << ',' << v->x() << ',' << v->y() << ',' << v->z();
  };
  for (const FrameRecord& f : run.frames) {
    os << f.t;
    state(f.estimate);
    state(f.truth);
    for (int i : {0, 1, 2, 6, 7, 8}) os << ',' << std::sqrt(std::max(f.P(i, i), 0.0));
    os << '\n';
  }
}

void write_nees_csv(std::ostream& os, const EnsembleSummary& s, const std::string& provenance) {
  os << "# " << provenance << " variant=" << variant_name(s.variant) << " strategy=" << strategy_name(s.strategy)
     << " runs=" << s.runs << "\n";
  os << "t,mean_orientation,mean_position,lo95,hi95\n";
  os.precision(10);
  for (std::size_t k = 0; k < s.t.size(); ++k)
    os << s.t[k] << ',' << s.nees_orientation[k] << ',' << s.nees_position[k] << ',' << s.bounds.lo << ',' << s.bounds.hi
       << '\n';
}

double root_mean_square(const std::vector<double>& values) {
  double sum = 0.0;
  for (double v : values) sum += v * v;
  return values.empty() ? 0.0 : std::sqrt(sum / static_cast<double>(values.size()));
}

json summary_json(const EnsembleSummary& s) {
  const std::size_t n = s.t.size();
  const std::size_t third = 2 * n / 3;
  auto sum = [](const std::vector<double>& v) {
    double t = 0;
    for (double x : v) t += x;
    return t;
  };
  return json{
      {"variant", variant_name(s.variant)},
      {"strategy", strategy_name(s.strategy)},
      {"runs", s.runs},
      {"rmse",
       {{"position_m", s.rmse.position},
        {"orientation_deg", s.rmse.orientation},
        {"aligned_position_m", root_mean_square(s.run_aligned_position_rmse)}}},
      {"nees",
       {{"orientation_final_third", mean_over(s.nees_orientation, third, n)},
        {"position_final_third", mean_over(s.nees_position, third, n)},
        {"orientation_final", n ? s.nees_orientation.back() : 0.0},
        {"position_final", n ? s.nees_position.back() : 0.0},
        {"lo95", s.bounds.lo},
        {"hi95", s.bounds.hi}}},
      {"yaw_3sigma_exceedance", s.yaw_exceedance},
      {"mean_seconds", {{"propagate", sum(s.propagate_seconds) / s.runs}, {"correct", sum(s.correct_seconds) / s.runs}}},
  };
}

std::vector<BenchCase> default_bench_cases(const ExperimentConfig& cfg) {
  std::vector<BenchCase> cases;
  for (int q : cfg.bench.q_grid)
    for (int m : cfg.bench.m_grid) {
      cases.push_back({Variant::TEqf, Strategy::Naive, cfg.aux, m, q, 1});
      cases.push_back({Variant::TEqf, Strategy::TP, cfg.aux, m, q, 1});
      for (int p : cfg.bench.batch_grid) {
        cases.push_back({Variant::TEqf, Strategy::TC, cfg.aux, m, q, p});
        cases.push_back({cfg.aux, Strategy::Naive, cfg.aux, m, q, p});
      }
    }
  return cases;
}

std::vector<BenchRow> run_bench(const ExperimentConfig& cfg, const std::vector<BenchCase>& cases) {
  BenchOptions options;
  options.repeats = cfg.bench.repeats;
  options.frames = cfg.bench.frames;
  options.seed = cfg.sim.seed;
  std::vector<BenchRow> rows;
  for (const BenchCase& c : cases) rows.push_back({bench_case(c, options)});
  using Key = std::tuple<Variant, Strategy, Variant, int, int>;
  std::map<Key, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const BenchCase& c = rows[i].result.c;
    groups[{c.variant, c.strategy, c.aux, c.q, c.batches}].push_back(i);
  }
  for (const auto& [key, idx] : groups) {
    if (idx.size() < 2) continue;
    std::vector<double> m, tp, tc;
    for (std::size_t i : idx) {
      m.push_back(rows[i].result.c.m);
      tp.push_back(rows[i].result.propagate_ms);
      tc.push_back(std::max(rows[i].result.correct_ms, 1e-9));
    }
    const double sp = loglog_slope(m, tp);
    const double sc = loglog_slope(m, tc);
    for (std::size_t i : idx) {
      rows[i].propagate_slope = sp;
      rows[i].correct_slope = sc;
    }
  }
  return rows;
}

void write_bench_csv(std::ostream& os, const std::vector<BenchRow>& rows, const std::string& provenance) {
  os << "# " << provenance << "\n";
  os << "variant,strategy,m,q,p,phase,median_ms,flops,slope\n";
  os.precision(8);
  for (const BenchRow& r : rows) {
    const BenchCase& c = r.result.c;
    const std::string head = std::string(variant_name(c.variant)) + "," + std::string(strategy_name(c.strategy)) + "," +
                             std::to_string(c.m) + "," + std::to_string(c.q) + "," + std::to_string(c.batches);
    os << head << ",propagate," << r.result.propagate_ms << ',' << r.result.propagate_flops << ',' << r.propagate_slope << '\n';
    os << head << ",correct," << r.result.correct_ms << ',' << r.result.correct_flops << ',' << r.correct_slope << '\n';
  }
}

ObservabilityScene make_observability_scene(const ExperimentConfig& cfg, int landmarks, double duration) {
  SimConfig sc = cfg.sim;
  sc.noise = NoiseSpec{0, 0, 0, 0, 0};
  sc.trajectory.duration = duration;
  sc.landmarks = landmarks;
  sc.min_covisible = 0;
  const SimWorld world = make_world(sc);
  const ImuStream imu = gen_imu(world);
  ObservabilityScene scene;
  scene.imu = imu.samples;
  scene.cam = sc.cam;
  for (std::size_t k = 0; k < imu.truth.size(); ++k) scene.states.push_back(truth_with_landmarks(world, imu, k));
  const auto q = static_cast<std::size_t>(sc.imu_per_frame());
  for (std::size_t k = 0; k < imu.truth.size(); k += q) scene.frames.push_back(k);
  return scene;
}

json observability_report(const ExperimentConfig& cfg) {
  const ObservabilityScene scene = make_observability_scene(cfg, 5, 2.0);
  auto gen = substream(cfg.sim.seed, "observability", 0);
  const VinsState a = random_state(gen, 5);
  const VinsState b = random_state(gen, 5);

  // Perturbed linearization points: each state jittered independently.
  std::vector<VinsState> jittered = scene.states;
  std::normal_distribution<double> n(0.0, 1.0);
  for (VinsState& x : jittered) {
    ErrorState e(x.dim());
    for (int i = 0; i < x.dim(); ++i) e[i] = 0.01 * n(gen);
    x = chart_inverse(Variant::Eskf, x, e);
  }

  json variants = json::array();
  for (Variant v : kAllVariants) {
    const Eigen::MatrixXd M = build_stack(v, scene.states, scene.imu, scene.frames, scene.cam);
    const UnobservableBasis basis = analytic_basis(v, scene.states.front());
    const Eigen::MatrixXd null = nullspace(M);
    const Eigen::MatrixXd lifted =
        transform_basis(transform_from_eskf(v, scene.states.front()), analytic_basis(Variant::Eskf, scene.states.front()).N);
    const IndependenceReport ind = state_independence_report(v, a, b);
    const Eigen::MatrixXd Mj = build_stack(v, jittered, scene.imu, scene.frames, scene.cam);
    variants.push_back({
        {"variant", variant_name(v)},
        {"stack_rows", M.rows()},
        {"state_dim", M.cols()},
        {"rank", numerical_rank(M)},
        {"nullity", null.cols()},
        {"basis_residual", (M * basis.N).norm() / M.norm()},
        {"nullspace_vs_basis_angle", max_principal_angle(null, basis.N)},
        {"transformed_eskf_basis_angle", max_principal_angle(lifted, basis.N)},
        {"state_independent_claim", basis.state_independent},
        {"state_independence_angle", ind.angle},
        {"bitwise_equal_across_states", ind.bitwise_equal},
        {"perturbed_rank", numerical_rank(Mj)},
    });
  }
  return json{{"provenance", cfg.provenance()}, {"landmarks", 5}, {"frames", scene.frames.size()}, {"variants", variants}};
}

double state_distance(const VinsState& a, const VinsState& b) {
  double d = so3_log(a.R.transpose() * b.R).cwiseAbs().maxCoeff();
  d = std::max(d, (a.p - b.p).cwiseAbs().maxCoeff());
  d = std::max(d, (a.v - b.v).cwiseAbs().maxCoeff());
  d = std::max(d, (a.bw - b.bw).cwiseAbs().maxCoeff());
  d = std::max(d, (a.ba - b.ba).cwiseAbs().maxCoeff());
  if (a.m() != b.m()) return std::numeric_limits<double>::infinity();
  for (int i = 0; i < a.m(); ++i) d = std::max(d, (a.f[i] - b.f[i]).cwiseAbs().maxCoeff());
  return d;
}

double relative_frobenius(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B) {
  if (A.rows() != B.rows() || A.cols() != B.cols()) return std::numeric_limits<double>::infinity();
  return (A - B).norm() / B.norm();
}

std::vector<Check> verify_suite(const ExperimentConfig& cfg) {
  std::vector<Check> checks;
  auto add = [&](std::string name, double value, double tol) { checks.push_back({std::move(name), value <= tol, value, tol}); };

  // Strategy equivalence on a short run.
  ExperimentConfig short_cfg = cfg;
  short_cfg.sim.trajectory.duration = std::min(cfg.sim.trajectory.duration, 3.0);
  const SimWorld world = make_world(short_cfg.sim);
  const RunData data = make_run_data(short_cfg, world, 0);
  for (Variant v : kAllVariants) {
    std::vector<std::vector<FrameEstimate>> tracks;
    for (Strategy s : {Strategy::Naive, Strategy::TP, Strategy::TC}) {
      Filter f(short_cfg.filter_config(v, s), data.x0, initial_covariance(v, data.x0, cfg.prior), {}, 0.0);
      const LandmarkInitializer init = landmark_initializer(short_cfg, world, data, f);
      tracks.push_back(run_sequence(f, data.imu.samples, data.frames, init));
    }
    double dmean = 0.0, dcov = 0.0;
    for (std::size_t s = 1; s < tracks.size(); ++s)
      for (std::size_t k = 0; k < tracks[0].size(); ++k) {
        dmean = std::max(dmean, state_distance(tracks[s][k].estimate, tracks[0][k].estimate));
        dcov = std::max(dcov, relative_frobenius(tracks[s][k].P_target, tracks[0][k].P_target));
      }
    add("strategy_mean/" + std::string(variant_name(v)), dmean, 1e-6);
    add("strategy_covariance/" + std::string(variant_name(v)), dcov, 1e-6);
  }

  // Closed-form transformations against finite differences, and transitivity.
  auto gen = substream(cfg.sim.seed, "verify-states", 0);
  double fd = 0.0, chain = 0.0;
  for (int trial = 0; trial < 3; ++trial) {
    const VinsState x = random_state(gen, 3);
    for (Variant from : kAllVariants)
      for (Variant to : kAllVariants) {
        if (from == to) continue;
        const Eigen::MatrixXd T = transform_closed_form(from, to, x).dense();
        fd = std::max(fd, (T - transform_numeric(from, to, x)).cwiseAbs().maxCoeff());
        for (Variant mid : kAllVariants) {
          const Eigen::MatrixXd TT = (transform_closed_form(mid, to, x) * transform_closed_form(from, mid, x)).dense();
          chain = std::max(chain, (T - TT).norm());
        }
      }
  }
  add("transform_finite_difference", fd, 1e-5);
  add("transform_transitivity", chain, 1e-10);

  // Observability of the ideal stack.
  const ObservabilityScene scene = make_observability_scene(cfg, 5, 1.0);
  for (Variant v : kAllVariants) {
    const Eigen::MatrixXd M = build_stack(v, scene.states, scene.imu, scene.frames, scene.cam);
    add("stack_residual/" + std::string(variant_name(v)), (M * analytic_basis(v, scene.states.front()).N).norm() / M.norm(), 1e-6);
    add("nullity/" + std::string(variant_name(v)), std::abs(static_cast<double>(nullspace(M).cols()) - 4.0), 0.0);
  }
  return checks;
}

}  // namespace eqf
