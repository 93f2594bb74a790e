#include "lethe/cli.h"

#include <atomic>
#include <chrono>
#include <csignal>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <thread>

#include "CLI11.hpp"
#include "json.hpp"
#include "lethe/adversary_sim.h"
#include "lethe/parallel.h"
#include "lethe/privacy.h"
#include "lethe/run_config.h"
#include "lethe/store.h"
#include "lethe/store_server.h"
#include "lethe/tuning.h"
#include "lethe/utility.h"

#ifndef LETHE_VERSION
#define LETHE_VERSION "dev"
#endif

namespace lethe {
namespace {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

std::atomic<bool> g_stop{false};

extern "C" void HandleStopSignal(int) { g_stop = true; }

// Thrown for bad user input; maps to exit code 1.
struct ValidationError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

ordered_json NumberOrNull(double v) {
  return std::isfinite(v) ? ordered_json(v) : ordered_json(nullptr);
}

struct Common {
  std::string config_path;
  uint64_t seed = 0;
  int threads = 0;
  std::string out_dir;
  CLI::Option* seed_opt = nullptr;
  CLI::Option* threads_opt = nullptr;
  CLI::Option* out_dir_opt = nullptr;

  RunConfig config;

  void Register(CLI::App& app) {
    app.add_option("--config", config_path, "JSON settings file; flags override its keys")
        ->check(CLI::ExistingFile);
    seed_opt = app.add_option("--seed", seed, "Random seed (fallback: LETHE_SEED, then 1)");
    threads_opt = app.add_option("--threads", threads, "Worker threads (default: all cores)")
                      ->check(CLI::PositiveNumber);
    out_dir_opt = app.add_option("--out-dir", out_dir, "Directory for output files");
  }

  void Load() {
    if (!config_path.empty()) config = LoadRunConfig(config_path);
  }

  uint64_t ResolvedSeed() const {
    if (seed_opt->count()) return seed;
    if (config.seed) return *config.seed;
    if (const char* env = std::getenv("LETHE_SEED"); env && *env) {
      try {
        size_t used = 0;
        const uint64_t v = std::stoull(env, &used);
        if (used == std::strlen(env)) return v;
      } catch (const std::exception&) {
      }
      throw ValidationError("LETHE_SEED must be an unsigned integer");
    }
    return 1;
  }

  int ResolvedThreads() const {
    if (threads_opt->count()) return threads;
    if (config.threads) {
      if (*config.threads < 1) throw ValidationError("threads must be positive");
      return static_cast<int>(*config.threads);
    }
    return DefaultThreads();
  }

  fs::path ResolvedOutDir() const {
    if (out_dir_opt->count()) return out_dir;
    if (config.out_dir) return *config.out_dir;
    return ".";
  }

  // Relative output names land in the output directory.
  fs::path OutputPath(const std::string& name) const {
    const fs::path p(name);
    if (p.is_absolute()) return p;
    return ResolvedOutDir() / p;
  }
};

void EnsureParent(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
}

void WriteJson(const fs::path& path, const ordered_json& doc) {
  EnsureParent(path);
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << doc.dump(2) << '\n';
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

void WriteManifest(const fs::path& dir, const std::string& command, uint64_t seed,
                   const ordered_json& resolved) {
  ordered_json manifest;
  manifest["tool"] = "lethe";
  manifest["version"] = LETHE_VERSION;
  manifest["command"] = command;
  manifest["seed"] = seed;
  manifest["config"] = resolved;
  WriteJson(dir / "manifest.json", manifest);
}

// --name (duration with unit) or --name-<unit> (number in that unit).
struct DurationFlag {
  std::string text;
  double scaled = 0.0;
  CLI::Option* text_opt = nullptr;
  CLI::Option* scaled_opt = nullptr;
  double unit = 1.0;

  void Register(CLI::App& app, const std::string& name, const std::string& unit_name,
                double unit_seconds, const std::string& help) {
    unit = unit_seconds;
    text_opt = app.add_option("--" + name, text, help + " (e.g. 90s, 15m, 1h, 30d)");
    scaled_opt = app.add_option("--" + name + "-" + unit_name, scaled, help + " in " + unit_name);
    text_opt->excludes(scaled_opt);
  }

  std::optional<Seconds> Get() const {
    if (text_opt->count()) return ParseDuration(text);
    if (scaled_opt->count()) {
      const double s = scaled * unit;
      if (!(s >= 1.0) || std::fabs(s - std::round(s)) > 1e-6) {
        throw ValidationError(scaled_opt->get_name() + " must be a positive whole number of seconds");
      }
      return static_cast<Seconds>(std::llround(s));
    }
    return std::nullopt;
  }
};

// Repeatable threshold flag: --theta 30d --theta 90d or --theta-days 30 90.
struct ThresholdList {
  std::vector<std::string> text;
  std::vector<double> days;
  CLI::Option* text_opt = nullptr;
  CLI::Option* days_opt = nullptr;

  void Register(CLI::App& app, const std::string& help) {
    text_opt = app.add_option("--theta", text, help + " (durations, repeatable)");
    days_opt = app.add_option("--theta-days", days, help + " in days (repeatable)");
    text_opt->excludes(days_opt);
  }

  std::optional<std::vector<Seconds>> Get() const {
    std::vector<Seconds> out;
    if (text_opt->count()) {
      for (const auto& t : text) out.push_back(ParseDuration(t));
    } else if (days_opt->count()) {
      for (double d : days) {
        const double s = d * static_cast<double>(kSecondsPerDay);
        if (!(s >= 1.0) || std::fabs(s - std::round(s)) > 1e-6) {
          throw ValidationError("--theta-days values must be positive whole seconds");
        }
        out.push_back(static_cast<Seconds>(std::llround(s)));
      }
    } else {
      return std::nullopt;
    }
    return out;
  }
};

struct MechanismFlags {
  double availability = 0.9;
  CLI::Option* availability_opt = nullptr;
  DurationFlag mean_down;

  void Register(CLI::App& app) {
    availability_opt = app.add_option("--availability", availability, "Target availability");
    mean_down.Register(app, "mean-down", "seconds", 1.0, "Mean down time");
  }

  double Availability(const Common& c) const {
    if (availability_opt->count()) return availability;
    return c.config.tuning.availability.value_or(0.9);
  }
  Seconds MeanDown(const Common& c) const {
    if (auto v = mean_down.Get()) return *v;
    return c.config.tuning.mean_down.value_or(kSecondsPerHour);
  }
};

ordered_json DistributionJson(const DurationDistribution& d) {
  ordered_json j;
  j["kind"] = std::string(KindName(d.kind()));
  j["mean_seconds"] = d.mean();
  if (auto n = d.shape()) j["shape_n"] = *n;
  return j;
}

// ---- tune ----------------------------------------------------------------

struct TuneCommand {
  Common common;
  MechanismFlags mech;
  DurationFlag theta;
  std::string out;

  void Register(CLI::App& app) {
    common.Register(app);
    mech.Register(app);
    theta.Register(app, "theta", "days", static_cast<double>(kSecondsPerDay),
                   "Estimated adversary threshold theta*");
    app.add_option("--out", out, "Also write the JSON result to this file");
  }

  int Run() {
    common.Load();
    TuningSpec spec;
    spec.availability_target = mech.Availability(common);
    spec.mean_down = static_cast<double>(mech.MeanDown(common));
    spec.theta_star = theta.Get().value_or(common.config.tuning.theta_star.value_or(30 * kSecondsPerDay));
    spec.Validate();
    const Mechanism m = BuildMechanism(spec);
    ordered_json result;
    result["mean_up_seconds"] = m.up.mean();
    result["mean_down_seconds"] = m.down.mean();
    result["shape_n"] = *m.down.shape();
    result["availability"] = Availability(m.up.mean(), m.down.mean());
    result["theta_star_seconds"] = spec.theta_star;
    std::cout << result.dump(2) << '\n';
    if (!out.empty()) {
      const fs::path path = common.OutputPath(out);
      WriteJson(path, result);
      ordered_json resolved;
      resolved["availability"] = spec.availability_target;
      resolved["mean_down_seconds"] = spec.mean_down;
      resolved["theta_star_seconds"] = spec.theta_star;
      WriteManifest(path.parent_path(), "tune", common.ResolvedSeed(), resolved);
    }
    return kExitOk;
  }
};

// ---- curves --------------------------------------------------------------

struct CurveCommand {
  enum class Figure { kInverseHazard, kInverseCcdf, kLr };
  Figure figure;
  Common common;
  std::vector<std::string> kinds{"geometric", "negative_binomial", "zeta", "poisson"};
  DurationFlag mean;
  double shape = 0.15;
  DurationFlag t_max;
  DurationFlag step;
  // lr-curve only
  MechanismFlags mech;
  ThresholdList theta_stars;
  std::vector<double> shapes;
  CLI::Option* shapes_opt = nullptr;
  bool no_zeta = false;

  explicit CurveCommand(Figure f) : figure(f) {}

  std::string FigureName() const {
    switch (figure) {
      case Figure::kInverseHazard: return "inverse_hazard";
      case Figure::kInverseCcdf: return "inverse_ccdf";
      case Figure::kLr: return "lr";
    }
    return "curve";
  }

  void Register(CLI::App& app) {
    common.Register(app);
    t_max.Register(app, "t-max", "seconds", 1.0, "Curve range");
    step.Register(app, "step", "seconds", 1.0, "Spacing between points");
    if (figure == Figure::kLr) {
      mech.Register(app);
      theta_stars.Register(app, "Tune one negative binomial curve per theta*");
      shapes_opt = app.add_option("--shape", shapes, "Explicit negative binomial shapes");
      shapes_opt->excludes(theta_stars.text_opt)->excludes(theta_stars.days_opt);
      app.add_flag("--no-zeta", no_zeta, "Skip the zeta reference curve");
      return;
    }
    app.add_option("--kind", kinds, "Distribution kinds (repeatable)");
    mean.Register(app, "mean", "seconds", 1.0, "Mean duration");
    app.add_option("--shape", shape, "Negative binomial shape")->check(CLI::PositiveNumber);
  }

  int Run() {
    common.Load();
    const fs::path dir = common.ResolvedOutDir();
    fs::create_directories(dir);
    ordered_json resolved;
    ordered_json files = ordered_json::array();

    if (figure == Figure::kLr) {
      const double availability = mech.Availability(common);
      const auto mean_down = static_cast<double>(mech.MeanDown(common));
      const Seconds range = t_max.Get().value_or(180 * kSecondsPerDay);
      const Seconds dt = step.Get().value_or(kSecondsPerDay);
      const auto up = DurationDistribution::Geometric(MeanUpForAvailability(availability, mean_down));
      std::vector<DurationDistribution> downs;
      std::vector<double> n_values = shapes;
      if (!shapes_opt->count()) {
        const auto stars = theta_stars.Get().value_or(
            std::vector<Seconds>{30 * kSecondsPerDay, 90 * kSecondsPerDay, 180 * kSecondsPerDay});
        for (Seconds s : stars) n_values.push_back(OptimalShape(mean_down, s));
      }
      for (double n : n_values) downs.push_back(DurationDistribution::NegativeBinomial(mean_down, n));
      if (!no_zeta) downs.push_back(DurationDistribution::Zeta(mean_down));
      const auto curves = LrCurves(up, downs, range, dt);
      for (size_t i = 0; i < downs.size(); ++i) {
        const fs::path path = dir / (FigureName() + "_" + downs[i].Label() + ".csv");
        WriteCurveCsv(path, curves[i], CurveScale::kLog10);
        files.push_back(path.filename().string());
      }
      resolved["up"] = DistributionJson(up);
      resolved["downs"] = ordered_json::array();
      for (const auto& d : downs) resolved["downs"].push_back(DistributionJson(d));
      resolved["t_max_seconds"] = range;
      resolved["step_seconds"] = dt;
      resolved["value_scale"] = "log10";
    } else {
      const bool hazard = figure == Figure::kInverseHazard;
      const Seconds m = mean.Get().value_or(hazard ? 9 * kSecondsPerHour : kSecondsPerHour);
      const Seconds range = t_max.Get().value_or(24 * kSecondsPerHour);
      const Seconds dt = step.Get().value_or(60);
      resolved["distributions"] = ordered_json::array();
      for (const auto& name : kinds) {
        const DistributionKind kind = ParseKind(name);
        const auto d = DurationDistribution::Make(
            kind, static_cast<double>(m),
            kind == DistributionKind::kNegativeBinomial ? std::optional<double>(shape)
                                                        : std::nullopt);
        const Curve curve = hazard ? InverseHazardCurve(d, range, dt) : InverseCcdfCurve(d, range, dt);
        const fs::path path = dir / (FigureName() + "_" + d.Label() + ".csv");
        WriteCurveCsv(path, curve, hazard ? CurveScale::kLinear : CurveScale::kLog10);
        files.push_back(path.filename().string());
        resolved["distributions"].push_back(DistributionJson(d));
      }
      resolved["t_max_seconds"] = range;
      resolved["step_seconds"] = dt;
      resolved["value_scale"] = hazard ? "linear" : "log10";
    }
    resolved["files"] = files;
    WriteManifest(dir, FigureName() + "-curve", common.ResolvedSeed(), resolved);
    return kExitOk;
  }
};

// ---- simulate / fft-table -----------------------------------------------

struct PopulationFlags {
  int64_t initial_posts = 0, creations = 0, deletions = 0, horizon_days = 0;
  double scale_factor = 0.0;
  std::string engine;
  CLI::Option *initial_opt, *creations_opt, *deletions_opt, *horizon_opt, *scale_opt, *engine_opt;

  void Register(CLI::App& app) {
    initial_opt = app.add_option("--initial-posts", initial_posts, "Posts alive at t = 0");
    creations_opt = app.add_option("--creations-per-day", creations, "Daily creations");
    deletions_opt = app.add_option("--deletions-per-day", deletions, "Daily deletions");
    horizon_opt = app.add_option("--horizon-days", horizon_days, "Experiment length in days");
    scale_opt = app.add_option("--scale-factor", scale_factor,
                               "Simulated fraction of the platform (FP is divided by it)");
    engine_opt = app.add_option("--engine", engine, "exact or accelerated")
                     ->check(CLI::IsMember({"exact", "accelerated"}));
  }

  // Fills cfg from flags, then config keys, then `defaults`.
  void Apply(const Common& c, const SimulationConfig& defaults, bool require_horizon,
             SimulationConfig& cfg) const {
    const auto& s = c.config.simulation;
    auto pick = [](CLI::Option* opt, auto flag, const auto& from_config, auto fallback) {
      if (opt->count()) return static_cast<decltype(fallback)>(flag);
      if (from_config) return static_cast<decltype(fallback)>(*from_config);
      return fallback;
    };
    cfg.initial_posts = pick(initial_opt, initial_posts, s.initial_posts, defaults.initial_posts);
    cfg.creations_per_day = pick(creations_opt, creations, s.creations_per_day, defaults.creations_per_day);
    cfg.deletions_per_day = pick(deletions_opt, deletions, s.deletions_per_day, defaults.deletions_per_day);
    if (require_horizon && !horizon_opt->count() && !s.horizon_days) {
      throw ValidationError("--horizon-days is required");
    }
    cfg.horizon_days = pick(horizon_opt, horizon_days, s.horizon_days, defaults.horizon_days);
    cfg.scale_factor = pick(scale_opt, scale_factor, s.scale_factor, defaults.scale_factor);
    const std::string engine_name =
        engine_opt->count() ? engine : s.engine.value_or(std::string(EngineName(defaults.engine)));
    cfg.engine = ParseEngine(engine_name);
  }
};

ordered_json ResolvedSimulation(const SimulationConfig& cfg) {
  ordered_json j;
  j["initial_posts"] = cfg.initial_posts;
  j["creations_per_day"] = cfg.creations_per_day;
  j["deletions_per_day"] = cfg.deletions_per_day;
  j["horizon_days"] = cfg.horizon_days;
  j["availability"] = cfg.availability_target;
  j["mean_down_seconds"] = cfg.mean_down;
  j["theta_star_seconds"] = cfg.theta_star ? ordered_json(*cfg.theta_star) : ordered_json("matched");
  j["thresholds_seconds"] = cfg.thresholds;
  j["scenario"] = std::string(ScenarioName(cfg.scenario));
  j["engine"] = std::string(EngineName(cfg.engine));
  j["scale_factor"] = cfg.scale_factor;
  j["seed"] = cfg.seed;
  j["threads"] = cfg.threads;
  return j;
}

struct SimulateCommand {
  Common common;
  MechanismFlags mech;
  ThresholdList thresholds;
  DurationFlag theta_star;
  PopulationFlags population;
  std::string scenario;
  CLI::Option* scenario_opt = nullptr;
  std::string out = "report.json";

  void Register(CLI::App& app) {
    common.Register(app);
    mech.Register(app);
    thresholds.Register(app, "Adversary decision threshold");
    theta_star.Register(app, "theta-star", "days", static_cast<double>(kSecondsPerDay),
                        "Tuning estimate (default: each threshold)");
    population.Register(app);
    scenario_opt = app.add_option("--scenario", scenario, "once or multi")
                       ->check(CLI::IsMember({"once", "multi", "flag-once", "flag-multi"}));
    app.add_option("--out", out, "Report path");
  }

  int Run() {
    common.Load();
    SimulationConfig cfg;
    population.Apply(common, SimulationConfig{}, /*require_horizon=*/true, cfg);
    cfg.availability_target = mech.Availability(common);
    cfg.mean_down = static_cast<double>(mech.MeanDown(common));
    if (auto t = theta_star.Get()) {
      cfg.theta_star = *t;
    } else if (common.config.tuning.theta_star) {
      cfg.theta_star = common.config.tuning.theta_star;
    }
    cfg.thresholds = thresholds.Get().value_or(
        common.config.simulation.thresholds.value_or(std::vector<Seconds>{180 * kSecondsPerDay}));
    cfg.scenario = ParseScenario(scenario_opt->count()
                                     ? scenario
                                     : common.config.simulation.scenario.value_or("multi"));
    cfg.seed = common.ResolvedSeed();
    cfg.threads = common.ResolvedThreads();
    cfg.Validate();

    const AdversaryReport report = RunSimulation(cfg);
    ordered_json doc;
    doc["scenario"] = std::string(ScenarioName(report.scenario));
    doc["engine"] = std::string(EngineName(report.engine));
    doc["scale_factor"] = report.scale_factor;
    doc["seed"] = report.seed;
    doc["thresholds"] = ordered_json::array();
    for (const auto& r : report.rows) {
      ordered_json row;
      row["theta_seconds"] = r.theta;
      row["theta_days"] = static_cast<double>(r.theta) / kSecondsPerDay;
      row["shape_n"] = r.shape;
      row["tp"] = r.tp;
      row["fp"] = r.fp;
      row["fn"] = r.fn;
      row["precision"] = NumberOrNull(r.precision);
      row["recall"] = NumberOrNull(r.recall);
      row["fp_scaled"] = r.fp_scaled;
      row["fp_sq_sum"] = r.fp_sq_sum;
      row["tp_closed_form"] = TruePositiveClosedForm(cfg, r.theta);
      doc["thresholds"].push_back(std::move(row));
    }
    // Thread count does not change the report, so it stays out of it.
    const fs::path path = common.OutputPath(out);
    WriteJson(path, doc);
    WriteManifest(path.parent_path(), "simulate", cfg.seed, ResolvedSimulation(cfg));
    return kExitOk;
  }
};

struct FftCommand {
  Common common;
  DurationFlag mean_down;
  std::vector<double> availabilities;
  CLI::Option* availability_opt = nullptr;
  ThresholdList thresholds;
  PopulationFlags population;
  std::string out = "fft_table.csv";

  void Register(CLI::App& app) {
    common.Register(app);
    mean_down.Register(app, "mean-down", "seconds", 1.0, "Mean down time");
    availability_opt = app.add_option("--availability", availabilities, "Availabilities (repeatable)");
    thresholds.Register(app, "Decision thresholds");
    population.Register(app);
    app.add_option("--out", out, "CSV path");
  }

  int Run() {
    common.Load();
    // Default population: the paper-scale platform scaled down a further 100x.
    SimulationConfig defaults;
    defaults.initial_posts = 1'000'000;
    defaults.creations_per_day = 320;
    defaults.deletions_per_day = 100;
    defaults.horizon_days = 3650;
    defaults.scale_factor = 1e-6;
    SimulationConfig cfg;
    population.Apply(common, defaults, /*require_horizon=*/false, cfg);
    cfg.mean_down = static_cast<double>(
        mean_down.Get().value_or(common.config.tuning.mean_down.value_or(kSecondsPerHour)));
    cfg.seed = common.ResolvedSeed();
    cfg.threads = common.ResolvedThreads();
    const std::vector<double> avail =
        availability_opt->count()
            ? availabilities
            : common.config.simulation.availabilities.value_or(std::vector<double>{0.85, 0.9, 0.95});
    std::vector<Seconds> thetas;
    for (int d = 30; d <= 180; d += 30) thetas.push_back(d * kSecondsPerDay);
    cfg.thresholds = thresholds.Get().value_or(common.config.simulation.thresholds.value_or(thetas));
    for (double a : avail) {
      cfg.availability_target = a;
      cfg.Validate();
    }

    const auto cells = FftTable(cfg, avail, cfg.thresholds);
    const fs::path path = common.OutputPath(out);
    EnsureParent(path);
    std::ofstream csv(path);
    if (!csv) throw std::runtime_error("cannot open " + path.string());
    csv.precision(10);
    csv << "scenario,availability,theta_days,shape_n,fp,fp_scaled,precision,recall\n";
    for (const auto& c : cells) {
      csv << ScenarioName(c.scenario) << ',' << c.availability << ','
          << static_cast<double>(c.theta) / kSecondsPerDay << ',' << c.shape << ',' << c.fp << ','
          << c.fp_scaled << ',' << c.precision << ',' << c.recall << '\n';
    }
    if (!csv) throw std::runtime_error("failed writing " + path.string());
    ordered_json resolved = ResolvedSimulation(cfg);
    resolved.erase("availability");
    resolved.erase("scenario");
    resolved["availabilities"] = avail;
    WriteManifest(path.parent_path(), "fft-table", cfg.seed, resolved);
    return kExitOk;
  }
};

// ---- utility -------------------------------------------------------------

struct UtilityCommand {
  Common common;
  std::string trace_path;
  CLI::Option* trace_opt = nullptr;
  bool synthetic = false;
  int64_t synthetic_posts = 2000;
  double interactions_mean = 20.0;
  DurationFlag decay_mean;
  CLI::Option* posts_opt = nullptr;
  CLI::Option* interactions_opt = nullptr;
  DurationFlag mean_down;
  std::vector<double> availabilities;
  CLI::Option* availability_opt = nullptr;
  ThresholdList thresholds;
  std::string out = "utility.json";

  void Register(CLI::App& app) {
    common.Register(app);
    trace_opt = app.add_option("--trace", trace_path, "Interaction CSV")->check(CLI::ExistingFile);
    auto* syn = app.add_flag("--synthetic", synthetic, "Use a synthetic decay trace");
    trace_opt->excludes(syn);
    posts_opt = app.add_option("--synthetic-posts", synthetic_posts, "Posts in the synthetic trace");
    interactions_opt = app.add_option("--interactions-mean", interactions_mean,
                                      "Mean interactions per synthetic post");
    decay_mean.Register(app, "decay-mean", "seconds", 1.0, "Mean interaction offset");
    mean_down.Register(app, "mean-down", "seconds", 1.0, "Mean down time");
    availability_opt = app.add_option("--availability", availabilities, "Availabilities (repeatable)");
    thresholds.Register(app, "Tuning estimate theta*");
    app.add_option("--out", out, "Report path");
  }

  int Run() {
    common.Load();
    const auto& u = common.config.utility;
    const uint64_t seed = common.ResolvedSeed();
    ordered_json resolved;
    InteractionTrace trace;
    const std::string path_in = trace_opt->count() ? trace_path : (synthetic ? "" : u.trace.value_or(""));
    if (!path_in.empty()) {
      trace = LoadTrace(path_in);
      resolved["trace"] = path_in;
    } else {
      const int64_t posts = posts_opt->count() ? synthetic_posts : u.synthetic_posts.value_or(synthetic_posts);
      const double mean = interactions_opt->count() ? interactions_mean : u.interactions_mean.value_or(interactions_mean);
      const Seconds decay = decay_mean.Get().value_or(
          u.decay_mean.value_or(static_cast<Seconds>(kDefaultDecayMean)));
      trace = GenerateSyntheticTrace(posts, mean, static_cast<double>(decay), seed);
      resolved["synthetic"] = {{"posts", posts}, {"interactions_mean", mean}, {"decay_mean_seconds", decay}};
    }
    const double down = static_cast<double>(
        mean_down.Get().value_or(common.config.tuning.mean_down.value_or(kSecondsPerHour)));
    const std::vector<double> avail =
        availability_opt->count()
            ? availabilities
            : common.config.simulation.availabilities.value_or(std::vector<double>{0.85, 0.9, 0.95});
    std::vector<Seconds> grid;
    for (int d = 30; d <= 180; d += 30) grid.push_back(d * kSecondsPerDay);
    const std::vector<Seconds> stars = thresholds.Get().value_or(
        common.config.tuning.theta_star ? std::vector<Seconds>{*common.config.tuning.theta_star} : grid);
    const int threads = common.ResolvedThreads();

    ordered_json doc;
    doc["interactions"] = trace.interaction_count();
    doc["cells"] = ordered_json::array();
    for (double a : avail) {
      for (Seconds star : stars) {
        const Mechanism m = BuildMechanism({a, down, star});
        const UtilityResult r = EvaluateUtility(trace, m.up, m.down, seed, threads);
        ordered_json cell;
        cell["availability"] = a;
        cell["theta_days"] = static_cast<double>(star) / kSecondsPerDay;
        cell["shape_n"] = *m.down.shape();
        cell["allowed"] = r.allowed;
        cell["missed"] = r.missed;
        if (auto v = r.utility()) {
          cell["utility"] = *v;
        } else {
          cell["utility"] = "no interactions";
        }
        doc["cells"].push_back(std::move(cell));
      }
    }
    const fs::path path = common.OutputPath(out);
    WriteJson(path, doc);
    resolved["mean_down_seconds"] = down;
    resolved["availabilities"] = avail;
    resolved["theta_star_seconds"] = stars;
    WriteManifest(path.parent_path(), "utility", seed, resolved);
    return kExitOk;
  }
};

// ---- store serve ---------------------------------------------------------

struct ServeCommand {
  Common common;
  MechanismFlags mech;
  DurationFlag theta;
  int64_t port = 7070;
  CLI::Option* port_opt = nullptr;
  std::string data_dir;
  CLI::Option* data_dir_opt = nullptr;
  DurationFlag updater_period;
  bool any_address = false;

  void Register(CLI::App& app) {
    common.Register(app);
    mech.Register(app);
    theta.Register(app, "theta", "days", static_cast<double>(kSecondsPerDay), "Tuning estimate theta*");
    port_opt = app.add_option("--port", port, "TCP port")->check(CLI::Range(0, 65535));
    data_dir_opt = app.add_option("--data-dir", data_dir, "Event log and snapshot directory");
    updater_period.Register(app, "updater-period", "seconds", 1.0, "Schedule updater period");
    app.add_flag("--listen-any", any_address, "Bind all interfaces instead of loopback");
  }

  int Run() {
    common.Load();
    const auto& s = common.config.store;
    TuningSpec spec{mech.Availability(common), static_cast<double>(mech.MeanDown(common)),
                    theta.Get().value_or(common.config.tuning.theta_star.value_or(30 * kSecondsPerDay))};
    StoreOptions options{BuildMechanism(spec), common.ResolvedSeed(), kDefaultCoverage, std::nullopt};
    const std::string dir = data_dir_opt->count() ? data_dir : s.data_dir.value_or("");
    if (!dir.empty()) options.data_dir = dir;
    const int64_t p = port_opt->count() ? port : s.port.value_or(port);
    if (p < 0 || p > 65535) throw ValidationError("port out of range");
    const Seconds period = updater_period.Get().value_or(s.updater_period.value_or(kSecondsPerHour));

    Store store(std::move(options), std::make_shared<SystemClock>());
    store.StartUpdater(std::chrono::seconds(period));
    StoreServer server(store);
    server.Start(static_cast<uint16_t>(p), any_address);
    std::cerr << "lethe store listening on port " << server.port() << std::endl;
    std::signal(SIGINT, HandleStopSignal);
    std::signal(SIGTERM, HandleStopSignal);
    while (!g_stop) std::this_thread::sleep_for(std::chrono::milliseconds(200));
    server.Stop();
    store.StopUpdater();
    if (!dir.empty()) store.Snapshot();
    return kExitOk;
  }
};

}  // namespace

int RunCli(int argc, const char* const* argv) {
  CLI::App app{"Intermittent withdrawal toolkit: tuning, curves, simulation, utility, store"};
  app.set_version_flag("--version", LETHE_VERSION);
  app.require_subcommand(1);

  TuneCommand tune;
  tune.Register(*app.add_subcommand("tune", "Pick mean up time and negative binomial shape"));
  CurveCommand lr(CurveCommand::Figure::kLr);
  lr.Register(*app.add_subcommand("lr-curve", "LR against down-elapsed time per down distribution"));
  CurveCommand hazard(CurveCommand::Figure::kInverseHazard);
  hazard.Register(*app.add_subcommand("hazard-curve", "Inverse hazard rate curves"));
  CurveCommand ccdf(CurveCommand::Figure::kInverseCcdf);
  ccdf.Register(*app.add_subcommand("ccdf-curve", "Inverse CCDF curves (log10)"));
  SimulateCommand simulate;
  simulate.Register(*app.add_subcommand("simulate", "Adversary precision and recall simulation"));
  FftCommand fft;
  fft.Register(*app.add_subcommand("fft-table", "Falsely flagged post counts over a grid"));
  UtilityCommand utility;
  utility.Register(*app.add_subcommand("utility", "Fraction of interactions that survive"));
  auto* store_app = app.add_subcommand("store", "Visibility-gated archive");
  store_app->require_subcommand(1);
  ServeCommand serve;
  serve.Register(*store_app->add_subcommand("serve", "Serve the NDJSON protocol over TCP"));

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitValidation;
  }

  try {
    const auto* sub = app.get_subcommands().front();
    const std::string name = sub->get_name();
    if (name == "tune") return tune.Run();
    if (name == "lr-curve") return lr.Run();
    if (name == "hazard-curve") return hazard.Run();
    if (name == "ccdf-curve") return ccdf.Run();
    if (name == "simulate") return simulate.Run();
    if (name == "fft-table") return fft.Run();
    if (name == "utility") return utility.Run();
    if (name == "store") return serve.Run();
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitValidation;
}

}  // namespace lethe
