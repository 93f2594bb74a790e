#include "lethe/run_config.h"

#include <cmath>
#include <fstream>
#include <set>
#include <stdexcept>
#include <string>

namespace lethe {
namespace {

using nlohmann::json;

[[noreturn]] void Fail(const std::string& key, const std::string& why) {
  throw std::invalid_argument("config key '" + key + "': " + why);
}

void RejectUnknown(const json& obj, const std::string& where,
                   const std::set<std::string>& allowed) {
  if (!obj.is_object()) Fail(where, "expected an object");
  for (const auto& [key, value] : obj.items()) {
    if (!allowed.count(key)) {
      Fail(where.empty() ? key : where + "." + key, "unknown key");
    }
  }
}

Seconds DurationValue(const json& v, const std::string& key) {
  try {
    if (v.is_number_integer()) return ParseDuration(std::to_string(v.get<int64_t>()));
    if (v.is_number()) {
      const double d = v.get<double>();
      if (d != std::floor(d)) Fail(key, "durations must be whole seconds");
      return ParseDuration(std::to_string(static_cast<int64_t>(d)));
    }
    if (v.is_string()) return ParseDuration(v.get<std::string>());
  } catch (const std::invalid_argument& e) {
    Fail(key, e.what());
  }
  Fail(key, "expected a duration");
}

template <class T>
void Read(const json& obj, const char* name, const std::string& where, std::optional<T>& out) {
  const auto it = obj.find(name);
  if (it == obj.end()) return;
  const std::string key = where.empty() ? name : where + "." + name;
  try {
    if constexpr (std::is_same_v<T, std::string>) {
      if (!it->is_string()) Fail(key, "expected a string");
    } else if constexpr (std::is_integral_v<T>) {
      if (!it->is_number_integer()) Fail(key, "expected an integer");
      if constexpr (std::is_unsigned_v<T>) {
        if (it->is_number_integer() && !it->is_number_unsigned() && it->get<int64_t>() < 0) {
          Fail(key, "expected a non-negative integer");
        }
      }
    } else {
      if (!it->is_number()) Fail(key, "expected a number");
    }
    out = it->get<T>();
  } catch (const json::exception& e) {
    Fail(key, e.what());
  }
}

void ReadDuration(const json& obj, const char* name, const std::string& where,
                  std::optional<Seconds>& out) {
  const auto it = obj.find(name);
  if (it != obj.end()) out = DurationValue(*it, where + "." + name);
}

}  // namespace

Seconds ParseDuration(std::string_view text) {
  const std::string s(text);
  if (s.empty()) throw std::invalid_argument("empty duration");
  double unit = 1.0;
  std::string number = s;
  switch (s.back()) {
    case 's': unit = 1.0; number.pop_back(); break;
    case 'm': unit = 60.0; number.pop_back(); break;
    case 'h': unit = 3600.0; number.pop_back(); break;
    case 'd': unit = 86400.0; number.pop_back(); break;
    default: break;
  }
  size_t used = 0;
  double value = 0.0;
  try {
    value = std::stod(number, &used);
  } catch (const std::exception&) {
    throw std::invalid_argument("bad duration '" + s + "'");
  }
  if (used != number.size() || number.empty() || !std::isfinite(value)) {
    throw std::invalid_argument("bad duration '" + s + "'");
  }
  const double seconds = value * unit;
  if (!(seconds >= 1.0)) throw std::invalid_argument("duration '" + s + "' must be at least 1s");
  if (std::fabs(seconds - std::round(seconds)) > 1e-6) {
    throw std::invalid_argument("duration '" + s + "' is not a whole number of seconds");
  }
  return static_cast<Seconds>(std::llround(seconds));
}

RunConfig ParseRunConfig(const json& doc) {
  RejectUnknown(doc, "", {"seed", "threads", "out_dir", "tuning", "simulation", "utility", "store"});
  RunConfig cfg;
  Read(doc, "seed", "", cfg.seed);
  Read(doc, "threads", "", cfg.threads);
  Read(doc, "out_dir", "", cfg.out_dir);

  if (const auto it = doc.find("tuning"); it != doc.end()) {
    RejectUnknown(*it, "tuning", {"availability", "mean_down", "theta_star"});
    Read(*it, "availability", "tuning", cfg.tuning.availability);
    ReadDuration(*it, "mean_down", "tuning", cfg.tuning.mean_down);
    ReadDuration(*it, "theta_star", "tuning", cfg.tuning.theta_star);
  }
  if (const auto it = doc.find("simulation"); it != doc.end()) {
    RejectUnknown(*it, "simulation",
                  {"initial_posts", "creations_per_day", "deletions_per_day", "horizon_days",
                   "thresholds", "availabilities", "scenario", "engine", "scale_factor"});
    auto& sim = cfg.simulation;
    Read(*it, "initial_posts", "simulation", sim.initial_posts);
    Read(*it, "creations_per_day", "simulation", sim.creations_per_day);
    Read(*it, "deletions_per_day", "simulation", sim.deletions_per_day);
    Read(*it, "horizon_days", "simulation", sim.horizon_days);
    Read(*it, "scenario", "simulation", sim.scenario);
    Read(*it, "engine", "simulation", sim.engine);
    Read(*it, "scale_factor", "simulation", sim.scale_factor);
    if (const auto t = it->find("thresholds"); t != it->end()) {
      if (!t->is_array()) Fail("simulation.thresholds", "expected an array");
      std::vector<Seconds> values;
      for (const auto& v : *t) values.push_back(DurationValue(v, "simulation.thresholds"));
      sim.thresholds = std::move(values);
    }
    if (const auto a = it->find("availabilities"); a != it->end()) {
      if (!a->is_array()) Fail("simulation.availabilities", "expected an array");
      std::vector<double> values;
      for (const auto& v : *a) {
        if (!v.is_number()) Fail("simulation.availabilities", "expected numbers");
        values.push_back(v.get<double>());
      }
      sim.availabilities = std::move(values);
    }
  }
  if (const auto it = doc.find("utility"); it != doc.end()) {
    RejectUnknown(*it, "utility", {"trace", "synthetic_posts", "interactions_mean", "decay_mean"});
    Read(*it, "trace", "utility", cfg.utility.trace);
    Read(*it, "synthetic_posts", "utility", cfg.utility.synthetic_posts);
    Read(*it, "interactions_mean", "utility", cfg.utility.interactions_mean);
    ReadDuration(*it, "decay_mean", "utility", cfg.utility.decay_mean);
  }
  if (const auto it = doc.find("store"); it != doc.end()) {
    RejectUnknown(*it, "store", {"port", "data_dir", "updater_period"});
    Read(*it, "port", "store", cfg.store.port);
    Read(*it, "data_dir", "store", cfg.store.data_dir);
    ReadDuration(*it, "updater_period", "store", cfg.store.updater_period);
  }
  return cfg;
}

RunConfig LoadRunConfig(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open config " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument("config " + path.string() + " is not valid JSON: " + e.what());
  }
  return ParseRunConfig(doc);
}

}  // namespace lethe
