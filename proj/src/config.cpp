#include "zonecast/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <istream>
#include <map>
#include <set>

#include "zonecast/io_util.hpp"

namespace zonecast::cli {

namespace {

double require_double(std::string_view key, std::string_view value) {
  const auto v = parse_double(value);
  if (!v) throw ConfigError(std::string(key) + ": not a number: '" +
                            std::string(value) + "'");
  return *v;
}

long require_int(std::string_view key, std::string_view value) {
  const auto v = parse_int(value);
  if (!v) throw ConfigError(std::string(key) + ": not an integer: '" +
                            std::string(value) + "'");
  return *v;
}

bool require_bool(std::string_view key, std::string_view value) {
  if (value == "true") return true;
  if (value == "false") return false;
  throw ConfigError(std::string(key) + ": expected true or false");
}

std::vector<std::string_view> split_list(std::string_view value) {
  return split_csv_line(value);
}

}  // namespace

HourlyTimestamp parse_date(std::string_view text) {
  text = trim(text);
  if (text.size() != 10 || text[4] != '-' || text[7] != '-')
    throw ConfigError("bad date '" + std::string(text) + "', expected YYYY-MM-DD");
  const auto ts = HourlyTimestamp::parse(std::string(text) + "T00:00:00Z");
  if (!ts) throw ConfigError("bad date '" + std::string(text) + "'");
  return *ts;
}

RunConfig parse_config(std::istream& in) {
  RunConfig cfg;
  // PV defaults to a +/-1 month, +/-1 hour candidate window; WD always
  // runs windowless regardless of these keys.
  cfg.backtest.knn.month_window = 1;
  cfg.backtest.knn.hour_window = 1;

  using Handler = std::function<void(std::string_view)>;
  std::map<std::string, Handler, std::less<>> handlers;
  const auto add = [&](const char* key, Handler h) { handlers[key] = std::move(h); };

  add("data.power_csv", [&](auto v) { cfg.power_csv = std::string(v); });
  add("data.met_csv", [&](auto v) { cfg.met_csv = std::string(v); });
  add("data.totals_csv", [&](auto v) { cfg.totals_csv = std::string(v); });
  add("data.zones_csv", [&](auto v) { cfg.zones_csv = std::string(v); });
  add("data.forecast_met_dir",
      [&](auto v) { cfg.forecast_met_dir = std::string(v); });

  auto& pre = cfg.backtest.preprocess;
  add("preprocess.cone_threshold", [&](auto v) {
    pre.cone_threshold = require_double("preprocess.cone_threshold", v);
    if (!(pre.cone_threshold > 0.0))
      throw ConfigError("preprocess.cone_threshold must be > 0");
  });
  add("preprocess.ghi_floor", [&](auto v) {
    pre.ghi_floor = require_double("preprocess.ghi_floor", v);
    if (pre.ghi_floor < 0.0) throw ConfigError("preprocess.ghi_floor must be >= 0");
  });
  add("preprocess.max_gap_hours", [&](auto v) {
    pre.max_gap_hours = int(require_int("preprocess.max_gap_hours", v));
    if (pre.max_gap_hours < 1)
      throw ConfigError("preprocess.max_gap_hours must be >= 1");
  });
  add("preprocess.mad_fallback_frac", [&](auto v) {
    pre.mad_fallback_frac = require_double("preprocess.mad_fallback_frac", v);
    if (!(pre.mad_fallback_frac > 0.0 && pre.mad_fallback_frac < 1.0))
      throw ConfigError("preprocess.mad_fallback_frac must be in (0,1)");
  });

  auto& knn = cfg.backtest.knn;
  add("knn.k", [&](auto v) {
    knn.k = int(require_int("knn.k", v));
    if (knn.k < 1) throw ConfigError("knn.k must be >= 1");
  });
  add("knn.epsilon", [&](auto v) {
    knn.epsilon = require_double("knn.epsilon", v);
    if (!(knn.epsilon > 0.0)) throw ConfigError("knn.epsilon must be > 0");
  });
  add("knn.month_window", [&](auto v) {
    if (v == "none") {
      knn.month_window.reset();
    } else {
      knn.month_window = int(require_int("knn.month_window", v));
      if (*knn.month_window < 0) throw ConfigError("knn.month_window must be >= 0");
    }
  });
  add("knn.hour_window", [&](auto v) {
    if (v == "none") {
      knn.hour_window.reset();
    } else {
      knn.hour_window = int(require_int("knn.hour_window", v));
      if (*knn.hour_window < 0) throw ConfigError("knn.hour_window must be >= 0");
    }
  });

  auto& qrf = cfg.backtest.qrf;
  add("qrf.n_trees", [&](auto v) {
    qrf.n_trees = int(require_int("qrf.n_trees", v));
    if (qrf.n_trees < 1) throw ConfigError("qrf.n_trees must be >= 1");
  });
  add("qrf.min_leaf", [&](auto v) {
    qrf.min_leaf = int(require_int("qrf.min_leaf", v));
    if (qrf.min_leaf < 1) throw ConfigError("qrf.min_leaf must be >= 1");
  });
  add("qrf.mtry", [&](auto v) {
    qrf.mtry = int(require_int("qrf.mtry", v));
    if (qrf.mtry < 0) throw ConfigError("qrf.mtry must be >= 0 (0 = auto)");
  });
  add("qrf.max_depth", [&](auto v) {
    qrf.max_depth = int(require_int("qrf.max_depth", v));
    if (qrf.max_depth < 0)
      throw ConfigError("qrf.max_depth must be >= 0 (0 = unlimited)");
  });
  add("qrf.seed", [&](auto v) {
    qrf.seed = std::uint64_t(require_int("qrf.seed", v));
  });
  add("qrf.quantile", [&](auto v) {
    qrf.quantile = require_double("qrf.quantile", v);
    if (!(qrf.quantile > 0.0 && qrf.quantile < 1.0))
      throw ConfigError("qrf.quantile must be in (0,1)");
  });

  auto& run = cfg.backtest.run;
  add("pipeline.ensemble_weight_knn", [&](auto v) {
    run.ensemble.weight_knn = require_double("pipeline.ensemble_weight_knn", v);
    if (!(run.ensemble.weight_knn >= 0.0 && run.ensemble.weight_knn <= 1.0))
      throw ConfigError("pipeline.ensemble_weight_knn must be in [0,1]");
  });
  add("pipeline.n_weeks", [&](auto v) {
    run.postprocess.n_weeks = int(require_int("pipeline.n_weeks", v));
    if (run.postprocess.n_weeks < 1)
      throw ConfigError("pipeline.n_weeks must be >= 1");
  });
  add("pipeline.postprocess_enabled", [&](auto v) {
    run.postprocess.enabled = require_bool("pipeline.postprocess_enabled", v);
  });
  add("pipeline.postprocess_order", [&](auto v) {
    if (v == "before_combine")
      run.order = pipeline::PostprocessOrder::BeforeCombine;
    else if (v == "after_combine")
      run.order = pipeline::PostprocessOrder::AfterCombine;
    else
      throw ConfigError(
          "pipeline.postprocess_order must be before_combine or after_combine");
  });

  add("backtest.train_start",
      [&](auto v) { cfg.backtest.train_start = parse_date(v); });
  add("backtest.test_months", [&](auto v) {
    cfg.backtest.test_months.clear();
    for (const auto item : split_list(v)) {
      if (item.size() != 7 || item[4] != '-')
        throw ConfigError("backtest.test_months: expected YYYY-MM, got '" +
                          std::string(item) + "'");
      const auto year = parse_int(item.substr(0, 4));
      const auto month = parse_int(item.substr(5, 2));
      if (!year || !month || *month < 1 || *month > 12)
        throw ConfigError("backtest.test_months: bad month '" +
                          std::string(item) + "'");
      cfg.backtest.test_months.push_back({int(*year), int(*month)});
    }
  });
  add("backtest.zones", [&](auto v) {
    cfg.backtest.zones.clear();
    if (v == "ALL") return;  // resolved from the zones file at load time
    for (const auto item : split_list(v)) {
      const auto zone = zone_from_string(item);
      if (!zone) throw ConfigError("backtest.zones: unknown zone '" +
                                   std::string(item) + "'");
      cfg.backtest.zones.push_back(*zone);
    }
  });
  add("backtest.kinds", [&](auto v) {
    cfg.backtest.kinds.clear();
    for (const auto item : split_list(v)) {
      const auto kind = plant_kind_from_string(item);
      if (!kind) throw ConfigError("backtest.kinds: unknown kind '" +
                                   std::string(item) + "'");
      cfg.backtest.kinds.push_back(*kind);
    }
  });
  add("threads", [&](auto v) {
    cfg.backtest.threads = int(require_int("threads", v));
    if (cfg.backtest.threads < 1) throw ConfigError("threads must be >= 1");
  });

  add("tune.cone_thresholds", [&](auto v) {
    cfg.tune.cone_thresholds.clear();
    for (const auto item : split_list(v))
      cfg.tune.cone_thresholds.push_back(require_double("tune.cone_thresholds", item));
  });
  add("tune.quantiles", [&](auto v) {
    cfg.tune.quantiles.clear();
    for (const auto item : split_list(v))
      cfg.tune.quantiles.push_back(require_double("tune.quantiles", item));
  });
  add("tune.ks", [&](auto v) {
    cfg.tune.ks.clear();
    for (const auto item : split_list(v))
      cfg.tune.ks.push_back(int(require_int("tune.ks", item)));
  });
  add("tune.n_weeks", [&](auto v) {
    cfg.tune.n_weeks.clear();
    for (const auto item : split_list(v))
      cfg.tune.n_weeks.push_back(int(require_int("tune.n_weeks", item)));
  });
  add("tune.holdout_days", [&](auto v) {
    cfg.tune.holdout_days = int(require_int("tune.holdout_days", v));
    if (cfg.tune.holdout_days < 1)
      throw ConfigError("tune.holdout_days must be >= 1");
  });

  auto& synth = cfg.synth;
  add("synth.seed",
      [&](auto v) { synth.seed = std::uint64_t(require_int("synth.seed", v)); });
  add("synth.start", [&](auto v) { synth.start = std::string(v); });
  add("synth.end", [&](auto v) { synth.end = std::string(v); });
  add("synth.zone_count", [&](auto v) {
    synth.zone_count = int(require_int("synth.zone_count", v));
    if (synth.zone_count < 1 || synth.zone_count > int(kAllZones.size()))
      throw ConfigError("synth.zone_count must be in 1..6");
  });
  add("synth.provinces_per_zone", [&](auto v) {
    synth.provinces_per_zone = int(require_int("synth.provinces_per_zone", v));
    if (synth.provinces_per_zone < 1)
      throw ConfigError("synth.provinces_per_zone must be >= 1");
  });
  add("synth.pv_capacity",
      [&](auto v) { synth.pv_capacity = require_double("synth.pv_capacity", v); });
  add("synth.wd_capacity",
      [&](auto v) { synth.wd_capacity = require_double("synth.wd_capacity", v); });
  add("synth.pv_efficiency", [&](auto v) {
    synth.pv_efficiency = require_double("synth.pv_efficiency", v);
  });
  add("synth.noise_frac",
      [&](auto v) { synth.noise_frac = require_double("synth.noise_frac", v); });
  add("synth.forecast_noise_growth", [&](auto v) {
    synth.forecast_noise_growth =
        require_double("synth.forecast_noise_growth", v);
  });
  add("synth.forecast_horizon_hours", [&](auto v) {
    synth.forecast_horizon_hours =
        int(require_int("synth.forecast_horizon_hours", v));
  });
  add("synth.run_start", [&](auto v) { synth.run_start = std::string(v); });
  add("synth.run_end", [&](auto v) { synth.run_end = std::string(v); });

  std::set<std::string> seen;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string_view stripped = trim(line);
    if (stripped.empty() || stripped.front() == '#') continue;
    const std::size_t eq = stripped.find('=');
    if (eq == std::string_view::npos)
      throw ConfigError("line " + std::to_string(lineno) +
                        ": expected 'key = value'");
    const std::string key(trim(stripped.substr(0, eq)));
    const std::string_view value = trim(stripped.substr(eq + 1));
    const auto it = handlers.find(key);
    if (it == handlers.end())
      throw ConfigError("line " + std::to_string(lineno) + ": unknown key '" +
                        key + "'");
    if (!seen.insert(key).second)
      throw ConfigError("line " + std::to_string(lineno) + ": duplicate key '" +
                        key + "'");
    it->second(value);
  }

  // The post-processing shares the night threshold with the cone filter.
  cfg.backtest.run.postprocess.ghi_floor = cfg.backtest.preprocess.ghi_floor;
  return cfg;
}

RunConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  return parse_config(in);
}

}  // namespace zonecast::cli
