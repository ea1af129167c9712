#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "zonecast/backtest.hpp"
#include "zonecast/config.hpp"
#include "zonecast/ingest.hpp"
#include "zonecast/io_util.hpp"
#include "zonecast/report.hpp"
#include "zonecast/synth.hpp"
#include "zonecast/tune.hpp"

namespace {

namespace fs = std::filesystem;
using namespace zonecast;

struct CommonArgs {
  std::string config_path;
  std::string out_dir = "out";
  int threads = 0;  // 0 = take the config value
};

cli::RunConfig load_config(const CommonArgs& args) {
  if (args.config_path.empty())
    throw cli::ConfigError("--config is required for this subcommand");
  cli::RunConfig cfg = cli::load_config_file(args.config_path);
  if (args.threads > 0) cfg.backtest.threads = args.threads;
  return cfg;
}

template <typename Parser>
auto parse_file(const std::string& path, Parser parser) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  return parser(in);
}

void report_row_errors(const std::string& label,
                       const std::vector<ingest::RowError>& errors) {
  std::printf("%s: %zu row error(s)\n", label.c_str(), errors.size());
  for (std::size_t i = 0; i < errors.size() && i < 10; ++i)
    std::printf("  line %zu: %s\n", errors[i].line, errors[i].message.c_str());
  if (errors.size() > 10) std::printf("  ...\n");
}

struct LoadedData {
  eval::BacktestInputs inputs;
  std::map<ZoneId, std::vector<int>> zones;
};

LoadedData load_data(const cli::RunConfig& cfg, bool need_forecasts) {
  LoadedData data;
  if (cfg.power_csv.empty() || cfg.met_csv.empty() || cfg.totals_csv.empty() ||
      cfg.zones_csv.empty())
    throw cli::ConfigError(
        "data.power_csv, data.met_csv, data.totals_csv and data.zones_csv "
        "must all be set");
  auto power = parse_file(cfg.power_csv, ingest::parse_power_csv);
  auto met = parse_file(cfg.met_csv, ingest::parse_met_csv);
  auto totals = parse_file(cfg.totals_csv, ingest::parse_totals_csv);
  auto zones = parse_file(cfg.zones_csv, ingest::parse_zones_csv);
  for (const auto* errors : {&power.row_errors, &met.row_errors,
                             &totals.row_errors, &zones.row_errors}) {
    if (!errors->empty())
      throw std::runtime_error("input files carry row errors; run the ingest "
                               "subcommand for details");
  }
  data.inputs.power = std::move(power.value);
  data.inputs.met = std::move(met.value);
  data.inputs.totals = std::move(totals.value);
  data.inputs.zone_provinces = zones.value;
  data.zones = std::move(zones.value);
  if (need_forecasts) {
    if (cfg.forecast_met_dir.empty())
      throw cli::ConfigError("data.forecast_met_dir must be set");
    const std::string dir = cfg.forecast_met_dir;
    data.inputs.forecast_loader = [dir](HourlyTimestamp run_date) {
      char name[48];
      std::snprintf(name, sizeof name, "forecast_met_%04d-%02d-%02d.csv",
                    run_date.year(), run_date.month(), run_date.day());
      const std::string path = (fs::path(dir) / name).string();
      auto parsed = parse_file(path, ingest::parse_met_csv);
      if (!parsed.row_errors.empty())
        throw std::runtime_error("forecast met file '" + path +
                                 "' carries row errors");
      return std::move(parsed.value);
    };
  }
  return data;
}

std::vector<ZoneId> resolve_zones(const cli::RunConfig& cfg,
                                  const LoadedData& data) {
  if (!cfg.backtest.zones.empty()) return cfg.backtest.zones;
  std::vector<ZoneId> zones;
  for (const auto& [zone, provinces] : data.zones) zones.push_back(zone);
  return zones;
}

fs::path model_path(const std::string& out_dir, PlantKind kind, ZoneId zone,
                    const char* ext) {
  return fs::path(out_dir) / "models" /
         (std::string(to_string(kind)) + "_" + to_string(zone) + ext);
}

int cmd_synth(const CommonArgs& args) {
  const cli::RunConfig cfg = load_config(args);
  synth::SynthConfig scfg;
  scfg.rng_seed = cfg.synth.seed;
  scfg.start_day = cli::parse_date(cfg.synth.start);
  scfg.end_day = cli::parse_date(cfg.synth.end);
  scfg.pv_efficiency = cfg.synth.pv_efficiency;
  scfg.noise_frac = cfg.synth.noise_frac;
  scfg.forecast_noise_growth = cfg.synth.forecast_noise_growth;
  scfg.forecast_horizon_hours = cfg.synth.forecast_horizon_hours;
  int province = 1;
  for (int z = 0; z < cfg.synth.zone_count; ++z) {
    synth::ZoneSpec zone;
    zone.zone = kAllZones[std::size_t(z)];
    zone.pv_capacity_mw = cfg.synth.pv_capacity;
    zone.wd_capacity_mw = cfg.synth.wd_capacity;
    for (int p = 0; p < cfg.synth.provinces_per_zone; ++p)
      zone.provinces.push_back(province++);
    scfg.zones.push_back(std::move(zone));
  }
  if (!cfg.synth.run_start.empty() && !cfg.synth.run_end.empty()) {
    for (HourlyTimestamp d = cli::parse_date(cfg.synth.run_start);
         d <= cli::parse_date(cfg.synth.run_end); d = d + 24)
      scfg.run_dates.push_back(d);
  } else {
    for (const auto& [year, month] : cfg.backtest.test_months) {
      for (int day = 1; day <= days_in_month(year, month); ++day)
        scfg.run_dates.push_back(HourlyTimestamp::from_ymdh(year, month, day, 0));
    }
  }
  const synth::SynthDataset data = synth::generate_dataset(scfg);
  synth::write_dataset(data, args.out_dir);
  std::printf("synth: wrote %zu power series, %zu met series, %zu forecast "
              "file(s) to %s\n",
              data.power.size(), data.met.size(), data.forecasts.size(),
              args.out_dir.c_str());
  return 0;
}

int cmd_ingest(const CommonArgs& args) {
  const cli::RunConfig cfg = load_config(args);
  std::size_t total_errors = 0;

  if (!cfg.power_csv.empty()) {
    auto power = parse_file(cfg.power_csv, ingest::parse_power_csv);
    report_row_errors(cfg.power_csv, power.row_errors);
    total_errors += power.row_errors.size();
    for (const auto& [key, series] : power.value) {
      const auto violations = validate_hourly_series(series, true);
      std::printf("  %s/%s: %zu points, %zu violation(s)\n",
                  to_string(key.first), to_string(key.second), series.size(),
                  violations.size());
      for (const auto& v : violations)
        std::printf("    index %zu: %s\n", v.index, v.reason.c_str());
      total_errors += violations.size();
    }
  }
  if (!cfg.met_csv.empty()) {
    auto met = parse_file(cfg.met_csv, ingest::parse_met_csv);
    report_row_errors(cfg.met_csv, met.row_errors);
    total_errors += met.row_errors.size();
    std::size_t violations = 0;
    for (const auto& [key, series] : met.value)
      violations +=
          validate_hourly_series(series, !ingest::is_signed_variable(key.second))
              .size();
    std::printf("  %zu met series, %zu validation violation(s)\n",
                met.value.size(), violations);
    total_errors += violations;
  }
  if (!cfg.totals_csv.empty()) {
    auto totals = parse_file(cfg.totals_csv, ingest::parse_totals_csv);
    report_row_errors(cfg.totals_csv, totals.row_errors);
    total_errors += totals.row_errors.size();
  }
  if (!cfg.zones_csv.empty()) {
    auto zones = parse_file(cfg.zones_csv, ingest::parse_zones_csv);
    report_row_errors(cfg.zones_csv, zones.row_errors);
    total_errors += zones.row_errors.size();
  }
  std::printf("ingest: %zu problem(s) found\n", total_errors);
  return 0;
}

int cmd_preprocess(const CommonArgs& args) {
  const cli::RunConfig cfg = load_config(args);
  LoadedData data = load_data(cfg, false);
  const std::vector<ZoneId> zones = resolve_zones(cfg, data);

  ingest::PowerSeriesMap cleaned;
  for (const PlantKind kind : cfg.backtest.kinds) {
    std::map<ZoneId, HourlySeries> zonal;
    for (const auto& [key, series] : data.inputs.power)
      if (key.second == kind) zonal[key.first] = series;
    if (zonal.empty()) continue;
    auto rescaled = preprocess::monthly_rescale(zonal, data.inputs.totals, kind);
    for (auto& [zone, series] : rescaled) {
      series = preprocess::spline_fill(series,
                                       cfg.backtest.preprocess.max_gap_hours);
      cleaned[{zone, kind}] = std::move(series);
    }
  }

  // PV safety cone, reported per zone and dropped from the cleaned output.
  for (const ZoneId zone : zones) {
    const auto it = cleaned.find({zone, PlantKind::PV});
    if (it == cleaned.end()) continue;
    pipeline::FeatureBlock block = pipeline::build_features(
        data.inputs.met, data.zones.at(zone), {PlantKind::PV, pipeline::Learner::KNN});
    SampleMatrix mat = pipeline::to_samples(block, it->second, zone, PlantKind::PV);
    if (mat.rows() == 0) continue;
    std::vector<std::pair<double, double>> pairs;
    for (std::size_t i = 0; i < mat.rows(); ++i)
      pairs.emplace_back(mat.row(i)[0], mat.targets[i]);
    const auto mask = preprocess::cone_filter(pairs, cfg.backtest.preprocess);
    std::size_t dropped = 0;
    for (std::size_t i = 0; i < mat.rows(); ++i) {
      if (!mask.outlier[i]) continue;
      ++dropped;
      auto* point = const_cast<HourlyPoint*>(it->second.find(mat.timestamps[i]));
      if (point) point->missing = true;
    }
    std::printf("preprocess: %s/PV dropped %zu cone outlier(s)\n",
                to_string(zone), dropped);
  }

  fs::create_directories(args.out_dir);
  const fs::path out_path = fs::path(args.out_dir) / "cleaned_power.csv";
  std::ofstream out(out_path);
  if (!out) throw std::runtime_error("cannot write " + out_path.string());
  ingest::write_power_csv(cleaned, out);
  std::printf("preprocess: wrote %s\n", out_path.string().c_str());
  return 0;
}

int cmd_train(const CommonArgs& args) {
  const cli::RunConfig cfg = load_config(args);
  LoadedData data = load_data(cfg, false);
  const std::vector<ZoneId> zones = resolve_zones(cfg, data);

  fs::create_directories(fs::path(args.out_dir) / "models");
  for (const PlantKind kind : cfg.backtest.kinds) {
    for (const ZoneId zone : zones) {
      const auto it = data.inputs.power.find({zone, kind});
      if (it == data.inputs.power.end() || it->second.empty()) continue;
      const HourlyTimestamp train_end = it->second.points.back().ts + 1;
      const eval::TrainedZone trained =
          eval::train_zone(data.inputs, cfg.backtest, kind, zone, train_end);
      {
        std::ofstream out(model_path(args.out_dir, kind, zone, ".knn"));
        knn::save_knn(trained.knn_model, out);
      }
      {
        std::ofstream out(model_path(args.out_dir, kind, zone, ".qrf"));
        qrf::save_qrf(trained.qrf_model, out);
      }
      std::printf("train: %s/%s fitted on %zu rows -> %s\n", to_string(kind),
                  to_string(zone), trained.qrf_model.targets.size(),
                  model_path(args.out_dir, kind, zone, ".*").string().c_str());
    }
  }
  return 0;
}

int cmd_forecast(const CommonArgs& args, const std::string& run_date_str,
                 const std::string& kind_str, const std::string& zone_str) {
  const cli::RunConfig cfg = load_config(args);
  LoadedData data = load_data(cfg, true);
  const HourlyTimestamp run_date = cli::parse_date(run_date_str);
  const auto kind = plant_kind_from_string(kind_str);
  if (!kind) throw cli::ConfigError("unknown kind '" + kind_str + "'");

  std::vector<ZoneId> zones;
  if (zone_str == "ALL") {
    zones = resolve_zones(cfg, data);
  } else {
    const auto zone = zone_from_string(zone_str);
    if (!zone) throw cli::ConfigError("unknown zone '" + zone_str + "'");
    zones.push_back(*zone);
  }

  const ingest::MetSeriesMap forecast_met = data.inputs.forecast_loader(run_date);
  for (const ZoneId zone : zones) {
    const fs::path knn_path = model_path(args.out_dir, *kind, zone, ".knn");
    const fs::path qrf_path = model_path(args.out_dir, *kind, zone, ".qrf");
    std::ifstream knn_in(knn_path);
    if (!knn_in)
      throw std::runtime_error("missing model file " + knn_path.string() +
                               " (run the train subcommand first)");
    std::ifstream qrf_in(qrf_path);
    if (!qrf_in)
      throw std::runtime_error("missing model file " + qrf_path.string() +
                               " (run the train subcommand first)");
    const knn::KnnModel knn_model = knn::load_knn(knn_in);
    const qrf::QrfModel qrf_model = qrf::load_qrf(qrf_in);

    SampleMatrix tail;
    const SampleMatrix* tail_ptr = nullptr;
    if (*kind == PlantKind::PV && cfg.backtest.run.postprocess.enabled) {
      tail = eval::pv_tail_matrix(data.inputs, zone, run_date,
                                  cfg.backtest.run.postprocess.n_weeks);
      tail_ptr = &tail;
    }
    const ForecastRun run = pipeline::run_forecast(
        knn_model, qrf_model, forecast_met, data.zones.at(zone), run_date, zone,
        *kind, cfg.backtest.run, tail_ptr);

    char name[64];
    std::snprintf(name, sizeof name, "forecast_%s_%s_%04d-%02d-%02d.csv",
                  to_string(*kind), to_string(zone), run_date.year(),
                  run_date.month(), run_date.day());
    fs::create_directories(args.out_dir);
    const fs::path out_path = fs::path(args.out_dir) / name;
    std::ofstream out(out_path);
    if (!out) throw std::runtime_error("cannot write " + out_path.string());
    ingest::write_forecast_csv(run, out);
    std::printf("forecast: wrote %s\n", out_path.string().c_str());
  }
  return 0;
}

int cmd_backtest(const CommonArgs& args) {
  const cli::RunConfig cfg = load_config(args);
  LoadedData data = load_data(cfg, true);
  eval::BacktestConfig bt = cfg.backtest;
  if (bt.zones.empty()) bt.zones = resolve_zones(cfg, data);

  const eval::BacktestResult result = eval::backtest(data.inputs, bt);
  eval::emit_report(result.records, args.out_dir, result.samples);

  for (const eval::MetricRecord& r : result.records) {
    if (r.lead_day != 0 || r.zone != "ITALY") continue;
    std::printf("backtest: %04d-%02d %s ITALY  NMBE %+0.4f  NRMSE %0.4f  "
                "(n=%zu)\n",
                r.year, r.month, to_string(r.kind), r.nmbe, r.nrmse,
                r.n_samples);
  }
  std::printf("backtest: %zu records -> %s\n", result.records.size(),
              args.out_dir.c_str());
  return 0;
}

int cmd_tune(const CommonArgs& args, const std::string& kind_str,
             const std::string& zone_str) {
  const cli::RunConfig cfg = load_config(args);
  LoadedData data = load_data(cfg, false);
  const auto kind = plant_kind_from_string(kind_str);
  if (!kind) throw cli::ConfigError("unknown kind '" + kind_str + "'");
  const auto zone = zone_from_string(zone_str);
  if (!zone) throw cli::ConfigError("unknown zone '" + zone_str + "'");

  // Tune strictly on training data: stop at the first test month when one
  // is configured, otherwise at the end of the measured series.
  HourlyTimestamp limit;
  if (!cfg.backtest.test_months.empty()) {
    auto months = cfg.backtest.test_months;
    std::sort(months.begin(), months.end());
    limit = HourlyTimestamp::from_ymdh(months[0].first, months[0].second, 1, 0);
  } else {
    limit = data.inputs.power.at({*zone, *kind}).points.back().ts + 1;
  }

  const std::vector<eval::TuneEntry> entries =
      eval::tune(data.inputs, cfg.backtest, cfg.tune, *kind, *zone, limit);

  std::printf("%-6s %-10s %-9s %-4s %-8s %-10s %s\n", "rank", "cone_thr",
              "quantile", "k", "n_weeks", "nrmse", "n");
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const eval::TuneEntry& e = entries[i];
    std::printf("%-6zu %-10g %-9g %-4d %-8d %-10.5f %zu\n", i + 1,
                e.cone_threshold, e.quantile, e.k, e.n_weeks, e.nrmse,
                e.n_samples);
  }

  fs::create_directories(args.out_dir);
  const fs::path out_path = fs::path(args.out_dir) / "tune_results.csv";
  std::ofstream out(out_path);
  if (!out) throw std::runtime_error("cannot write " + out_path.string());
  out << "rank,cone_threshold,quantile,k,n_weeks,nrmse,n_samples\n";
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const eval::TuneEntry& e = entries[i];
    out << i + 1 << ',' << format_double(e.cone_threshold) << ','
        << format_double(e.quantile) << ',' << e.k << ',' << e.n_weeks << ','
        << format_double(e.nrmse) << ',' << e.n_samples << '\n';
  }
  std::printf("tune: wrote %s\n", out_path.string().c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"zonecast - zonal PV/wind power forecasting"};
  app.require_subcommand(1);

  CommonArgs common;
  app.add_option("--config", common.config_path, "path to the run config file");
  app.add_option("--out", common.out_dir, "output directory (default: out)");
  app.add_option("--threads", common.threads, "worker thread cap");

  std::string run_date, kind = "PV", zone = "ALL";

  CLI::App* synth_cmd = app.add_subcommand("synth", "generate synthetic fixtures");
  CLI::App* ingest_cmd =
      app.add_subcommand("ingest", "parse and validate the input files");
  CLI::App* preprocess_cmd =
      app.add_subcommand("preprocess", "clean the power data and emit CSVs");
  CLI::App* train_cmd = app.add_subcommand("train", "fit and persist models");
  CLI::App* forecast_cmd =
      app.add_subcommand("forecast", "emit a 360 h forecast run");
  forecast_cmd->add_option("--run-date", run_date, "run date YYYY-MM-DD")
      ->required();
  forecast_cmd->add_option("--kind", kind, "PV or WD")->required();
  forecast_cmd->add_option("--zone", zone, "zone acronym or ALL");
  CLI::App* backtest_cmd =
      app.add_subcommand("backtest", "semi-moving-window evaluation and report");
  CLI::App* tune_cmd =
      app.add_subcommand("tune", "hyperparameter grid sweep on the training set");
  tune_cmd->add_option("--kind", kind, "PV or WD")->required();
  tune_cmd->add_option("--zone", zone, "zone acronym")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (synth_cmd->parsed()) return cmd_synth(common);
    if (ingest_cmd->parsed()) return cmd_ingest(common);
    if (preprocess_cmd->parsed()) return cmd_preprocess(common);
    if (train_cmd->parsed()) return cmd_train(common);
    if (forecast_cmd->parsed()) return cmd_forecast(common, run_date, kind, zone);
    if (backtest_cmd->parsed()) return cmd_backtest(common);
    if (tune_cmd->parsed()) return cmd_tune(common, kind, zone);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
