#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "zonecast/backtest.hpp"

namespace zonecast::eval {

/// Metrics CSV: header `year,month,zone,kind,lead_day,nmbe,nrmse,n_samples,
/// m_norm`; lead_day 0 encodes the all-days pool. Doubles round-trip.
void write_metrics_csv(const std::vector<MetricRecord>& records,
                       std::ostream& out);
std::vector<MetricRecord> parse_metrics_csv(std::istream& in);

/// Writes metrics.csv plus static SVG charts into out_dir:
///   - per test month and kind, NMBE/NRMSE against lead day (national);
///   - per kind, NRMSE (all lead days) against test month, one line per
///     zone with the national line overlaid;
///   - per sample run, forecast against metering over the 360 h horizon.
/// Throws std::invalid_argument on empty records and std::runtime_error
/// when out_dir is not writable.
void emit_report(const std::vector<MetricRecord>& records,
                 const std::string& out_dir,
                 const std::vector<RunComparison>& sample_runs = {});

}  // namespace zonecast::eval
