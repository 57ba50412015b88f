#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "tlflr/risk.hpp"
#include "tlflr/simgen.hpp"

namespace tlflr {

/// Doubles formatted with "%.17g": round-trips bitwise through the CSV layer.
std::string format_double(double v);

/// FNV-1a over a canonical string; reported as a 16-hex-digit config hash.
std::string fnv1a_hex(const std::string& s);

// ---- curve / response CSV (long form) --------------------------------
// curves: header "curve_id,t,x"; responses: header "curve_id,y,task_id".
// UTF-8, '.' decimal separator; lines starting with '#' are ignored.

void write_curves_csv(std::ostream& os,
                      const std::vector<const TaskDataset*>& tasks,
                      const std::vector<std::vector<std::string>>& curve_ids);
void write_responses_csv(std::ostream& os,
                         const std::vector<const TaskDataset*>& tasks,
                         const std::vector<std::vector<std::string>>& curve_ids);

/// Writes <prefix>curves.csv and <prefix>responses.csv with generated
/// curve ids "<task>_<i>"; returns the two paths.
std::pair<std::string, std::string> export_tasks_csv(
    const std::string& prefix, const std::vector<const TaskDataset*>& tasks);

/// Parses a curves/responses CSV pair into per-task datasets, in first-seen
/// task order. Malformed rows raise ArgumentError with row/column context.
std::vector<TaskDataset> read_tasks_csv(std::istream& curves,
                                        std::istream& responses,
                                        const std::string& curves_name = "curves",
                                        const std::string& responses_name = "responses");
std::vector<TaskDataset> read_tasks_csv_files(const std::string& curves_path,
                                              const std::string& responses_path);

// ---- experiment results ----------------------------------------------

void write_experiment_csv(std::ostream& os, const ExperimentResult& result);
std::string experiment_json(const ExperimentResult& result);

// ---- §6 price ingestion ----------------------------------------------

struct PriceRow {
  std::string ticker, sector, date;  // date ISO YYYY-MM-DD
  double close = 0.0;
};

std::vector<PriceRow> read_prices_csv(std::istream& is,
                                      const std::string& name = "prices");

struct IngestSummary {
  int tickers_used = 0;
  int tickers_skipped = 0;
  std::vector<std::string> skipped;  // tickers missing a month or too short
};

/// Monthly-cumulative-return transform: per ticker, X(t) over month1 trading
/// days (affinely mapped to [0,1]) with X = (s(t)-s(t0))/s(t0), and
/// Y = (s2(end)-s2(start))/s2(start) from month2. One task per sector.
std::vector<TaskDataset> ingest_prices(const std::vector<PriceRow>& rows,
                                       const std::string& month1,
                                       const std::string& month2,
                                       IngestSummary& summary);

}  // namespace tlflr
