#include "tlflr/io.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include <nlohmann/json.hpp>

namespace tlflr {

using nlohmann::json;

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string fnv1a_hex(const std::string& s) {
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(hash_str(s)));
  return buf;
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur += ch;
    }
  }
  out.push_back(cur);
  return out;
}

double parse_double(const std::string& s, const std::string& file, int row,
                    int col) {
  double v = 0.0;
  const char* begin = s.data();
  const char* end = begin + s.size();
  auto [ptr, ec] = std::from_chars(begin, end, v);
  if (ec != std::errc() || ptr != end) {
    std::ostringstream msg;
    msg << file << ": row " << row << ", column " << col
        << ": cannot parse number from '" << s << "'";
    throw ArgumentError(msg.str());
  }
  return v;
}

void expect_header(const std::vector<std::string>& got,
                   const std::vector<std::string>& want,
                   const std::string& file) {
  if (got != want) {
    std::ostringstream msg;
    msg << file << ": expected header '";
    for (std::size_t i = 0; i < want.size(); ++i)
      msg << (i ? "," : "") << want[i];
    msg << "'";
    throw ArgumentError(msg.str());
  }
}

struct CsvReader {
  std::istream& is;
  std::string file;
  int row = 0;
  bool next(std::vector<std::string>& fields) {
    std::string line;
    while (std::getline(is, line)) {
      ++row;
      if (line.empty() || line[0] == '#') continue;
      fields = split_csv_line(line);
      return true;
    }
    return false;
  }
};

}  // namespace

void write_curves_csv(std::ostream& os,
                      const std::vector<const TaskDataset*>& tasks,
                      const std::vector<std::vector<std::string>>& curve_ids) {
  os << "curve_id,t,x\n";
  for (std::size_t t = 0; t < tasks.size(); ++t) {
    for (std::size_t c = 0; c < tasks[t]->curves.size(); ++c) {
      const Curve& cur = tasks[t]->curves[c];
      for (Eigen::Index g = 0; g < cur.grid.size(); ++g)
        os << curve_ids[t][c] << ',' << format_double(cur.grid[g]) << ','
           << format_double(cur.values[g]) << '\n';
    }
  }
}

void write_responses_csv(std::ostream& os,
                         const std::vector<const TaskDataset*>& tasks,
                         const std::vector<std::vector<std::string>>& curve_ids) {
  os << "curve_id,y,task_id\n";
  for (std::size_t t = 0; t < tasks.size(); ++t)
    for (Eigen::Index i = 0; i < tasks[t]->responses.size(); ++i)
      os << curve_ids[t][i] << ',' << format_double(tasks[t]->responses[i])
         << ',' << tasks[t]->task_id << '\n';
}

std::pair<std::string, std::string> export_tasks_csv(
    const std::string& prefix, const std::vector<const TaskDataset*>& tasks) {
  std::vector<std::vector<std::string>> ids;
  for (const auto* t : tasks) {
    std::vector<std::string> task_ids;
    for (std::size_t i = 0; i < t->curves.size(); ++i)
      task_ids.push_back(t->task_id + "_" + std::to_string(i));
    ids.push_back(std::move(task_ids));
  }
  const std::string curves_path = prefix + "curves.csv";
  const std::string resp_path = prefix + "responses.csv";
  std::ofstream cf(curves_path);
  if (!cf) throw ArgumentError("cannot open " + curves_path);
  write_curves_csv(cf, tasks, ids);
  std::ofstream rf(resp_path);
  if (!rf) throw ArgumentError("cannot open " + resp_path);
  write_responses_csv(rf, tasks, ids);
  return {curves_path, resp_path};
}

std::vector<TaskDataset> read_tasks_csv(std::istream& curves,
                                        std::istream& responses,
                                        const std::string& curves_name,
                                        const std::string& responses_name) {
  CsvReader cr{curves, curves_name};
  std::vector<std::string> fields;
  if (!cr.next(fields)) throw ArgumentError(curves_name + ": empty file");
  expect_header(fields, {"curve_id", "t", "x"}, curves_name);

  // Collect samples per curve, preserving first-seen order.
  std::vector<std::string> curve_order;
  std::map<std::string, std::vector<std::pair<double, double>>> samples;
  while (cr.next(fields)) {
    if (fields.size() != 3) {
      std::ostringstream msg;
      msg << curves_name << ": row " << cr.row << ": expected 3 columns, got "
          << fields.size();
      throw ArgumentError(msg.str());
    }
    const double t = parse_double(fields[1], curves_name, cr.row, 2);
    const double x = parse_double(fields[2], curves_name, cr.row, 3);
    auto it = samples.find(fields[0]);
    if (it == samples.end()) {
      curve_order.push_back(fields[0]);
      it = samples.emplace(fields[0],
                           std::vector<std::pair<double, double>>{})
               .first;
    }
    it->second.emplace_back(t, x);
  }

  CsvReader rr{responses, responses_name};
  if (!rr.next(fields)) throw ArgumentError(responses_name + ": empty file");
  expect_header(fields, {"curve_id", "y", "task_id"}, responses_name);

  std::vector<TaskDataset> tasks;
  std::map<std::string, std::size_t> task_index;
  std::map<std::string, bool> used;
  std::vector<std::vector<double>> task_ys;
  while (rr.next(fields)) {
    if (fields.size() != 3) {
      std::ostringstream msg;
      msg << responses_name << ": row " << rr.row
          << ": expected 3 columns, got " << fields.size();
      throw ArgumentError(msg.str());
    }
    const std::string& cid = fields[0];
    const double y = parse_double(fields[1], responses_name, rr.row, 2);
    const std::string& tid = fields[2];
    auto sit = samples.find(cid);
    if (sit == samples.end()) {
      std::ostringstream msg;
      msg << responses_name << ": row " << rr.row << ": curve_id '" << cid
          << "' has no samples in " << curves_name;
      throw ArgumentError(msg.str());
    }
    if (used[cid]) {
      std::ostringstream msg;
      msg << responses_name << ": row " << rr.row << ": duplicate curve_id '"
          << cid << "'";
      throw ArgumentError(msg.str());
    }
    used[cid] = true;

    auto pts = sit->second;
    std::stable_sort(pts.begin(), pts.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });
    VectorXd grid(pts.size()), values(pts.size());
    for (std::size_t i = 0; i < pts.size(); ++i) {
      grid[static_cast<Eigen::Index>(i)] = pts[i].first;
      values[static_cast<Eigen::Index>(i)] = pts[i].second;
    }

    auto it = task_index.find(tid);
    if (it == task_index.end()) {
      it = task_index.emplace(tid, tasks.size()).first;
      tasks.push_back({{}, {}, tid});
      task_ys.emplace_back();
    }
    tasks[it->second].curves.push_back({std::move(grid), std::move(values)});
    task_ys[it->second].push_back(y);
  }
  for (std::size_t t = 0; t < tasks.size(); ++t) {
    tasks[t].responses =
        Eigen::Map<const VectorXd>(task_ys[t].data(), task_ys[t].size());
    validate_dataset(tasks[t]);
  }
  if (tasks.empty()) throw ArgumentError(responses_name + ": no data rows");
  return tasks;
}

std::vector<TaskDataset> read_tasks_csv_files(const std::string& curves_path,
                                              const std::string& responses_path) {
  std::ifstream cf(curves_path);
  if (!cf) throw ArgumentError("cannot open " + curves_path);
  std::ifstream rf(responses_path);
  if (!rf) throw ArgumentError("cannot open " + responses_path);
  return read_tasks_csv(cf, rf, curves_path, responses_path);
}

void write_experiment_csv(std::ostream& os, const ExperimentResult& result) {
  os << "# experiment=" << result.experiment << " seed=" << result.seed
     << " config_hash=" << result.config_hash << '\n';
  os << "h,s_size,n,method,mean,se,reps\n";
  for (const auto& r : result.rows) {
    if (std::isnan(r.h))
      os << ',';
    else
      os << format_double(r.h) << ',';
    if (r.s_size < 0)
      os << ',';
    else
      os << r.s_size << ',';
    if (r.n < 0)
      os << ',';
    else
      os << r.n << ',';
    os << r.method << ',' << format_double(r.mean) << ','
       << format_double(r.se) << ',' << r.reps << '\n';
  }
}

std::string experiment_json(const ExperimentResult& result) {
  json j;
  j["experiment"] = result.experiment;
  j["seed"] = result.seed;
  j["config_hash"] = result.config_hash;
  if (!std::isnan(result.slope)) j["slope"] = result.slope;
  j["rows"] = json::array();
  for (const auto& r : result.rows) {
    json row;
    if (!std::isnan(r.h)) row["h"] = r.h;
    if (r.s_size >= 0) row["s_size"] = r.s_size;
    if (r.n >= 0) row["n"] = r.n;
    row["method"] = r.method;
    row["mean"] = r.mean;
    row["se"] = r.se;
    row["reps"] = r.reps;
    j["rows"].push_back(row);
  }
  return j.dump(2);
}

std::vector<PriceRow> read_prices_csv(std::istream& is,
                                      const std::string& name) {
  CsvReader reader{is, name};
  std::vector<std::string> fields;
  if (!reader.next(fields)) throw ArgumentError(name + ": empty file");
  expect_header(fields, {"ticker", "sector", "date", "close"}, name);
  std::vector<PriceRow> rows;
  while (reader.next(fields)) {
    if (fields.size() != 4) {
      std::ostringstream msg;
      msg << name << ": row " << reader.row << ": expected 4 columns, got "
          << fields.size();
      throw ArgumentError(msg.str());
    }
    PriceRow r;
    r.ticker = fields[0];
    r.sector = fields[1];
    r.date = fields[2];
    if (r.date.size() != 10 || r.date[4] != '-' || r.date[7] != '-') {
      std::ostringstream msg;
      msg << name << ": row " << reader.row
          << ": date must be YYYY-MM-DD, got '" << r.date << "'";
      throw ArgumentError(msg.str());
    }
    r.close = parse_double(fields[3], name, reader.row, 4);
    rows.push_back(std::move(r));
  }
  return rows;
}

std::vector<TaskDataset> ingest_prices(const std::vector<PriceRow>& rows,
                                       const std::string& month1,
                                       const std::string& month2,
                                       IngestSummary& summary) {
  if (month1.size() != 7 || month2.size() != 7)
    throw ArgumentError("months must be YYYY-MM");
  // ticker -> (sector, month -> sorted (date, close))
  struct TickerData {
    std::string sector;
    std::map<std::string, std::vector<std::pair<std::string, double>>> months;
  };
  std::map<std::string, TickerData> by_ticker;
  std::vector<std::string> ticker_order;
  for (const auto& r : rows) {
    auto it = by_ticker.find(r.ticker);
    if (it == by_ticker.end()) {
      ticker_order.push_back(r.ticker);
      it = by_ticker.emplace(r.ticker, TickerData{r.sector, {}}).first;
    }
    it->second.months[r.date.substr(0, 7)].emplace_back(r.date, r.close);
  }

  std::map<std::string, std::size_t> sector_index;
  std::vector<TaskDataset> sectors;
  std::vector<std::vector<double>> sector_ys;
  summary = IngestSummary{};

  for (const auto& ticker : ticker_order) {
    auto& data = by_ticker[ticker];
    auto m1 = data.months.find(month1);
    auto m2 = data.months.find(month2);
    if (m1 == data.months.end() || m2 == data.months.end() ||
        m1->second.size() < 2 || m2->second.size() < 2) {
      ++summary.tickers_skipped;
      summary.skipped.push_back(ticker);
      continue;
    }
    auto sorted = [](std::vector<std::pair<std::string, double>> v) {
      std::sort(v.begin(), v.end());
      return v;
    };
    const auto p1 = sorted(m1->second);
    const auto p2 = sorted(m2->second);
    const double base1 = p1.front().second;
    const double base2 = p2.front().second;
    if (base1 == 0.0 || base2 == 0.0) {
      ++summary.tickers_skipped;
      summary.skipped.push_back(ticker);
      continue;
    }
    const int d = static_cast<int>(p1.size());
    VectorXd grid(d), x(d);
    for (int g = 0; g < d; ++g) {
      grid[g] = static_cast<double>(g) / (d - 1);
      x[g] = (p1[g].second - base1) / base1;
    }
    const double y = (p2.back().second - base2) / base2;

    auto it = sector_index.find(data.sector);
    if (it == sector_index.end()) {
      it = sector_index.emplace(data.sector, sectors.size()).first;
      sectors.push_back({{}, {}, data.sector});
      sector_ys.emplace_back();
    }
    sectors[it->second].curves.push_back({std::move(grid), std::move(x)});
    sector_ys[it->second].push_back(y);
    ++summary.tickers_used;
  }

  for (std::size_t s = 0; s < sectors.size(); ++s)
    sectors[s].responses = Eigen::Map<const VectorXd>(sector_ys[s].data(),
                                                      sector_ys[s].size());
  return sectors;
}

}  // namespace tlflr
