#pragma once

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "isopsm/data.hpp"
#include "isopsm/errors.hpp"
#include "isopsm/simulation.hpp"

namespace isopsm {

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  for (char ch : line) {
    if (ch == ',') {
      fields.push_back(field);
      field.clear();
    } else if (ch != '\r') {
      field += ch;
    }
  }
  fields.push_back(field);
  return fields;
}

inline std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t");
  return s.substr(a, b - a + 1);
}

inline double parse_number(const std::string& raw, std::size_t line_no,
                           const std::string& column) {
  const std::string s = trim(raw);
  if (s.empty())
    throw DataError("line " + std::to_string(line_no) + ": empty cell in column '" +
                    column + "'");
  double value = 0.0;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last)
    throw DataError("line " + std::to_string(line_no) + ": cannot parse '" + s +
                    "' in column '" + column + "'");
  return value;
}

}  // namespace detail

/// Reads the `y,d,x1..xd` schema (header required, '.' decimals, UTF-8).
/// Any empty or malformed cell is an error that names the line.
inline std::vector<RawRecord> read_raw_records(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw EmptyInput("empty input");
  std::vector<std::string> header = detail::split_csv_line(line);
  for (auto& h : header) h = detail::trim(h);
  if (header.size() < 3 || header[0] != "y" || header[1] != "d")
    throw DataError("header must be y,d,x1..xd");
  for (std::size_t j = 2; j < header.size(); ++j)
    if (header[j] != "x" + std::to_string(j - 1))
      throw DataError("header column " + std::to_string(j + 1) +
                      " must be x" + std::to_string(j - 1));

  std::vector<RawRecord> records;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;  // allow a trailing newline
    std::vector<std::string> fields = detail::split_csv_line(line);
    if (fields.size() != header.size())
      throw DataError("line " + std::to_string(line_no) + ": expected " +
                      std::to_string(header.size()) + " cells, found " +
                      std::to_string(fields.size()));
    RawRecord rec;
    rec.y = detail::parse_number(fields[0], line_no, "y");
    rec.d = detail::parse_number(fields[1], line_no, "d");
    rec.x.reserve(fields.size() - 2);
    for (std::size_t j = 2; j < fields.size(); ++j)
      rec.x.push_back(detail::parse_number(fields[j], line_no, header[j]));
    records.push_back(std::move(rec));
  }
  return records;
}

inline ObservationSet read_observations_csv(const std::string& path,
                                            bool quadratic = false) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path + "'");
  std::vector<RawRecord> records = read_raw_records(in);
  ObservationSet data = validate(records);
  if (quadratic)
    data = make_observation_set(data.y, data.d, quadratic_features(data.x));
  return data;
}

inline void write_observations_csv(std::ostream& out, const ObservationSet& data) {
  out << "y,d";
  for (Eigen::Index j = 0; j < data.dim(); ++j) out << ",x" << (j + 1);
  out << "\n";
  for (Eigen::Index i = 0; i < data.n(); ++i) {
    out << format_double(data.y[i]) << "," << data.d[i];
    for (Eigen::Index j = 0; j < data.dim(); ++j)
      out << "," << format_double(data.x(i, j));
    out << "\n";
  }
}

/// Study report in the two-row-per-configuration table layout
/// (model, a, b, statistic, one column per estimator).
inline void write_mc_report_csv(std::ostream& out, const McReport& report,
                                const std::vector<std::string>& estimator_order) {
  out << "model,a,b,link,stat";
  for (const auto& name : estimator_order) out << "," << name;
  out << "\n";
  // cells arrive config-major, estimator-minor
  const std::size_t n_est = estimator_order.size();
  for (std::size_t base = 0; base + n_est <= report.cells.size(); base += n_est) {
    const McCell& first = report.cells[base];
    for (const char* stat : {"bias", "rmse"}) {
      out << first.config.model << "," << first.config.a << "," << first.config.b
          << "," << link_name(first.config.link) << "," << stat;
      for (std::size_t e = 0; e < n_est; ++e) {
        const McCell& cell = report.cells[base + e];
        out << "," << format_double(std::string(stat) == "bias" ? cell.bias
                                                                : cell.rmse);
      }
      out << "\n";
    }
  }
}

}  // namespace isopsm
