#pragma once

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "distreg/dataset.hpp"
#include "distreg/sampler.hpp"

namespace distreg {

namespace detail {

inline std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r\n");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r\n");
  return s.substr(begin, end - begin + 1);
}

inline std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

inline bool parse_double(const std::string& s, double& out) {
  const std::string t = trim(s);
  if (t.empty()) return false;
  const char* begin = t.data();
  const char* end = t.data() + t.size();
  const auto res = std::from_chars(begin, end, out);
  return res.ec == std::errc() && res.ptr == end;
}

inline std::string format_full(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace detail

/// Comma-separated values with a required header row, '.' decimals and
/// no quoting; categorical columns are declared, never inferred.
inline Dataset read_csv(const std::string& path, const std::set<std::string>& categorical = {}) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open dataset file '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) throw DataError(path + ": missing header row");
  const std::vector<std::string> header = detail::split(detail::trim(line), ',');
  for (const auto& cat : categorical) {
    if (std::find(header.begin(), header.end(), cat) == header.end()) {
      throw DataError(path + ": declared categorical column '" + cat + "' not in header");
    }
  }
  std::vector<std::vector<std::string>> columns(header.size());
  Index line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = detail::trim(line);
    if (t.empty()) continue;
    const auto cells = detail::split(t, ',');
    if (cells.size() != header.size()) {
      throw DataError(path + ":" + std::to_string(line_no) + ": expected " +
                      std::to_string(header.size()) + " fields, got " +
                      std::to_string(cells.size()));
    }
    for (size_t c = 0; c < cells.size(); ++c) columns[c].push_back(detail::trim(cells[c]));
  }
  Dataset data;
  for (size_t c = 0; c < header.size(); ++c) {
    if (categorical.count(header[c]) > 0) {
      data.add_labels(header[c], columns[c]);
      continue;
    }
    Vector v(static_cast<Index>(columns[c].size()));
    for (size_t i = 0; i < columns[c].size(); ++i) {
      double x = 0.0;
      if (!detail::parse_double(columns[c][i], x)) {
        throw DataError(path + ": column '" + header[c] + "' row " + std::to_string(i + 2) +
                        ": cannot parse '" + columns[c][i] + "' as a number");
      }
      v[static_cast<Index>(i)] = x;
    }
    data.add_real(header[c], v);
  }
  return data;
}

/// One region per line, `label: neighbour1,neighbour2,...`; an empty
/// neighbour list marks an island.
inline AdjacencyMap read_adjacency(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open adjacency file '" + path + "'");
  std::vector<std::string> regions;
  std::vector<std::vector<std::string>> neighbors;
  std::string line;
  Index line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = detail::trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto colon = t.find(':');
    if (colon == std::string::npos) {
      throw DataError(path + ":" + std::to_string(line_no) + ": expected 'label: neighbours'");
    }
    regions.push_back(detail::trim(t.substr(0, colon)));
    std::vector<std::string> nb;
    for (const auto& piece : detail::split(t.substr(colon + 1), ',')) {
      const std::string lbl = detail::trim(piece);
      if (!lbl.empty()) nb.push_back(lbl);
    }
    neighbors.push_back(std::move(nb));
  }
  return AdjacencyMap(std::move(regions), std::move(neighbors));
}

inline void write_adjacency(const std::string& path, const AdjacencyMap& adj) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write adjacency file '" + path + "'");
  for (int s = 0; s < adj.size(); ++s) {
    out << adj.regions()[static_cast<size_t>(s)] << ":";
    bool first = true;
    for (int r : adj.neighbors(s)) {
      out << (first ? " " : ",") << adj.regions()[static_cast<size_t>(r)];
      first = false;
    }
    out << "\n";
  }
}

/// Full-precision CSV with a header.
inline void write_csv(const std::string& path, const std::vector<std::string>& header,
                      const Matrix& rows) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write '" + path + "'");
  for (size_t i = 0; i < header.size(); ++i) out << (i ? "," : "") << header[i];
  out << "\n";
  for (Index r = 0; r < rows.rows(); ++r) {
    for (Index c = 0; c < rows.cols(); ++c) {
      out << (c ? "," : "") << detail::format_full(rows(r, c));
    }
    out << "\n";
  }
}

/// Reads back a numeric CSV written by write_csv.
inline std::pair<std::vector<std::string>, Matrix> read_numeric_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) throw DataError(path + ": missing header row");
  const std::vector<std::string> header = detail::split(detail::trim(line), ',');
  std::vector<double> values;
  Index rows = 0;
  Index line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = detail::trim(line);
    if (t.empty()) continue;
    const auto cells = detail::split(t, ',');
    if (cells.size() != header.size()) {
      throw DataError(path + ":" + std::to_string(line_no) + ": ragged row");
    }
    for (const auto& cell : cells) {
      double x = 0.0;
      if (!detail::parse_double(cell, x)) {
        throw DataError(path + ":" + std::to_string(line_no) + ": cannot parse '" + cell + "'");
      }
      values.push_back(x);
    }
    ++rows;
  }
  Matrix m(rows, static_cast<Index>(header.size()));
  for (Index r = 0; r < rows; ++r) {
    for (Index c = 0; c < m.cols(); ++c) {
      m(r, c) = values[static_cast<size_t>(r * m.cols() + c)];
    }
  }
  return {header, m};
}

/// Posterior draws: one row per retained draw, one column per scalar
/// coefficient (then smoothing variances), block labels in the header.
inline void write_draws(const std::string& path, const PosteriorStore& store) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write '" + path + "'");
  const auto& labels = store.labels();
  for (size_t i = 0; i < labels.size(); ++i) out << (i ? "," : "") << labels[i];
  out << "\n";
  const Matrix& d = store.draws();
  for (Index r = 0; r < d.rows(); ++r) {
    for (Index c = 0; c < d.cols(); ++c) out << (c ? "," : "") << detail::format_full(d(r, c));
    out << "\n";
  }
}

/// Rebuild a posterior store from a draws file, validating the header
/// against the model's layout.
inline PosteriorStore read_draws(const std::string& path, const AssembledModel& model) {
  auto [header, values] = read_numeric_csv(path);
  PosteriorStore store = PosteriorStore::with_layout(model);
  if (header != store.labels()) {
    throw DataError(path + ": draw columns do not match the model layout");
  }
  store.reserve(values.rows());
  store.mutable_draws() = values;
  return store;
}

/// Run report as `key: value` lines.
inline void write_report(const std::string& path, const RunReport& report,
                         const std::vector<std::pair<std::string, std::string>>& extra = {}) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write '" + path + "'");
  out << "family: " << report.family << "\n";
  out << "seed: " << report.seed << "\n";
  out << "iterations: " << report.iterations << "\n";
  out << "burnin: " << report.burnin << "\n";
  out << "thin: " << report.thin << "\n";
  out << "retained: " << report.retained << "\n";
  out << "clamp_events: " << report.clamp_events << "\n";
  out << "eta_audit_max: " << detail::format_full(report.eta_audit_max) << "\n";
  out << "wall_seconds: " << detail::format_full(report.wall_seconds) << "\n";
  for (const auto& b : report.blocks) {
    out << "accept_rate." << b.label << ": " << detail::format_full(b.rate()) << "\n";
    out << "aborts." << b.label << ": " << b.aborts << "\n";
    if (b.jitters > 0) out << "jitters." << b.label << ": " << b.jitters << "\n";
  }
  for (const auto& [k, v] : extra) out << k << ": " << v << "\n";
}

/// Reads a `key: value` report back into a map.
inline std::map<std::string, std::string> read_report(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::map<std::string, std::string> out;
  std::string line;
  while (std::getline(in, line)) {
    const auto colon = line.find(':');
    if (colon == std::string::npos) continue;
    out[detail::trim(line.substr(0, colon))] = detail::trim(line.substr(colon + 1));
  }
  return out;
}

}  // namespace distreg
