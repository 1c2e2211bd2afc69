#pragma once

// Plot-ready CSV tables: a '#'-prefixed header block carrying provenance
// (config fingerprint, seed, free-form metadata), a column-name row with
// units embedded in the names, then the data. Formatting is fixed so equal
// inputs produce byte-identical files.

#include <cstdio>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "atomread/io_util.hpp"

namespace atomread {

struct Table {
  std::vector<std::pair<std::string, std::string>> meta;  // header block
  std::vector<std::string> columns;  // names carry units, e.g. time_us
  std::vector<std::vector<double>> rows;

  void add_meta(std::string key, std::string value) {
    meta.emplace_back(std::move(key), std::move(value));
  }

  std::string render() const {
    std::string out;
    for (const auto& [k, v] : meta) {
      out += "# " + k + ": " + v + "\n";
    }
    for (std::size_t i = 0; i < columns.size(); ++i) {
      if (i > 0) out += ',';
      out += columns[i];
    }
    out += '\n';
    char buf[40];
    for (const auto& row : rows) {
      for (std::size_t i = 0; i < row.size(); ++i) {
        if (i > 0) out += ',';
        std::snprintf(buf, sizeof(buf), "%.10g", row[i]);
        out += buf;
      }
      out += '\n';
    }
    return out;
  }

  void write(const std::filesystem::path& path) const {
    atomic_write_file(path, render());
  }
};

/// Reads a table written by Table::write (used by the fit pipeline to
/// consume analyze output). Returns meta entries and named columns.
struct LoadedTable {
  std::vector<std::pair<std::string, std::string>> meta;
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;

  std::string meta_value(const std::string& key,
                         const std::string& fallback = "") const {
    for (const auto& [k, v] : meta) {
      if (k == key) return v;
    }
    return fallback;
  }

  std::size_t column_index(const std::string& name) const {
    for (std::size_t i = 0; i < columns.size(); ++i) {
      if (columns[i] == name) return i;
    }
    throw DataError("table has no column '" + name + "'");
  }

  std::vector<double> column(const std::string& name) const {
    const std::size_t idx = column_index(name);
    std::vector<double> out;
    out.reserve(rows.size());
    for (const auto& row : rows) out.push_back(row[idx]);
    return out;
  }
};

LoadedTable load_table(const std::filesystem::path& path);

}  // namespace atomread

#include <charconv>
#include <fstream>
#include <sstream>

namespace atomread {

inline LoadedTable load_table(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open table: " + path.string());
  LoadedTable t;
  std::string line;
  std::size_t line_no = 0;
  bool header_done = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    if (line[0] == '#') {
      const auto colon = line.find(':');
      if (colon != std::string::npos) {
        std::string key = line.substr(1, colon - 1);
        std::string value = line.substr(colon + 1);
        const auto strip = [](std::string& s) {
          const auto b = s.find_first_not_of(" \t\r");
          const auto e = s.find_last_not_of(" \t\r");
          s = b == std::string::npos ? "" : s.substr(b, e - b + 1);
        };
        strip(key);
        strip(value);
        t.meta.emplace_back(key, value);
      }
      continue;
    }
    std::istringstream ss(line);
    std::string item;
    if (!header_done) {
      while (std::getline(ss, item, ',')) t.columns.push_back(item);
      header_done = true;
      continue;
    }
    std::vector<double> row;
    while (std::getline(ss, item, ',')) {
      double v = 0.0;
      auto [p, ec] = std::from_chars(item.data(), item.data() + item.size(), v);
      if (ec != std::errc() || p != item.data() + item.size()) {
        throw DataError(path.string() + ":" + std::to_string(line_no) +
                        ": malformed number '" + item + "'");
      }
      row.push_back(v);
    }
    if (row.size() != t.columns.size()) {
      throw DataError(path.string() + ":" + std::to_string(line_no) +
                      ": expected " + std::to_string(t.columns.size()) +
                      " columns, got " + std::to_string(row.size()));
    }
    t.rows.push_back(std::move(row));
  }
  return t;
}

}  // namespace atomread
