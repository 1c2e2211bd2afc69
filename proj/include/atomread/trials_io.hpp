#pragma once

// Trial-record file format: line-delimited text, one trial per line,
//
//   trial_id,prep_state,retained_before,retained_after,k,t1,...,tk
//
// with arrival times in microseconds at fixed 3-decimal precision. The
// format is deterministic (identical records serialize byte-identically),
// human-inspectable, and streamable; load errors carry line numbers and
// trial ids.

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "atomread/io_util.hpp"
#include "atomread/sim.hpp"

namespace atomread {

inline void append_trial_line(const TrialRecord& rec, std::string& out) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%llu,%s,%d,%d,%zu",
                static_cast<unsigned long long>(rec.trial_id),
                to_string(rec.prep_state), rec.retained_before ? 1 : 0,
                rec.retained_after ? 1 : 0, rec.timestamps_us.size());
  out += buf;
  for (double ts : rec.timestamps_us) {
    std::snprintf(buf, sizeof(buf), ",%.3f", ts);
    out += buf;
  }
  out += '\n';
}

/// Serializes records to path (atomic write-then-rename).
inline void save_trials(std::span<const TrialRecord> records,
                        const std::filesystem::path& path) {
  std::string content;
  content.reserve(records.size() * 48);
  for (const auto& rec : records) append_trial_line(rec, content);
  atomic_write_file(path, content);
}

/// Streams trials from a file, invoking fn once per record; the full list is
/// never held resident. Throws DataError with the offending line number (and
/// trial id for ordering violations).
inline void for_each_trial(const std::filesystem::path& path,
                           const std::function<void(const TrialRecord&)>& fn) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open trial file: " + path.string());

  std::string line;
  std::size_t line_no = 0;
  TrialRecord rec;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;

    const auto fail = [&](const std::string& what) {
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": " +
                      what);
    };

    rec.timestamps_us.clear();
    const char* p = line.data();
    const char* end = line.data() + line.size();

    const auto next_field = [&]() -> std::string_view {
      const char* q = p;
      while (q != end && *q != ',') ++q;
      std::string_view f(p, static_cast<std::size_t>(q - p));
      p = q == end ? end : q + 1;
      return f;
    };
    const auto parse_u64 = [&](std::string_view f, const char* what) {
      std::uint64_t v = 0;
      auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
      if (ec != std::errc() || ptr != f.data() + f.size()) {
        fail(std::string("malformed ") + what + " field '" + std::string(f) +
             "'");
      }
      return v;
    };
    const auto parse_flag = [&](std::string_view f, const char* what) {
      if (f == "0") return false;
      if (f == "1") return true;
      fail(std::string("malformed ") + what + " flag '" + std::string(f) + "'");
      return false;
    };

    rec.trial_id = parse_u64(next_field(), "trial_id");
    const std::string_view prep = next_field();
    if (prep == "bright") {
      rec.prep_state = PrepState::bright;
    } else if (prep == "dark") {
      rec.prep_state = PrepState::dark;
    } else {
      fail("unknown preparation state '" + std::string(prep) + "'");
    }
    rec.retained_before = parse_flag(next_field(), "retained_before");
    rec.retained_after = parse_flag(next_field(), "retained_after");
    const std::uint64_t k = parse_u64(next_field(), "count");

    rec.timestamps_us.reserve(k);
    double prev = -1.0;
    for (std::uint64_t i = 0; i < k; ++i) {
      if (p >= end) fail("fewer timestamps than the declared count");
      const std::string_view f = next_field();
      double ts = 0.0;
      auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), ts);
      if (ec != std::errc() || ptr != f.data() + f.size()) {
        fail("malformed timestamp '" + std::string(f) + "'");
      }
      if (ts < prev) {
        fail("trial " + std::to_string(rec.trial_id) +
             ": timestamps not sorted ascending");
      }
      if (ts < 0.0) {
        fail("trial " + std::to_string(rec.trial_id) + ": negative timestamp");
      }
      prev = ts;
      rec.timestamps_us.push_back(ts);
    }
    if (p < end) fail("more timestamps than the declared count");
    fn(rec);
  }
}

/// Loads the full trial list into memory (wraps the streaming reader).
inline std::vector<TrialRecord> load_trials(const std::filesystem::path& path) {
  std::vector<TrialRecord> records;
  for_each_trial(path, [&records](const TrialRecord& rec) {
    records.push_back(rec);
  });
  return records;
}

}  // namespace atomread
