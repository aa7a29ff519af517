#pragma once

// CSV ingestion with dummy coding, and locale-independent CSV emission.
//
// A header row is required. Fields may be double-quoted ("" escapes a quote).
// Empty cells and the tokens NA / NaN (any case) count as missing; rows with
// a missing cell in any used column are dropped and counted. Categorical
// columns expand to one indicator per level except the reference level,
// which is the lexicographically smallest.

#include <Eigen/Dense>

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "ziqsi/dataset.hpp"
#include "ziqsi/error.hpp"

namespace ziqsi::io {

struct ColumnEncoding {
  std::string name;
  bool categorical = false;
  std::vector<std::string> levels;  // sorted; levels[0] is the reference
};

/// How raw CSV columns map to model covariates; stored with fitted models so
/// new data is encoded the same way.
struct Encoding {
  std::vector<ColumnEncoding> columns;

  std::vector<std::string> covariate_names() const {
    std::vector<std::string> names;
    for (const auto& c : columns) {
      if (!c.categorical) {
        names.push_back(c.name);
      } else {
        for (std::size_t l = 1; l < c.levels.size(); ++l) names.push_back(c.name + ":" + c.levels[l]);
      }
    }
    return names;
  }
};

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::size_t column(const std::string& name) const {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw UsageError("csv: unknown column '" + name + "'");
    return static_cast<std::size_t>(it - header.begin());
  }
};

namespace detail {

inline std::vector<std::string> split_record(std::string_view line, std::size_t line_no) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (quoted) {
      if (ch == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur += ch;
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      fields.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += ch;
    }
  }
  if (quoted) throw UsageError("csv: unterminated quote on line " + std::to_string(line_no));
  fields.push_back(std::move(cur));
  return fields;
}

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline bool is_missing(std::string_view s) {
  s = trim(s);
  if (s.empty()) return true;
  std::string lower(s);
  std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
  return lower == "na" || lower == "nan";
}

}  // namespace detail

inline CsvTable parse_csv(std::istream& in) {
  CsvTable table;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line_no == 1 && line.starts_with("\xEF\xBB\xBF")) line.erase(0, 3);
    if (table.header.empty()) {
      if (line.empty()) continue;
      for (auto& f : detail::split_record(line, line_no)) table.header.emplace_back(detail::trim(f));
      continue;
    }
    if (line.empty()) continue;
    auto fields = detail::split_record(line, line_no);
    if (fields.size() != table.header.size()) {
      throw UsageError("csv: line " + std::to_string(line_no) + " has " + std::to_string(fields.size()) +
                       " fields, header has " + std::to_string(table.header.size()));
    }
    table.rows.push_back(std::move(fields));
  }
  if (table.header.empty()) throw UsageError("csv: input is empty");
  return table;
}

inline CsvTable read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("csv: cannot open '" + path + "'");
  return parse_csv(in);
}

inline double parse_number(std::string_view cell, const std::string& column, std::size_t row) {
  const std::string_view s = detail::trim(cell);
  double v = 0.0;
  const char* first = s.data();
  if (!s.empty() && s.front() == '+') ++first;
  const auto res = std::from_chars(first, s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size() || !std::isfinite(v)) {
    throw UsageError("csv: non-numeric value '" + std::string(s) + "' in column '" + column + "' (data row " +
                     std::to_string(row + 1) + ")");
  }
  return v;
}

/// Builds a Dataset from `table`. With `fixed` set, categorical levels come
/// from it (unseen levels are an error); otherwise levels are learned.
inline Dataset encode_table(const CsvTable& table, const std::optional<std::string>& response_column,
                            std::vector<std::string> covariate_columns,
                            const std::vector<std::string>& dummy_columns, Encoding* encoding,
                            const Encoding* fixed = nullptr) {
  if (fixed) {
    covariate_columns.clear();
    for (const auto& c : fixed->columns) covariate_columns.push_back(c.name);
  } else if (covariate_columns.empty()) {
    for (const auto& h : table.header) {
      if (!response_column || h != *response_column) covariate_columns.push_back(h);
    }
  }
  require(!covariate_columns.empty(), "csv: no covariate columns selected");
  for (const auto& d : dummy_columns) {
    require(std::find(covariate_columns.begin(), covariate_columns.end(), d) != covariate_columns.end(),
            "csv: dummy column '" + d + "' is not among the covariates");
  }

  std::vector<std::size_t> cov_idx;
  for (const auto& c : covariate_columns) cov_idx.push_back(table.column(c));
  std::optional<std::size_t> resp_idx;
  if (response_column) resp_idx = table.column(*response_column);

  std::vector<std::size_t> keep;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    bool missing = resp_idx && detail::is_missing(table.rows[r][*resp_idx]);
    for (std::size_t j : cov_idx) missing = missing || detail::is_missing(table.rows[r][j]);
    if (!missing) keep.push_back(r);
  }

  Encoding enc;
  for (std::size_t k = 0; k < covariate_columns.size(); ++k) {
    ColumnEncoding ce;
    ce.name = covariate_columns[k];
    if (fixed) {
      ce = fixed->columns[k];
    } else if (std::find(dummy_columns.begin(), dummy_columns.end(), ce.name) != dummy_columns.end()) {
      ce.categorical = true;
      for (std::size_t r : keep) ce.levels.emplace_back(detail::trim(table.rows[r][cov_idx[k]]));
      std::sort(ce.levels.begin(), ce.levels.end());
      ce.levels.erase(std::unique(ce.levels.begin(), ce.levels.end()), ce.levels.end());
    }
    enc.columns.push_back(std::move(ce));
  }

  Dataset data;
  data.covariate_names = enc.covariate_names();
  data.response_name = response_column.value_or("");
  data.dropped_rows = table.rows.size() - keep.size();
  data.X.resize(static_cast<Eigen::Index>(keep.size()), static_cast<Eigen::Index>(data.covariate_names.size()));
  data.y.resize(resp_idx ? static_cast<Eigen::Index>(keep.size()) : 0);
  for (std::size_t i = 0; i < keep.size(); ++i) {
    const auto& row = table.rows[keep[i]];
    const auto ii = static_cast<Eigen::Index>(i);
    Eigen::Index col = 0;
    for (std::size_t k = 0; k < enc.columns.size(); ++k) {
      const ColumnEncoding& ce = enc.columns[k];
      if (!ce.categorical) {
        data.X(ii, col++) = parse_number(row[cov_idx[k]], ce.name, keep[i]);
        continue;
      }
      const std::string level(detail::trim(row[cov_idx[k]]));
      const auto it = std::find(ce.levels.begin(), ce.levels.end(), level);
      if (it == ce.levels.end()) throw UsageError("csv: unseen level '" + level + "' in column '" + ce.name + "'");
      for (std::size_t l = 1; l < ce.levels.size(); ++l) {
        data.X(ii, col++) = (ce.levels.begin() + static_cast<std::ptrdiff_t>(l) == it) ? 1.0 : 0.0;
      }
    }
    if (resp_idx) {
      const double v = parse_number(row[*resp_idx], *response_column, keep[i]);
      if (v < 0.0) {
        throw UsageError("csv: negative response " + std::string(detail::trim(row[*resp_idx])) + " (data row " +
                         std::to_string(keep[i] + 1) + ")");
      }
      data.y[ii] = v;
    }
  }
  if (encoding) *encoding = std::move(enc);
  return data;
}

inline Dataset ingest_csv(const std::string& path, const std::string& response_column,
                          const std::vector<std::string>& covariate_columns = {},
                          const std::vector<std::string>& dummy_columns = {}, Encoding* encoding = nullptr) {
  return encode_table(read_csv(path), response_column, covariate_columns, dummy_columns, encoding);
}

/// Covariates only, encoded with a stored encoding (for prediction).
inline Dataset read_covariates(const std::string& path, const Encoding& encoding) {
  return encode_table(read_csv(path), std::nullopt, {}, {}, nullptr, &encoding);
}

/// Shortest round-trip decimal text; independent of the global locale.
inline std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

inline std::string quote_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

/// Writes one CSV record per call, fields in the order given.
class CsvWriter {
 public:
  explicit CsvWriter(std::ostream& out) : out_(out) {}

  CsvWriter& field(const std::string& s) {
    sep();
    out_ << quote_field(s);
    return *this;
  }
  CsvWriter& field(const char* s) { return field(std::string(s)); }
  CsvWriter& field(double v) {
    sep();
    out_ << format_double(v);
    return *this;
  }
  CsvWriter& field(long long v) {
    sep();
    out_ << v;
    return *this;
  }
  CsvWriter& field(int v) { return field(static_cast<long long>(v)); }
  CsvWriter& field(std::size_t v) { return field(static_cast<long long>(v)); }

  void end_row() {
    out_ << '\n';
    first_ = true;
  }

  template <class... Fields>
  void row(const Fields&... fs) {
    (field(fs), ...);
    end_row();
  }

 private:
  void sep() {
    if (!first_) out_ << ',';
    first_ = false;
  }
  std::ostream& out_;
  bool first_ = true;
};

inline void write_dataset_csv(std::ostream& out, const Dataset& data) {
  CsvWriter w(out);
  for (const auto& n : data.covariate_names) w.field(n);
  w.field(data.response_name.empty() ? std::string("y") : data.response_name);
  w.end_row();
  for (Eigen::Index i = 0; i < data.n(); ++i) {
    for (Eigen::Index j = 0; j < data.p(); ++j) w.field(data.X(i, j));
    w.field(data.y[i]);
    w.end_row();
  }
}

}  // namespace ziqsi::io
