#pragma once

// Monthly multivariate frames: CSV/schema ingestion, date split, min-max
// normalization of the independent columns and Pearson correlation.

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "oilcast/error.hpp"
#include "oilcast/numkit.hpp"

namespace oilcast {

struct MonthStamp {
  int year = 0;
  int month = 1;  // 1..12

  int ordinal() const noexcept { return year * 12 + (month - 1); }
  static MonthStamp from_ordinal(int ord) noexcept { return {ord / 12, ord % 12 + 1}; }
  MonthStamp plus(int months) const noexcept { return from_ordinal(ordinal() + months); }

  std::string str() const {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02d", year, month);
    return buf;
  }

  friend auto operator<=>(const MonthStamp& a, const MonthStamp& b) noexcept { return a.ordinal() <=> b.ordinal(); }
  friend bool operator==(const MonthStamp& a, const MonthStamp& b) noexcept { return a.ordinal() == b.ordinal(); }
};

/// Strict `YYYY-MM`.
inline std::optional<MonthStamp> parse_month(std::string_view s) {
  if (s.size() != 7 || s[4] != '-') return std::nullopt;
  int y = 0, m = 0;
  auto [p1, e1] = std::from_chars(s.data(), s.data() + 4, y);
  auto [p2, e2] = std::from_chars(s.data() + 5, s.data() + 7, m);
  if (e1 != std::errc{} || e2 != std::errc{} || p1 != s.data() + 4 || p2 != s.data() + 7) return std::nullopt;
  if (m < 1 || m > 12) return std::nullopt;
  return MonthStamp{y, m};
}

inline MonthStamp month_or_throw(std::string_view s) {
  auto m = parse_month(s);
  if (!m) fail(ErrorCode::InvalidArgument, "expected YYYY-MM, got '" + std::string(s) + "'");
  return *m;
}

enum class Category { Supply, Demand, Balances, FinancialMarkets, Target };
enum class SourceTag { EIA, FRED, YAHOO, OTHER };

inline std::string_view to_string(Category c) noexcept {
  switch (c) {
    case Category::Supply: return "supply";
    case Category::Demand: return "demand";
    case Category::Balances: return "balances";
    case Category::FinancialMarkets: return "financial_markets";
    case Category::Target: return "target";
  }
  return "?";
}

inline std::string_view to_string(SourceTag s) noexcept {
  switch (s) {
    case SourceTag::EIA: return "EIA";
    case SourceTag::FRED: return "FRED";
    case SourceTag::YAHOO: return "YAHOO";
    case SourceTag::OTHER: return "OTHER";
  }
  return "?";
}

inline Category parse_category(std::string_view s) {
  for (auto c : {Category::Supply, Category::Demand, Category::Balances, Category::FinancialMarkets, Category::Target})
    if (to_string(c) == s) return c;
  fail(ErrorCode::SchemaError, "unknown category '" + std::string(s) + "'");
}

inline SourceTag parse_source(std::string_view s) {
  for (auto t : {SourceTag::EIA, SourceTag::FRED, SourceTag::YAHOO, SourceTag::OTHER})
    if (to_string(t) == s) return t;
  fail(ErrorCode::SchemaError, "unknown source_tag '" + std::string(s) + "'");
}

struct VariableSpec {
  std::string name;
  Category category = Category::Supply;
  std::string description;
  SourceTag source_tag = SourceTag::OTHER;
};

using Schema = std::vector<VariableSpec>;

struct CategoryCounts {
  std::size_t supply = 0, demand = 0, balances = 0, financial_markets = 0, target = 0;
};

inline CategoryCounts category_counts(const Schema& schema) {
  CategoryCounts c;
  for (const auto& v : schema) {
    switch (v.category) {
      case Category::Supply: ++c.supply; break;
      case Category::Demand: ++c.demand; break;
      case Category::Balances: ++c.balances; break;
      case Category::FinancialMarkets: ++c.financial_markets; break;
      case Category::Target: ++c.target; break;
    }
  }
  return c;
}

/// Exactly one target is always required. expected_inputs pins the number of
/// independent columns (12 for the canonical dataset); nullopt skips the check.
inline std::size_t validate_schema(const Schema& schema, std::optional<std::size_t> expected_inputs = std::nullopt) {
  if (schema.empty()) fail(ErrorCode::SchemaError, "empty schema");
  std::size_t target = schema.size();
  for (std::size_t i = 0; i < schema.size(); ++i) {
    if (schema[i].name.empty()) fail(ErrorCode::SchemaError, "variable " + std::to_string(i) + " has no name");
    for (std::size_t j = 0; j < i; ++j)
      if (schema[j].name == schema[i].name) fail(ErrorCode::SchemaError, "duplicate variable '" + schema[i].name + "'");
    if (schema[i].category == Category::Target) {
      if (target != schema.size()) fail(ErrorCode::SchemaError, "more than one target variable");
      target = i;
    }
  }
  if (target == schema.size()) fail(ErrorCode::SchemaError, "no target variable");
  if (expected_inputs && schema.size() - 1 != *expected_inputs) {
    fail(ErrorCode::SchemaError, "expected " + std::to_string(*expected_inputs) + " independent variables, got " +
                                     std::to_string(schema.size() - 1));
  }
  return target;
}

inline Schema schema_from_json(const nlohmann::json& j) {
  if (!j.is_array()) fail(ErrorCode::SchemaError, "schema must be a JSON list");
  Schema out;
  for (const auto& e : j) {
    try {
      out.push_back({e.at("name").get<std::string>(), parse_category(e.at("category").get<std::string>()),
                     e.value("description", std::string{}), parse_source(e.value("source_tag", std::string{"OTHER"}))});
    } catch (const nlohmann::json::exception& ex) {
      fail(ErrorCode::SchemaError, ex.what());
    }
  }
  validate_schema(out);
  return out;
}

inline nlohmann::json schema_to_json(const Schema& schema) {
  nlohmann::json j = nlohmann::json::array();
  for (const auto& v : schema) {
    j.push_back({{"name", v.name},
                 {"category", std::string(to_string(v.category))},
                 {"description", v.description},
                 {"source_tag", std::string(to_string(v.source_tag))}});
  }
  return j;
}

inline Schema load_schema(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::IoError, "cannot open schema file " + path);
  try {
    return schema_from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::parse_error& ex) {
    fail(ErrorCode::SchemaError, ex.what());
  }
}

/// Schema for a header with no schema file: every column is an input except
/// target_name (or the last column when target_name is empty).
inline Schema infer_schema(const std::vector<std::string>& names, const std::string& target_name = {}) {
  Schema s;
  for (const auto& n : names) s.push_back({n, Category::Supply, {}, SourceTag::OTHER});
  if (s.empty()) fail(ErrorCode::SchemaError, "no variable columns");
  if (target_name.empty()) {
    s.back().category = Category::Target;
  } else {
    bool found = false;
    for (auto& v : s)
      if (v.name == target_name) v.category = Category::Target, found = true;
    if (!found) fail(ErrorCode::MissingColumn, "target column '" + target_name + "' not in header");
  }
  return s;
}

/// Dated matrix, one row per month, one column per schema variable. The
/// constructor enforces contiguity and finiteness, so any live frame is valid.
class TimeSeriesFrame {
 public:
  TimeSeriesFrame(std::vector<MonthStamp> dates, Schema columns, Matrix values)
      : dates_(std::move(dates)), columns_(std::move(columns)), values_(std::move(values)) {
    target_ = validate_schema(columns_);
    if (values_.rows() != dates_.size() || values_.cols() != columns_.size()) {
      fail(ErrorCode::DimensionMismatch, "frame values shape does not match dates x columns");
    }
    for (std::size_t i = 1; i < dates_.size(); ++i) {
      const int step = dates_[i].ordinal() - dates_[i - 1].ordinal();
      if (step <= 0) fail(ErrorCode::NonMonotonicDates, "at " + dates_[i].str());
      if (step > 1) fail(ErrorCode::GapInDates, "between " + dates_[i - 1].str() + " and " + dates_[i].str());
    }
    for (std::size_t r = 0; r < values_.rows(); ++r)
      for (std::size_t c = 0; c < values_.cols(); ++c)
        if (!std::isfinite(values_(r, c)))
          fail(ErrorCode::MissingValue, "row " + std::to_string(r) + " col " + std::to_string(c));
  }

  const std::vector<MonthStamp>& dates() const noexcept { return dates_; }
  const Schema& columns() const noexcept { return columns_; }
  const Matrix& values() const noexcept { return values_; }
  std::size_t target_index() const noexcept { return target_; }
  std::size_t rows() const noexcept { return values_.rows(); }
  std::size_t cols() const noexcept { return values_.cols(); }

  std::vector<std::size_t> input_indices() const {
    std::vector<std::size_t> idx;
    for (std::size_t c = 0; c < cols(); ++c)
      if (c != target_) idx.push_back(c);
    return idx;
  }

  std::vector<std::string> names() const {
    std::vector<std::string> n;
    for (const auto& v : columns_) n.push_back(v.name);
    return n;
  }

  Vector target() const { return values_.col(target_); }

  /// Rows [begin, end).
  TimeSeriesFrame slice(std::size_t begin, std::size_t end) const {
    Matrix m(end - begin, cols());
    for (std::size_t r = begin; r < end; ++r)
      for (std::size_t c = 0; c < cols(); ++c) m(r - begin, c) = values_(r, c);
    return {std::vector<MonthStamp>(dates_.begin() + begin, dates_.begin() + end), columns_, std::move(m)};
  }

  TimeSeriesFrame with_values(Matrix values) const { return {dates_, columns_, std::move(values)}; }

 private:
  std::vector<MonthStamp> dates_;
  Schema columns_;
  Matrix values_;
  std::size_t target_ = 0;
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline std::vector<std::string_view> split_csv_line(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const auto pos = line.find(',', start);
    out.push_back(trim(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

inline std::optional<double> parse_double(std::string_view s) {
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || p != s.data() + s.size()) return std::nullopt;
  return v;
}

inline bool is_missing_token(std::string_view s) {
  return s.empty() || s == "NA" || s == "na" || s == "NaN" || s == "nan" || s == "null" || s == ".";
}

}  // namespace detail

/// Parses `date,<name1>,...` CSV text. With a schema the header must list the
/// schema names in order; without one the header defines the columns and the
/// last column is the target.
inline TimeSeriesFrame parse_csv(std::istream& in, const std::optional<Schema>& schema = std::nullopt) {
  std::string line;
  if (!std::getline(in, line)) fail(ErrorCode::MissingColumn, "empty input, no header");
  const auto header = detail::split_csv_line(line);
  if (header.empty() || header[0] != "date") fail(ErrorCode::MissingColumn, "first header column must be 'date'");
  std::vector<std::string> names;
  for (std::size_t i = 1; i < header.size(); ++i) names.emplace_back(header[i]);

  Schema cols;
  if (schema) {
    validate_schema(*schema);
    for (std::size_t i = 0; i < schema->size(); ++i) {
      if (i >= names.size() || names[i] != (*schema)[i].name) {
        fail(ErrorCode::MissingColumn, "expected column '" + (*schema)[i].name + "' at position " + std::to_string(i + 1));
      }
    }
    if (names.size() != schema->size()) fail(ErrorCode::MissingColumn, "header has columns not in the schema");
    cols = *schema;
  } else {
    cols = infer_schema(names);
  }

  std::vector<MonthStamp> dates;
  Vector data;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (detail::trim(line).empty()) continue;
    const auto cells = detail::split_csv_line(line);
    const auto date = parse_month(cells[0]);
    if (!date) fail(ErrorCode::UnparseableCell, "row " + std::to_string(row) + " col 0: '" + std::string(cells[0]) + "'");
    if (!dates.empty()) {
      const int step = date->ordinal() - dates.back().ordinal();
      if (step <= 0) fail(ErrorCode::NonMonotonicDates, date->str() + " follows " + dates.back().str());
      if (step > 1) fail(ErrorCode::GapInDates, "between " + dates.back().str() + " and " + date->str());
    }
    dates.push_back(*date);
    for (std::size_t c = 0; c < cols.size(); ++c) {
      const std::string where = "row " + std::to_string(row) + " col " + std::to_string(c + 1);
      if (c + 1 >= cells.size() || detail::is_missing_token(cells[c + 1])) fail(ErrorCode::MissingValue, where);
      const auto v = detail::parse_double(cells[c + 1]);
      if (!v) fail(ErrorCode::UnparseableCell, where + ": '" + std::string(cells[c + 1]) + "'");
      if (!std::isfinite(*v)) fail(ErrorCode::MissingValue, where);
      data.push_back(*v);
    }
    if (cells.size() > cols.size() + 1) fail(ErrorCode::UnparseableCell, "row " + std::to_string(row) + " has extra cells");
    ++row;
  }
  Matrix values(dates.size(), cols.size(), std::move(data));
  return {std::move(dates), std::move(cols), std::move(values)};
}

inline TimeSeriesFrame load_csv(const std::string& path, const std::optional<Schema>& schema = std::nullopt) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::IoError, "cannot open " + path);
  return parse_csv(in, schema);
}

inline void write_csv(std::ostream& out, const TimeSeriesFrame& frame) {
  out << "date";
  for (const auto& v : frame.columns()) out << ',' << v.name;
  out << '\n';
  char buf[32];
  for (std::size_t r = 0; r < frame.rows(); ++r) {
    out << frame.dates()[r].str();
    for (std::size_t c = 0; c < frame.cols(); ++c) {
      std::snprintf(buf, sizeof buf, "%.17g", frame.values()(r, c));
      out << ',' << buf;
    }
    out << '\n';
  }
}

// ---------------------------------------------------------------------------
// Split

struct SplitSpec {
  MonthStamp test_start;
};

/// Row index where the test block starts; at least two rows on each side.
inline std::size_t split_index(const TimeSeriesFrame& frame, const SplitSpec& spec) {
  if (frame.rows() < 4) fail(ErrorCode::SplitOutOfRange, "frame has fewer than 4 rows");
  const int offset = spec.test_start.ordinal() - frame.dates().front().ordinal();
  if (offset < 2 || offset > static_cast<int>(frame.rows()) - 2) {
    fail(ErrorCode::SplitOutOfRange, "test_start " + spec.test_start.str() + " must leave 2 rows on each side of " +
                                         frame.dates().front().str() + ".." + frame.dates().back().str());
  }
  return static_cast<std::size_t>(offset);
}

inline std::pair<TimeSeriesFrame, TimeSeriesFrame> split(const TimeSeriesFrame& frame, const SplitSpec& spec) {
  const std::size_t at = split_index(frame, spec);
  return {frame.slice(0, at), frame.slice(at, frame.rows())};
}

/// Stacks b below a; b must continue a's months.
inline TimeSeriesFrame concat_rows(const TimeSeriesFrame& a, const TimeSeriesFrame& b) {
  if (a.cols() != b.cols()) fail(ErrorCode::DimensionMismatch, "column counts differ");
  auto dates = a.dates();
  dates.insert(dates.end(), b.dates().begin(), b.dates().end());
  Vector data = a.values().data();
  data.insert(data.end(), b.values().data().begin(), b.values().data().end());
  return {std::move(dates), a.columns(), Matrix(a.rows() + b.rows(), a.cols(), std::move(data))};
}

// ---------------------------------------------------------------------------
// Min-max normalization

struct ColumnRange {
  std::size_t column = 0;
  double min_val = 0.0;
  double max_val = 1.0;
};

/// Affine maps for the independent columns; the target is never included.
struct NormalizationParams {
  std::vector<ColumnRange> ranges;
};

inline NormalizationParams fit_normalization(const TimeSeriesFrame& train) {
  NormalizationParams p;
  for (std::size_t c : train.input_indices()) {
    const Vector col = train.values().col(c);
    if (col.empty()) fail(ErrorCode::EmptyInput, "no rows to fit normalization");
    const auto [lo, hi] = std::minmax_element(col.begin(), col.end());
    if (!(*hi > *lo)) fail(ErrorCode::ConstantColumn, "column " + std::to_string(c) + " (" + train.columns()[c].name + ")");
    p.ranges.push_back({c, *lo, *hi});
  }
  return p;
}

namespace detail {
inline Matrix map_columns(const TimeSeriesFrame& frame, const NormalizationParams& params, bool forward) {
  Matrix m = frame.values();
  for (const auto& r : params.ranges) {
    if (r.column >= frame.cols()) fail(ErrorCode::UnknownColumn, "column " + std::to_string(r.column));
    if (r.column == frame.target_index()) fail(ErrorCode::UnknownColumn, "normalization may not touch the target column");
    const double span = r.max_val - r.min_val;
    for (std::size_t i = 0; i < m.rows(); ++i) {
      m(i, r.column) = forward ? (m(i, r.column) - r.min_val) / span : m(i, r.column) * span + r.min_val;
    }
  }
  return m;
}
}  // namespace detail

/// Values outside the training range map outside [0, 1]; that is expected on test data.
inline TimeSeriesFrame apply_normalization(const TimeSeriesFrame& frame, const NormalizationParams& params) {
  return frame.with_values(detail::map_columns(frame, params, true));
}

inline TimeSeriesFrame denormalize(const TimeSeriesFrame& frame, const NormalizationParams& params) {
  return frame.with_values(detail::map_columns(frame, params, false));
}

inline nlohmann::json to_json(const NormalizationParams& p) {
  nlohmann::json j = nlohmann::json::array();
  for (const auto& r : p.ranges) j.push_back({{"column", r.column}, {"min", r.min_val}, {"max", r.max_val}});
  return j;
}

inline NormalizationParams normalization_from_json(const nlohmann::json& j) {
  NormalizationParams p;
  for (const auto& e : j) p.ranges.push_back({e.at("column").get<std::size_t>(), e.at("min").get<double>(), e.at("max").get<double>()});
  return p;
}

// ---------------------------------------------------------------------------

/// Pearson correlation of every pair of columns.
inline Matrix correlation_matrix(const Matrix& values) {
  const std::size_t n = values.rows(), k = values.cols();
  if (n < 2) fail(ErrorCode::TooShort, "correlation needs at least 2 rows");
  Matrix centered = values;
  Vector norms(k);
  for (std::size_t c = 0; c < k; ++c) {
    double mean = 0.0;
    for (std::size_t r = 0; r < n; ++r) mean += values(r, c);
    mean /= static_cast<double>(n);
    double ss = 0.0;
    for (std::size_t r = 0; r < n; ++r) {
      centered(r, c) -= mean;
      ss += centered(r, c) * centered(r, c);
    }
    if (!(ss > 0.0)) fail(ErrorCode::ConstantColumn, "column " + std::to_string(c));
    norms[c] = std::sqrt(ss);
  }
  Matrix corr(k, k);
  for (std::size_t i = 0; i < k; ++i) {
    corr(i, i) = 1.0;
    for (std::size_t j = i + 1; j < k; ++j) {
      double s = 0.0;
      for (std::size_t r = 0; r < n; ++r) s += centered(r, i) * centered(r, j);
      const double v = std::clamp(s / (norms[i] * norms[j]), -1.0, 1.0);
      corr(i, j) = corr(j, i) = v;
    }
  }
  return corr;
}

inline Matrix correlation_matrix(const TimeSeriesFrame& frame) { return correlation_matrix(frame.values()); }

inline void write_correlation_csv(std::ostream& out, const std::vector<std::string>& names, const Matrix& corr) {
  out << "variable";
  for (const auto& n : names) out << ',' << n;
  out << '\n';
  char buf[32];
  for (std::size_t i = 0; i < corr.rows(); ++i) {
    out << names[i];
    for (std::size_t j = 0; j < corr.cols(); ++j) {
      std::snprintf(buf, sizeof buf, "%.6g", corr(i, j));
      out << ',' << buf;
    }
    out << '\n';
  }
}

struct DesignData {
  Matrix x;
  Vector y;
};

/// Independent columns in schema order, and the target.
inline DesignData extract_xy(const TimeSeriesFrame& frame) {
  const auto inputs = frame.input_indices();
  Matrix x(frame.rows(), inputs.size());
  for (std::size_t r = 0; r < frame.rows(); ++r)
    for (std::size_t j = 0; j < inputs.size(); ++j) x(r, j) = frame.values()(r, inputs[j]);
  return {std::move(x), frame.target()};
}

}  // namespace oilcast
