#include "oilcast/dataset.hpp"
#include "oilcast/synthetic.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace oilcast {
namespace {

template <class F>
void expect_code(ErrorCode code, F&& f) {
  try {
    f();
    FAIL() << "expected " << to_string(code);
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), code) << e.what();
  }
}

TimeSeriesFrame parse(const std::string& text) {
  std::istringstream in(text);
  return parse_csv(in);
}

TEST(MonthStamp, ParseAndArithmetic) {
  EXPECT_EQ(parse_month("2017-01"), (MonthStamp{2017, 1}));
  EXPECT_FALSE(parse_month("2017-13"));
  EXPECT_FALSE(parse_month("2017-1"));
  EXPECT_FALSE(parse_month("2017/01"));
  EXPECT_FALSE(parse_month("2017-01-05"));
  EXPECT_EQ((MonthStamp{2016, 12}).plus(1), (MonthStamp{2017, 1}));
  EXPECT_EQ((MonthStamp{1986, 1}).plus(387).str(), "2018-04");
}

TEST(LoadCsv, HappyPath) {
  const auto f = parse("date,a,b\n2001-01,1,2\n2001-02,3,4\n2001-03,5,6\n");
  EXPECT_EQ(f.rows(), 3u);
  EXPECT_EQ(f.cols(), 2u);
  EXPECT_EQ(f.target_index(), 1u);
  EXPECT_EQ(f.dates().back(), (MonthStamp{2001, 3}));
  EXPECT_EQ(f.values()(2, 0), 5.0);
}

TEST(LoadCsv, GapInDates) {
  expect_code(ErrorCode::GapInDates, [] { parse("date,a,b\n2001-01,1,2\n2001-03,3,4\n"); });
}

TEST(LoadCsv, NonMonotonicDates) {
  expect_code(ErrorCode::NonMonotonicDates, [] { parse("date,a,b\n2001-02,1,2\n2001-01,3,4\n"); });
  expect_code(ErrorCode::NonMonotonicDates, [] { parse("date,a,b\n2001-02,1,2\n2001-02,3,4\n"); });
}

TEST(LoadCsv, MissingAndUnparseableCells) {
  expect_code(ErrorCode::MissingValue, [] { parse("date,a,b\n2001-01,1,\n"); });
  expect_code(ErrorCode::MissingValue, [] { parse("date,a,b\n2001-01,NA,2\n"); });
  expect_code(ErrorCode::MissingValue, [] { parse("date,a,b\n2001-01,1\n"); });
  expect_code(ErrorCode::UnparseableCell, [] { parse("date,a,b\n2001-01,1,2x\n"); });
  expect_code(ErrorCode::UnparseableCell, [] { parse("date,a,b\n2001-01,\"1,000\",2\n"); });
  expect_code(ErrorCode::UnparseableCell, [] { parse("date,a,b\n01/2001,1,2\n"); });
}

TEST(LoadCsv, SchemaMustMatchHeader) {
  Schema s{{"a", Category::Supply, "", SourceTag::EIA}, {"wti", Category::Target, "", SourceTag::EIA}};
  std::istringstream ok("date,a,wti\n2001-01,1,2\n");
  EXPECT_EQ(parse_csv(ok, s).target_index(), 1u);
  std::istringstream wrong("date,a,b\n2001-01,1,2\n");
  expect_code(ErrorCode::MissingColumn, [&] { parse_csv(wrong, s); });
  std::istringstream no_date("month,a,wti\n2001-01,1,2\n");
  expect_code(ErrorCode::MissingColumn, [&] { parse_csv(no_date, s); });
}

TEST(LoadCsv, CanonicalRangeHas388Rows) {
  // 13 columns from 1986-01 through 2018-04.
  const auto frame = make_linear_frame({});
  const auto path = std::filesystem::temp_directory_path() / "oilcast_dataset_canonical.csv";
  {
    std::ofstream out(path);
    write_csv(out, frame);
  }
  const auto loaded = load_csv(path.string());
  EXPECT_EQ(loaded.rows(), 388u);
  EXPECT_EQ(loaded.cols(), 13u);
  EXPECT_EQ(loaded.dates().front().str(), "1986-01");
  EXPECT_EQ(loaded.dates().back().str(), "2018-04");
  EXPECT_EQ(loaded.values(), frame.values());  // %.17g round-trips
  std::filesystem::remove(path);
}

TEST(Schema, Validation) {
  Schema two_targets{{"a", Category::Target, "", SourceTag::EIA}, {"b", Category::Target, "", SourceTag::EIA}};
  expect_code(ErrorCode::SchemaError, [&] { validate_schema(two_targets); });
  Schema no_target{{"a", Category::Supply, "", SourceTag::EIA}};
  expect_code(ErrorCode::SchemaError, [&] { validate_schema(no_target); });
  Schema small{{"a", Category::Supply, "", SourceTag::EIA}, {"y", Category::Target, "", SourceTag::EIA}};
  EXPECT_EQ(validate_schema(small), 1u);
  expect_code(ErrorCode::SchemaError, [&] { validate_schema(small, 12); });
}

TEST(Schema, ShippedDefaultHasFourCategoriesOfThree) {
  const auto schema = load_schema(std::string(OILCAST_SOURCE_DIR) + "/data/schema_default.json");
  EXPECT_EQ(validate_schema(schema, 12), 12u);
  const auto c = category_counts(schema);
  EXPECT_EQ(c.supply, 3u);
  EXPECT_EQ(c.demand, 3u);
  EXPECT_EQ(c.balances, 3u);
  EXPECT_EQ(c.financial_markets, 3u);
  EXPECT_EQ(c.target, 1u);
  EXPECT_EQ(schema.back().name, "WTI");
}

TEST(Split, CanonicalSplit) {
  const auto frame = make_linear_frame({});
  const auto [train, test] = split(frame, {{2017, 1}});
  EXPECT_EQ(train.rows(), 372u);
  EXPECT_EQ(test.rows(), 16u);
  EXPECT_EQ(train.dates().back().str(), "2016-12");
  EXPECT_EQ(test.dates().front().str(), "2017-01");
}

TEST(Split, FourRowsTwoTwo) {
  const auto f = parse("date,a,b\n2001-01,1,2\n2001-02,3,4\n2001-03,5,6\n2001-04,7,8\n");
  const auto [train, test] = split(f, {{2001, 3}});
  EXPECT_EQ(train.rows(), 2u);
  EXPECT_EQ(test.rows(), 2u);
}

TEST(Split, OutOfRange) {
  const auto f = parse("date,a,b\n2001-01,1,2\n2001-02,3,4\n2001-03,5,6\n2001-04,7,8\n");
  expect_code(ErrorCode::SplitOutOfRange, [&] { split(f, {{2000, 12}}); });
  expect_code(ErrorCode::SplitOutOfRange, [&] { split(f, {{2001, 2}}); });
  expect_code(ErrorCode::SplitOutOfRange, [&] { split(f, {{2001, 4}}); });
}

TEST(Split, ConcatenationIsIdentity) {
  const auto frame = make_linear_frame({.rows = 40, .inputs = 3, .train_rows = 30});
  for (int offset = 2; offset <= 38; offset += 5) {
    const auto [a, b] = split(frame, {frame.dates().front().plus(offset)});
    const auto joined = concat_rows(a, b);
    EXPECT_EQ(joined.values(), frame.values());
    EXPECT_EQ(joined.dates(), frame.dates());
  }
}

TEST(Normalization, FitMinMax) {
  const auto f = parse("date,a,b,y\n2001-01,10,0,1\n2001-02,20,-2,1\n2001-03,30,2,1\n");
  const auto p = fit_normalization(f);
  ASSERT_EQ(p.ranges.size(), 2u);
  EXPECT_EQ(p.ranges[0].min_val, 10.0);
  EXPECT_EQ(p.ranges[0].max_val, 30.0);
  EXPECT_EQ(p.ranges[1].min_val, -2.0);
  EXPECT_EQ(p.ranges[1].max_val, 2.0);
}

TEST(Normalization, TwoColumnParams) {
  const auto f = parse("date,a,b,y\n2001-01,0,-2,5\n2001-02,1,2,6\n");
  const auto p = fit_normalization(f);
  EXPECT_EQ(p.ranges[0].min_val, 0.0);
  EXPECT_EQ(p.ranges[0].max_val, 1.0);
  EXPECT_EQ(p.ranges[1].min_val, -2.0);
  EXPECT_EQ(p.ranges[1].max_val, 2.0);
}

TEST(Normalization, ConstantColumn) {
  const auto f = parse("date,a,y\n2001-01,5,1\n2001-02,5,2\n2001-03,5,3\n");
  expect_code(ErrorCode::ConstantColumn, [&] { fit_normalization(f); });
}

TEST(Normalization, ApplyEndpointsAndExtrapolation) {
  const auto train = parse("date,a,y\n2001-01,10,100\n2001-02,20,200\n2001-03,30,300\n");
  const auto p = fit_normalization(train);
  const auto n = apply_normalization(train, p);
  EXPECT_EQ(n.values().col(0), (Vector{0.0, 0.5, 1.0}));
  EXPECT_EQ(n.values().col(1), train.values().col(1));  // target untouched
  const auto test = parse("date,a,y\n2001-04,35,1\n");
  EXPECT_DOUBLE_EQ(apply_normalization(test, p).values()(0, 0), 1.25);
}

TEST(Normalization, RejectsUnknownColumn) {
  const auto f = parse("date,a,y\n2001-01,1,1\n2001-02,2,2\n");
  expect_code(ErrorCode::UnknownColumn, [&] { apply_normalization(f, {{{5, 0.0, 1.0}}}); });
  expect_code(ErrorCode::UnknownColumn, [&] { apply_normalization(f, {{{1, 0.0, 1.0}}}); });
}

TEST(Normalization, TrainMapsOntoUnitIntervalAndRoundTrips) {
  Rng rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const auto frame = make_linear_frame({.rows = 50, .inputs = 4, .train_rows = 40, .seed = rng.next_u64()});
    // scramble to avoid the pinned 0/1 rows
    Matrix v = frame.values();
    for (double& x : v.data()) x = x * rng_next_uniform(rng, 0.5, 2.0) + 1e3 * rng.next_unit();
    const auto f = frame.with_values(v);
    const auto p = fit_normalization(f);
    const auto n = apply_normalization(f, p);
    for (const auto& r : p.ranges) {
      const Vector col = n.values().col(r.column);
      EXPECT_NEAR(*std::min_element(col.begin(), col.end()), 0.0, 1e-12);
      EXPECT_NEAR(*std::max_element(col.begin(), col.end()), 1.0, 1e-12);
    }
    const auto back = denormalize(n, p);
    for (std::size_t i = 0; i < v.data().size(); ++i) {
      EXPECT_NEAR(back.values().data()[i], v.data()[i], 1e-10 * std::max(1.0, std::abs(v.data()[i])));
    }
  }
}

TEST(Correlation, Examples) {
  const Matrix m{{1, 2, 3}, {2, 4, 2}, {3, 6, 1}};
  const Matrix c = correlation_matrix(m);
  EXPECT_EQ(c(0, 0), 1.0);
  EXPECT_NEAR(c(0, 1), 1.0, 1e-15);
  EXPECT_NEAR(c(0, 2), -1.0, 1e-15);
}

TEST(Correlation, ConstantColumnRejected) {
  expect_code(ErrorCode::ConstantColumn, [] { correlation_matrix(Matrix{{1, 5}, {2, 5}, {3, 5}}); });
}

TEST(Correlation, SymmetricBoundedUnitDiagonal) {
  const auto frame = make_linear_frame({.rows = 100, .inputs = 8, .train_rows = 80});
  const Matrix c = correlation_matrix(frame);
  for (std::size_t i = 0; i < c.rows(); ++i) {
    EXPECT_EQ(c(i, i), 1.0);
    for (std::size_t j = 0; j < c.cols(); ++j) {
      EXPECT_NEAR(c(i, j), c(j, i), 1e-12);
      EXPECT_LE(std::abs(c(i, j)), 1.0 + 1e-12);
    }
  }
}

TEST(Correlation, CsvSixSignificantDigits) {
  std::ostringstream out;
  write_correlation_csv(out, {"a", "b"}, Matrix{{1, 0.123456789}, {0.123456789, 1}});
  EXPECT_EQ(out.str(), "variable,a,b\na,1,0.123457\nb,0.123457,1\n");
}

TEST(ExtractXy, ShapesAndOrder) {
  const auto frame = make_linear_frame({});
  const auto [x, y] = extract_xy(frame);
  EXPECT_EQ(x.cols(), 12u);
  EXPECT_EQ(x.rows(), frame.rows());
  EXPECT_EQ(y.size(), frame.rows());
  const auto small = parse("date,a,y,b\n2001-01,1,9,2\n2001-02,3,8,4\n");
  Schema s{{"a", Category::Supply, "", SourceTag::OTHER}, {"y", Category::Target, "", SourceTag::OTHER}, {"b", Category::Demand, "", SourceTag::OTHER}};
  std::istringstream in("date,a,y,b\n2001-01,1,9,2\n2001-02,3,8,4\n");
  const auto [x2, y2] = extract_xy(parse_csv(in, s));
  EXPECT_EQ(x2, (Matrix{{1, 2}, {3, 4}}));
  EXPECT_EQ(y2, (Vector{9, 8}));
  EXPECT_EQ(small.target_index(), 2u);  // inferred: last column
}

}  // namespace
}  // namespace oilcast
