#include "oilcast/arima.hpp"

#include <gtest/gtest.h>

#include <cmath>

namespace oilcast {
namespace {

Vector simulate_arma(std::uint64_t seed, std::size_t n, double phi, double theta, double mean = 0.0) {
  Rng rng(seed);
  const std::size_t burn = 500;
  Vector x;
  double prev = 0.0, prev_e = 0.0;
  for (std::size_t t = 0; t < n + burn; ++t) {
    const double e = rng_next_normal(rng);
    const double v = phi * prev + e + theta * prev_e;
    prev = v;
    prev_e = e;
    if (t >= burn) x.push_back(v + mean);
  }
  return x;
}

Vector white_noise(std::uint64_t seed, std::size_t n) { return simulate_arma(seed, n, 0.0, 0.0); }

TEST(Difference, Examples) {
  EXPECT_EQ(difference(Vector{1, 2, 4, 7}, 1), (Vector{1, 2, 3}));
  EXPECT_EQ(difference(Vector{1, 2, 3, 4}, 2), (Vector{0, 0}));
  EXPECT_EQ(difference(Vector{1, 5, 2}, 0), (Vector{1, 5, 2}));
  EXPECT_THROW(difference(Vector{1, 2}, 2), Error);
}

TEST(Undifference, Examples) {
  EXPECT_EQ(undifference(Vector{1, 2, 3}, Vector{1}, 1), (Vector{2, 4, 7}));
  EXPECT_EQ(undifference(Vector{1, 2, 3}, Vector{}, 0), (Vector{1, 2, 3}));
  try {
    undifference(Vector{1}, Vector{1}, 2);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InsufficientAnchor);
  }
}

TEST(Undifference, SquaresRoundTrip) {
  const Vector s{1, 4, 9, 16, 25};
  const Vector diffs = difference(s, 2);  // second differences of s[0..], aligned with s[2..]
  const Vector back = undifference(diffs, Vector{1, 4}, 2);
  ASSERT_EQ(back.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(back[i], s[i + 2], 1e-12);
}

TEST(Undifference, RandomRoundTrips) {
  Rng rng(40);
  for (int trial = 0; trial < 100; ++trial) {
    Vector s(30);
    for (double& v : s) v = rng_next_uniform(rng, -10.0, 10.0);
    for (std::size_t d : {0u, 1u, 2u}) {
      const std::size_t m = 2 + rng.next_u64() % 20;  // split point >= d
      const Vector diffs = difference(s, d);
      const Vector tail(diffs.begin() + static_cast<std::ptrdiff_t>(m - d), diffs.end());
      const Vector head(s.begin(), s.begin() + static_cast<std::ptrdiff_t>(m));
      const Vector back = undifference(tail, head, d);
      for (std::size_t i = 0; i < back.size(); ++i) EXPECT_NEAR(back[i], s[m + i], 1e-12);
    }
  }
}

TEST(Acf, LagZeroAndAlternating) {
  Vector alt(1000);
  for (std::size_t i = 0; i < alt.size(); ++i) alt[i] = i % 2 ? -1.0 : 1.0;
  const auto r = acf(alt, 5);
  EXPECT_EQ(r[0].value, 1.0);
  EXPECT_NEAR(r[1].value, -1.0, 2e-3);
  EXPECT_NEAR(r[0].conf_limit, 1.96 / std::sqrt(1000.0), 1e-15);
}

TEST(Acf, WhiteNoiseInsideBand) {
  const auto r = acf(white_noise(41, 2000), 20);
  for (std::size_t k = 1; k < r.size(); ++k) EXPECT_LT(std::abs(r[k].value), 3 * r[k].conf_limit);
}

TEST(Acf, Errors) {
  EXPECT_THROW(acf(Vector{1, 1, 1, 1}, 2), Error);
  EXPECT_THROW(acf(Vector{1, 2, 3}, 3), Error);
}

TEST(Pacf, BaseCaseEqualsAcf) {
  const Vector x = simulate_arma(42, 500, 0.4, 0.3);
  EXPECT_NEAR(pacf(x, 5)[0].value, acf(x, 5)[1].value, 1e-15);
}

TEST(Pacf, Ar1CutsOff) {
  const auto p = pacf(simulate_arma(43, 5000, 0.7, 0.0), 20);
  EXPECT_GE(p[0].value, 0.6);
  EXPECT_LE(p[0].value, 0.8);
  int inside = 0;
  for (std::size_t k = 2; k <= 20; ++k) inside += std::abs(p[k - 1].value) < 2 * p[k - 1].conf_limit;
  EXPECT_GE(inside, 18);  // >= 90% of 19 lags
}

TEST(Pacf, WhiteNoiseInsideBand) {
  for (const auto& pt : pacf(white_noise(44, 3000), 20)) EXPECT_LT(std::abs(pt.value), 3 * pt.conf_limit);
}

TEST(Correlogram, ValuesBounded) {
  Rng rng(45);
  for (int trial = 0; trial < 20; ++trial) {
    const Vector x = simulate_arma(rng.next_u64(), 60, rng_next_uniform(rng, -0.9, 0.9), rng_next_uniform(rng, -0.9, 0.9));
    for (const auto& pt : acf(x, 20)) EXPECT_LE(std::abs(pt.value), 1 + 1e-9);
    for (const auto& pt : pacf(x, 20)) EXPECT_LE(std::abs(pt.value), 1 + 1e-9);
  }
}

TEST(HannanRissanen, Ar1) {
  const auto init = hannan_rissanen_init(simulate_arma(46, 5000, 0.7, 0.0), {1, 0, 0});
  ASSERT_EQ(init.phi.size(), 1u);
  EXPECT_NEAR(init.phi[0], 0.7, 0.15);
  EXPECT_TRUE(init.theta.empty());
}

TEST(HannanRissanen, WhiteNoiseArma11) {
  const auto init = hannan_rissanen_init(white_noise(47, 5000), {1, 0, 1});
  EXPECT_LT(std::abs(init.phi[0]), 0.2);
  EXPECT_LT(std::abs(init.theta[0]), 0.2);
}

TEST(HannanRissanen, DegenerateOrder) {
  const auto init = hannan_rissanen_init(Vector{1, 2, 6}, {0, 0, 0});
  EXPECT_TRUE(init.phi.empty());
  EXPECT_TRUE(init.theta.empty());
  EXPECT_EQ(init.drift, 3.0);
}

TEST(HannanRissanen, TooShort) {
  try {
    hannan_rissanen_init(white_noise(1, 25), {1, 0, 1});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::SeriesTooShort);
  }
}

TEST(Css, WhiteNoiseOrderIsCenteredSumOfSquares) {
  const Vector x{1, 4, 2, 7, 6};
  const double mean = 4.0;
  double expect = 0.0;
  for (double v : x) expect += (v - mean) * (v - mean);
  EXPECT_DOUBLE_EQ(css(x, {}, {}, mean), expect);
}

TEST(Css, ExactModelHasZeroResiduals) {
  // ARMA(1,1) around drift 2 with zero innovations.
  Vector x{5.0};
  for (int t = 1; t < 40; ++t) x.push_back(2.0 + 0.6 * (x.back() - 2.0));
  EXPECT_NEAR(css(x, Vector{0.6}, Vector{0.3}, 2.0), 0.0, 1e-24);
}

TEST(Css, HandRecursionAr1) {
  // e = [_, 2-0.5, 0-1, -1-0, 3+0.5] = [1.5, -1, -1, 3.5] -> 2.25+1+1+12.25
  EXPECT_NEAR(css(Vector{1, 2, 0, -1, 3}, Vector{0.5}, Vector{}, 0.0), 16.5, 1e-12);
}

TEST(Css, HandRecursionMa1) {
  // x = [1, 2, 3], θ = 0.5, drift 0: e0 = 1, e1 = 2 - 0.5, e2 = 3 - 0.75
  EXPECT_NEAR(css(Vector{1, 2, 3}, Vector{}, Vector{0.5}, 0.0), 1.0 + 2.25 + 5.0625, 1e-12);
}

TEST(Css, OverflowIsLargeFinite) {
  Vector x(200, 1.0);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = static_cast<double>(i % 7);
  const double v = css(x, Vector{}, Vector{-50.0}, 0.0);
  EXPECT_TRUE(std::isfinite(v));
  EXPECT_GE(v, 1e299);
}

TEST(ArimaFit, RecoversAr1) {
  const auto m = arima_fit(simulate_arma(48, 5000, 0.7, 0.0), {1, 0, 0});
  EXPECT_GE(m.phi[0], 0.6);
  EXPECT_LE(m.phi[0], 0.8);
  EXPECT_TRUE(m.stationary);
}

TEST(ArimaFit, RecoversMa1) {
  const auto m = arima_fit(simulate_arma(49, 5000, 0.0, 0.5), {0, 0, 1});
  EXPECT_GE(m.theta[0], 0.4);
  EXPECT_LE(m.theta[0], 0.6);
  EXPECT_TRUE(m.invertible);
}

TEST(ArimaFit, LinearTrendDrift) {
  Vector line(100);
  for (std::size_t i = 0; i < line.size(); ++i) line[i] = 3.0 + 0.37 * static_cast<double>(i);
  const auto m = arima_fit(line, {0, 1, 0});
  EXPECT_NEAR(m.drift, 0.37, 1e-8);
  for (double e : m.residuals) EXPECT_NEAR(e, 0.0, 1e-8);
}

TEST(ArimaFit, InvariantsAndDeterminism) {
  const Vector raw = simulate_arma(50, 400, 0.5, 0.2, 30.0);
  Vector walk(raw.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < raw.size(); ++i) walk[i] = acc += raw[i] - 30.0 + 0.1;
  for (const auto& order : canonical_arima_orders()) {
    const auto m = arima_fit(walk, order);
    EXPECT_EQ(m.residuals.size(), walk.size() - order.d - order.p) << order.str();
    double ss = 0.0;
    for (double e : m.residuals) ss += e * e;
    EXPECT_NEAR(m.css, ss, 1e-9 * ss);
    EXPECT_LE(m.css, m.css_initial);
    EXPECT_EQ(m.last_values.size(), order.d + order.p);
    EXPECT_EQ(m.last_residuals.size(), order.q);
    const auto again = arima_fit(walk, order);
    EXPECT_EQ(again.phi, m.phi);
    EXPECT_EQ(again.theta, m.theta);
    EXPECT_EQ(again.drift, m.drift);
  }
}

TEST(ArimaFit, TooShort) {
  try {
    arima_fit(white_noise(1, 30), {2, 1, 1});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::SeriesTooShort);
  }
}

TEST(ArimaForecast, RandomWalkWithDrift) {
  ArimaModel m;
  m.order = {0, 1, 0};
  m.drift = 0.5;
  m.last_values = {10.0};
  EXPECT_EQ(arima_forecast(m, 4), (Vector{10.5, 11.0, 11.5, 12.0}));
}

TEST(ArimaForecast, Ar1Halving) {
  ArimaModel m;
  m.order = {1, 0, 0};
  m.phi = {0.5};
  m.last_values = {8.0};
  EXPECT_EQ(arima_forecast(m, 4), (Vector{4, 2, 1, 0.5}));
}

TEST(ArimaForecast, MaMemoryExhausts) {
  ArimaModel m;
  m.order = {0, 0, 2};
  m.theta = {0.4, -0.3};
  m.drift = 1.5;
  m.last_residuals = {2.0, -1.0};
  const Vector f = arima_forecast(m, 6);
  EXPECT_DOUBLE_EQ(f[0], 1.5 + 0.4 * -1.0 - 0.3 * 2.0);
  EXPECT_DOUBLE_EQ(f[1], 1.5 - 0.3 * -1.0);
  for (std::size_t h = 2; h < f.size(); ++h) EXPECT_EQ(f[h], 1.5);
}

TEST(ArimaForecast, ZeroParametersIntegrateZeros) {
  ArimaModel m;
  m.order = {2, 1, 1};
  m.phi = {0, 0};
  m.theta = {0};
  m.last_values = {3.0, 4.0, 7.0};
  m.last_residuals = {0.0};
  for (double v : arima_forecast(m, 5)) EXPECT_EQ(v, 7.0);
  m.order = {1, 2, 0};
  m.phi = {0};
  m.theta = {};
  m.last_residuals = {};
  // zero second differences continue the last slope
  EXPECT_EQ(arima_forecast(m, 3), (Vector{10, 13, 16}));
}

TEST(ArimaForecast, LinearTrendContinuation) {
  Vector line(60);
  for (std::size_t i = 0; i < line.size(); ++i) line[i] = -2.0 + 1.25 * static_cast<double>(i);
  const auto m = arima_fit(line, {0, 1, 0});
  const Vector f = arima_forecast(m, 16);
  for (std::size_t h = 0; h < 16; ++h) EXPECT_NEAR(f[h], -2.0 + 1.25 * static_cast<double>(60 + h), 1e-8);
}

TEST(Roots, StationarityFlags) {
  EXPECT_TRUE(roots_outside_unit_circle(Vector{0.5}, -1.0));
  EXPECT_FALSE(roots_outside_unit_circle(Vector{1.2}, -1.0));
  EXPECT_FALSE(roots_outside_unit_circle(Vector{1.0}, -1.0));
  // 1 - 1.5z + 0.56z² = (1-0.7z)(1-0.8z): roots 1/0.7, 1/0.8
  EXPECT_TRUE(roots_outside_unit_circle(Vector{1.5, -0.56}, -1.0));
  // MA: 1 + 2.5z + z² has a root at -0.5
  EXPECT_FALSE(roots_outside_unit_circle(Vector{2.5, 1.0}, 1.0));
}

TEST(ModelFile, RoundTrip) {
  const auto m = arima_fit(simulate_arma(51, 300, 0.3, 0.3), {1, 1, 1});
  const auto back = arima_from_json(nlohmann::json::parse(to_json(m).dump()));
  EXPECT_EQ(back.phi, m.phi);
  EXPECT_EQ(back.theta, m.theta);
  EXPECT_EQ(back.drift, m.drift);
  EXPECT_EQ(arima_forecast(back, 5), arima_forecast(m, 5));
}

}  // namespace
}  // namespace oilcast
