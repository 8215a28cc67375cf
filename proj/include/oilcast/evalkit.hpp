#pragma once

// Forecast accuracy metrics and the Diebold-Mariano comparison test with the
// Harvey small-sample correction.

#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <string>

#include <nlohmann/json.hpp>

#include "oilcast/error.hpp"
#include "oilcast/numkit.hpp"

namespace oilcast {

namespace detail {
inline void check_pair(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) fail(ErrorCode::DimensionMismatch, "actual and predicted lengths differ");
  if (a.empty()) fail(ErrorCode::EmptyInput, "no observations");
}
}  // namespace detail

inline double rmse(std::span<const double> actual, std::span<const double> predicted) {
  detail::check_pair(actual, predicted);
  double s = 0.0;
  for (std::size_t i = 0; i < actual.size(); ++i) s += (actual[i] - predicted[i]) * (actual[i] - predicted[i]);
  return std::sqrt(s / static_cast<double>(actual.size()));
}

inline double mad(std::span<const double> actual, std::span<const double> predicted) {
  detail::check_pair(actual, predicted);
  double s = 0.0;
  for (std::size_t i = 0; i < actual.size(); ++i) s += std::abs(actual[i] - predicted[i]);
  return s / static_cast<double>(actual.size());
}

/// 1 − SS_res/SS_tot, centred on the mean of `actual` itself. Unbounded below.
inline double r_squared(std::span<const double> actual, std::span<const double> predicted) {
  detail::check_pair(actual, predicted);
  if (actual.size() < 2) fail(ErrorCode::TooShort, "r_squared needs at least 2 observations");
  double mean = 0.0;
  for (double a : actual) mean += a;
  mean /= static_cast<double>(actual.size());
  double ss_tot = 0.0, ss_res = 0.0;
  for (std::size_t i = 0; i < actual.size(); ++i) {
    ss_tot += (actual[i] - mean) * (actual[i] - mean);
    ss_res += (actual[i] - predicted[i]) * (actual[i] - predicted[i]);
  }
  if (!(ss_tot > 0.0)) fail(ErrorCode::ConstantActuals, "actual series is constant");
  return 1.0 - ss_res / ss_tot;
}

inline double adjusted_r_squared(double r2, std::size_t n, std::size_t k) {
  if (n <= k + 1) fail(ErrorCode::DegenerateDof, "n = " + std::to_string(n) + " must exceed k + 1 = " + std::to_string(k + 1));
  return r2 - (1.0 - r2) * static_cast<double>(k) / static_cast<double>(n - k - 1);
}

struct GeneralizationScore {
  double r2_in = 0.0;
  double r2_out = 0.0;
  double ratio = 0.0;
};

inline GeneralizationScore generalization(double r2_in, double r2_out) {
  if (r2_in == 0.0) fail(ErrorCode::ZeroInSampleR2, "in-sample R² is zero");
  return {r2_in, r2_out, r2_out / r2_in};
}

enum class SampleKind { InSample, OutOfSample };

inline std::string_view to_string(SampleKind k) noexcept { return k == SampleKind::InSample ? "in_sample" : "out_of_sample"; }

struct EvalReport {
  SampleKind sample_kind = SampleKind::InSample;
  std::size_t n = 0;
  std::size_t k = 0;
  double rmse = 0.0;
  double mad = 0.0;
  double r2 = 0.0;
  std::optional<double> adjusted_r2;  // in-sample only
  std::optional<double> runtime_seconds;
};

/// Full metric bundle. k (independent-variable count) only feeds the
/// in-sample adjusted R².
inline EvalReport evaluate(std::span<const double> actual, std::span<const double> predicted, SampleKind kind,
                           std::size_t k = 0) {
  EvalReport r;
  r.sample_kind = kind;
  r.n = actual.size();
  r.k = kind == SampleKind::InSample ? k : 0;
  r.rmse = rmse(actual, predicted);
  r.mad = mad(actual, predicted);
  r.r2 = r_squared(actual, predicted);
  if (kind == SampleKind::InSample) r.adjusted_r2 = adjusted_r_squared(r.r2, r.n, k);
  return r;
}

// ---------------------------------------------------------------------------
// Student t tail

namespace detail {

/// Continued fraction for the incomplete beta function (modified Lentz).
inline double beta_continued_fraction(double a, double b, double x) {
  constexpr double tiny = 1e-300;
  constexpr double eps = 1e-16;
  const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < tiny) d = tiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= 10000; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < tiny) d = tiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < tiny) d = tiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < eps) return h;
  }
  fail(ErrorCode::NumericalBreakdown, "incomplete beta continued fraction did not converge");
}

}  // namespace detail

/// Regularized incomplete beta I_x(a, b).
inline double incomplete_beta(double a, double b, double x) {
  if (!(a > 0.0) || !(b > 0.0)) fail(ErrorCode::InvalidArgument, "incomplete beta needs a, b > 0");
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double log_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) + b * std::log1p(-x);
  const double front = std::exp(log_front);
  if (x < (a + 1.0) / (a + b + 2.0)) return front * detail::beta_continued_fraction(a, b, x) / a;
  return 1.0 - front * detail::beta_continued_fraction(b, a, 1.0 - x) / b;
}

/// P(T > t) for Student's t with dof degrees of freedom.
inline double t_distribution_sf(double t, std::size_t dof) {
  if (dof < 1) fail(ErrorCode::InvalidArgument, "degrees of freedom must be >= 1");
  if (std::isnan(t)) fail(ErrorCode::InvalidArgument, "t is NaN");
  if (t == 0.0) return 0.5;
  if (std::isinf(t)) return t > 0 ? 0.0 : 1.0;
  const double v = static_cast<double>(dof);
  const double tail = 0.5 * incomplete_beta(0.5 * v, 0.5, v / (v + t * t));
  return t > 0 ? tail : 1.0 - tail;
}

// ---------------------------------------------------------------------------
// Diebold-Mariano

struct DmResult {
  double statistic = 0.0;  // Harvey-adjusted
  double p_value = 1.0;    // two-sided, t(n−1)
  std::size_t n = 0;
  std::size_t h = 1;
};

/// DM test on a precomputed loss differential d_t. Autocovariances use the
/// divisor n; the long-run variance sums lags 0..h−1.
inline DmResult dm_test_differential(std::span<const double> d, std::size_t h) {
  const std::size_t n = d.size();
  if (n < 4) fail(ErrorCode::TooShort, "DM test needs at least 4 observations, got " + std::to_string(n));
  if (h < 1 || h >= n) fail(ErrorCode::InvalidArgument, "forecast horizon must satisfy 1 <= h < n");
  if (std::all_of(d.begin(), d.end(), [](double v) { return v == 0.0; })) {
    fail(ErrorCode::DegenerateLossDifferential, "loss differential is identically zero");
  }
  const double nd = static_cast<double>(n);
  double mean = 0.0;
  for (double v : d) mean += v;
  mean /= nd;
  auto autocov = [&](std::size_t lag) {
    double s = 0.0;
    for (std::size_t t = lag; t < n; ++t) s += (d[t] - mean) * (d[t - lag] - mean);
    return s / nd;
  };
  double lrv = autocov(0);
  for (std::size_t j = 1; j < h; ++j) lrv += 2.0 * autocov(j);
  const double variance = lrv / nd;
  if (!(variance > 0.0)) fail(ErrorCode::DegenerateLossDifferential, "long-run variance is not positive");
  const double dm = mean / std::sqrt(variance);
  const double hd = static_cast<double>(h);
  const double harvey = (nd + 1.0 - 2.0 * hd + hd * (hd - 1.0) / nd) / nd;
  if (!(harvey > 0.0)) fail(ErrorCode::InvalidArgument, "horizon too long for the Harvey correction");
  const double stat = dm * std::sqrt(harvey);
  const double p = std::min(1.0, 2.0 * t_distribution_sf(std::abs(stat), n - 1));
  return {stat, p, n, h};
}

/// DM test with squared-error loss: d_t = e_a,t² − e_b,t².
inline DmResult dm_test(std::span<const double> errors_a, std::span<const double> errors_b, std::size_t h) {
  if (errors_a.size() != errors_b.size()) fail(ErrorCode::LengthMismatch, "error series lengths differ");
  Vector d(errors_a.size());
  for (std::size_t i = 0; i < d.size(); ++i) d[i] = errors_a[i] * errors_a[i] - errors_b[i] * errors_b[i];
  return dm_test_differential(d, h);
}

// ---------------------------------------------------------------------------

inline nlohmann::json to_json(const EvalReport& r) {
  nlohmann::json j = {{"sample_kind", std::string(to_string(r.sample_kind))},
                      {"n", r.n},
                      {"k", r.k},
                      {"rmse", r.rmse},
                      {"mad", r.mad},
                      {"r2", r.r2}};
  if (r.adjusted_r2) j["adjusted_r2"] = *r.adjusted_r2;
  if (r.runtime_seconds) j["runtime_seconds"] = *r.runtime_seconds;
  return j;
}

inline nlohmann::json to_json(const DmResult& r) {
  return {{"statistic", r.statistic}, {"p_value", r.p_value}, {"n", r.n}, {"h", r.h}};
}

}  // namespace oilcast
