#pragma once

// ARIMA(p,d,q) with drift. Estimation minimizes the conditional sum of squares
// from a Hannan-Rissanen starting point; forecasts iterate the recursion with
// future innovations set to zero and then re-integrate.

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "oilcast/error.hpp"
#include "oilcast/numkit.hpp"

namespace oilcast {

struct ArimaOrder {
  std::size_t p = 0;
  std::size_t d = 0;
  std::size_t q = 0;

  void validate() const {
    if (d > 2) fail(ErrorCode::InvalidArgument, "differencing order must be 0, 1 or 2");
  }
  std::string str() const {
    return "(" + std::to_string(p) + "," + std::to_string(d) + "," + std::to_string(q) + ")";
  }
  friend bool operator==(const ArimaOrder&, const ArimaOrder&) = default;
};

inline const std::vector<ArimaOrder>& canonical_arima_orders() {
  static const std::vector<ArimaOrder> orders{{1, 1, 2}, {2, 1, 1}, {2, 1, 3}, {1, 2, 2}, {2, 2, 3}, {2, 2, 5}};
  return orders;
}

// ---------------------------------------------------------------------------
// Integration

/// First differences applied d times; output length n − d.
inline Vector difference(std::span<const double> series, std::size_t d) {
  if (series.size() <= d) fail(ErrorCode::SeriesTooShort, "series length must exceed d = " + std::to_string(d));
  Vector out(series.begin(), series.end());
  for (std::size_t k = 0; k < d; ++k) {
    for (std::size_t i = 0; i + 1 < out.size(); ++i) out[i] = out[i + 1] - out[i];
    out.pop_back();
  }
  return out;
}

/// Inverts difference(): integrates diffs d times, anchored on the raw
/// observations that precede them (only the final d of last_values are used).
inline Vector undifference(std::span<const double> forecast_diffs, std::span<const double> last_values, std::size_t d) {
  if (last_values.size() < d) {
    fail(ErrorCode::InsufficientAnchor, "need " + std::to_string(d) + " anchor values, got " + std::to_string(last_values.size()));
  }
  if (d == 0) return Vector(forecast_diffs.begin(), forecast_diffs.end());
  // Last element of each differencing level 0..d−1 of the anchor tail.
  Vector level(last_values.end() - static_cast<std::ptrdiff_t>(d), last_values.end());
  Vector tails(d);
  for (std::size_t k = 0; k < d; ++k) {
    tails[k] = level.back();
    for (std::size_t i = 0; i + 1 < level.size(); ++i) level[i] = level[i + 1] - level[i];
    level.pop_back();
  }
  Vector out(forecast_diffs.size());
  for (std::size_t t = 0; t < forecast_diffs.size(); ++t) {
    double v = forecast_diffs[t];
    for (std::size_t k = d; k-- > 0;) {
      v += tails[k];
      tails[k] = v;
    }
    out[t] = v;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Correlograms

struct CorrelogramPoint {
  std::size_t lag = 0;
  double value = 0.0;
  double conf_limit = 0.0;  // 1.96 / sqrt(n)
};

/// Sample autocorrelations for lags 0..max_lag.
inline std::vector<CorrelogramPoint> acf(std::span<const double> series, std::size_t max_lag) {
  const std::size_t n = series.size();
  if (n <= max_lag || n < 2) fail(ErrorCode::SeriesTooShort, "series length must exceed max_lag");
  const double mean = std::accumulate(series.begin(), series.end(), 0.0) / static_cast<double>(n);
  double denom = 0.0;
  for (double v : series) denom += (v - mean) * (v - mean);
  if (!(denom > 0.0)) fail(ErrorCode::ConstantSeries, "autocorrelation of a constant series");
  const double conf = 1.96 / std::sqrt(static_cast<double>(n));
  std::vector<CorrelogramPoint> out;
  out.reserve(max_lag + 1);
  for (std::size_t k = 0; k <= max_lag; ++k) {
    double s = 0.0;
    for (std::size_t t = 0; t + k < n; ++t) s += (series[t] - mean) * (series[t + k] - mean);
    out.push_back({k, k == 0 ? 1.0 : s / denom, conf});
  }
  return out;
}

/// Partial autocorrelations for lags 1..max_lag by Durbin-Levinson.
inline std::vector<CorrelogramPoint> pacf(std::span<const double> series, std::size_t max_lag) {
  const auto r = acf(series, max_lag);
  std::vector<CorrelogramPoint> out;
  Vector phi, prev;
  for (std::size_t k = 1; k <= max_lag; ++k) {
    double num = r[k].value, den = 1.0;
    for (std::size_t j = 1; j < k; ++j) {
      num -= prev[j - 1] * r[k - j].value;
      den -= prev[j - 1] * r[j].value;
    }
    if (!(den > 0.0)) fail(ErrorCode::NumericalBreakdown, "Durbin-Levinson denominator <= 0 at lag " + std::to_string(k));
    const double phi_kk = num / den;
    phi.assign(k, 0.0);
    for (std::size_t j = 1; j < k; ++j) phi[j - 1] = prev[j - 1] - phi_kk * prev[k - j - 1];
    phi[k - 1] = phi_kk;
    prev = phi;
    out.push_back({k, phi_kk, r[k].conf_limit});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Estimation

struct ArmaParams {
  Vector phi;
  Vector theta;
  double drift = 0.0;  // mean of the differenced series
};

namespace detail {

/// Ordinary least squares via the normal equations.
inline Vector least_squares(const Matrix& x, std::span<const double> y) {
  try {
    return cholesky_solve(gram(x), transpose_matvec(x, y));
  } catch (const Error& e) {
    if (e.code() != ErrorCode::NotPositiveDefinite) throw;
    fail(ErrorCode::SingularSystem, "least squares design is rank deficient");
  }
}

/// Residual recursion shared by css() and forecasting. e_t = 0 for t < p.
inline Vector css_residuals(std::span<const double> x, std::span<const double> phi, std::span<const double> theta, double drift) {
  const std::size_t n = x.size(), p = phi.size(), q = theta.size();
  Vector e(n, 0.0);
  for (std::size_t t = p; t < n; ++t) {
    double v = x[t] - drift;
    for (std::size_t i = 1; i <= p; ++i) v -= phi[i - 1] * (x[t - i] - drift);
    for (std::size_t j = 1; j <= q && j <= t; ++j) v -= theta[j - 1] * e[t - j];
    e[t] = v;
  }
  return e;
}

}  // namespace detail

/// Σ_{t≥p} e_t² with the recursion above. Overflow yields a large finite
/// value instead of inf so a simplex search is pushed away from it.
inline double css(std::span<const double> series, std::span<const double> phi, std::span<const double> theta, double drift) {
  if (series.size() <= phi.size()) fail(ErrorCode::SeriesTooShort, "series length must exceed p");
  const Vector e = detail::css_residuals(series, phi, theta, drift);
  double s = 0.0;
  for (std::size_t t = phi.size(); t < e.size(); ++t) s += e[t] * e[t];
  constexpr double large_value = 1e300;
  return std::isfinite(s) ? std::min(s, large_value) : large_value;
}

/// Two-stage regression start: a long AR gives innovation estimates, then the
/// series is regressed on its own lags and the lagged innovations.
inline ArmaParams hannan_rissanen_init(std::span<const double> series, const ArimaOrder& order) {
  const std::size_t n = series.size(), p = order.p, q = order.q;
  const double mean = std::accumulate(series.begin(), series.end(), 0.0) / static_cast<double>(std::max<std::size_t>(n, 1));
  if (p == 0 && q == 0) {
    if (n == 0) fail(ErrorCode::SeriesTooShort, "empty series");
    return {{}, {}, mean};
  }
  if (n <= 3 * (p + q) + 20) {
    fail(ErrorCode::SeriesTooShort, "need more than " + std::to_string(3 * (p + q) + 20) + " points, got " + std::to_string(n));
  }
  Vector xc(series.begin(), series.end());
  for (double& v : xc) v -= mean;

  Vector innov(n, 0.0);
  std::size_t start = p;
  if (q > 0) {
    const std::size_t m = std::min<std::size_t>(20, n / 4);
    Matrix lags(n - m, m);
    Vector target(n - m);
    for (std::size_t t = m; t < n; ++t) {
      target[t - m] = xc[t];
      for (std::size_t i = 1; i <= m; ++i) lags(t - m, i - 1) = xc[t - i];
    }
    const Vector a = detail::least_squares(lags, target);
    const Vector fit = matvec(lags, a);
    for (std::size_t t = m; t < n; ++t) innov[t] = xc[t] - fit[t - m];
    start = std::max(p, m + q);
  }

  Matrix design(n - start, p + q);
  Vector target(n - start);
  for (std::size_t t = start; t < n; ++t) {
    target[t - start] = xc[t];
    for (std::size_t i = 1; i <= p; ++i) design(t - start, i - 1) = xc[t - i];
    for (std::size_t j = 1; j <= q; ++j) design(t - start, p + j - 1) = innov[t - j];
  }
  const Vector coef = detail::least_squares(design, target);
  return {Vector(coef.begin(), coef.begin() + static_cast<std::ptrdiff_t>(p)),
          Vector(coef.begin() + static_cast<std::ptrdiff_t>(p), coef.end()), mean};
}

/// Roots of c[0] + c[1] z + ... + c[m] z^m (trailing zeros trimmed), by
/// Durand-Kerner iteration.
inline std::vector<std::complex<double>> polynomial_roots(std::span<const double> coeffs) {
  std::size_t deg = coeffs.size();
  while (deg > 0 && coeffs[deg - 1] == 0.0) --deg;
  if (deg <= 1) return {};
  const std::size_t m = deg - 1;
  const double lead = coeffs[m];
  auto eval = [&](std::complex<double> z) {
    std::complex<double> v = 0.0;
    for (std::size_t i = m + 1; i-- > 0;) v = v * z + coeffs[i] / lead;
    return v;
  };
  std::vector<std::complex<double>> roots(m);
  const std::complex<double> seed(0.4, 0.9);
  for (std::size_t i = 0; i < m; ++i) roots[i] = std::pow(seed, static_cast<double>(i));
  for (int iter = 0; iter < 1000; ++iter) {
    double change = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      std::complex<double> denom = 1.0;
      for (std::size_t j = 0; j < m; ++j)
        if (j != i) denom *= roots[i] - roots[j];
      if (std::abs(denom) == 0.0) denom = 1e-12;
      const std::complex<double> delta = eval(roots[i]) / denom;
      roots[i] -= delta;
      change = std::max(change, std::abs(delta));
    }
    if (change < 1e-14) break;
  }
  return roots;
}

/// True when every root of 1 + sign·Σ c_i z^i lies outside radius 1.001.
inline bool roots_outside_unit_circle(std::span<const double> coeffs, double sign) {
  Vector poly{1.0};
  for (double c : coeffs) poly.push_back(sign * c);
  for (const auto& r : polynomial_roots(poly))
    if (std::abs(r) <= 1.001) return false;
  return true;
}

struct ArimaModel {
  ArimaOrder order;
  Vector phi;
  Vector theta;
  double drift = 0.0;
  Vector residuals;        // length n − d − p
  double css = 0.0;
  Vector last_values;      // final d + p raw observations
  Vector last_residuals;   // final q residuals, oldest first
  bool stationary = true;  // AR roots outside 1.001; reported, never enforced
  bool invertible = true;  // MA roots outside 1.001
  double css_initial = 0.0;
  std::size_t optimizer_evals = 0;
};

struct ArimaFitOptions {
  std::size_t max_evals_per_param = 600;
  std::size_t restarts = 4;
  double initial_step = 0.1;
};

inline ArimaModel arima_fit(std::span<const double> raw, const ArimaOrder& order, const ArimaFitOptions& opts = {}) {
  order.validate();
  const std::size_t p = order.p, d = order.d, q = order.q;
  if (raw.size() <= d + 3 * (p + q) + 20) {
    fail(ErrorCode::SeriesTooShort, "ARIMA" + order.str() + " needs more than " + std::to_string(d + 3 * (p + q) + 20) +
                                        " observations, got " + std::to_string(raw.size()));
  }
  const Vector x = difference(raw, d);
  const ArmaParams start = hannan_rissanen_init(x, order);

  // Drift is searched in units of the series' spread so one simplex step size
  // suits all coordinates.
  double sd = 0.0;
  for (double v : x) sd += (v - start.drift) * (v - start.drift);
  sd = std::sqrt(sd / static_cast<double>(x.size()));
  const double drift_scale = sd > 0.0 ? sd : 1.0;

  const std::size_t dim = p + q + 1;
  auto unpack = [&](std::span<const double> v, Vector& phi, Vector& theta) {
    phi.assign(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(p));
    theta.assign(v.begin() + static_cast<std::ptrdiff_t>(p), v.begin() + static_cast<std::ptrdiff_t>(p + q));
    return v[p + q] * drift_scale;
  };
  Vector phi_buf, theta_buf;
  auto objective = [&](std::span<const double> v) {
    const double drift = unpack(v, phi_buf, theta_buf);
    return css(x, phi_buf, theta_buf, drift);
  };

  Vector x0 = start.phi;
  x0.insert(x0.end(), start.theta.begin(), start.theta.end());
  x0.push_back(start.drift / drift_scale);
  const double css0 = objective(x0);
  if (!std::isfinite(css0) || css0 >= 1e300) fail(ErrorCode::OptimizerFailed, "css is not finite at the initial point");

  SimplexOptimizerConfig cfg;
  cfg.max_evals = opts.max_evals_per_param * dim;
  cfg.initial_step = opts.initial_step;
  cfg.convergence_tol = 1e-12 * css0 + 1e-14;
  OptimizeResult best{x0, css0, 1, false};
  std::size_t evals = 0;
  // Restart from the incumbent until a restart stops improving.
  for (std::size_t round = 0; round <= opts.restarts; ++round) {
    OptimizeResult r = nelder_mead(objective, best.x_best, cfg);
    evals += r.evals;
    const bool improved = r.f_best < best.f_best - 1e-10 * best.f_best;
    if (r.f_best <= best.f_best) best = std::move(r);
    if (!improved && round > 0) break;
    cfg.initial_step = std::max(opts.initial_step * 0.25, 1e-4);
  }
  if (!std::isfinite(best.f_best) || best.f_best >= 1e300) fail(ErrorCode::OptimizerFailed, "no finite css found");

  ArimaModel m;
  m.order = order;
  m.drift = unpack(best.x_best, m.phi, m.theta);
  const Vector e = detail::css_residuals(x, m.phi, m.theta, m.drift);
  m.residuals.assign(e.begin() + static_cast<std::ptrdiff_t>(p), e.end());
  m.css = 0.0;
  for (double v : m.residuals) m.css += v * v;
  m.last_values.assign(raw.end() - static_cast<std::ptrdiff_t>(d + p), raw.end());
  m.last_residuals.assign(q, 0.0);
  for (std::size_t j = 0; j < q && j < e.size(); ++j) m.last_residuals[q - 1 - j] = e[e.size() - 1 - j];
  m.stationary = roots_outside_unit_circle(m.phi, -1.0);
  m.invertible = roots_outside_unit_circle(m.theta, 1.0);
  m.css_initial = css0;
  m.optimizer_evals = evals;
  return m;
}

/// One-step-ahead in-sample fitted values on the raw scale, aligned with
/// raw[d + p ..]: observation minus its residual.
inline Vector arima_fitted(const ArimaModel& m, std::span<const double> raw) {
  const std::size_t off = m.order.d + m.order.p;
  if (raw.size() != off + m.residuals.size()) fail(ErrorCode::DimensionMismatch, "raw series does not match the fit");
  Vector out(m.residuals.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = raw[off + i] - m.residuals[i];
  return out;
}

/// Iterated forecast: future innovations are zero, forecast differences feed
/// back as observed values, then re-integrate from the stored anchors.
inline Vector arima_forecast(const ArimaModel& m, std::size_t horizon) {
  if (horizon < 1) fail(ErrorCode::InvalidArgument, "horizon must be >= 1");
  const std::size_t p = m.order.p, d = m.order.d, q = m.order.q;
  if (m.last_values.size() < d + p || m.last_residuals.size() < q) {
    fail(ErrorCode::InsufficientAnchor, "model does not carry enough history to forecast");
  }
  Vector hist = p > 0 ? difference(m.last_values, d) : Vector{};
  Vector innov(m.last_residuals.end() - static_cast<std::ptrdiff_t>(q), m.last_residuals.end());
  Vector diffs(horizon);
  for (std::size_t h = 0; h < horizon; ++h) {
    double v = m.drift;
    for (std::size_t i = 1; i <= p; ++i) v += m.phi[i - 1] * (hist[hist.size() - i] - m.drift);
    for (std::size_t j = 1; j <= q; ++j) v += m.theta[j - 1] * innov[innov.size() - j];
    diffs[h] = v;
    hist.push_back(v);
    innov.push_back(0.0);
  }
  return undifference(diffs, m.last_values, d);
}

inline nlohmann::json to_json(const ArimaModel& m) {
  return {{"model", "arima"},
          {"order", {m.order.p, m.order.d, m.order.q}},
          {"phi", m.phi},
          {"theta", m.theta},
          {"drift", m.drift},
          {"css", m.css},
          {"anchors", {{"last_values", m.last_values}, {"last_residuals", m.last_residuals}}},
          {"stationary", m.stationary},
          {"invertible", m.invertible},
          {"estimation", "conditional sum of squares"}};
}

inline ArimaModel arima_from_json(const nlohmann::json& j) {
  try {
    ArimaModel m;
    const auto o = j.at("order").get<std::vector<std::size_t>>();
    if (o.size() != 3) fail(ErrorCode::SchemaError, "order must be [p,d,q]");
    m.order = {o[0], o[1], o[2]};
    m.order.validate();
    m.phi = j.at("phi").get<Vector>();
    m.theta = j.at("theta").get<Vector>();
    m.drift = j.at("drift").get<double>();
    m.css = j.at("css").get<double>();
    m.last_values = j.at("anchors").at("last_values").get<Vector>();
    m.last_residuals = j.at("anchors").at("last_residuals").get<Vector>();
    m.stationary = j.value("stationary", true);
    m.invertible = j.value("invertible", true);
    if (m.phi.size() != m.order.p || m.theta.size() != m.order.q) fail(ErrorCode::SchemaError, "coefficient counts do not match order");
    return m;
  } catch (const nlohmann::json::exception& ex) {
    fail(ErrorCode::SchemaError, std::string("arima model file: ") + ex.what());
  }
}

}  // namespace oilcast
