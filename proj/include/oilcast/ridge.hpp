#pragma once

// Ridge regression without an intercept, solved in closed form through the
// normal equations (XᵀX + λI)β = Xᵀy.

#include <span>
#include <string>

#include <nlohmann/json.hpp>

#include "oilcast/error.hpp"
#include "oilcast/numkit.hpp"

namespace oilcast {

struct RidgeModel {
  Vector beta;
  double lambda = 0.0;
};

inline RidgeModel ridge_fit(const Matrix& x, std::span<const double> y, double lambda) {
  if (x.rows() != y.size()) fail(ErrorCode::DimensionMismatch, "x rows != y length");
  if (x.rows() == 0) fail(ErrorCode::EmptyInput, "no rows to fit");
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) fail(ErrorCode::InvalidArgument, "lambda must be finite and >= 0");
  Matrix a = gram(x);
  for (std::size_t i = 0; i < a.rows(); ++i) a(i, i) += lambda;
  const Vector rhs = transpose_matvec(x, y);
  try {
    return {cholesky_solve(a, rhs), lambda};
  } catch (const Error& e) {
    if (e.code() != ErrorCode::NotPositiveDefinite) throw;
    fail(ErrorCode::SingularSystem, "XᵀX + λI is not positive definite at λ = " + std::to_string(lambda));
  }
}

inline Vector ridge_predict(const RidgeModel& m, const Matrix& x) {
  if (x.rows() == 0) return {};
  if (x.cols() != m.beta.size()) fail(ErrorCode::DimensionMismatch, "x cols != coefficient count");
  return matvec(x, m.beta);
}

/// Σ(yᵢ − βᵀxᵢ)² + λ‖β‖².
inline double ridge_objective(const Matrix& x, std::span<const double> y, std::span<const double> beta, double lambda) {
  if (x.rows() != y.size() || x.cols() != beta.size()) fail(ErrorCode::DimensionMismatch, "ridge objective shapes");
  const Vector fit = matvec(x, beta);
  double rss = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) rss += (y[i] - fit[i]) * (y[i] - fit[i]);
  double pen = 0.0;
  for (double b : beta) pen += b * b;
  return rss + lambda * pen;
}

/// Analytic gradient of ridge_objective: 2(Xᵀ(Xβ − y) + λβ).
inline Vector ridge_objective_gradient(const Matrix& x, std::span<const double> y, std::span<const double> beta,
                                       double lambda) {
  Vector resid = matvec(x, beta);
  for (std::size_t i = 0; i < resid.size(); ++i) resid[i] -= y[i];
  Vector g = transpose_matvec(x, resid);
  for (std::size_t j = 0; j < g.size(); ++j) g[j] = 2.0 * (g[j] + lambda * beta[j]);
  return g;
}

inline nlohmann::json to_json(const RidgeModel& m) { return {{"model", "ridge"}, {"lambda", m.lambda}, {"beta", m.beta}}; }

inline RidgeModel ridge_from_json(const nlohmann::json& j) {
  try {
    return {j.at("beta").get<Vector>(), j.at("lambda").get<double>()};
  } catch (const nlohmann::json::exception& ex) {
    fail(ErrorCode::SchemaError, std::string("ridge model file: ") + ex.what());
  }
}

}  // namespace oilcast
