#pragma once

// Dense double-precision matrix, SPD solves, splitmix64 PRNG, Nelder-Mead and
// central finite differences. Everything the model modules build on.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "oilcast/error.hpp"

namespace oilcast {

using Vector = std::vector<double>;

/// Row-major dense matrix of doubles.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  Matrix(std::size_t rows, std::size_t cols, Vector data) : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows_ * cols_) {
      fail(ErrorCode::DimensionMismatch, "data length " + std::to_string(data_.size()) + " != " +
                                             std::to_string(rows_) + "x" + std::to_string(cols_));
    }
  }
  Matrix(std::initializer_list<std::initializer_list<double>> rows) : rows_(rows.size()) {
    cols_ = rows_ == 0 ? 0 : rows.begin()->size();
    data_.reserve(rows_ * cols_);
    for (const auto& r : rows) {
      if (r.size() != cols_) fail(ErrorCode::DimensionMismatch, "ragged initializer");
      data_.insert(data_.end(), r.begin(), r.end());
    }
  }

  static Matrix identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }

  static Matrix column(std::span<const double> v) { return Matrix(v.size(), 1, Vector(v.begin(), v.end())); }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  bool empty() const noexcept { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) noexcept { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const noexcept { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) noexcept { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const noexcept { return {data_.data() + r * cols_, cols_}; }

  Vector col(std::size_t c) const {
    Vector out(rows_);
    for (std::size_t r = 0; r < rows_; ++r) out[r] = (*this)(r, c);
    return out;
  }

  const Vector& data() const noexcept { return data_; }
  Vector& data() noexcept { return data_; }

  Matrix transpose() const {
    Matrix t(cols_, rows_);
    for (std::size_t r = 0; r < rows_; ++r)
      for (std::size_t c = 0; c < cols_; ++c) t(c, r) = (*this)(r, c);
    return t;
  }

  bool all_finite() const noexcept {
    return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
  }

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  Vector data_;
};

inline Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) {
    fail(ErrorCode::DimensionMismatch, "matmul " + std::to_string(a.rows()) + "x" + std::to_string(a.cols()) +
                                           " by " + std::to_string(b.rows()) + "x" + std::to_string(b.cols()));
  }
  Matrix out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      for (std::size_t j = 0; j < b.cols(); ++j) out(i, j) += aik * b(k, j);
    }
  }
  return out;
}

/// a * v for a column vector v.
inline Vector matvec(const Matrix& a, std::span<const double> v) {
  if (a.cols() != v.size()) fail(ErrorCode::DimensionMismatch, "matvec: cols != vector length");
  Vector out(a.rows(), 0.0);
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const auto r = a.row(i);
    double s = 0.0;
    for (std::size_t j = 0; j < r.size(); ++j) s += r[j] * v[j];
    out[i] = s;
  }
  return out;
}

/// aᵀa, computed without forming the transpose.
inline Matrix gram(const Matrix& a) {
  const std::size_t k = a.cols();
  Matrix g(k, k);
  for (std::size_t r = 0; r < a.rows(); ++r) {
    const auto row = a.row(r);
    for (std::size_t i = 0; i < k; ++i) {
      if (row[i] == 0.0) continue;
      for (std::size_t j = i; j < k; ++j) g(i, j) += row[i] * row[j];
    }
  }
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = 0; j < i; ++j) g(i, j) = g(j, i);
  return g;
}

/// aᵀv.
inline Vector transpose_matvec(const Matrix& a, std::span<const double> v) {
  if (a.rows() != v.size()) fail(ErrorCode::DimensionMismatch, "transpose_matvec: rows != vector length");
  Vector out(a.cols(), 0.0);
  for (std::size_t r = 0; r < a.rows(); ++r) {
    const auto row = a.row(r);
    for (std::size_t j = 0; j < row.size(); ++j) out[j] += row[j] * v[r];
  }
  return out;
}

inline double max_abs(std::span<const double> v) noexcept {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

/// Lower-triangular Cholesky factor of a symmetric positive definite matrix.
/// Throws NotPositiveDefinite on the first pivot that is not strictly positive.
inline Matrix cholesky_factor(const Matrix& a) {
  if (a.rows() != a.cols()) fail(ErrorCode::DimensionMismatch, "cholesky: matrix is not square");
  const std::size_t n = a.rows();
  const double scale = std::max(1.0, max_abs(a.data()));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < i; ++j) {
      if (std::abs(a(i, j) - a(j, i)) > 1e-10 * scale) {
        fail(ErrorCode::NotPositiveDefinite,
             "matrix is not symmetric at (" + std::to_string(i) + "," + std::to_string(j) + ")");
      }
    }
  }
  Matrix l(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    double diag = a(j, j);
    for (std::size_t k = 0; k < j; ++k) diag -= l(j, k) * l(j, k);
    // A pivot that is tiny relative to the original diagonal is a rank
    // deficiency drowned in rounding noise.
    if (!(diag > 1e-13 * std::max(std::abs(a(j, j)), 1e-300))) {
      fail(ErrorCode::NotPositiveDefinite, "pivot " + std::to_string(j) + " is not positive");
    }
    const double ljj = std::sqrt(diag);
    l(j, j) = ljj;
    for (std::size_t i = j + 1; i < n; ++i) {
      double s = a(i, j);
      for (std::size_t k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
      l(i, j) = s / ljj;
    }
  }
  return l;
}

/// Solves a·x = b for SPD a. b may carry several right-hand sides.
inline Matrix cholesky_solve(const Matrix& a, const Matrix& b) {
  if (a.rows() != a.cols() || b.rows() != a.rows()) {
    fail(ErrorCode::DimensionMismatch, "cholesky_solve: a must be square with a.rows == b.rows");
  }
  const Matrix l = cholesky_factor(a);
  const std::size_t n = a.rows();
  Matrix x = b;
  for (std::size_t c = 0; c < b.cols(); ++c) {
    // forward: L z = b
    for (std::size_t i = 0; i < n; ++i) {
      double s = x(i, c);
      for (std::size_t k = 0; k < i; ++k) s -= l(i, k) * x(k, c);
      x(i, c) = s / l(i, i);
    }
    // backward: Lᵀ x = z
    for (std::size_t ii = n; ii-- > 0;) {
      double s = x(ii, c);
      for (std::size_t k = ii + 1; k < n; ++k) s -= l(k, ii) * x(k, c);
      x(ii, c) = s / l(ii, ii);
    }
  }
  return x;
}

inline Vector cholesky_solve(const Matrix& a, std::span<const double> b) {
  return cholesky_solve(a, Matrix::column(b)).data();
}

// ---------------------------------------------------------------------------
// PRNG

/// splitmix64. The state advances by the golden-ratio increment and each
/// output is the mixed state, so seed s yields the same stream everywhere.
struct Rng {
  std::uint64_t state = 0;

  explicit Rng(std::uint64_t seed = 0) noexcept : state(seed) {}

  std::uint64_t next_u64() noexcept {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  /// Top 53 bits over 2^53: uniform on [0, 1).
  double next_unit() noexcept { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }
};

inline double rng_next_uniform(Rng& rng, double lo, double hi) {
  if (!(lo < hi)) fail(ErrorCode::InvalidRange, "uniform range requires lo < hi");
  const double v = lo + (hi - lo) * rng.next_unit();
  // Affine scaling can round up onto hi.
  return v < hi ? v : std::nextafter(hi, lo);
}

/// Standard normal via Box-Muller; consumes two uniforms per call.
inline double rng_next_normal(Rng& rng) {
  const double u1 = 1.0 - rng.next_unit();  // (0, 1]
  const double u2 = rng.next_unit();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
}

/// The ordinal-th output (0-based) of the splitmix64 stream seeded with base,
/// without generating the ones before it.
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t ordinal) noexcept {
  Rng rng(base + ordinal * 0x9E3779B97F4A7C15ULL);
  return rng.next_u64();
}

// ---------------------------------------------------------------------------
// Derivative-free minimization

struct SimplexOptimizerConfig {
  std::size_t max_evals = 2000;
  double convergence_tol = 1e-10;  // spread of objective values across the simplex
  double initial_step = 0.1;
};

struct OptimizeResult {
  Vector x_best;
  double f_best = 0.0;
  std::size_t evals = 0;
  bool converged = false;  // stopped by the spread criterion rather than max_evals
};

/// Nelder-Mead with standard coefficients (reflect 1, expand 2, contract 1/2,
/// shrink 1/2). Non-finite objective values away from x0 rank as +inf.
template <class Objective>
OptimizeResult nelder_mead(Objective&& objective, Vector x0, const SimplexOptimizerConfig& cfg) {
  if (cfg.max_evals < 1 || !(cfg.convergence_tol > 0.0) || !(cfg.initial_step > 0.0)) {
    fail(ErrorCode::InvalidArgument, "simplex config requires max_evals >= 1, tol > 0, step > 0");
  }
  const std::size_t n = x0.size();
  std::size_t evals = 0;
  auto eval = [&](const Vector& x) {
    ++evals;
    const double f = objective(std::span<const double>(x));
    return std::isfinite(f) ? f : std::numeric_limits<double>::infinity();
  };

  const double f0 = objective(std::span<const double>(x0));
  ++evals;
  if (!std::isfinite(f0)) fail(ErrorCode::NonFiniteObjective, "objective is not finite at x0");
  if (n == 0) return {x0, f0, evals, true};

  std::vector<Vector> simplex{x0};
  Vector fvals{f0};
  for (std::size_t i = 0; i < n && evals < cfg.max_evals; ++i) {
    Vector v = x0;
    v[i] += cfg.initial_step;
    fvals.push_back(eval(v));
    simplex.push_back(std::move(v));
  }
  if (simplex.size() < n + 1) {
    const auto best = std::min_element(fvals.begin(), fvals.end()) - fvals.begin();
    return {simplex[best], fvals[best], evals, false};
  }

  std::vector<std::size_t> order(n + 1);
  Vector centroid(n), trial(n), trial2(n);
  bool converged = false;
  for (;;) {
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return fvals[a] < fvals[b]; });
    const std::size_t best = order.front();
    const std::size_t worst = order.back();
    const std::size_t second_worst = order[n - 1];
    if (fvals[worst] - fvals[best] < cfg.convergence_tol) {
      converged = true;
      break;
    }
    if (evals >= cfg.max_evals) break;

    std::fill(centroid.begin(), centroid.end(), 0.0);
    for (std::size_t k = 0; k < n; ++k) {
      const auto& v = simplex[order[k]];
      for (std::size_t i = 0; i < n; ++i) centroid[i] += v[i];
    }
    for (double& c : centroid) c /= static_cast<double>(n);

    const auto& xw = simplex[worst];
    for (std::size_t i = 0; i < n; ++i) trial[i] = centroid[i] + (centroid[i] - xw[i]);
    const double fr = eval(trial);

    if (fr < fvals[best]) {
      for (std::size_t i = 0; i < n; ++i) trial2[i] = centroid[i] + 2.0 * (centroid[i] - xw[i]);
      const double fe = evals < cfg.max_evals ? eval(trial2) : std::numeric_limits<double>::infinity();
      if (fe < fr) {
        simplex[worst] = trial2;
        fvals[worst] = fe;
      } else {
        simplex[worst] = trial;
        fvals[worst] = fr;
      }
      continue;
    }
    if (fr < fvals[second_worst]) {
      simplex[worst] = trial;
      fvals[worst] = fr;
      continue;
    }
    if (evals >= cfg.max_evals) break;
    // contraction, outside when the reflection beat the worst point
    const bool outside = fr < fvals[worst];
    for (std::size_t i = 0; i < n; ++i) {
      trial2[i] = outside ? centroid[i] + 0.5 * (trial[i] - centroid[i]) : centroid[i] + 0.5 * (xw[i] - centroid[i]);
    }
    const double fc = eval(trial2);
    if (fc < (outside ? fr : fvals[worst])) {
      simplex[worst] = trial2;
      fvals[worst] = fc;
      continue;
    }
    // shrink toward the best vertex
    const Vector xb = simplex[best];
    for (std::size_t k = 0; k <= n; ++k) {
      if (k == best) continue;
      if (evals >= cfg.max_evals) break;
      for (std::size_t i = 0; i < n; ++i) simplex[k][i] = xb[i] + 0.5 * (simplex[k][i] - xb[i]);
      fvals[k] = eval(simplex[k]);
    }
  }
  const auto best = static_cast<std::size_t>(std::min_element(fvals.begin(), fvals.end()) - fvals.begin());
  return {simplex[best], fvals[best], evals, converged};
}

// ---------------------------------------------------------------------------

/// Central differences (f(x + h e_i) - f(x - h e_i)) / 2h per coordinate.
template <class Objective>
Vector finite_diff_gradient(Objective&& objective, std::span<const double> x, double step) {
  if (!(step > 0.0)) fail(ErrorCode::InvalidArgument, "finite difference step must be positive");
  Vector probe(x.begin(), x.end());
  Vector grad(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double orig = probe[i];
    probe[i] = orig + step;
    const double fp = objective(std::span<const double>(probe));
    probe[i] = orig - step;
    const double fm = objective(std::span<const double>(probe));
    probe[i] = orig;
    if (!std::isfinite(fp) || !std::isfinite(fm)) {
      fail(ErrorCode::NonFiniteObjective, "objective not finite near coordinate " + std::to_string(i));
    }
    grad[i] = (fp - fm) / (2.0 * step);
  }
  return grad;
}

}  // namespace oilcast
