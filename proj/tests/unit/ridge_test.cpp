#include "oilcast/ridge.hpp"

#include <gtest/gtest.h>

#include <cmath>

namespace oilcast {
namespace {

struct Problem {
  Matrix x;
  Vector y;
};

Problem random_problem(Rng& rng, std::size_t n, std::size_t k) {
  Problem p{Matrix(n, k), Vector(n)};
  for (double& v : p.x.data()) v = rng_next_uniform(rng, -1.0, 1.0);
  for (double& v : p.y) v = rng_next_uniform(rng, -2.0, 2.0);
  return p;
}

double norm2(const Vector& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

TEST(RidgeFit, IdentityDesign) {
  const auto m = ridge_fit(Matrix::identity(2), Vector{2, 3}, 0.0);
  EXPECT_EQ(m.beta, (Vector{2, 3}));
  const auto m1 = ridge_fit(Matrix::identity(2), Vector{2, 3}, 1.0);
  EXPECT_DOUBLE_EQ(m1.beta[0], 1.0);
  EXPECT_DOUBLE_EQ(m1.beta[1], 1.5);
}

TEST(RidgeFit, DuplicatedColumnIsSingular) {
  const Matrix x{{1, 1}, {2, 2}, {3, 3}};
  try {
    ridge_fit(x, Vector{1, 2, 3}, 0.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::SingularSystem);
  }
  // any positive λ repairs it
  EXPECT_NO_THROW(ridge_fit(x, Vector{1, 2, 3}, 0.25));
}

TEST(RidgeFit, DimensionMismatch) {
  EXPECT_THROW(ridge_fit(Matrix(3, 2), Vector{1, 2}, 0.0), Error);
  EXPECT_THROW(ridge_fit(Matrix::identity(2), Vector{1, 2}, -1.0), Error);
}

TEST(RidgePredict, Examples) {
  EXPECT_EQ(ridge_predict({Vector{0, 0}, 0.0}, Matrix{{1, 2}, {3, 4}}), (Vector{0, 0}));
  EXPECT_EQ(ridge_predict({Vector{1}, 0.0}, Matrix{{5}, {7}}), (Vector{5, 7}));
  const auto m = ridge_fit(Matrix::identity(2), Vector{2, 3}, 0.0);
  EXPECT_EQ(ridge_predict(m, Matrix::identity(2)), (Vector{2, 3}));
  EXPECT_THROW(ridge_predict(m, Matrix(2, 3)), Error);
}

TEST(RidgeObjective, Examples) {
  EXPECT_EQ(ridge_objective(Matrix::identity(2), Vector{2, 3}, Vector{2, 3}, 0.0), 0.0);
  EXPECT_EQ(ridge_objective(Matrix::identity(2), Vector{2, 3}, Vector{0, 0}, 5.0), 13.0);
  EXPECT_DOUBLE_EQ(ridge_objective(Matrix::identity(2), Vector{2, 3}, Vector{1, 1.5}, 1.0), 6.5);
}

TEST(RidgeFit, ClosedFormIsStationaryPoint) {
  Rng rng(31);
  for (int trial = 0; trial < 20; ++trial) {
    const auto p = random_problem(rng, 20, 5);
    for (double lambda : {0.0, 0.25, 0.5, 0.75, 0.95, 0.99}) {
      const auto m = ridge_fit(p.x, p.y, lambda);
      const Vector g = finite_diff_gradient(
          [&](std::span<const double> b) { return ridge_objective(p.x, p.y, b, lambda); }, m.beta, 1e-6);
      for (double v : g) EXPECT_LT(std::abs(v), 1e-8);
      for (double v : ridge_objective_gradient(p.x, p.y, m.beta, lambda)) EXPECT_LT(std::abs(v), 1e-12);
    }
  }
}

TEST(RidgeFit, ShrinkageMonotoneAndBounded) {
  Rng rng(32);
  for (int trial = 0; trial < 10; ++trial) {
    const auto p = random_problem(rng, 25, 6);
    double prev = std::numeric_limits<double>::infinity();
    const double xty = max_abs(transpose_matvec(p.x, p.y));
    for (double lambda : {0.0, 0.1, 0.5, 1.0, 5.0, 50.0, 1e3, 1e6}) {
      const auto m = ridge_fit(p.x, p.y, lambda);
      const double n = norm2(m.beta);
      EXPECT_LE(n, prev + 1e-12);
      prev = n;
      if (lambda > 0) EXPECT_LE(max_abs(m.beta), xty / lambda + 1e-12);
    }
  }
}

TEST(RidgeFit, LambdaZeroIsOls) {
  // OLS via the normal equations solved by Gaussian elimination with partial pivoting.
  Rng rng(33);
  for (int trial = 0; trial < 10; ++trial) {
    const auto p = random_problem(rng, 30, 4);
    Matrix a = gram(p.x);
    Vector b = transpose_matvec(p.x, p.y);
    const std::size_t k = 4;
    for (std::size_t c = 0; c < k; ++c) {
      std::size_t piv = c;
      for (std::size_t r = c + 1; r < k; ++r)
        if (std::abs(a(r, c)) > std::abs(a(piv, c))) piv = r;
      for (std::size_t j = 0; j < k; ++j) std::swap(a(c, j), a(piv, j));
      std::swap(b[c], b[piv]);
      for (std::size_t r = c + 1; r < k; ++r) {
        const double f = a(r, c) / a(c, c);
        for (std::size_t j = c; j < k; ++j) a(r, j) -= f * a(c, j);
        b[r] -= f * b[c];
      }
    }
    Vector ols(k);
    for (std::size_t r = k; r-- > 0;) {
      double s = b[r];
      for (std::size_t j = r + 1; j < k; ++j) s -= a(r, j) * ols[j];
      ols[r] = s / a(r, r);
    }
    const auto m = ridge_fit(p.x, p.y, 0.0);
    for (std::size_t j = 0; j < k; ++j) EXPECT_NEAR(m.beta[j], ols[j], 1e-10);
  }
}

TEST(ModelFile, RoundTrip) {
  const RidgeModel m{{0.1, -2.5, 1e-17}, 0.75};
  const auto back = ridge_from_json(nlohmann::json::parse(to_json(m).dump()));
  EXPECT_EQ(back.beta, m.beta);
  EXPECT_EQ(back.lambda, m.lambda);
}

}  // namespace
}  // namespace oilcast
