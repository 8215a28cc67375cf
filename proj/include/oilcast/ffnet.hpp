#pragma once

// Fully connected regression network: input -> ELU hidden -> ELU hidden ->
// linear scalar output, trained by plain gradient descent on mean squared error.

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "oilcast/error.hpp"
#include "oilcast/numkit.hpp"

namespace oilcast {

inline double elu(double x, double alpha) noexcept { return x > 0.0 ? x : alpha * std::expm1(x); }

inline double elu_prime(double x, double alpha) noexcept { return x > 0.0 ? 1.0 : alpha * std::exp(x); }

enum class BatchMode { FullBatch, PerSample };

inline std::string_view to_string(BatchMode m) noexcept { return m == BatchMode::FullBatch ? "full_batch" : "per_sample"; }

inline BatchMode parse_batch_mode(std::string_view s) {
  if (s == "full_batch") return BatchMode::FullBatch;
  if (s == "per_sample") return BatchMode::PerSample;
  fail(ErrorCode::InvalidArgument, "batch mode must be full_batch or per_sample, got '" + std::string(s) + "'");
}

struct FFNetConfig {
  std::size_t input_dim = 12;
  std::size_t hidden_dim = 12;
  double learning_rate = 0.0001;
  std::size_t epochs = 100;
  double alpha = 1.0;
  std::uint64_t seed = 0;
  BatchMode batch_mode = BatchMode::PerSample;

  /// learning_rate = 0 is accepted so zero-step behaviour can be exercised.
  void validate() const {
    if (input_dim < 1 || hidden_dim < 1) fail(ErrorCode::InvalidArgument, "network dimensions must be >= 1");
    if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate))
      fail(ErrorCode::InvalidArgument, "learning rate must be finite and >= 0");
    if (epochs < 1) fail(ErrorCode::InvalidArgument, "epochs must be >= 1");
    if (!(alpha > 0.0)) fail(ErrorCode::InvalidArgument, "ELU alpha must be > 0");
  }

  friend bool operator==(const FFNetConfig&, const FFNetConfig&) = default;
};

/// Weights follow the column convention: layer output = Wᵀ·input + b, so
/// w1 is input_dim x hidden_dim and w3 is hidden_dim x 1.
struct FFNetModel {
  Matrix w1;
  Vector b1;
  Matrix w2;
  Vector b2;
  Matrix w3;
  double b3 = 0.0;
  FFNetConfig config;
  Vector train_loss_history;

  friend bool operator==(const FFNetModel&, const FFNetModel&) = default;
};

/// Same shapes as the trainable part of FFNetModel.
struct FFNetGradients {
  Matrix w1;
  Vector b1;
  Matrix w2;
  Vector b2;
  Matrix w3;
  double b3 = 0.0;
};

/// Uniform Glorot weights r = sqrt(6 / (fan_in + fan_out)), zero biases.
/// Draws come from one splitmix64 stream seeded with config.seed, in the order
/// w1 (row-major), w2, w3; biases consume no draws.
inline FFNetModel init(const FFNetConfig& config) {
  config.validate();
  Rng rng(config.seed);
  auto layer = [&rng](std::size_t fan_in, std::size_t fan_out) {
    const double r = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    Matrix w(fan_in, fan_out);
    for (double& v : w.data()) v = rng_next_uniform(rng, -r, r);
    return w;
  };
  FFNetModel m;
  m.config = config;
  m.w1 = layer(config.input_dim, config.hidden_dim);
  m.b1.assign(config.hidden_dim, 0.0);
  m.w2 = layer(config.hidden_dim, config.hidden_dim);
  m.b2.assign(config.hidden_dim, 0.0);
  m.w3 = layer(config.hidden_dim, 1);
  m.b3 = 0.0;
  return m;
}

struct LayerCache {
  Vector z1, a1, z2, a2;
  double y_hat = 0.0;
};

inline LayerCache forward(const FFNetModel& m, std::span<const double> x) {
  const std::size_t in = m.w1.rows(), h = m.w1.cols();
  if (x.size() != in) fail(ErrorCode::DimensionMismatch, "input length " + std::to_string(x.size()) + " != " + std::to_string(in));
  const double alpha = m.config.alpha;
  LayerCache c;
  c.z1 = m.b1;
  for (std::size_t i = 0; i < in; ++i) {
    const auto wrow = m.w1.row(i);
    for (std::size_t j = 0; j < h; ++j) c.z1[j] += wrow[j] * x[i];
  }
  c.a1.resize(h);
  for (std::size_t j = 0; j < h; ++j) c.a1[j] = elu(c.z1[j], alpha);

  const std::size_t h2 = m.w2.cols();
  c.z2 = m.b2;
  for (std::size_t i = 0; i < h; ++i) {
    const auto wrow = m.w2.row(i);
    for (std::size_t j = 0; j < h2; ++j) c.z2[j] += wrow[j] * c.a1[i];
  }
  c.a2.resize(h2);
  for (std::size_t j = 0; j < h2; ++j) c.a2[j] = elu(c.z2[j], alpha);

  c.y_hat = m.b3;
  for (std::size_t j = 0; j < h2; ++j) c.y_hat += m.w3(j, 0) * c.a2[j];
  return c;
}

inline double loss_mse(std::span<const double> y_hat, std::span<const double> y) {
  if (y_hat.size() != y.size()) fail(ErrorCode::DimensionMismatch, "prediction and target lengths differ");
  if (y.empty()) fail(ErrorCode::EmptyInput, "mse of an empty vector");
  double s = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) s += (y_hat[i] - y[i]) * (y_hat[i] - y[i]);
  return s / static_cast<double>(y.size());
}

namespace detail {

inline FFNetGradients zero_gradients(const FFNetModel& m) {
  return {Matrix(m.w1.rows(), m.w1.cols()), Vector(m.b1.size(), 0.0), Matrix(m.w2.rows(), m.w2.cols()),
          Vector(m.b2.size(), 0.0), Matrix(m.w3.rows(), 1), 0.0};
}

/// Adds scale * d(y_hat)/d(params) for one row into g.
inline void accumulate_row(const FFNetModel& m, std::span<const double> x, const LayerCache& c, double scale,
                           FFNetGradients& g) {
  const double alpha = m.config.alpha;
  const std::size_t in = m.w1.rows(), h = m.w1.cols(), h2 = m.w2.cols();
  g.b3 += scale;
  Vector dz2(h2);
  for (std::size_t j = 0; j < h2; ++j) {
    g.w3(j, 0) += scale * c.a2[j];
    dz2[j] = scale * m.w3(j, 0) * elu_prime(c.z2[j], alpha);
    g.b2[j] += dz2[j];
  }
  Vector dz1(h);
  for (std::size_t i = 0; i < h; ++i) {
    const auto wrow = m.w2.row(i);
    auto grow = g.w2.row(i);
    double da1 = 0.0;
    for (std::size_t j = 0; j < h2; ++j) {
      grow[j] += c.a1[i] * dz2[j];
      da1 += wrow[j] * dz2[j];
    }
    dz1[i] = da1 * elu_prime(c.z1[i], alpha);
    g.b1[i] += dz1[i];
  }
  for (std::size_t i = 0; i < in; ++i) {
    auto grow = g.w1.row(i);
    for (std::size_t j = 0; j < h; ++j) grow[j] += x[i] * dz1[j];
  }
}

inline void check_batch(const FFNetModel& m, const Matrix& x, std::span<const double> y) {
  if (x.rows() != y.size()) fail(ErrorCode::DimensionMismatch, "x rows != y length");
  if (x.cols() != m.w1.rows()) fail(ErrorCode::DimensionMismatch, "x cols != input_dim");
}

inline void apply_step(FFNetModel& m, const FFNetGradients& g, double lr) {
  auto step = [lr](Vector& w, const Vector& d) {
    for (std::size_t i = 0; i < w.size(); ++i) w[i] -= lr * d[i];
  };
  step(m.w1.data(), g.w1.data());
  step(m.b1, g.b1);
  step(m.w2.data(), g.w2.data());
  step(m.b2, g.b2);
  step(m.w3.data(), g.w3.data());
  m.b3 -= lr * g.b3;
}

inline bool weights_finite(const FFNetModel& m) {
  auto fin = [](const Vector& v) { return std::all_of(v.begin(), v.end(), [](double d) { return std::isfinite(d); }); };
  return m.w1.all_finite() && m.w2.all_finite() && m.w3.all_finite() && fin(m.b1) && fin(m.b2) && std::isfinite(m.b3);
}

}  // namespace detail

/// Exact gradient of mean((y_hat - y)^2) over the batch. Rows are reduced in
/// index order.
inline FFNetGradients gradients(const FFNetModel& m, const Matrix& x, std::span<const double> y) {
  detail::check_batch(m, x, y);
  FFNetGradients g = detail::zero_gradients(m);
  if (x.rows() == 0) return g;
  const double inv_n = 1.0 / static_cast<double>(x.rows());
  for (std::size_t r = 0; r < x.rows(); ++r) {
    const auto c = forward(m, x.row(r));
    detail::accumulate_row(m, x.row(r), c, 2.0 * (c.y_hat - y[r]) * inv_n, g);
  }
  return g;
}

inline Vector predict(const FFNetModel& m, const Matrix& x) {
  if (x.cols() != m.w1.rows() && x.rows() > 0) fail(ErrorCode::DimensionMismatch, "x cols != input_dim");
  Vector out(x.rows());
  for (std::size_t r = 0; r < x.rows(); ++r) out[r] = forward(m, x.row(r)).y_hat;
  return out;
}

/// Runs config.epochs passes. In per_sample mode each row, in frame order, gets
/// its own step; in full_batch mode each epoch is one step on the mean loss.
/// The loss recorded per epoch is the MSE of the post-epoch weights over all rows.
inline FFNetModel train(FFNetModel model, const Matrix& x, std::span<const double> y) {
  model.config.validate();
  detail::check_batch(model, x, y);
  if (x.rows() == 0) fail(ErrorCode::EmptyInput, "no training rows");
  const double lr = model.config.learning_rate;
  model.train_loss_history.clear();
  model.train_loss_history.reserve(model.config.epochs);
  for (std::size_t epoch = 0; epoch < model.config.epochs; ++epoch) {
    if (model.config.batch_mode == BatchMode::FullBatch) {
      detail::apply_step(model, gradients(model, x, y), lr);
    } else {
      for (std::size_t r = 0; r < x.rows(); ++r) {
        FFNetGradients g = detail::zero_gradients(model);
        const auto c = forward(model, x.row(r));
        detail::accumulate_row(model, x.row(r), c, 2.0 * (c.y_hat - y[r]), g);
        detail::apply_step(model, g, lr);
      }
    }
    const double loss = loss_mse(predict(model, x), y);
    if (!detail::weights_finite(model) || !std::isfinite(loss)) {
      fail(ErrorCode::DivergedToNonFinite, "non-finite weights or loss after epoch " + std::to_string(epoch + 1) +
                                               " (learning rate " + std::to_string(lr) + " too high for the target scale)");
    }
    model.train_loss_history.push_back(loss);
  }
  return model;
}

// ---------------------------------------------------------------------------
// Flat parameter views: w1, b1, w2, b2, w3, b3.

inline Vector flatten_params(const FFNetModel& m) {
  Vector v;
  v.insert(v.end(), m.w1.data().begin(), m.w1.data().end());
  v.insert(v.end(), m.b1.begin(), m.b1.end());
  v.insert(v.end(), m.w2.data().begin(), m.w2.data().end());
  v.insert(v.end(), m.b2.begin(), m.b2.end());
  v.insert(v.end(), m.w3.data().begin(), m.w3.data().end());
  v.push_back(m.b3);
  return v;
}

inline Vector flatten_gradients(const FFNetGradients& g) {
  Vector v;
  v.insert(v.end(), g.w1.data().begin(), g.w1.data().end());
  v.insert(v.end(), g.b1.begin(), g.b1.end());
  v.insert(v.end(), g.w2.data().begin(), g.w2.data().end());
  v.insert(v.end(), g.b2.begin(), g.b2.end());
  v.insert(v.end(), g.w3.data().begin(), g.w3.data().end());
  v.push_back(g.b3);
  return v;
}

inline FFNetModel with_params(FFNetModel m, std::span<const double> p) {
  std::size_t at = 0;
  auto take = [&](std::span<double> dst) {
    if (at + dst.size() > p.size()) fail(ErrorCode::DimensionMismatch, "parameter vector too short");
    std::copy(p.begin() + at, p.begin() + at + dst.size(), dst.begin());
    at += dst.size();
  };
  take(m.w1.data());
  take(m.b1);
  take(m.w2.data());
  take(m.b2);
  take(m.w3.data());
  take(std::span<double>(&m.b3, 1));
  if (at != p.size()) fail(ErrorCode::DimensionMismatch, "parameter vector too long");
  return m;
}

// ---------------------------------------------------------------------------
// JSON model file

namespace detail {
inline nlohmann::json matrix_json(const Matrix& m) { return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", m.data()}}; }
inline Matrix matrix_from_json(const nlohmann::json& j) {
  return Matrix(j.at("rows").get<std::size_t>(), j.at("cols").get<std::size_t>(), j.at("data").get<Vector>());
}
}  // namespace detail

inline nlohmann::json to_json(const FFNetModel& m) {
  const auto& c = m.config;
  return {{"model", "nn"},
          {"config",
           {{"input_dim", c.input_dim},
            {"hidden_dim", c.hidden_dim},
            {"learning_rate", c.learning_rate},
            {"epochs", c.epochs},
            {"alpha", c.alpha},
            {"seed", c.seed},
            {"batch_mode", std::string(to_string(c.batch_mode))}}},
          {"w1", detail::matrix_json(m.w1)},
          {"b1", m.b1},
          {"w2", detail::matrix_json(m.w2)},
          {"b2", m.b2},
          {"w3", detail::matrix_json(m.w3)},
          {"b3", m.b3},
          {"train_loss_history", m.train_loss_history}};
}

inline FFNetModel ffnet_from_json(const nlohmann::json& j) {
  try {
    FFNetModel m;
    const auto& c = j.at("config");
    m.config.input_dim = c.at("input_dim").get<std::size_t>();
    m.config.hidden_dim = c.at("hidden_dim").get<std::size_t>();
    m.config.learning_rate = c.at("learning_rate").get<double>();
    m.config.epochs = c.at("epochs").get<std::size_t>();
    m.config.alpha = c.at("alpha").get<double>();
    m.config.seed = c.at("seed").get<std::uint64_t>();
    m.config.batch_mode = parse_batch_mode(c.at("batch_mode").get<std::string>());
    m.w1 = detail::matrix_from_json(j.at("w1"));
    m.b1 = j.at("b1").get<Vector>();
    m.w2 = detail::matrix_from_json(j.at("w2"));
    m.b2 = j.at("b2").get<Vector>();
    m.w3 = detail::matrix_from_json(j.at("w3"));
    m.b3 = j.at("b3").get<double>();
    m.train_loss_history = j.value("train_loss_history", Vector{});
    const std::size_t in = m.config.input_dim, h = m.config.hidden_dim;
    if (m.w1.rows() != in || m.w1.cols() != h || m.b1.size() != h || m.w2.rows() != h || m.w2.cols() != h ||
        m.b2.size() != h || m.w3.rows() != h || m.w3.cols() != 1) {
      fail(ErrorCode::DimensionMismatch, "model file weight shapes do not match its config");
    }
    return m;
  } catch (const nlohmann::json::exception& ex) {
    fail(ErrorCode::SchemaError, std::string("nn model file: ") + ex.what());
  }
}

}  // namespace oilcast
