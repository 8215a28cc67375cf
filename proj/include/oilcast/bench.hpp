#pragma once

// Experiment harness: runs every (method, hyperparameter) cell of a grid on a
// train/test split, times fit+forecast, selects best cells and writes reports.

#include <atomic>
#include <chrono>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <thread>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "oilcast/arima.hpp"
#include "oilcast/dataset.hpp"
#include "oilcast/error.hpp"
#include "oilcast/evalkit.hpp"
#include "oilcast/ffnet.hpp"
#include "oilcast/ridge.hpp"

namespace oilcast {

struct NnCellSpec {
  double learning_rate = 0.0001;
  std::size_t epochs = 100;
  std::optional<std::uint64_t> seed;  // derived from the grid seed when absent
  BatchMode batch_mode = BatchMode::PerSample;
};

struct ExperimentGrid {
  std::vector<NnCellSpec> nn;
  std::vector<double> lambdas;
  std::vector<ArimaOrder> arima;
  std::size_t timing_repetitions = 25;
  std::uint64_t seed = 0;

  std::size_t cell_count() const noexcept { return nn.size() + lambdas.size() + arima.size(); }
};

/// Learning rates {0.001, 0.0001} x epochs {100, 150, 200}, six ridge
/// penalties, six ARIMA orders, 25 timing repetitions.
inline ExperimentGrid canonical_grid(std::uint64_t seed = 0) {
  ExperimentGrid g;
  for (double lr : {0.001, 0.0001})
    for (std::size_t e : {100, 150, 200}) g.nn.push_back({lr, e, std::nullopt, BatchMode::PerSample});
  g.lambdas = {0.0, 0.25, 0.5, 0.75, 0.95, 0.99};
  g.arima = canonical_arima_orders();
  g.timing_repetitions = 25;
  g.seed = seed;
  return g;
}

inline ExperimentGrid grid_from_json(const nlohmann::json& j) {
  try {
    ExperimentGrid g;
    for (const auto& e : j.value("nn", nlohmann::json::array())) {
      NnCellSpec s;
      s.learning_rate = e.at("learning_rate").get<double>();
      s.epochs = e.at("epochs").get<std::size_t>();
      if (e.contains("seed")) s.seed = e.at("seed").get<std::uint64_t>();
      if (e.contains("batch_mode")) s.batch_mode = parse_batch_mode(e.at("batch_mode").get<std::string>());
      g.nn.push_back(s);
    }
    g.lambdas = j.value("lambdas", std::vector<double>{});
    for (const auto& o : j.value("arima", nlohmann::json::array())) {
      const auto v = o.get<std::vector<std::size_t>>();
      if (v.size() != 3) fail(ErrorCode::SchemaError, "arima orders are [p,d,q] triples");
      g.arima.push_back({v[0], v[1], v[2]});
    }
    g.timing_repetitions = j.value("timing_repetitions", std::size_t{25});
    g.seed = j.value("seed", std::uint64_t{0});
    if (g.timing_repetitions < 1) fail(ErrorCode::SchemaError, "timing_repetitions must be >= 1");
    if (g.cell_count() == 0) fail(ErrorCode::SchemaError, "grid has no cells");
    return g;
  } catch (const nlohmann::json::exception& ex) {
    fail(ErrorCode::SchemaError, std::string("grid spec: ") + ex.what());
  }
}

inline nlohmann::json to_json(const ExperimentGrid& g) {
  nlohmann::json nn = nlohmann::json::array();
  for (const auto& s : g.nn) {
    nlohmann::json e = {{"learning_rate", s.learning_rate}, {"epochs", s.epochs}, {"batch_mode", std::string(to_string(s.batch_mode))}};
    if (s.seed) e["seed"] = *s.seed;
    nn.push_back(e);
  }
  nlohmann::json ar = nlohmann::json::array();
  for (const auto& o : g.arima) ar.push_back({o.p, o.d, o.q});
  return {{"nn", nn}, {"lambdas", g.lambdas}, {"arima", ar}, {"timing_repetitions", g.timing_repetitions}, {"seed", g.seed}};
}

enum class Method { NN, Ridge, Arima };

inline std::string_view to_string(Method m) noexcept {
  switch (m) {
    case Method::NN: return "nn";
    case Method::Ridge: return "ridge";
    case Method::Arima: return "arima";
  }
  return "?";
}

struct GridCell {
  std::size_t ordinal = 0;
  Method method = Method::NN;
  std::string params;
  bool ok = false;
  std::string error;
  EvalReport in_sample;
  EvalReport out_sample;
  std::optional<GeneralizationScore> generalization;
  double mean_runtime_s = 0.0;
  Vector fitted;    // train length; NaN where the method has no fitted value
  Vector forecast;  // test length
  std::optional<double> final_train_mse;  // NN only: last loss-history entry
};

struct GridResult {
  std::vector<GridCell> cells;
  std::vector<MonthStamp> train_dates, test_dates;
  Vector train_actual, test_actual;
  std::vector<std::string> names;
  std::optional<Matrix> correlation;  // in-sample, all columns
};

struct GridOptions {
  std::size_t threads = 0;  // 0 = hardware concurrency
};

/// OILCAST_THREADS, 0 or unset meaning automatic.
inline std::size_t threads_from_env() {
  const char* v = std::getenv("OILCAST_THREADS");
  if (!v || !*v) return 0;
  char* end = nullptr;
  const unsigned long n = std::strtoul(v, &end, 10);
  return (end && *end == '\0') ? static_cast<std::size_t>(n) : 0;
}

namespace detail {

struct CellPlan {
  Method method;
  std::string params;
  std::variant<FFNetConfig, double, ArimaOrder> spec;
};

inline std::string fmt_num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

inline std::vector<CellPlan> plan_cells(const ExperimentGrid& grid, std::size_t input_dim) {
  std::vector<CellPlan> plan;
  std::size_t ordinal = 0;
  for (const auto& s : grid.nn) {
    FFNetConfig c;
    c.input_dim = input_dim;
    c.hidden_dim = 12;
    c.learning_rate = s.learning_rate;
    c.epochs = s.epochs;
    c.alpha = 1.0;
    c.batch_mode = s.batch_mode;
    c.seed = s.seed ? *s.seed : derive_seed(grid.seed, ordinal);
    plan.push_back({Method::NN, "lr=" + fmt_num(s.learning_rate) + ";epochs=" + std::to_string(s.epochs), c});
    ++ordinal;
  }
  for (double l : grid.lambdas) {
    plan.push_back({Method::Ridge, "lambda=" + fmt_num(l), l});
    ++ordinal;
  }
  for (const auto& o : grid.arima) {
    plan.push_back({Method::Arima, "order=" + o.str(), o});
    ++ordinal;
  }
  return plan;
}

struct SplitData {
  Matrix x_train, x_test;
  Vector y_train, y_test;
  std::optional<std::string> normalization_error;
  std::size_t inputs = 0;
};

struct CellOutput {
  Vector fitted, forecast;
  std::optional<double> final_mse;
  std::size_t k = 0;
};

inline CellOutput run_cell_once(const CellPlan& plan, const SplitData& data) {
  CellOutput out;
  const std::size_t n_test = data.y_test.size();
  switch (plan.method) {
    case Method::NN: {
      if (data.normalization_error) fail(ErrorCode::ConstantColumn, *data.normalization_error);
      const auto model = train(init(std::get<FFNetConfig>(plan.spec)), data.x_train, data.y_train);
      out.fitted = predict(model, data.x_train);
      out.forecast = predict(model, data.x_test);
      out.final_mse = model.train_loss_history.back();
      out.k = data.inputs;
      break;
    }
    case Method::Ridge: {
      if (data.normalization_error) fail(ErrorCode::ConstantColumn, *data.normalization_error);
      const auto model = ridge_fit(data.x_train, data.y_train, std::get<double>(plan.spec));
      out.fitted = ridge_predict(model, data.x_train);
      out.forecast = ridge_predict(model, data.x_test);
      out.k = data.inputs;
      break;
    }
    case Method::Arima: {
      const auto order = std::get<ArimaOrder>(plan.spec);
      const auto model = arima_fit(data.y_train, order);
      const Vector fit = arima_fitted(model, data.y_train);
      out.fitted.assign(data.y_train.size(), std::numeric_limits<double>::quiet_NaN());
      std::copy(fit.begin(), fit.end(), out.fitted.end() - static_cast<std::ptrdiff_t>(fit.size()));
      out.forecast = arima_forecast(model, n_test);
      out.k = order.p + order.q;
      break;
    }
  }
  return out;
}

inline GridCell run_cell(std::size_t ordinal, const CellPlan& plan, const SplitData& data, std::size_t reps) {
  GridCell cell;
  cell.ordinal = ordinal;
  cell.method = plan.method;
  cell.params = plan.params;
  try {
    CellOutput first;
    double total = 0.0;
    for (std::size_t r = 0; r < reps; ++r) {
      const auto t0 = std::chrono::steady_clock::now();
      CellOutput o = run_cell_once(plan, data);
      total += std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      if (r == 0) first = std::move(o);
    }
    cell.mean_runtime_s = total / static_cast<double>(reps);

    Vector act_in, pred_in;
    for (std::size_t i = 0; i < first.fitted.size(); ++i) {
      if (std::isnan(first.fitted[i])) continue;
      act_in.push_back(data.y_train[i]);
      pred_in.push_back(first.fitted[i]);
    }
    cell.in_sample = evaluate(act_in, pred_in, SampleKind::InSample, first.k);
    cell.out_sample = evaluate(data.y_test, first.forecast, SampleKind::OutOfSample);
    cell.in_sample.runtime_seconds = cell.mean_runtime_s;
    if (cell.in_sample.r2 != 0.0) cell.generalization = generalization(cell.in_sample.r2, cell.out_sample.r2);
    cell.fitted = std::move(first.fitted);
    cell.forecast = std::move(first.forecast);
    cell.final_train_mse = first.final_mse;
    cell.ok = true;
  } catch (const Error& e) {
    cell.ok = false;
    cell.error = e.what();
  }
  return cell;
}

}  // namespace detail

/// Every cell is computed exactly once for its metrics and timed over
/// grid.timing_repetitions runs. Cells are independent; results are stored by
/// ordinal so the worker count never changes the output.
inline GridResult run_grid(const TimeSeriesFrame& frame, const SplitSpec& split_spec, const ExperimentGrid& grid,
                           const GridOptions& options = {}) {
  if (grid.cell_count() == 0) fail(ErrorCode::InvalidArgument, "grid has no cells");
  if (grid.timing_repetitions < 1) fail(ErrorCode::InvalidArgument, "timing_repetitions must be >= 1");
  const auto [train_frame, test_frame] = split(frame, split_spec);

  detail::SplitData data;
  data.y_train = train_frame.target();
  data.y_test = test_frame.target();
  data.inputs = frame.input_indices().size();
  try {
    const auto params = fit_normalization(train_frame);
    data.x_train = extract_xy(apply_normalization(train_frame, params)).x;
    data.x_test = extract_xy(apply_normalization(test_frame, params)).x;
  } catch (const Error& e) {
    data.normalization_error = e.what();
  }

  GridResult result;
  result.train_dates = train_frame.dates();
  result.test_dates = test_frame.dates();
  result.train_actual = data.y_train;
  result.test_actual = data.y_test;
  result.names = frame.names();
  try {
    result.correlation = correlation_matrix(train_frame);
  } catch (const Error&) {
    result.correlation.reset();
  }

  const auto plan = detail::plan_cells(grid, data.inputs);
  result.cells.resize(plan.size());
  std::size_t workers = options.threads ? options.threads : std::max(1u, std::thread::hardware_concurrency());
  workers = std::min(workers, plan.size());
  std::atomic<std::size_t> next{0};
  auto work = [&]() {
    for (std::size_t i = next++; i < plan.size(); i = next++) {
      result.cells[i] = detail::run_cell(i, plan[i], data, grid.timing_repetitions);
    }
  };
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
  }
  return result;
}

// ---------------------------------------------------------------------------
// Best-cell selection

enum class Criterion { InSampleError, OutSampleError, OutSampleR2, Generalization };

inline std::string_view to_string(Criterion c) noexcept {
  switch (c) {
    case Criterion::InSampleError: return "in_sample_error";
    case Criterion::OutSampleError: return "out_sample_error";
    case Criterion::OutSampleR2: return "out_sample_r2";
    case Criterion::Generalization: return "generalization";
  }
  return "?";
}

inline Criterion parse_criterion(std::string_view s) {
  for (auto c : {Criterion::InSampleError, Criterion::OutSampleError, Criterion::OutSampleR2, Criterion::Generalization})
    if (to_string(c) == s) return c;
  fail(ErrorCode::InvalidArgument, "unknown criterion '" + std::string(s) + "'");
}

struct BestCell {
  Method method;
  std::size_t ordinal;
  /// For the error criteria: whether ranking by MAD picks the same cell as RMSE.
  bool mad_agrees = true;
};

/// Per method, the successful cell that optimizes the criterion; ties keep the
/// earliest cell in grid order.
inline std::vector<BestCell> select_best(const GridResult& result, Criterion criterion) {
  if (result.cells.empty()) fail(ErrorCode::InvalidArgument, "empty grid result");
  std::vector<BestCell> out;
  bool any_ok = false;
  for (Method method : {Method::NN, Method::Ridge, Method::Arima}) {
    std::optional<std::size_t> best, best_mad;
    auto score = [&](const GridCell& c) -> std::optional<double> {
      switch (criterion) {
        case Criterion::InSampleError: return c.in_sample.rmse;
        case Criterion::OutSampleError: return c.out_sample.rmse;
        case Criterion::OutSampleR2: return -c.out_sample.r2;
        case Criterion::Generalization:
          if (!c.generalization) return std::nullopt;
          return -c.generalization->ratio;
      }
      return std::nullopt;
    };
    auto mad_score = [&](const GridCell& c) {
      return criterion == Criterion::InSampleError ? c.in_sample.mad : c.out_sample.mad;
    };
    for (const auto& c : result.cells) {
      if (c.method != method || !c.ok) continue;
      any_ok = true;
      const auto s = score(c);
      if (!s) continue;
      if (!best || *s < *score(result.cells[*best])) best = c.ordinal;
      if (!best_mad || mad_score(c) < mad_score(result.cells[*best_mad])) best_mad = c.ordinal;
    }
    if (!best) continue;
    const bool error_criterion = criterion == Criterion::InSampleError || criterion == Criterion::OutSampleError;
    out.push_back({method, *best, !error_criterion || best_mad == best});
  }
  if (!any_ok) fail(ErrorCode::AllCellsFailed, "no grid cell completed");
  return out;
}

// ---------------------------------------------------------------------------
// Reports

namespace detail {

inline std::string num17(double v) {
  if (std::isnan(v)) return "";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::ofstream open_out(const std::filesystem::path& p) {
  std::ofstream out(p);
  if (!out) fail(ErrorCode::IoError, "cannot write " + p.string());
  return out;
}

}  // namespace detail

inline void write_grid_csv(std::ostream& out, const GridResult& result) {
  out << "method,params,rmse_in,mad_in,r2_in,adj_r2_in,rmse_out,mad_out,r2_out,generalization,mean_runtime_s,status\n";
  for (const auto& c : result.cells) {
    out << to_string(c.method) << ',' << c.params << ',';
    if (c.ok) {
      using detail::num17;
      out << num17(c.in_sample.rmse) << ',' << num17(c.in_sample.mad) << ',' << num17(c.in_sample.r2) << ','
          << num17(c.in_sample.adjusted_r2.value_or(std::nan(""))) << ',' << num17(c.out_sample.rmse) << ','
          << num17(c.out_sample.mad) << ',' << num17(c.out_sample.r2) << ','
          << num17(c.generalization ? c.generalization->ratio : std::nan("")) << ',' << num17(c.mean_runtime_s) << ",ok\n";
    } else {
      std::string msg = c.error;
      for (char& ch : msg)
        if (ch == ',' || ch == '\n') ch = ';';
      out << ",,,,,,,,," << detail::num17(c.mean_runtime_s) << ",failed: " << msg << '\n';
    }
  }
}

inline void write_series_csv(std::ostream& out, const std::vector<MonthStamp>& dates, std::span<const double> actual,
                             std::span<const double> predicted) {
  out << "date,actual,predicted\n";
  for (std::size_t i = 0; i < dates.size(); ++i) {
    out << dates[i].str() << ',' << detail::num17(actual[i]) << ',' << detail::num17(predicted[i]) << '\n';
  }
}

/// Writes grid.csv, correlation.csv, per-criterion best-cell series,
/// dm.json (best out-of-sample NN against the other methods) and
/// manifest.json. Returns the file names written, manifest last.
inline std::vector<std::string> emit_reports(const GridResult& result, const std::filesystem::path& out_dir) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) fail(ErrorCode::IoError, "cannot create " + out_dir.string() + ": " + ec.message());
  std::vector<std::string> files;

  {
    auto out = detail::open_out(out_dir / "grid.csv");
    write_grid_csv(out, result);
    files.push_back("grid.csv");
  }
  if (result.correlation) {
    auto out = detail::open_out(out_dir / "correlation.csv");
    write_correlation_csv(out, result.names, *result.correlation);
    files.push_back("correlation.csv");
  }

  nlohmann::json best_json = nlohmann::json::object();
  bool any_ok = std::any_of(result.cells.begin(), result.cells.end(), [](const GridCell& c) { return c.ok; });
  if (any_ok) {
    for (auto crit : {Criterion::InSampleError, Criterion::OutSampleError, Criterion::OutSampleR2, Criterion::Generalization}) {
      nlohmann::json per = nlohmann::json::array();
      for (const auto& b : select_best(result, crit)) {
        const auto& cell = result.cells[b.ordinal];
        const std::string stem = "best_" + std::string(to_string(crit)) + "_" + std::string(to_string(b.method));
        {
          auto out = detail::open_out(out_dir / (stem + "_in.csv"));
          write_series_csv(out, result.train_dates, result.train_actual, cell.fitted);
        }
        {
          auto out = detail::open_out(out_dir / (stem + "_out.csv"));
          write_series_csv(out, result.test_dates, result.test_actual, cell.forecast);
        }
        files.push_back(stem + "_in.csv");
        files.push_back(stem + "_out.csv");
        per.push_back({{"method", std::string(to_string(b.method))},
                       {"params", cell.params},
                       {"ordinal", b.ordinal},
                       {"mad_agrees_with_rmse", b.mad_agrees}});
      }
      best_json[std::string(to_string(crit))] = per;
    }

    nlohmann::json dm = nlohmann::json::array();
    const auto best_out = select_best(result, Criterion::OutSampleError);
    const BestCell* nn = nullptr;
    for (const auto& b : best_out)
      if (b.method == Method::NN) nn = &b;
    if (nn) {
      const auto& a = result.cells[nn->ordinal];
      Vector ea(result.test_actual.size());
      for (std::size_t i = 0; i < ea.size(); ++i) ea[i] = result.test_actual[i] - a.forecast[i];
      for (const auto& b : best_out) {
        if (b.method == Method::NN) continue;
        const auto& other = result.cells[b.ordinal];
        Vector eb(ea.size());
        for (std::size_t i = 0; i < eb.size(); ++i) eb[i] = result.test_actual[i] - other.forecast[i];
        nlohmann::json entry = {{"a", a.params}, {"b", std::string(to_string(b.method)) + " " + other.params}};
        try {
          entry["result"] = to_json(dm_test(ea, eb, 1));
        } catch (const Error& e) {
          entry["error"] = e.what();
        }
        dm.push_back(entry);
      }
    }
    auto out = detail::open_out(out_dir / "dm.json");
    out << dm.dump(2) << '\n';
    files.push_back("dm.json");
  }

  files.push_back("manifest.json");
  nlohmann::json manifest = {{"files", files}, {"cells", result.cells.size()}, {"best", best_json}};
  auto out = detail::open_out(out_dir / "manifest.json");
  out << manifest.dump(2) << '\n';
  return files;
}

}  // namespace oilcast
