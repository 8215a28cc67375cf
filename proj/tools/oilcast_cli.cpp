// oilcast command-line front end.
//
// Exit codes: 0 success, 1 domain error, 2 usage error.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "oilcast/oilcast.hpp"

namespace {

using namespace oilcast;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DataArgs {
  std::string data;
  std::string schema;
  std::string test_start;
};

void add_data_args(CLI::App* cmd, DataArgs& a, bool required = true) {
  auto* opt = cmd->add_option("--data", a.data, "Monthly CSV: date,<var1>,...,<varK>");
  if (required) opt->required();
  cmd->add_option("--schema", a.schema, "Schema JSON; without it the last column is the target");
}

TimeSeriesFrame load_frame(const DataArgs& a) {
  std::optional<Schema> schema;
  if (!a.schema.empty()) schema = load_schema(a.schema);
  return load_csv(a.data, schema);
}

/// Rows before --test-start when given, otherwise the whole frame.
TimeSeriesFrame train_part(const TimeSeriesFrame& frame, const std::string& test_start) {
  if (test_start.empty()) return frame;
  return split(frame, {month_or_throw(test_start)}).first;
}

/// Writes to path, or stdout when path is empty.
template <class F>
void with_output(const std::string& path, F&& write) {
  if (path.empty()) {
    write(std::cout);
    return;
  }
  std::ofstream out(path);
  if (!out) fail(ErrorCode::IoError, "cannot write " + path);
  write(out);
}

/// One number per line; the last comma-separated field of each line is used
/// and a non-numeric first line is treated as a header.
Vector read_numbers(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::IoError, "cannot open " + path);
  Vector out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto field = detail::trim(line);
    if (field.empty()) continue;
    if (const auto pos = field.rfind(','); pos != std::string_view::npos) field = detail::trim(field.substr(pos + 1));
    const auto v = detail::parse_double(field);
    if (!v) {
      if (lineno == 1) continue;
      fail(ErrorCode::UnparseableCell, path + " line " + std::to_string(lineno));
    }
    out.push_back(*v);
  }
  return out;
}

ArimaOrder parse_order(const std::string& s) {
  ArimaOrder o;
  char c1 = 0, c2 = 0;
  std::istringstream in(s);
  if (!(in >> o.p >> c1 >> o.d >> c2 >> o.q) || c1 != ',' || c2 != ',') throw UsageError("--order expects p,d,q");
  return o;
}

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"oilcast: multivariate monthly forecasting toolkit and benchmark harness"};
  app.require_subcommand(1);

  // ingest
  DataArgs ingest_args;
  std::optional<std::size_t> expect_inputs;
  auto* ingest = app.add_subcommand("ingest", "Validate a dataset and print frame statistics");
  add_data_args(ingest, ingest_args);
  ingest->add_option("--expect-inputs", expect_inputs, "Required number of independent variables (12 for the canonical set)");

  // corr
  DataArgs corr_args;
  std::string corr_out;
  auto* corr = app.add_subcommand("corr", "Pearson correlation matrix as CSV");
  add_data_args(corr, corr_args);
  corr->add_option("--test-start", corr_args.test_start, "Use only rows before this month (YYYY-MM)");
  corr->add_option("--out", corr_out, "Output CSV (default stdout)");

  // acf
  DataArgs acf_args;
  std::size_t acf_diff = 0, acf_max_lag = 20;
  std::string acf_column, acf_function = "acf", acf_out;
  auto* acf_cmd = app.add_subcommand("acf", "Correlogram (ACF or PACF) of one series after differencing");
  add_data_args(acf_cmd, acf_args);
  acf_cmd->add_option("--diff", acf_diff, "Differencing order")->check(CLI::Range(0, 2));
  acf_cmd->add_option("--max-lag", acf_max_lag, "Largest lag")->check(CLI::PositiveNumber);
  acf_cmd->add_option("--column", acf_column, "Series name (default: target)");
  acf_cmd->add_option("--function", acf_function, "acf or pacf")->check(CLI::IsMember({"acf", "pacf"}));
  acf_cmd->add_option("--test-start", acf_args.test_start, "Use only rows before this month (YYYY-MM)");
  acf_cmd->add_option("--out", acf_out, "Output CSV (default stdout)");

  // train
  DataArgs train_args;
  std::string train_model, train_out, train_order = "1,1,2", train_batch = "per_sample";
  double train_lr = 0.0001, train_lambda = 0.0;
  std::size_t train_epochs = 100, train_hidden = 12;
  std::uint64_t train_seed = 0;
  auto* train_cmd = app.add_subcommand("train", "Fit one model on the training rows and write a model file");
  add_data_args(train_cmd, train_args);
  train_cmd->add_option("--model", train_model, "nn, ridge or arima")->required()->check(CLI::IsMember({"nn", "ridge", "arima"}));
  train_cmd->add_option("--out", train_out, "Model JSON path")->required();
  train_cmd->add_option("--test-start", train_args.test_start, "Train on rows before this month (YYYY-MM)");
  train_cmd->add_option("--lr", train_lr, "nn: learning rate");
  train_cmd->add_option("--epochs", train_epochs, "nn: passes over the data");
  train_cmd->add_option("--hidden", train_hidden, "nn: neurons per hidden layer");
  train_cmd->add_option("--batch-mode", train_batch, "nn: per_sample or full_batch")->check(CLI::IsMember({"per_sample", "full_batch"}));
  train_cmd->add_option("--seed", train_seed, "nn: initialization seed");
  train_cmd->add_option("--lambda", train_lambda, "ridge: L2 penalty");
  train_cmd->add_option("--order", train_order, "arima: p,d,q");

  // forecast
  DataArgs fc_args;
  std::string fc_model, fc_out;
  std::size_t fc_horizon = 16;
  auto* fc = app.add_subcommand("forecast", "Predict with a saved model");
  fc->add_option("--model-file", fc_model, "Model JSON from `train`")->required();
  add_data_args(fc, fc_args, false);
  fc->add_option("--horizon", fc_horizon, "arima: steps ahead")->check(CLI::PositiveNumber);
  fc->add_option("--out", fc_out, "Output CSV (default stdout)");

  // evaluate
  std::string ev_series, ev_kind = "out";
  std::size_t ev_k = 0;
  auto* ev = app.add_subcommand("evaluate", "Metrics for a date,actual,predicted CSV");
  ev->add_option("--series", ev_series, "CSV with actual and predicted columns")->required();
  ev->add_option("--kind", ev_kind, "in or out of sample")->check(CLI::IsMember({"in", "out"}));
  ev->add_option("--k", ev_k, "Independent-variable count for adjusted R² (in-sample)");

  // dm
  std::string dm_a, dm_b;
  std::size_t dm_h = 1;
  auto* dm = app.add_subcommand("dm", "Diebold-Mariano test (squared-error loss, Harvey correction)");
  dm->set_help_flag("--help", "Print this help message and exit");  // frees -h for the horizon
  dm->add_option("--errors-a", dm_a, "Forecast errors of model A, one per line")->required();
  dm->add_option("--errors-b", dm_b, "Forecast errors of model B, one per line")->required();
  dm->add_option("--h", dm_h, "Forecast horizon")->check(CLI::PositiveNumber);

  // grid
  DataArgs grid_args;
  std::string grid_spec, grid_out;
  std::optional<std::size_t> grid_threads;
  std::optional<std::uint64_t> grid_seed;
  auto* grid = app.add_subcommand("grid", "Run the full hyperparameter grid and write reports");
  grid->add_option("--spec", grid_spec, "grid.json (omit for the canonical 18-cell grid)");
  add_data_args(grid, grid_args);
  grid->add_option("--test-start", grid_args.test_start, "First out-of-sample month")->default_val("2017-01");
  grid->add_option("--out", grid_out, "Output directory")->required();
  grid->add_option("--threads", grid_threads, "Worker threads (overrides OILCAST_THREADS, 0 = auto)");
  grid->add_option("--seed", grid_seed, "Override the grid seed");

  // synth
  std::string synth_out;
  LinearFrameSpec synth_spec;
  auto* synth = app.add_subcommand("synth", "Write a noiseless linear synthetic frame");
  synth->add_option("--out", synth_out, "Output CSV (default stdout)");
  synth->add_option("--rows", synth_spec.rows, "Number of months");
  synth->add_option("--inputs", synth_spec.inputs, "Number of independent variables");
  synth->add_option("--seed", synth_spec.seed, "Generator seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (ingest->parsed()) {
      const auto frame = load_frame(ingest_args);
      validate_schema(frame.columns(), expect_inputs);
      const auto c = category_counts(frame.columns());
      const nlohmann::json j = {{"rows", frame.rows()},
                                {"columns", frame.cols()},
                                {"first", frame.dates().front().str()},
                                {"last", frame.dates().back().str()},
                                {"target", frame.columns()[frame.target_index()].name},
                                {"categories",
                                 {{"supply", c.supply},
                                  {"demand", c.demand},
                                  {"balances", c.balances},
                                  {"financial_markets", c.financial_markets},
                                  {"target", c.target}}}};
      std::cout << j.dump(2) << '\n';
    } else if (corr->parsed()) {
      const auto frame = train_part(load_frame(corr_args), corr_args.test_start);
      const Matrix m = correlation_matrix(frame);
      with_output(corr_out, [&](std::ostream& out) { write_correlation_csv(out, frame.names(), m); });
    } else if (acf_cmd->parsed()) {
      const auto frame = train_part(load_frame(acf_args), acf_args.test_start);
      std::size_t col = frame.target_index();
      if (!acf_column.empty()) {
        const auto names = frame.names();
        const auto it = std::find(names.begin(), names.end(), acf_column);
        if (it == names.end()) fail(ErrorCode::MissingColumn, acf_column);
        col = static_cast<std::size_t>(it - names.begin());
      }
      const Vector series = difference(frame.values().col(col), acf_diff);
      const auto points = acf_function == "acf" ? acf(series, acf_max_lag) : pacf(series, acf_max_lag);
      with_output(acf_out, [&](std::ostream& out) {
        out << "lag,value,conf_limit\n";
        for (const auto& p : points) out << p.lag << ',' << num(p.value) << ',' << num(p.conf_limit) << '\n';
      });
    } else if (train_cmd->parsed()) {
      const auto frame = train_part(load_frame(train_args), train_args.test_start);
      nlohmann::json j;
      if (train_model == "arima") {
        j = to_json(arima_fit(frame.target(), parse_order(train_order)));
      } else {
        const auto params = fit_normalization(frame);
        const auto [x, y] = extract_xy(apply_normalization(frame, params));
        if (train_model == "ridge") {
          j = to_json(ridge_fit(x, y, train_lambda));
        } else {
          FFNetConfig c;
          c.input_dim = x.cols();
          c.hidden_dim = train_hidden;
          c.learning_rate = train_lr;
          c.epochs = train_epochs;
          c.seed = train_seed;
          c.batch_mode = parse_batch_mode(train_batch);
          j = to_json(train(init(c), x, y));
        }
        j["normalization"] = to_json(params);
      }
      j["columns"] = frame.names();
      j["trained_through"] = frame.dates().back().str();
      std::ofstream out(train_out);
      if (!out) fail(ErrorCode::IoError, "cannot write " + train_out);
      out << j.dump(2) << '\n';
    } else if (fc->parsed()) {
      std::ifstream in(fc_model);
      if (!in) fail(ErrorCode::IoError, "cannot open " + fc_model);
      nlohmann::json j;
      try {
        j = nlohmann::json::parse(in);
      } catch (const nlohmann::json::parse_error& e) {
        fail(ErrorCode::SchemaError, e.what());
      }
      const std::string kind = j.value("model", "");
      if (kind == "arima") {
        const Vector f = arima_forecast(arima_from_json(j), fc_horizon);
        MonthStamp next{};
        const bool dated = j.contains("trained_through");
        if (dated) next = month_or_throw(j.at("trained_through").get<std::string>()).plus(1);
        with_output(fc_out, [&](std::ostream& out) {
          out << "date,predicted\n";
          for (std::size_t h = 0; h < f.size(); ++h)
            out << (dated ? next.plus(static_cast<int>(h)).str() : std::to_string(h + 1)) << ',' << num(f[h]) << '\n';
        });
      } else if (kind == "nn" || kind == "ridge") {
        if (fc_args.data.empty()) throw UsageError("forecast with an nn or ridge model needs --data");
        const auto frame = load_frame(fc_args);
        if (j.contains("columns") && j.at("columns").get<std::vector<std::string>>() != frame.names()) {
          fail(ErrorCode::MissingColumn, "data columns differ from the columns the model was trained on");
        }
        const auto params = normalization_from_json(j.at("normalization"));
        const auto [x, y] = extract_xy(apply_normalization(frame, params));
        const Vector pred = kind == "nn" ? predict(ffnet_from_json(j), x) : ridge_predict(ridge_from_json(j), x);
        with_output(fc_out, [&](std::ostream& out) {
          write_series_csv(out, frame.dates(), y, pred);
        });
      } else {
        fail(ErrorCode::SchemaError, "model file has unknown model kind '" + kind + "'");
      }
    } else if (ev->parsed()) {
      std::ifstream in(ev_series);
      if (!in) fail(ErrorCode::IoError, "cannot open " + ev_series);
      Vector actual, predicted;
      std::string line;
      std::getline(in, line);
      const auto header = detail::split_csv_line(line);
      const auto ia = std::find(header.begin(), header.end(), "actual");
      const auto ip = std::find(header.begin(), header.end(), "predicted");
      if (ia == header.end() || ip == header.end()) fail(ErrorCode::MissingColumn, "series needs actual and predicted columns");
      const std::size_t ca = static_cast<std::size_t>(ia - header.begin()), cp = static_cast<std::size_t>(ip - header.begin());
      while (std::getline(in, line)) {
        const auto cells = detail::split_csv_line(line);
        if (cells.size() <= std::max(ca, cp)) continue;
        const auto a = detail::parse_double(cells[ca]);
        const auto p = detail::parse_double(cells[cp]);
        if (!a || !p) continue;  // rows without a fitted value
        actual.push_back(*a);
        predicted.push_back(*p);
      }
      const auto r = evaluate(actual, predicted, ev_kind == "in" ? SampleKind::InSample : SampleKind::OutOfSample, ev_k);
      std::cout << to_json(r).dump(2) << '\n';
    } else if (dm->parsed()) {
      const auto r = dm_test(read_numbers(dm_a), read_numbers(dm_b), dm_h);
      std::cout << to_json(r).dump(2) << '\n';
    } else if (grid->parsed()) {
      ExperimentGrid g = canonical_grid(2018);
      if (!grid_spec.empty()) {
        std::ifstream in(grid_spec);
        if (!in) fail(ErrorCode::IoError, "cannot open " + grid_spec);
        try {
          g = grid_from_json(nlohmann::json::parse(in));
        } catch (const nlohmann::json::parse_error& e) {
          fail(ErrorCode::SchemaError, e.what());
        }
      }
      if (grid_seed) g.seed = *grid_seed;
      const auto frame = load_frame(grid_args);
      GridOptions opts;
      opts.threads = grid_threads ? *grid_threads : threads_from_env();
      const auto result = run_grid(frame, {month_or_throw(grid_args.test_start)}, g, opts);
      const auto files = emit_reports(result, grid_out);
      std::size_t failed = 0;
      for (const auto& c : result.cells) failed += !c.ok;
      std::cout << "cells: " << result.cells.size() << " (" << failed << " failed)\n";
      for (const auto& f : files) std::cout << (std::filesystem::path(grid_out) / f).string() << '\n';
    } else if (synth->parsed()) {
      const auto frame = make_linear_frame(synth_spec);
      with_output(synth_out, [&](std::ostream& out) { write_csv(out, frame); });
    }
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return 2;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
