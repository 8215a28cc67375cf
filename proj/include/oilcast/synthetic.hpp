#pragma once

// Seeded synthetic frames for tests, demos and the acceptance suite.

#include <cstdint>
#include <string>

#include "oilcast/dataset.hpp"
#include "oilcast/numkit.hpp"

namespace oilcast {

struct LinearFrameSpec {
  std::size_t rows = 388;
  std::size_t inputs = 12;
  std::size_t train_rows = 372;  // rows before the split point
  MonthStamp start{1986, 1};
  std::uint64_t seed = 2018;
  double coef_lo = 0.5;
  double coef_hi = 2.0;
};

/// Noiseless linear target: every input column is lo_j + span_j·u with u
/// uniform on [0,1), except that the first two rows pin u = 0 and u = 1 so the
/// training min/max are exactly lo_j and lo_j + span_j. The target is
/// Σ c_j·u_j, i.e. exactly linear with no intercept in the min-max
/// normalized inputs.
inline TimeSeriesFrame make_linear_frame(const LinearFrameSpec& spec = {}) {
  if (spec.rows < 4 || spec.inputs < 1) fail(ErrorCode::InvalidArgument, "synthetic frame too small");
  Rng rng(spec.seed);
  Vector lo(spec.inputs), span(spec.inputs), coef(spec.inputs);
  for (std::size_t j = 0; j < spec.inputs; ++j) {
    lo[j] = rng_next_uniform(rng, -50.0, 50.0);
    span[j] = rng_next_uniform(rng, 1.0, 100.0);
    coef[j] = rng_next_uniform(rng, spec.coef_lo, spec.coef_hi);
  }
  Matrix values(spec.rows, spec.inputs + 1);
  std::vector<MonthStamp> dates;
  for (std::size_t r = 0; r < spec.rows; ++r) {
    dates.push_back(spec.start.plus(static_cast<int>(r)));
    double y = 0.0;
    for (std::size_t j = 0; j < spec.inputs; ++j) {
      double u = r == 0 ? 0.0 : r == 1 ? 1.0 : rng.next_unit();
      values(r, j) = lo[j] + span[j] * u;
      // Recompute u from the stored value so the target is linear in exactly
      // what normalization will see.
      u = (values(r, j) - lo[j]) / span[j];
      y += coef[j] * u;
    }
    values(r, spec.inputs) = y;
  }
  Schema schema;
  for (std::size_t j = 0; j < spec.inputs; ++j) schema.push_back({"x" + std::to_string(j + 1), Category::Supply, "synthetic input", SourceTag::OTHER});
  schema.push_back({"y", Category::Target, "synthetic linear target", SourceTag::OTHER});
  return {std::move(dates), std::move(schema), std::move(values)};
}

}  // namespace oilcast
