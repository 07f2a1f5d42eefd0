#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "gcas/autodiff/tape.hpp"

namespace gcas {

/// Relative error between an analytic and a numeric derivative. Magnitudes
/// below `floor` are compared absolutely against `floor`.
inline double relative_error(double analytic, double numeric, double floor = 1e-3) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), floor});
  return std::abs(analytic - numeric) / denom;
}

struct GradCheckEntry {
  std::string parameter;
  std::size_t checked = 0;
  double max_rel_error = 0.0;
};

struct GradCheckReport {
  std::vector<GradCheckEntry> entries;
  double max_rel_error() const {
    double m = 0.0;
    for (const auto& e : entries) m = std::max(m, e.max_rel_error);
    return m;
  }
  bool passed(double tolerance) const { return max_rel_error() <= tolerance; }
};

/// Builds the scalar loss on a fresh tape over the given store.
using LossBuilder = std::function<Var(Tape&)>;

/// Compares tape gradients against central differences for every scalar of
/// every parameter (or a strided subset when `max_per_param` is nonzero).
inline GradCheckReport check_gradients(ParameterStore& store, const LossBuilder& build,
                                       double h = 1e-6, std::size_t max_per_param = 0) {
  Gradients analytic;
  {
    Tape tape(store);
    analytic = tape.backward(build(tape));
  }
  auto evaluate = [&] {
    Tape tape(store);
    return build(tape).value()[0];
  };
  GradCheckReport report;
  for (ParamId id = 0; id < store.size(); ++id) {
    GradCheckEntry entry{store.name(id)};
    auto& values = store[id].values;
    const std::size_t stride =
        (max_per_param == 0 || values.size() <= max_per_param) ? 1 : values.size() / max_per_param;
    for (std::size_t j = 0; j < values.size(); j += stride) {
      const double saved = values[j];
      values[j] = saved + h;
      const double up = evaluate();
      values[j] = saved - h;
      const double down = evaluate();
      values[j] = saved;
      const double numeric = (up - down) / (2.0 * h);
      entry.max_rel_error =
          std::max(entry.max_rel_error, relative_error(analytic[id][j], numeric));
      ++entry.checked;
    }
    report.entries.push_back(entry);
  }
  return report;
}

}  // namespace gcas
