#pragma once

#include <functional>
#include <string>
#include <vector>

#include "topicap/autodiff.hpp"

namespace topicap {

struct GradCheckReport {
  double max_relative_error = 0.0;
  std::string worst_parameter;
  std::size_t worst_index = 0;
  std::size_t coordinates_checked = 0;
  bool passed = false;
  bool aborted = false;
  std::string diagnostic;
};

struct GradCheckOptions {
  double step = 1e-5;
  double tolerance = 1e-4;
  // Denominator floor for the relative error |a - n| / max(|a|, |n|, floor);
  // keeps round-off on near-zero gradients from reading as failure.
  double floor = 1e-4;
};

using LossBuilder = std::function<Var(Tape&)>;

// Compares the tape gradient of `build` against central differences over every
// coordinate of `params`. Parameter values are restored on return; gradients
// are overwritten with the analytic result.
GradCheckReport grad_check(const LossBuilder& build, const std::vector<Parameter*>& params,
                           const GradCheckOptions& options = {});

}  // namespace topicap
