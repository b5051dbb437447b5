#include "topicap/grad_check.hpp"

#include <algorithm>
#include <cmath>

namespace topicap {

namespace {

double evaluate(const LossBuilder& build) {
  Tape tape(false);
  return build(tape).value().item();
}

}  // namespace

GradCheckReport grad_check(const LossBuilder& build, const std::vector<Parameter*>& params,
                           const GradCheckOptions& options) {
  GradCheckReport report;
  for (auto* p : params) p->zero_grad();
  {
    Tape tape;
    Var loss = build(tape);
    if (!std::isfinite(loss.value().item())) {
      report.aborted = true;
      report.diagnostic = "loss is not finite at the base point";
      return report;
    }
    tape.backward(loss);
  }

  for (auto* p : params) {
    auto& values = p->value.data();
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double saved = values[i];
      values[i] = saved + options.step;
      const double plus = evaluate(build);
      values[i] = saved - options.step;
      const double minus = evaluate(build);
      values[i] = saved;
      if (!std::isfinite(plus) || !std::isfinite(minus)) {
        report.aborted = true;
        report.diagnostic = "loss is not finite near " + p->name + "[" + std::to_string(i) + "]";
        return report;
      }
      const double numeric = (plus - minus) / (2.0 * options.step);
      const double analytic = p->grad[i];
      const double denom = std::max({std::abs(analytic), std::abs(numeric), options.floor});
      const double rel = std::abs(analytic - numeric) / denom;
      ++report.coordinates_checked;
      if (rel > report.max_relative_error) {
        report.max_relative_error = rel;
        report.worst_parameter = p->name;
        report.worst_index = i;
      }
    }
  }
  report.passed = report.max_relative_error <= options.tolerance;
  return report;
}

}  // namespace topicap
