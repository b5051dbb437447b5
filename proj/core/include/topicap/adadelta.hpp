#pragma once

#include <map>
#include <string>
#include <vector>

#include "topicap/autodiff.hpp"

namespace topicap {

// Running averages E[g^2] and E[dx^2] per parameter, keyed by name.
struct AdadeltaState {
  struct Slot {
    Tensor mean_sq_grad;
    Tensor mean_sq_update;
  };
  std::map<std::string, Slot> slots;
};

struct AdadeltaOptions {
  double rho = 0.95;
  double epsilon = 1e-6;
};

// dx = -sqrt(E[dx^2] + eps) / sqrt(E[g^2] + eps) * g, applied in place.
void adadelta_step(const std::vector<Parameter*>& params, AdadeltaState& state,
                   const AdadeltaOptions& options = {});

}  // namespace topicap
