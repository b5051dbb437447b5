#include "topicap/adadelta.hpp"

#include <cmath>

namespace topicap {

void adadelta_step(const std::vector<Parameter*>& params, AdadeltaState& state, const AdadeltaOptions& options) {
  const double rho = options.rho;
  const double eps = options.epsilon;
  for (auto* p : params) {
    auto [it, fresh] = state.slots.try_emplace(p->name);
    auto& slot = it->second;
    if (fresh) {
      slot.mean_sq_grad = Tensor::zeros_like(p->value);
      slot.mean_sq_update = Tensor::zeros_like(p->value);
    }
    auto& x = p->value.data();
    const auto& g = p->grad.data();
    auto& eg = slot.mean_sq_grad.data();
    auto& edx = slot.mean_sq_update.data();
    for (std::size_t i = 0; i < x.size(); ++i) {
      eg[i] = rho * eg[i] + (1.0 - rho) * g[i] * g[i];
      const double dx = -std::sqrt(edx[i] + eps) / std::sqrt(eg[i] + eps) * g[i];
      edx[i] = rho * edx[i] + (1.0 - rho) * dx * dx;
      x[i] += dx;
    }
  }
}

}  // namespace topicap
