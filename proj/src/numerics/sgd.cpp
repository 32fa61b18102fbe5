#include "retina/numerics/sgd.hpp"

namespace retina::numerics {

void sgd_step(ParameterStore& params, const GradientMap& grads, double learning_rate) {
  if (learning_rate < 0.0) throw ContractError("sgd_step: learning rate must be >= 0");
  if (params.size() != grads.size()) {
    throw ContractError("sgd_step: parameter/gradient key count mismatch (" +
                        std::to_string(params.size()) + " vs " +
                        std::to_string(grads.size()) + ")");
  }
  for (auto& [name, p] : params) {
    auto it = grads.find(name);
    if (it == grads.end()) throw ContractError("sgd_step: no gradient for parameter " + name);
    const Tensor& g = it->second;
    if (!p.same_shape(g)) {
      throw ContractError("sgd_step: shape mismatch for " + name + ": " + p.shape_string() +
                          " vs " + g.shape_string());
    }
    double* pv = p.data();
    const double* gv = g.data();
    for (std::size_t i = 0; i < p.size(); ++i) pv[i] -= learning_rate * gv[i];
    p.check_finite("sgd_step");
  }
}

}  // namespace retina::numerics
