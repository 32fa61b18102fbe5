#ifndef RETINA_NUMERICS_SGD_HPP
#define RETINA_NUMERICS_SGD_HPP

#include <map>
#include <string>

#include "retina/numerics/tape.hpp"
#include "retina/numerics/tensor.hpp"

namespace retina::numerics {

using ParameterStore = std::map<std::string, Tensor>;

// In-place p <- p - learning_rate * g for every parameter.  Params and grads
// must be keyed identically; shapes must match.
void sgd_step(ParameterStore& params, const GradientMap& grads, double learning_rate);

}  // namespace retina::numerics

#endif  // RETINA_NUMERICS_SGD_HPP
