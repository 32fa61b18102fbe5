#include "retina/numerics/tape.hpp"

#include <cmath>

#include "retina/numerics/ops.hpp"

namespace retina::numerics {

NodeId Tape::push(Node node) {
  nodes_.push_back(std::move(node));
  return nodes_.size() - 1;
}

void Tape::check_id(NodeId id) const {
  if (id >= nodes_.size()) throw ContractError("tape: unknown node id");
}

void Tape::check_same_shape(const char* op, NodeId a, NodeId b) const {
  if (!nodes_[a].value.same_shape(nodes_[b].value)) {
    throw DimensionError(std::string(op) + ": shape " + nodes_[a].value.shape_string() +
                         " != " + nodes_[b].value.shape_string());
  }
}

NodeId Tape::constant(Tensor value) {
  Node n;
  n.kind = OpKind::Constant;
  n.value = std::move(value);
  return push(std::move(n));
}

NodeId Tape::parameter(const std::string& name, const Tensor& value) {
  if (param_ids_.count(name)) throw ContractError("tape: duplicate parameter " + name);
  Node n;
  n.kind = OpKind::Parameter;
  n.value = value;
  n.needs_grad = true;
  n.param_name = name;
  NodeId id = push(std::move(n));
  param_ids_[name] = id;
  param_names_.push_back(name);
  return id;
}

namespace {
bool any_needs_grad(const std::vector<bool>& flags) {
  for (bool f : flags)
    if (f) return true;
  return false;
}
}  // namespace

#define RETINA_TAPE_BINARY_PRE(opname)                   \
  check_id(a);                                           \
  check_id(b);                                           \
  Node n;                                                \
  n.inputs = {a, b};                                     \
  n.needs_grad = nodes_[a].needs_grad || nodes_[b].needs_grad;

NodeId Tape::add(NodeId a, NodeId b) {
  RETINA_TAPE_BINARY_PRE("add")
  check_same_shape("add", a, b);
  n.kind = OpKind::Add;
  n.value = nodes_[a].value;
  const double* vb = nodes_[b].value.data();
  double* v = n.value.data();
  for (std::size_t i = 0; i < n.value.size(); ++i) v[i] += vb[i];
  n.value.check_finite("add");
  return push(std::move(n));
}

NodeId Tape::sub(NodeId a, NodeId b) {
  RETINA_TAPE_BINARY_PRE("sub")
  check_same_shape("sub", a, b);
  n.kind = OpKind::Sub;
  n.value = nodes_[a].value;
  const double* vb = nodes_[b].value.data();
  double* v = n.value.data();
  for (std::size_t i = 0; i < n.value.size(); ++i) v[i] -= vb[i];
  n.value.check_finite("sub");
  return push(std::move(n));
}

NodeId Tape::mul(NodeId a, NodeId b) {
  RETINA_TAPE_BINARY_PRE("mul")
  check_same_shape("mul", a, b);
  n.kind = OpKind::Mul;
  n.value = nodes_[a].value;
  const double* vb = nodes_[b].value.data();
  double* v = n.value.data();
  for (std::size_t i = 0; i < n.value.size(); ++i) v[i] *= vb[i];
  n.value.check_finite("mul");
  return push(std::move(n));
}

NodeId Tape::scale(NodeId a, double factor) {
  check_id(a);
  Node n;
  n.kind = OpKind::Scale;
  n.inputs = {a};
  n.needs_grad = nodes_[a].needs_grad;
  n.factor = factor;
  n.value = nodes_[a].value;
  for (double& v : n.value.values()) v *= factor;
  n.value.check_finite("scale");
  return push(std::move(n));
}

NodeId Tape::sum(NodeId a) {
  check_id(a);
  Node n;
  n.kind = OpKind::Sum;
  n.inputs = {a};
  n.needs_grad = nodes_[a].needs_grad;
  double acc = 0.0;
  for (double v : nodes_[a].value.values()) acc += v;
  n.value = Tensor::from({1}, {acc});
  return push(std::move(n));
}

NodeId Tape::relu(NodeId a) {
  check_id(a);
  Node n;
  n.kind = OpKind::Relu;
  n.inputs = {a};
  n.needs_grad = nodes_[a].needs_grad;
  n.value = ops::relu(nodes_[a].value);
  return push(std::move(n));
}

NodeId Tape::sigmoid(NodeId a) {
  check_id(a);
  Node n;
  n.kind = OpKind::Sigmoid;
  n.inputs = {a};
  n.needs_grad = nodes_[a].needs_grad;
  n.value = ops::sigmoid(nodes_[a].value);
  return push(std::move(n));
}

NodeId Tape::softmax(NodeId a) {
  check_id(a);
  Node n;
  n.kind = OpKind::Softmax;
  n.inputs = {a};
  n.needs_grad = nodes_[a].needs_grad;
  n.value = ops::softmax(nodes_[a].value);
  return push(std::move(n));
}

NodeId Tape::meanpool2(NodeId a) {
  check_id(a);
  Node n;
  n.kind = OpKind::MeanPool2;
  n.inputs = {a};
  n.needs_grad = nodes_[a].needs_grad;
  n.value = ops::meanpool2(nodes_[a].value);
  return push(std::move(n));
}

NodeId Tape::conv2d(NodeId input, NodeId kernels, int stride, int padding) {
  check_id(input);
  check_id(kernels);
  Node n;
  n.kind = OpKind::Conv2d;
  n.inputs = {input, kernels};
  n.needs_grad = nodes_[input].needs_grad || nodes_[kernels].needs_grad;
  n.stride = stride;
  n.padding = padding;
  n.value = ops::conv2d(nodes_[input].value, nodes_[kernels].value, stride, padding);
  return push(std::move(n));
}

NodeId Tape::bias_channels(NodeId input, NodeId bias) {
  check_id(input);
  check_id(bias);
  Node n;
  n.kind = OpKind::BiasChannels;
  n.inputs = {input, bias};
  n.needs_grad = nodes_[input].needs_grad || nodes_[bias].needs_grad;
  n.value = ops::bias_channels(nodes_[input].value, nodes_[bias].value);
  return push(std::move(n));
}

NodeId Tape::dense(NodeId input, NodeId weights, NodeId bias) {
  check_id(input);
  check_id(weights);
  check_id(bias);
  Node n;
  n.kind = OpKind::Dense;
  n.inputs = {input, weights, bias};
  n.needs_grad = nodes_[input].needs_grad || nodes_[weights].needs_grad ||
                 nodes_[bias].needs_grad;
  n.value = ops::dense(nodes_[input].value, nodes_[weights].value, nodes_[bias].value);
  return push(std::move(n));
}

NodeId Tape::reshape(NodeId a, std::vector<std::size_t> shape) {
  check_id(a);
  Node n;
  n.kind = OpKind::Reshape;
  n.inputs = {a};
  n.needs_grad = nodes_[a].needs_grad;
  n.value = nodes_[a].value.reshaped(std::move(shape));
  return push(std::move(n));
}

NodeId Tape::attention_pool(NodeId features, NodeId weights) {
  check_id(features);
  check_id(weights);
  Node n;
  n.kind = OpKind::AttentionPool;
  n.inputs = {features, weights};
  n.needs_grad = nodes_[features].needs_grad || nodes_[weights].needs_grad;
  n.value = ops::attention_pool(nodes_[features].value, nodes_[weights].value);
  return push(std::move(n));
}

NodeId Tape::bce_with_logits(NodeId logits, std::vector<double> labels,
                             std::vector<double> mask) {
  check_id(logits);
  const Tensor& z = nodes_[logits].value;
  if (z.rank() != 1 || z.size() != labels.size() || z.size() != mask.size()) {
    throw DimensionError("bce_with_logits: logits " + z.shape_string() + ", labels " +
                         std::to_string(labels.size()) + ", mask " +
                         std::to_string(mask.size()));
  }
  Node n;
  n.kind = OpKind::BceWithLogits;
  n.inputs = {logits};
  n.needs_grad = nodes_[logits].needs_grad;
  Tensor out = Tensor::zeros({z.size()});
  for (std::size_t i = 0; i < z.size(); ++i) {
    double zi = z[i];
    double loss = std::max(zi, 0.0) - zi * labels[i] + std::log1p(std::exp(-std::abs(zi)));
    out[i] = mask[i] * loss;
  }
  out.check_finite("bce_with_logits");
  n.value = std::move(out);
  n.labels = std::move(labels);
  n.mask = std::move(mask);
  return push(std::move(n));
}

NodeId Tape::softmax_cross_entropy(NodeId logits, std::vector<int> labels,
                                   std::vector<double> mask) {
  check_id(logits);
  const Tensor& z = nodes_[logits].value;
  if (z.rank() != 2 || z.dim(0) != labels.size() || z.dim(0) != mask.size()) {
    throw DimensionError("softmax_cross_entropy: logits " + z.shape_string() + ", labels " +
                         std::to_string(labels.size()));
  }
  const std::size_t rows = z.dim(0), cols = z.dim(1);
  for (std::size_t i = 0; i < rows; ++i) {
    if (mask[i] != 0.0 && (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= cols)) {
      throw ContractError("softmax_cross_entropy: class index out of range");
    }
  }
  Node n;
  n.kind = OpKind::SoftmaxCrossEntropy;
  n.inputs = {logits};
  n.needs_grad = nodes_[logits].needs_grad;
  Tensor out = Tensor::zeros({rows});
  for (std::size_t i = 0; i < rows; ++i) {
    if (mask[i] == 0.0) continue;
    const double* row = z.data() + i * cols;
    double mx = row[0];
    for (std::size_t j = 1; j < cols; ++j) mx = std::max(mx, row[j]);
    double denom = 0.0;
    for (std::size_t j = 0; j < cols; ++j) denom += std::exp(row[j] - mx);
    double lse = mx + std::log(denom);
    out[i] = mask[i] * (lse - row[static_cast<std::size_t>(labels[i])]);
  }
  out.check_finite("softmax_cross_entropy");
  n.value = std::move(out);
  n.class_labels = std::move(labels);
  n.mask = std::move(mask);
  return push(std::move(n));
}

GradientMap Tape::backward(NodeId loss) const {
  check_id(loss);
  if (nodes_[loss].value.size() != 1) {
    throw ContractError("backward: loss must be a scalar node, got shape " +
                        nodes_[loss].value.shape_string());
  }

  std::vector<Tensor> grads(nodes_.size());
  std::vector<bool> live(nodes_.size(), false);
  auto grad_of = [&](NodeId id) -> Tensor& {
    if (!live[id]) {
      grads[id] = Tensor::zeros(nodes_[id].value.shape());
      live[id] = true;
    }
    return grads[id];
  };

  grad_of(loss)[0] = 1.0;

  for (std::size_t idx = nodes_.size(); idx-- > 0;) {
    const Node& node = nodes_[idx];
    if (!live[idx] || !node.needs_grad) continue;
    const Tensor& g = grads[idx];
    auto wants = [&](std::size_t slot) {
      return nodes_[node.inputs[slot]].needs_grad;
    };
    switch (node.kind) {
      case OpKind::Constant:
      case OpKind::Parameter:
        break;
      case OpKind::Add: {
        for (int slot = 0; slot < 2; ++slot) {
          if (!wants(slot)) continue;
          Tensor& ig = grad_of(node.inputs[slot]);
          for (std::size_t i = 0; i < g.size(); ++i) ig[i] += g[i];
        }
        break;
      }
      case OpKind::Sub: {
        if (wants(0)) {
          Tensor& ig = grad_of(node.inputs[0]);
          for (std::size_t i = 0; i < g.size(); ++i) ig[i] += g[i];
        }
        if (wants(1)) {
          Tensor& ig = grad_of(node.inputs[1]);
          for (std::size_t i = 0; i < g.size(); ++i) ig[i] -= g[i];
        }
        break;
      }
      case OpKind::Mul: {
        const Tensor& va = nodes_[node.inputs[0]].value;
        const Tensor& vb = nodes_[node.inputs[1]].value;
        if (wants(0)) {
          Tensor& ig = grad_of(node.inputs[0]);
          for (std::size_t i = 0; i < g.size(); ++i) ig[i] += g[i] * vb[i];
        }
        if (wants(1)) {
          Tensor& ig = grad_of(node.inputs[1]);
          for (std::size_t i = 0; i < g.size(); ++i) ig[i] += g[i] * va[i];
        }
        break;
      }
      case OpKind::Scale: {
        if (wants(0)) {
          Tensor& ig = grad_of(node.inputs[0]);
          for (std::size_t i = 0; i < g.size(); ++i) ig[i] += node.factor * g[i];
        }
        break;
      }
      case OpKind::Sum: {
        if (wants(0)) {
          Tensor& ig = grad_of(node.inputs[0]);
          const double gv = g[0];
          for (std::size_t i = 0; i < ig.size(); ++i) ig[i] += gv;
        }
        break;
      }
      case OpKind::Relu: {
        if (wants(0)) {
          const Tensor& x = nodes_[node.inputs[0]].value;
          Tensor& ig = grad_of(node.inputs[0]);
          for (std::size_t i = 0; i < g.size(); ++i) {
            if (x[i] > 0.0) ig[i] += g[i];
          }
        }
        break;
      }
      case OpKind::Sigmoid: {
        if (wants(0)) {
          Tensor& ig = grad_of(node.inputs[0]);
          const Tensor& s = node.value;
          for (std::size_t i = 0; i < g.size(); ++i) ig[i] += g[i] * s[i] * (1.0 - s[i]);
        }
        break;
      }
      case OpKind::Softmax: {
        if (wants(0)) {
          Tensor& ig = grad_of(node.inputs[0]);
          const Tensor& s = node.value;
          const std::size_t cols = s.dim(s.rank() - 1);
          const std::size_t rows = s.size() / cols;
          for (std::size_t r = 0; r < rows; ++r) {
            const double* srow = s.data() + r * cols;
            const double* grow = g.data() + r * cols;
            double dot = 0.0;
            for (std::size_t j = 0; j < cols; ++j) dot += grow[j] * srow[j];
            double* irow = ig.data() + r * cols;
            for (std::size_t j = 0; j < cols; ++j) irow[j] += srow[j] * (grow[j] - dot);
          }
        }
        break;
      }
      case OpKind::MeanPool2: {
        if (wants(0)) {
          ops::meanpool2_backward(nodes_[node.inputs[0]].value, g, &grad_of(node.inputs[0]));
        }
        break;
      }
      case OpKind::Conv2d: {
        Tensor* ig = wants(0) ? &grad_of(node.inputs[0]) : nullptr;
        Tensor* kg = wants(1) ? &grad_of(node.inputs[1]) : nullptr;
        ops::conv2d_backward(nodes_[node.inputs[0]].value, nodes_[node.inputs[1]].value,
                             node.stride, node.padding, g, ig, kg);
        break;
      }
      case OpKind::BiasChannels: {
        Tensor* ig = wants(0) ? &grad_of(node.inputs[0]) : nullptr;
        Tensor* bg = wants(1) ? &grad_of(node.inputs[1]) : nullptr;
        ops::bias_channels_backward(nodes_[node.inputs[0]].value, g, ig, bg);
        break;
      }
      case OpKind::Dense: {
        Tensor* ig = wants(0) ? &grad_of(node.inputs[0]) : nullptr;
        Tensor* wg = wants(1) ? &grad_of(node.inputs[1]) : nullptr;
        Tensor* bg = wants(2) ? &grad_of(node.inputs[2]) : nullptr;
        ops::dense_backward(nodes_[node.inputs[0]].value, nodes_[node.inputs[1]].value, g, ig,
                            wg, bg);
        break;
      }
      case OpKind::Reshape: {
        if (wants(0)) {
          Tensor& ig = grad_of(node.inputs[0]);
          for (std::size_t i = 0; i < g.size(); ++i) ig[i] += g[i];
        }
        break;
      }
      case OpKind::AttentionPool: {
        Tensor* fg = wants(0) ? &grad_of(node.inputs[0]) : nullptr;
        Tensor* wg = wants(1) ? &grad_of(node.inputs[1]) : nullptr;
        ops::attention_pool_backward(nodes_[node.inputs[0]].value,
                                     nodes_[node.inputs[1]].value, g, fg, wg);
        break;
      }
      case OpKind::BceWithLogits: {
        if (wants(0)) {
          const Tensor& z = nodes_[node.inputs[0]].value;
          Tensor& ig = grad_of(node.inputs[0]);
          for (std::size_t i = 0; i < z.size(); ++i) {
            if (node.mask[i] == 0.0) continue;
            double zi = z[i];
            double s = zi >= 0.0 ? 1.0 / (1.0 + std::exp(-zi))
                                 : std::exp(zi) / (1.0 + std::exp(zi));
            ig[i] += g[i] * node.mask[i] * (s - node.labels[i]);
          }
        }
        break;
      }
      case OpKind::SoftmaxCrossEntropy: {
        if (wants(0)) {
          const Tensor& z = nodes_[node.inputs[0]].value;
          Tensor& ig = grad_of(node.inputs[0]);
          const std::size_t rows = z.dim(0), cols = z.dim(1);
          for (std::size_t r = 0; r < rows; ++r) {
            if (node.mask[r] == 0.0) continue;
            const double* row = z.data() + r * cols;
            double mx = row[0];
            for (std::size_t j = 1; j < cols; ++j) mx = std::max(mx, row[j]);
            double denom = 0.0;
            for (std::size_t j = 0; j < cols; ++j) denom += std::exp(row[j] - mx);
            double* irow = ig.data() + r * cols;
            const double gm = g[r] * node.mask[r];
            for (std::size_t j = 0; j < cols; ++j) {
              double sj = std::exp(row[j] - mx) / denom;
              double onehot = (static_cast<std::size_t>(node.class_labels[r]) == j) ? 1.0 : 0.0;
              irow[j] += gm * (sj - onehot);
            }
          }
        }
        break;
      }
    }
  }

  GradientMap out;
  for (const auto& [name, id] : param_ids_) {
    if (live[id]) {
      out.emplace(name, std::move(grads[id]));
    } else {
      out.emplace(name, Tensor::zeros(nodes_[id].value.shape()));
    }
  }
  return out;
}

}  // namespace retina::numerics
