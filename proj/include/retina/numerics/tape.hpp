#ifndef RETINA_NUMERICS_TAPE_HPP
#define RETINA_NUMERICS_TAPE_HPP

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "retina/numerics/tensor.hpp"

namespace retina::numerics {

using NodeId = std::size_t;
using GradientMap = std::map<std::string, Tensor>;

// Reverse-mode autodiff tape.  Records primitive operations in creation
// order, which is by construction a topological order of the DAG: an op can
// only reference node ids that already exist.  Single-threaded per instance;
// independent tapes may run concurrently.
class Tape {
 public:
  enum class OpKind {
    Constant,
    Parameter,
    Add,
    Sub,
    Mul,
    Scale,
    Sum,
    Relu,
    Sigmoid,
    Softmax,
    MeanPool2,
    Conv2d,
    BiasChannels,
    Dense,
    Reshape,
    AttentionPool,
    BceWithLogits,
    SoftmaxCrossEntropy,
  };

  NodeId constant(Tensor value);
  // Registers a trainable leaf; names must be unique within one tape.
  NodeId parameter(const std::string& name, const Tensor& value);

  NodeId add(NodeId a, NodeId b);
  NodeId sub(NodeId a, NodeId b);
  NodeId mul(NodeId a, NodeId b);
  NodeId scale(NodeId a, double factor);
  NodeId sum(NodeId a);  // scalar [1]
  NodeId relu(NodeId a);
  NodeId sigmoid(NodeId a);
  NodeId softmax(NodeId a);
  NodeId meanpool2(NodeId a);
  NodeId conv2d(NodeId input, NodeId kernels, int stride, int padding);
  NodeId bias_channels(NodeId input, NodeId bias);
  NodeId dense(NodeId input, NodeId weights, NodeId bias);
  NodeId reshape(NodeId a, std::vector<std::size_t> shape);
  NodeId attention_pool(NodeId features, NodeId weights);
  // Per-sample binary cross entropy from logits; masked entries contribute 0
  // value and 0 gradient.  Output shape [B].
  NodeId bce_with_logits(NodeId logits, std::vector<double> labels, std::vector<double> mask);
  // Per-sample categorical cross entropy from logits [B,k] and class indexes.
  NodeId softmax_cross_entropy(NodeId logits, std::vector<int> labels,
                               std::vector<double> mask);

  const Tensor& value(NodeId id) const { return nodes_[id].value; }
  std::size_t node_count() const { return nodes_.size(); }
  const std::vector<NodeId>& node_inputs(NodeId id) const { return nodes_[id].inputs; }
  const std::vector<std::string>& parameter_names() const { return param_names_; }

  // d(loss)/d(parameter) for every registered parameter; parameters the loss
  // does not reach get zero gradients of matching shape.
  GradientMap backward(NodeId loss) const;

 private:
  struct Node {
    OpKind kind;
    std::vector<NodeId> inputs;
    Tensor value;
    bool needs_grad = false;
    // Op-specific payload.
    double factor = 0.0;
    int stride = 0;
    int padding = 0;
    std::vector<double> labels;
    std::vector<int> class_labels;
    std::vector<double> mask;
    std::string param_name;
  };

  NodeId push(Node node);
  void check_id(NodeId id) const;
  void check_same_shape(const char* op, NodeId a, NodeId b) const;

  std::vector<Node> nodes_;
  std::vector<std::string> param_names_;
  std::map<std::string, NodeId> param_ids_;
};

// Free-function form of the reverse sweep.
inline GradientMap backward(const Tape& tape, NodeId loss) { return tape.backward(loss); }

}  // namespace retina::numerics

#endif  // RETINA_NUMERICS_TAPE_HPP
