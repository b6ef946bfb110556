#include <string>

#include "evc/autodiff.hpp"
#include "evc/error.hpp"

namespace evc::ad {

std::string_view to_string(OpKind kind) {
  switch (kind) {
    case OpKind::Variable: return "variable";
    case OpKind::Constant: return "constant";
    case OpKind::Add: return "add";
    case OpKind::Sub: return "sub";
    case OpKind::Mul: return "mul";
    case OpKind::Scale: return "scale";
    case OpKind::AddScalar: return "add_scalar";
    case OpKind::Matmul: return "matmul";
    case OpKind::Conv1d: return "conv1d";
    case OpKind::ConvTranspose1d: return "conv_transpose1d";
    case OpKind::AddRowBias: return "add_row_bias";
    case OpKind::LeakyRelu: return "leaky_relu";
    case OpKind::Tanh: return "tanh";
    case OpKind::Exp: return "exp";
    case OpKind::Log: return "log";
    case OpKind::Sum: return "sum";
    case OpKind::Mean: return "mean";
    case OpKind::Square: return "square";
    case OpKind::Concat: return "concat";
    case OpKind::Reshape: return "reshape";
    case OpKind::SliceCols: return "slice_cols";
  }
  return "?";
}

const Tensor& Var::value() const {
  if (tape == nullptr) fail(ErrorKind::State, "variable is not attached to a tape");
  return tape->value(id);
}

Var Tape::variable(Tensor value) {
  if (!value.all_finite()) fail(ErrorKind::NonFinite, "variable holds non-finite values");
  nodes_.push_back(Node{OpKind::Variable, {}, std::move(value), nullptr, true});
  return Var{this, nodes_.size() - 1};
}

Var Tape::constant(Tensor value) {
  if (!value.all_finite()) fail(ErrorKind::NonFinite, "constant holds non-finite values");
  nodes_.push_back(Node{OpKind::Constant, {}, std::move(value), nullptr, false});
  return Var{this, nodes_.size() - 1};
}

Var Tape::record(OpKind kind, std::vector<std::size_t> inputs, Tensor value, BackwardFn backward) {
  bool requires_grad = false;
  for (std::size_t in : inputs) {
    if (in >= nodes_.size()) fail(ErrorKind::State, "op input refers to a later node");
    requires_grad = requires_grad || nodes_[in].requires_grad;
  }
  nodes_.push_back(Node{kind, std::move(inputs), std::move(value), std::move(backward), requires_grad});
  return Var{this, nodes_.size() - 1};
}

void Tape::backward(Var loss) {
  if (loss.tape != this) fail(ErrorKind::State, "loss belongs to another tape");
  const Tensor& lv = nodes_.at(loss.id).value;
  if (lv.rank() != 0) fail(ErrorKind::Shape, "backward needs a scalar loss, got shape " + shape_string(lv.shape()));
  grads_.assign(nodes_.size(), std::nullopt);
  grads_[loss.id] = Tensor::scalar(1.0);
  for (std::size_t id = loss.id + 1; id-- > 0;) {
    Node& node = nodes_[id];
    if (!grads_[id] || !node.requires_grad || !node.backward) continue;
    BackwardContext ctx{*grads_[id], node.value, {}, {}};
    ctx.inputs.reserve(node.inputs.size());
    ctx.input_grads.reserve(node.inputs.size());
    for (std::size_t in : node.inputs) {
      ctx.inputs.push_back(&nodes_[in].value);
      if (nodes_[in].requires_grad) {
        if (!grads_[in]) grads_[in] = Tensor(nodes_[in].value.shape());
        ctx.input_grads.push_back(&*grads_[in]);
      } else {
        ctx.input_grads.push_back(nullptr);
      }
    }
    node.backward(ctx);
  }
}

const Tensor& Tape::grad(Var v) {
  if (v.tape != this) fail(ErrorKind::State, "variable belongs to another tape");
  if (grads_.size() < nodes_.size()) grads_.resize(nodes_.size());
  auto& g = grads_.at(v.id);
  if (!g) g = Tensor(nodes_[v.id].value.shape());
  return *g;
}

}  // namespace evc::ad
