#include "hosdp/autograd.hpp"

#include "hosdp/error.hpp"

namespace hosdp {

Parameter& ParameterStore::add(std::string name, Tensor init, bool trainable) {
  if (index_.count(name)) throw ContractError("duplicate parameter name: " + name);
  auto p = std::make_unique<Parameter>();
  p->name = name;
  p->grad = Tensor(init.shape());
  p->value = std::move(init);
  p->trainable = trainable;
  index_.emplace(std::move(name), params_.size());
  params_.push_back(std::move(p));
  return *params_.back();
}

Parameter& ParameterStore::get(std::string_view name) {
  auto it = index_.find(name);
  if (it == index_.end()) throw ContractError("unknown parameter: " + std::string(name));
  return *params_[it->second];
}

const Parameter& ParameterStore::get(std::string_view name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw ContractError("unknown parameter: " + std::string(name));
  return *params_[it->second];
}

bool ParameterStore::contains(std::string_view name) const { return index_.find(name) != index_.end(); }

std::vector<Parameter*> ParameterStore::all() {
  std::vector<Parameter*> out;
  for (auto& p : params_) out.push_back(p.get());
  return out;
}

std::vector<const Parameter*> ParameterStore::all() const {
  std::vector<const Parameter*> out;
  for (const auto& p : params_) out.push_back(p.get());
  return out;
}

std::vector<Parameter*> ParameterStore::trainable() {
  std::vector<Parameter*> out;
  for (auto& p : params_) {
    if (p->trainable) out.push_back(p.get());
  }
  return out;
}

void ParameterStore::zero_grad() {
  for (auto& p : params_) p->zero_grad();
}

std::vector<Tensor> ParameterStore::snapshot() const {
  std::vector<Tensor> out;
  out.reserve(params_.size());
  for (const auto& p : params_) out.push_back(p->value);
  return out;
}

void ParameterStore::restore(const std::vector<Tensor>& values) {
  if (values.size() != params_.size()) throw ContractError("snapshot size mismatch");
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (values[i].shape() != params_[i]->value.shape()) {
      throw DimensionError("snapshot shape mismatch for " + params_[i]->name);
    }
    params_[i]->value = values[i];
  }
}

const Tensor& Var::value() const { return graph_->value(id_); }
const Tensor& Var::grad() const { return graph_->grad(id_); }

Rng& Graph::rng() {
  if (!rng_) throw ContractError("graph has no Rng but a stochastic op was requested");
  return *rng_;
}

Var Graph::constant(Tensor value) { return record("constant", std::move(value), {}, nullptr); }

Var Graph::leaf(Tensor value) {
  Var v = record("leaf", std::move(value), {}, nullptr);
  nodes_[v.id()].requires_grad = true;
  return v;
}

Var Graph::param(Parameter& p) {
  auto it = bound_.find(&p);
  if (it != bound_.end()) return Var(this, it->second);
  Var v = record("param", p.value, {}, nullptr);
  nodes_[v.id()].param = &p;
  nodes_[v.id()].requires_grad = p.trainable;
  bound_.emplace(&p, v.id());
  return v;
}

Var Graph::record(std::string_view op, Tensor value, std::vector<std::size_t> parents,
                  BackwardFn backward) {
  if (!value.all_finite()) {
    throw NumericError("operation '" + std::string(op) + "' produced a non-finite value");
  }
  Node node;
  node.value = std::move(value);
  for (auto p : parents) node.requires_grad = node.requires_grad || nodes_[p].requires_grad;
  node.parents = std::move(parents);
  if (node.requires_grad) node.backward = std::move(backward);
  nodes_.push_back(std::move(node));
  return Var(this, nodes_.size() - 1);
}

Var Graph::record_sink(std::string_view op, Tensor value, BackwardFn backward) {
  Var v = record(op, std::move(value), {}, nullptr);
  nodes_[v.id()].requires_grad = true;
  nodes_[v.id()].backward = std::move(backward);
  return v;
}

Tensor& Graph::grad_mut(std::size_t id) {
  Node& n = nodes_[id];
  if (n.grad.empty()) n.grad = Tensor(n.value.shape());
  return n.grad;
}

void Graph::backward(Var output) {
  if (output.graph() != this) throw ContractError("backward: output belongs to another graph");
  if (output.value().size() != 1) {
    throw ContractError("backward requires a scalar output, got shape " +
                        shape_string(output.shape()));
  }
  if (backward_done_) throw ContractError("backward already ran on this graph");
  backward_done_ = true;
  grad_mut(output.id())[0] = 1.0;
  for (std::size_t id = output.id() + 1; id-- > 0;) {
    Node& n = nodes_[id];
    if (!n.requires_grad || n.grad.empty()) continue;
    if (n.backward) n.backward(*this, id);
    if (n.param) {
      auto& dst = n.param->grad.storage();
      const auto& src = n.grad.storage();
      for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
    }
  }
  for (Node& n : nodes_) {
    if (!n.grad.all_finite()) throw NumericError("backward produced a non-finite gradient");
  }
}

}  // namespace hosdp
