#pragma once

#include <cstddef>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "hosdp/rng.hpp"
#include "hosdp/tensor.hpp"

namespace hosdp {

// A learned tensor that outlives any single computation record.
struct Parameter {
  std::string name;
  Tensor value;
  Tensor grad;
  bool trainable = true;

  void zero_grad() { grad.fill(0.0); }
};

// Owns parameters in insertion order; the order fixes checkpoint layout and
// the optimizer's state vector.
class ParameterStore {
 public:
  ParameterStore() = default;
  ParameterStore(const ParameterStore&) = delete;
  ParameterStore& operator=(const ParameterStore&) = delete;
  ParameterStore(ParameterStore&&) = default;
  ParameterStore& operator=(ParameterStore&&) = default;

  Parameter& add(std::string name, Tensor init, bool trainable = true);
  Parameter& get(std::string_view name);
  const Parameter& get(std::string_view name) const;
  bool contains(std::string_view name) const;

  std::vector<Parameter*> all();
  std::vector<const Parameter*> all() const;
  std::vector<Parameter*> trainable();
  std::size_t size() const { return params_.size(); }

  void zero_grad();
  // Snapshot/restore of values, used for best-checkpoint tracking.
  std::vector<Tensor> snapshot() const;
  void restore(const std::vector<Tensor>& values);

 private:
  std::vector<std::unique_ptr<Parameter>> params_;
  std::map<std::string, std::size_t, std::less<>> index_;
};

enum class Mode { kTrain, kEval };

class Graph;

// Handle to a node of a Graph. Cheap to copy; valid while its Graph lives.
class Var {
 public:
  Var() = default;
  Var(Graph* graph, std::size_t id) : graph_(graph), id_(id) {}

  const Tensor& value() const;
  const Tensor& grad() const;
  const Shape& shape() const { return value().shape(); }
  Graph* graph() const { return graph_; }
  std::size_t id() const { return id_; }
  bool valid() const { return graph_ != nullptr; }

 private:
  Graph* graph_ = nullptr;
  std::size_t id_ = 0;
};

// One computation record: nodes are appended in creation order, which is a
// topological order, so backward() just walks the vector in reverse.
class Graph {
 public:
  using BackwardFn = std::function<void(Graph&, std::size_t)>;

  explicit Graph(Mode mode = Mode::kEval, Rng* rng = nullptr) : mode_(mode), rng_(rng) {}
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  Mode mode() const { return mode_; }
  bool training() const { return mode_ == Mode::kTrain; }
  Rng& rng();

  Var constant(Tensor value);
  Var leaf(Tensor value);
  // Parameters are bound once per graph; repeated calls return the same node.
  Var param(Parameter& p);

  // Reverse sweep from a scalar output. Parameter leaves add their gradient
  // into Parameter::grad.
  void backward(Var output);

  // Used by operation implementations.
  Var record(std::string_view op, Tensor value, std::vector<std::size_t> parents,
             BackwardFn backward);
  // Parentless node whose backward rule writes somewhere outside the graph.
  Var record_sink(std::string_view op, Tensor value, BackwardFn backward);
  const Tensor& value(std::size_t id) const { return nodes_[id].value; }
  const Tensor& grad(std::size_t id) const { return nodes_[id].grad; }
  Tensor& grad_mut(std::size_t id);
  bool requires_grad(std::size_t id) const { return nodes_[id].requires_grad; }
  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    std::vector<std::size_t> parents;
    BackwardFn backward;
    Parameter* param = nullptr;
    bool requires_grad = false;
  };

  std::deque<Node> nodes_;  // deque: references stay valid as nodes are appended
  std::unordered_map<const Parameter*, std::size_t> bound_;
  Mode mode_;
  Rng* rng_;
  bool backward_done_ = false;
};

}  // namespace hosdp
