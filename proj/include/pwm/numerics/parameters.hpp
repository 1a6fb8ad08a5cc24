#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "pwm/numerics/autodiff.hpp"
#include "pwm/numerics/tensor.hpp"

namespace pwm::nn {

enum class ParamGroup : std::uint8_t { Encoder, Decoder, Baseline };

const char* to_string(ParamGroup g);
ParamGroup param_group_from_string(const std::string& s);

// Named parameter tensors with matching gradient buffers.
class ParameterSet {
 public:
  struct Entry {
    Tensor value;
    Tensor grad;
    ParamGroup group;
  };

  void add(const std::string& name, Tensor value, ParamGroup group);
  bool contains(const std::string& name) const { return entries_.count(name) != 0; }
  void erase(const std::string& name) { entries_.erase(name); }

  Tensor& value(const std::string& name);
  const Tensor& value(const std::string& name) const;
  Tensor& grad(const std::string& name);
  const Tensor& grad(const std::string& name) const;
  ParamGroup group(const std::string& name) const;

  std::vector<std::string> names() const;
  std::map<std::string, Entry>& entries() { return entries_; }
  const std::map<std::string, Entry>& entries() const { return entries_; }

  std::size_t count() const;
  std::size_t count(ParamGroup g) const;
  void zero_grad();
  double grad_norm() const;
  // Scales all gradients so their global L2 norm is at most max_norm.
  void clip_grad_norm(double max_norm);

 private:
  const Entry& entry(const std::string& name) const;
  std::map<std::string, Entry> entries_;
};

// Maps parameter names to graph leaves for one forward pass. Trainable
// bindings create gradient-accumulating leaves; frozen ones are read-only
// views that never build a graph.
class Binding {
 public:
  Binding(const ParameterSet& params, bool trainable);
  Binding(ParameterSet& params, bool trainable);

  Var operator()(const std::string& name);
  bool trainable() const { return trainable_; }

 private:
  const ParameterSet* params_;
  ParameterSet* mutable_params_;
  bool trainable_;
  std::map<std::string, Var> cache_;
};

}  // namespace pwm::nn
