#include "pwm/numerics/parameters.hpp"

#include <cmath>

#include "pwm/errors.hpp"

namespace pwm::nn {

const char* to_string(ParamGroup g) {
  switch (g) {
    case ParamGroup::Encoder:
      return "encoder";
    case ParamGroup::Decoder:
      return "decoder";
    case ParamGroup::Baseline:
      return "baseline";
  }
  return "?";
}

ParamGroup param_group_from_string(const std::string& s) {
  if (s == "encoder") return ParamGroup::Encoder;
  if (s == "decoder") return ParamGroup::Decoder;
  if (s == "baseline") return ParamGroup::Baseline;
  throw FormatError("unknown parameter group '" + s + "'");
}

void ParameterSet::add(const std::string& name, Tensor value, ParamGroup group) {
  if (contains(name)) throw ContractError("duplicate parameter '" + name + "'");
  Tensor grad(value.shape(), 0.0);
  entries_.emplace(name, Entry{std::move(value), std::move(grad), group});
}

const ParameterSet::Entry& ParameterSet::entry(const std::string& name) const {
  auto it = entries_.find(name);
  if (it == entries_.end()) throw ContractError("unknown parameter '" + name + "'");
  return it->second;
}

Tensor& ParameterSet::value(const std::string& name) { return const_cast<Entry&>(entry(name)).value; }
const Tensor& ParameterSet::value(const std::string& name) const { return entry(name).value; }
Tensor& ParameterSet::grad(const std::string& name) { return const_cast<Entry&>(entry(name)).grad; }
const Tensor& ParameterSet::grad(const std::string& name) const { return entry(name).grad; }
ParamGroup ParameterSet::group(const std::string& name) const { return entry(name).group; }

std::vector<std::string> ParameterSet::names() const {
  std::vector<std::string> out;
  out.reserve(entries_.size());
  for (const auto& [k, _] : entries_) out.push_back(k);
  return out;
}

std::size_t ParameterSet::count() const {
  std::size_t n = 0;
  for (const auto& [_, e] : entries_) n += e.value.size();
  return n;
}

std::size_t ParameterSet::count(ParamGroup g) const {
  std::size_t n = 0;
  for (const auto& [_, e] : entries_)
    if (e.group == g) n += e.value.size();
  return n;
}

void ParameterSet::zero_grad() {
  for (auto& [_, e] : entries_) e.grad.fill(0.0);
}

double ParameterSet::grad_norm() const {
  double s = 0.0;
  for (const auto& [_, e] : entries_)
    for (double g : e.grad.span()) s += g * g;
  return std::sqrt(s);
}

void ParameterSet::clip_grad_norm(double max_norm) {
  const double norm = grad_norm();
  if (!(norm > max_norm)) return;
  const double f = max_norm / norm;
  for (auto& [_, e] : entries_)
    for (double& g : e.grad.span()) g *= f;
}

Binding::Binding(const ParameterSet& params, bool trainable)
    : params_(&params), mutable_params_(nullptr), trainable_(false) {
  if (trainable) throw ContractError("trainable binding requires a mutable parameter set");
}

Binding::Binding(ParameterSet& params, bool trainable)
    : params_(&params), mutable_params_(&params), trainable_(trainable) {}

Var Binding::operator()(const std::string& name) {
  auto it = cache_.find(name);
  if (it != cache_.end()) return it->second;
  Var v = trainable_ ? Var::parameter(mutable_params_->value(name), mutable_params_->grad(name))
                     : Var::view(params_->value(name));
  cache_.emplace(name, v);
  return v;
}

}  // namespace pwm::nn
