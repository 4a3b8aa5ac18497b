#include "mixda/store.hpp"

#include <algorithm>

namespace mixda {

Tensor& ParameterStore::add(const std::string& name, Tensor t) {
  auto [it, inserted] = params_.emplace(name, std::move(t));
  if (!inserted) throw ConfigError("ParameterStore: duplicate parameter name '" + name + "'");
  return it->second;
}

Tensor ParameterStore::at(const std::string& name) const {
  auto it = params_.find(name);
  if (it == params_.end()) throw ConfigError("ParameterStore: unknown parameter '" + name + "'");
  return it->second;
}

Tensor& ParameterStore::ref(const std::string& name) {
  auto it = params_.find(name);
  if (it == params_.end()) throw ConfigError("ParameterStore: unknown parameter '" + name + "'");
  return it->second;
}

std::vector<std::string> ParameterStore::names() const {
  std::vector<std::string> out;
  out.reserve(params_.size());
  for (const auto& [name, t] : params_) out.push_back(name);
  return out;
}

void ParameterStore::set_trainable(std::set<std::string> mask) {
  for (const std::string& name : mask)
    if (!params_.count(name))
      throw ConfigError("ParameterStore: trainable mask names unknown parameter '" + name + "'");
  trainable_ = std::move(mask);
  for (auto& [name, t] : params_) {
    const bool on = trainable_.count(name) != 0;
    t.set_requires_grad(on);
    if (on) {
      t.ensure_grad();
      t.zero_grad();
    }
  }
}

void ParameterStore::zero_grads() {
  for (auto& [name, t] : params_) t.zero_grad();
}

ParameterStore ParameterStore::clone() const {
  ParameterStore out;
  for (const auto& [name, t] : params_) out.add(name, t.clone_detached());
  out.set_trainable(trainable_);
  return out;
}

void ParameterStore::load_values(const std::map<std::string, Tensor>& tensors) {
  for (const auto& [name, src] : tensors) {
    Tensor& dst = ref(name);
    if (dst.shape() != src.shape())
      throw DimensionError("ParameterStore: shape mismatch loading '" + name + "': " +
                           shape_str(dst.shape()) + " vs " + shape_str(src.shape()));
    std::copy(src.data().begin(), src.data().end(), dst.data().begin());
  }
}

}  // namespace mixda
