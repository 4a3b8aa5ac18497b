#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "mixda/tensor.hpp"

namespace mixda {

// Named registry of every trainable array in a model. Parameters outside the
// trainable mask never receive optimizer updates.
class ParameterStore {
 public:
  Tensor& add(const std::string& name, Tensor t);
  bool contains(const std::string& name) const { return params_.count(name) != 0; }
  Tensor at(const std::string& name) const;
  Tensor& ref(const std::string& name);

  const std::map<std::string, Tensor>& items() const { return params_; }
  std::vector<std::string> names() const;
  std::size_t size() const { return params_.size(); }

  void set_trainable(std::set<std::string> mask);
  const std::set<std::string>& trainable() const { return trainable_; }
  bool is_trainable(const std::string& name) const { return trainable_.count(name) != 0; }

  void zero_grads();

  // Deep copy: fresh tensors with the same values; grads not carried over.
  ParameterStore clone() const;

  // Overwrite values of matching names; throws on unknown name or shape clash.
  void load_values(const std::map<std::string, Tensor>& tensors);

 private:
  std::map<std::string, Tensor> params_;
  std::set<std::string> trainable_;
};

}  // namespace mixda
