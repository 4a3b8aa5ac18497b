#pragma once

#include <filesystem>
#include <map>
#include <string>

#include "mixda/model.hpp"

namespace mixda::checkpoint {

// File layout (all integers little-endian):
//   6 bytes   magic "MIXDA1"
//   u32       config text length, then that many UTF-8 bytes
//   u32       entry count
//   per entry, names sorted lexicographically:
//     u32     name length, then the UTF-8 name
//     u32     rank
//     u32[r]  extents
//     f64[n]  row-major payload, IEEE-754 little-endian
struct Contents {
  ModelConfig config;
  Vocab vocab;
  std::map<std::string, Tensor> tensors;
};

void save(const std::filesystem::path& path, const ModelConfig& cfg, const Vocab& vocab,
          const std::map<std::string, Tensor>& tensors);

// Verifies magic, counts, and every entry's shape against the embedded
// config's parameter registry.
Contents load(const std::filesystem::path& path);

std::string canonical_config_text(const ModelConfig& cfg, const Vocab& vocab);

// Subsets of a store for saving.
std::map<std::string, Tensor> select_by_prefix(const ParameterStore& store,
                                               const std::string& substring);
std::map<std::string, Tensor> select_all(const ParameterStore& store);
std::map<std::string, Tensor> select_names(const ParameterStore& store,
                                           const std::set<std::string>& names);

}  // namespace mixda::checkpoint
