#pragma once

#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "mixda/errors.hpp"

namespace mixda {

// Word-level vocabulary. Reserved tokens occupy fixed low ids; word entries
// follow, ranked by corpus frequency with lexicographic tie-breaks.
class Vocab {
 public:
  static constexpr int kPad = 0;
  static constexpr int kUnk = 1;
  static constexpr int kMask = 2;
  static constexpr int kCls = 3;
  static constexpr int kSep = 4;
  static constexpr int kNumReserved = 5;

  Vocab();

  // Lowercased word tokens; punctuation characters are single-char tokens.
  static std::vector<std::string> tokenize(std::string_view text);

  // max_size caps the total vocabulary including the reserved entries.
  static Vocab build(const std::vector<std::string>& texts, int max_size);
  static Vocab from_entries(const std::vector<std::string>& words, int max_size);

  int id(const std::string& token) const;  // kUnk when absent
  const std::string& token(int id) const;
  bool contains(const std::string& token) const { return map_.count(token) != 0; }
  int size() const { return static_cast<int>(tokens_.size()); }
  int max_size() const { return max_size_; }
  bool is_special(int id) const { return id >= 0 && id < kNumReserved; }

  // Non-reserved entries in id order (for serialization).
  std::vector<std::string> entries() const;

  bool operator==(const Vocab& other) const {
    return tokens_ == other.tokens_ && max_size_ == other.max_size_;
  }

 private:
  void insert(const std::string& token);
  std::vector<std::string> tokens_;
  std::map<std::string, int> map_;
  int max_size_ = 0;
};

// <cls> + word ids, truncated to max_len. Unknown words map to <unk>.
std::vector<int> encode(const std::string& text, const Vocab& vocab, int max_len);
// <cls> + first ids + <sep> + second ids, truncated to max_len.
std::vector<int> encode_pair(const std::string& first, const std::string& second,
                             const Vocab& vocab, int max_len);
// Token strings for a sequence of ids (drops <cls>/<sep>/<pad>).
std::vector<std::string> decode_words(const std::vector<int>& ids, const Vocab& vocab);

}  // namespace mixda
