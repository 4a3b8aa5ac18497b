#include "mixda/vocab.hpp"

#include <algorithm>
#include <cctype>

namespace mixda {

namespace {
const std::vector<std::string> kReservedTokens = {"<pad>", "<unk>", "<mask>", "<cls>", "<sep>"};
}

Vocab::Vocab() {
  for (const auto& t : kReservedTokens) insert(t);
  max_size_ = kNumReserved;
}

void Vocab::insert(const std::string& token) {
  map_.emplace(token, static_cast<int>(tokens_.size()));
  tokens_.push_back(token);
}

std::vector<std::string> Vocab::tokenize(std::string_view text) {
  std::vector<std::string> out;
  std::string word;
  auto flush = [&] {
    if (!word.empty()) {
      out.push_back(word);
      word.clear();
    }
  };
  for (std::size_t i = 0; i < text.size(); ++i) {
    const unsigned char c = static_cast<unsigned char>(text[i]);
    // Angle-bracketed special tokens pass through whole (e.g. "<mask>").
    if (c == '<') {
      const auto close = text.find('>', i);
      if (close != std::string_view::npos && close > i + 1) {
        std::string inner(text.substr(i + 1, close - i - 1));
        const bool word_like = std::all_of(inner.begin(), inner.end(), [](unsigned char ch) {
          return std::isalpha(ch) != 0;
        });
        if (word_like) {
          flush();
          std::transform(inner.begin(), inner.end(), inner.begin(),
                         [](unsigned char ch) { return std::tolower(ch); });
          out.push_back("<" + inner + ">");
          i = close;
          continue;
        }
      }
    }
    if (std::isalnum(c)) {
      word.push_back(static_cast<char>(std::tolower(c)));
    } else if (std::isspace(c)) {
      flush();
    } else {
      flush();
      out.emplace_back(1, static_cast<char>(c));
    }
  }
  flush();
  return out;
}

Vocab Vocab::build(const std::vector<std::string>& texts, int max_size) {
  if (texts.empty()) throw DataError("build_vocab: empty corpus");
  if (max_size <= kNumReserved)
    throw ConfigError("build_vocab: max_size must exceed the " +
                      std::to_string(kNumReserved) + " reserved entries");
  std::map<std::string, std::int64_t> counts;
  std::int64_t total = 0;
  for (const std::string& text : texts)
    for (const std::string& tok : tokenize(text)) {
      ++counts[tok];
      ++total;
    }
  if (total == 0) throw DataError("build_vocab: corpus contains no tokens");
  std::vector<std::pair<std::string, std::int64_t>> ranked(counts.begin(), counts.end());
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  Vocab v;
  v.max_size_ = max_size;
  for (const auto& [tok, cnt] : ranked) {
    if (v.size() >= max_size) break;
    if (v.map_.count(tok)) continue;  // a reserved literal in the corpus
    v.insert(tok);
  }
  return v;
}

Vocab Vocab::from_entries(const std::vector<std::string>& words, int max_size) {
  Vocab v;
  v.max_size_ = max_size;
  for (const std::string& w : words) {
    if (v.map_.count(w))
      throw DataError("vocab: duplicate entry '" + w + "'");
    v.insert(w);
  }
  return v;
}

int Vocab::id(const std::string& token) const {
  auto it = map_.find(token);
  return it == map_.end() ? kUnk : it->second;
}

const std::string& Vocab::token(int id) const {
  if (id < 0 || id >= size())
    throw DataError("vocab: id " + std::to_string(id) + " outside [0, " +
                    std::to_string(size()) + ")");
  return tokens_[static_cast<std::size_t>(id)];
}

std::vector<std::string> Vocab::entries() const {
  return {tokens_.begin() + kNumReserved, tokens_.end()};
}

std::vector<int> encode(const std::string& text, const Vocab& vocab, int max_len) {
  std::vector<int> ids;
  ids.push_back(Vocab::kCls);
  for (const std::string& tok : Vocab::tokenize(text)) {
    if (static_cast<int>(ids.size()) >= max_len) break;
    ids.push_back(vocab.id(tok));
  }
  if (static_cast<int>(ids.size()) > max_len) ids.resize(max_len);
  return ids;
}

std::vector<int> encode_pair(const std::string& first, const std::string& second,
                             const Vocab& vocab, int max_len) {
  std::vector<int> ids;
  ids.push_back(Vocab::kCls);
  for (const std::string& tok : Vocab::tokenize(first)) {
    if (static_cast<int>(ids.size()) >= max_len) break;
    ids.push_back(vocab.id(tok));
  }
  if (static_cast<int>(ids.size()) < max_len) ids.push_back(Vocab::kSep);
  for (const std::string& tok : Vocab::tokenize(second)) {
    if (static_cast<int>(ids.size()) >= max_len) break;
    ids.push_back(vocab.id(tok));
  }
  return ids;
}

std::vector<std::string> decode_words(const std::vector<int>& ids, const Vocab& vocab) {
  std::vector<std::string> out;
  for (int id : ids) {
    if (id == Vocab::kCls || id == Vocab::kSep || id == Vocab::kPad) continue;
    out.push_back(vocab.token(id));
  }
  return out;
}

}  // namespace mixda
