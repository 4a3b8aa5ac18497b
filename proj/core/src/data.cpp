#include "mixda/data.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "mixda/rng.hpp"

namespace mixda {

// --- collation ---------------------------------------------------------------

MLMBatch mlm_collate(const std::vector<std::vector<int>>& sequences, const Vocab& vocab,
                     std::uint64_t seed, const CollateOptions& options) {
  const int batch = static_cast<int>(sequences.size());
  int max_len = 1;
  for (const auto& s : sequences) max_len = std::max(max_len, static_cast<int>(s.size()));

  MLMBatch out;
  out.input_ids = IntGrid(batch, max_len, Vocab::kPad);
  out.labels = IntGrid(batch, max_len, kIgnoreLabel);
  out.attention_mask = IntGrid(batch, max_len, 0);

  Rng rng(seed);
  const int vocab_words = vocab.size() - Vocab::kNumReserved;
  for (int b = 0; b < batch; ++b) {
    const auto& seq = sequences[b];
    for (int t = 0; t < static_cast<int>(seq.size()); ++t) {
      const int id = seq[t];
      out.input_ids.at(b, t) = id;
      out.attention_mask.at(b, t) = 1;
      if (vocab.is_special(id)) continue;
      if (rng.uniform() >= options.select_prob) continue;
      out.labels.at(b, t) = id;
      const double u = rng.uniform();
      if (u < options.mask_frac) {
        out.input_ids.at(b, t) = Vocab::kMask;
      } else if (u < options.mask_frac + options.keep_frac) {
        // left unchanged
      } else if (vocab_words > 0) {
        out.input_ids.at(b, t) = Vocab::kNumReserved + rng.uniform_int(0, vocab_words);
      }
    }
  }
  return out;
}

MLMBatch rows_to_batch(const std::vector<MlmRow>& rows) {
  const int batch = static_cast<int>(rows.size());
  int max_len = 1;
  for (const auto& r : rows) max_len = std::max(max_len, static_cast<int>(r.input_ids.size()));
  MLMBatch out;
  out.input_ids = IntGrid(batch, max_len, Vocab::kPad);
  out.labels = IntGrid(batch, max_len, kIgnoreLabel);
  out.attention_mask = IntGrid(batch, max_len, 0);
  for (int b = 0; b < batch; ++b) {
    const auto& r = rows[b];
    for (int t = 0; t < static_cast<int>(r.input_ids.size()); ++t) {
      out.input_ids.at(b, t) = r.input_ids[t];
      out.labels.at(b, t) = r.labels[t];
      out.attention_mask.at(b, t) = 1;
    }
  }
  return out;
}

// --- templates ------------------------------------------------------------------

TemplateTable TemplateTable::builtin() {
  TemplateTable t;
  t.set("/r/LocatedAt", "the {subj} is located at {obj} .");
  t.set("/r/IsA", "{subj} is a {obj} .");
  t.set("/r/UsedFor", "{subj} is used for {obj} .");
  t.set("/r/PartOf", "{subj} is part of {obj} .");
  t.set("/r/CapableOf", "{subj} is capable of {obj} .");
  return t;
}

void TemplateTable::set(const std::string& tag, const std::string& pattern) {
  if (pattern.find("{subj}") == std::string::npos || pattern.find("{obj}") == std::string::npos)
    throw DataError("template for '" + tag + "' must contain {subj} and {obj}");
  patterns_[tag] = pattern;
}

void TemplateTable::load_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open template file: " + path.string());
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos)
      throw DataError(path.string() + ":" + std::to_string(line_no) +
                      ": expected tag<TAB>pattern");
    set(line.substr(0, tab), line.substr(tab + 1));
  }
}

const std::string& TemplateTable::pattern(const std::string& tag) const {
  auto it = patterns_.find(tag);
  if (it == patterns_.end()) throw DataError("no template for relation tag '" + tag + "'");
  return it->second;
}

ClozeResult triple_to_cloze(const KnowledgeTriple& triple, const TemplateTable& templates) {
  if (triple.object.empty()) throw DataError("triple has empty object");
  const std::string& pattern = templates.pattern(triple.relation);
  const std::vector<std::string> subj_tokens = Vocab::tokenize(triple.subject);
  const std::vector<std::string> obj_tokens = Vocab::tokenize(triple.object);
  if (obj_tokens.empty()) throw DataError("triple object '" + triple.object + "' has no tokens");

  ClozeResult out;
  std::size_t pos = 0;
  while (pos < pattern.size()) {
    const auto brace = pattern.find('{', pos);
    const std::string chunk = pattern.substr(pos, brace - pos);
    for (const auto& t : Vocab::tokenize(chunk)) out.tokens.push_back(t);
    if (brace == std::string::npos) break;
    if (pattern.compare(brace, 6, "{subj}") == 0) {
      for (const auto& t : subj_tokens) out.tokens.push_back(t);
      pos = brace + 6;
    } else if (pattern.compare(brace, 5, "{obj}") == 0) {
      for (const auto& t : obj_tokens) {
        out.masked_positions.push_back(static_cast<int>(out.tokens.size()));
        out.tokens.push_back("<mask>");
        out.answers.push_back(t);
      }
      pos = brace + 5;
    } else {
      throw DataError("template for '" + triple.relation + "' has an unknown placeholder");
    }
  }
  return out;
}

MlmRow cloze_to_row(const ClozeResult& cloze, const Vocab& vocab, int max_len) {
  MlmRow row;
  row.input_ids.push_back(Vocab::kCls);
  row.labels.push_back(kIgnoreLabel);
  std::size_t next_answer = 0;
  for (std::size_t i = 0; i < cloze.tokens.size(); ++i) {
    if (static_cast<int>(row.input_ids.size()) >= max_len) break;
    const bool masked = std::find(cloze.masked_positions.begin(), cloze.masked_positions.end(),
                                  static_cast<int>(i)) != cloze.masked_positions.end();
    if (masked) {
      row.input_ids.push_back(Vocab::kMask);
      row.labels.push_back(vocab.id(cloze.answers[next_answer++]));
    } else {
      row.input_ids.push_back(vocab.id(cloze.tokens[i]));
      row.labels.push_back(kIgnoreLabel);
    }
  }
  return row;
}

// --- few-shot protocol -------------------------------------------------------------

FewShotSplit few_shot_sample(const LabeledDataset& dataset, int k, std::uint64_t seed) {
  if (k < 0) throw ConfigError("few_shot_sample: negative K");
  FewShotSplit split;
  split.k = k;
  split.seed = seed;
  split.test = dataset.validation;

  std::map<int, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < dataset.train.size(); ++i)
    by_class[static_cast<int>(dataset.train[i].label)].push_back(i);

  for (auto& [cls, indices] : by_class) {
    if (static_cast<int>(indices.size()) < 2 * k)
      throw DataError("few_shot_sample: class " + std::to_string(cls) + " has only " +
                      std::to_string(indices.size()) + " examples, need " +
                      std::to_string(2 * k));
    Rng rng(hash_seed(seed, "few_shot.class", static_cast<std::uint64_t>(cls)));
    rng.shuffle(indices);
    for (int i = 0; i < k; ++i) split.train.push_back(dataset.train[indices[i]]);
    for (int i = k; i < 2 * k; ++i) split.validation.push_back(dataset.train[indices[i]]);
  }
  return split;
}

// --- corpus loading ------------------------------------------------------------------

std::optional<CorpusFormat> parse_corpus_format(const std::string& name) {
  if (name == "jsonl-text") return CorpusFormat::jsonl_text;
  if (name == "tsv-triples") return CorpusFormat::tsv_triples;
  if (name == "jsonl-labeled") return CorpusFormat::jsonl_labeled;
  return std::nullopt;
}

std::string corpus_format_name(CorpusFormat format) {
  switch (format) {
    case CorpusFormat::jsonl_text: return "jsonl-text";
    case CorpusFormat::tsv_triples: return "tsv-triples";
    case CorpusFormat::jsonl_labeled: return "jsonl-labeled";
  }
  return "?";
}

namespace {

[[noreturn]] void line_error(const std::filesystem::path& path, int line_no,
                             const std::string& what) {
  throw DataError(path.string() + ":" + std::to_string(line_no) + ": " + what);
}

}  // namespace

Corpus load_corpus(const std::filesystem::path& path, CorpusFormat format) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open corpus file: " + path.string());
  Corpus corpus;
  corpus.format = format;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    switch (format) {
      case CorpusFormat::jsonl_text: {
        nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.is_object() || !j.contains("text") || !j["text"].is_string())
          line_error(path, line_no, "expected {\"text\": ...}");
        corpus.texts.push_back(j["text"].get<std::string>());
        break;
      }
      case CorpusFormat::tsv_triples: {
        const auto t1 = line.find('\t');
        const auto t2 = t1 == std::string::npos ? std::string::npos : line.find('\t', t1 + 1);
        if (t1 == std::string::npos || t2 == std::string::npos)
          line_error(path, line_no, "expected subject<TAB>relation<TAB>object");
        KnowledgeTriple triple{line.substr(0, t1), line.substr(t1 + 1, t2 - t1 - 1),
                               line.substr(t2 + 1)};
        if (triple.object.empty()) line_error(path, line_no, "empty object");
        corpus.triples.push_back(std::move(triple));
        break;
      }
      case CorpusFormat::jsonl_labeled: {
        nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.is_object() || !j.contains("text") || !j["text"].is_string())
          line_error(path, line_no, "expected {\"text\": ..., \"label\": ...}");
        if (!j.contains("label") || !j["label"].is_number())
          line_error(path, line_no, "missing numeric \"label\" field");
        LabeledExample ex;
        ex.text = j["text"].get<std::string>();
        if (j.contains("text2")) {
          if (!j["text2"].is_string()) line_error(path, line_no, "\"text2\" must be a string");
          ex.text2 = j["text2"].get<std::string>();
        }
        ex.label = j["label"].get<double>();
        corpus.examples.push_back(std::move(ex));
        break;
      }
    }
  }
  return corpus;
}

}  // namespace mixda
