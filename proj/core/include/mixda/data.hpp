#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mixda/tensor.hpp"
#include "mixda/vocab.hpp"

namespace mixda {

// Row-major integer grid for token ids, labels and padding flags.
struct IntGrid {
  int rows = 0;
  int cols = 0;
  std::vector<int> v;

  IntGrid() = default;
  IntGrid(int r, int c, int fill) : rows(r), cols(c), v(static_cast<std::size_t>(r) * c, fill) {}
  int& at(int r, int c) { return v[static_cast<std::size_t>(r) * cols + c]; }
  int at(int r, int c) const { return v[static_cast<std::size_t>(r) * cols + c]; }
};

struct MLMBatch {
  IntGrid input_ids;       // [B, T]
  IntGrid labels;          // [B, T]; kIgnoreLabel at unsupervised positions
  IntGrid attention_mask;  // [B, T]; 1 = real token, 0 = padding
};

struct TaskBatch {
  IntGrid input_ids;
  IntGrid attention_mask;
  std::vector<int> labels;      // classification
  std::vector<double> targets;  // regression
};

// A single pre-masked row (used for cloze training data and fixed probes).
struct MlmRow {
  std::vector<int> input_ids;
  std::vector<int> labels;  // same length; kIgnoreLabel off the masked spots
};

struct KnowledgeTriple {
  std::string subject;
  std::string relation;
  std::string object;
};

struct ClozeResult {
  std::vector<std::string> tokens;     // instantiated sentence, objects replaced by <mask>
  std::vector<int> masked_positions;   // indices into tokens
  std::vector<std::string> answers;    // original object tokens, one per mask
};

struct LabeledExample {
  std::string text;
  std::string text2;  // empty when single-sentence
  double label = 0.0;
};

struct LabeledDataset {
  std::vector<LabeledExample> train;
  std::vector<LabeledExample> validation;
  int num_classes = 0;  // 0 for regression
};

struct FewShotSplit {
  std::vector<LabeledExample> train;       // K per class
  std::vector<LabeledExample> validation;  // K per class, disjoint from train
  std::vector<LabeledExample> test;        // the source validation set
  int k = 0;
  std::uint64_t seed = 0;
};

// --- masked-LM collation ----------------------------------------------------

struct CollateOptions {
  double select_prob = 0.15;  // chance that an eligible token is altered/selected
  double mask_frac = 0.85;    // of selected: replaced with <mask>
  double keep_frac = 0.10;    // of selected: left unchanged (rest become random)
};

// Pads sequences to the longest one, selects eligible (non-special) tokens
// with select_prob, rewrites them per the mask/keep/random split, and sets
// labels at selected positions only. Deterministic given the seed.
MLMBatch mlm_collate(const std::vector<std::vector<int>>& sequences, const Vocab& vocab,
                     std::uint64_t seed, const CollateOptions& options = {});

// Pads pre-masked rows into a batch without further alteration.
MLMBatch rows_to_batch(const std::vector<MlmRow>& rows);

// --- structured knowledge ---------------------------------------------------

// Relation-tag patterns with {subj} / {obj} placeholders.
class TemplateTable {
 public:
  static TemplateTable builtin();
  void set(const std::string& tag, const std::string& pattern);
  // Lines of "tag<TAB>pattern"; # starts a comment.
  void load_file(const std::filesystem::path& path);
  const std::string& pattern(const std::string& tag) const;  // DataError when missing
  bool has(const std::string& tag) const { return patterns_.count(tag) != 0; }

 private:
  std::map<std::string, std::string> patterns_;
};

// Instantiates the relation's template and replaces every object token with
// one <mask> each.
ClozeResult triple_to_cloze(const KnowledgeTriple& triple, const TemplateTable& templates);

// Encoded training row for a cloze: <cls> + sentence ids with <mask> at the
// masked spots; labels carry the answer ids there.
MlmRow cloze_to_row(const ClozeResult& cloze, const Vocab& vocab, int max_len);

// --- few-shot protocol --------------------------------------------------------

// K train + K validation examples per class, sampled without replacement from
// the dataset's training pool; the original validation pool becomes the test
// set. Classes with fewer than 2K examples raise DataError.
FewShotSplit few_shot_sample(const LabeledDataset& dataset, int k, std::uint64_t seed);

// --- corpus loading -------------------------------------------------------------

enum class CorpusFormat { jsonl_text, tsv_triples, jsonl_labeled };

std::optional<CorpusFormat> parse_corpus_format(const std::string& name);
std::string corpus_format_name(CorpusFormat format);

struct Corpus {
  CorpusFormat format = CorpusFormat::jsonl_text;
  std::vector<std::string> texts;            // jsonl_text
  std::vector<KnowledgeTriple> triples;      // tsv_triples
  std::vector<LabeledExample> examples;      // jsonl_labeled
};

Corpus load_corpus(const std::filesystem::path& path, CorpusFormat format);

}  // namespace mixda
