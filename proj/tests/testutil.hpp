#pragma once

#include <map>
#include <string>
#include <vector>

#include "mixda/data.hpp"
#include "mixda/model.hpp"
#include "mixda/rng.hpp"
#include "mixda/train.hpp"
#include "mixda/vocab.hpp"

namespace testutil {

// A tiny closed world: domain entities ("gadgets") live in cities and their
// locations are the facts to inject; general text mixes filler sentences
// with location statements about a disjoint set of "widget" entities, so the
// location pattern is old-domain knowledge while the gadget facts are new.
struct ToyWorld {
  std::vector<std::string> entities;         // domain entities (gadgets)
  std::vector<std::string> general_entities; // old-domain entities (widgets)
  std::vector<std::string> cities;
  std::map<std::string, std::string> location;  // covers both entity kinds
  std::vector<mixda::KnowledgeTriple> facts;    // one per domain entity
  std::vector<std::string> general;             // old-domain corpus
  mixda::TemplateTable templates;
};

inline std::string location_sentence(const std::string& entity, const std::string& city) {
  return "the " + entity + " is located at " + city + " .";
}

inline ToyWorld make_world(int n_entities, int n_cities, int n_general, std::uint64_t seed,
                           int n_general_entities = 24) {
  static const std::vector<std::string> kNouns = {
      "engine", "garden", "market", "bridge", "lantern", "harbor", "cellar", "meadow",
      "tunnel", "castle", "mill",   "tower",  "forest",  "valley", "river",  "square"};
  static const std::vector<std::string> kVerbs = {"holds",  "finds", "moves", "guards",
                                                  "shows",  "keeps", "meets", "makes"};
  static const std::vector<std::string> kAdjs = {"small", "bright", "old",   "quiet",
                                                 "green", "heavy",  "plain", "round"};
  static const std::vector<std::string> kCityPool = {
      "paris", "london", "tokyo", "cairo", "lima", "oslo", "delhi", "quito"};

  ToyWorld w;
  w.templates = mixda::TemplateTable::builtin();
  mixda::Rng rng(seed);
  for (int c = 0; c < n_cities; ++c) w.cities.push_back(kCityPool.at(c));
  for (int e = 0; e < n_entities; ++e) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "gadget%02d", e);
    w.entities.emplace_back(buf);
  }
  for (int e = 0; e < n_general_entities; ++e) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "widget%02d", e);
    w.general_entities.emplace_back(buf);
  }
  for (int e = 0; e < n_entities; ++e) {
    const std::string& city = w.cities[e % n_cities];  // balanced assignment
    w.location[w.entities[e]] = city;
    w.facts.push_back({w.entities[e], "/r/LocatedAt", city});
  }
  for (int e = 0; e < n_general_entities; ++e)
    w.location[w.general_entities[e]] = w.cities[(e + 1) % n_cities];
  for (int i = 0; i < n_general; ++i) {
    const int pattern = rng.uniform_int(0, 5);
    std::string s;
    switch (pattern) {
      case 0:
        s = "the " + kNouns[rng.uniform_int(0, kNouns.size())] + " " +
            kVerbs[rng.uniform_int(0, kVerbs.size())] + " the " +
            kAdjs[rng.uniform_int(0, kAdjs.size())] + " " +
            kNouns[rng.uniform_int(0, kNouns.size())] + " .";
        break;
      case 1:
        s = w.cities[rng.uniform_int(0, w.cities.size())] + " is a " +
            kAdjs[rng.uniform_int(0, kAdjs.size())] + " place .";
        break;
      case 2: {
        const auto& ent = w.general_entities[rng.uniform_int(0, w.general_entities.size())];
        s = "the " + ent + " looks " + kAdjs[rng.uniform_int(0, kAdjs.size())] + " .";
        break;
      }
      case 3:
        s = "people travel to " + w.cities[rng.uniform_int(0, w.cities.size())] + " with the " +
            kNouns[rng.uniform_int(0, kNouns.size())] + " .";
        break;
      default: {
        const auto& ent = w.general_entities[rng.uniform_int(0, w.general_entities.size())];
        s = location_sentence(ent, w.location.at(ent));
        break;
      }
    }
    w.general.push_back(s);
  }
  return w;
}

inline std::vector<std::string> fact_sentences(const ToyWorld& w) {
  std::vector<std::string> out;
  for (const auto& f : w.facts) {
    mixda::ClozeResult cloze = mixda::triple_to_cloze(f, w.templates);
    std::vector<std::string> tokens = cloze.tokens;
    for (std::size_t i = 0; i < cloze.masked_positions.size(); ++i)
      tokens[cloze.masked_positions[i]] = cloze.answers[i];
    std::string s;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
      if (i) s += ' ';
      s += tokens[i];
    }
    out.push_back(s);
  }
  return out;
}

inline mixda::Vocab world_vocab(const ToyWorld& w, int max_size = 300) {
  std::vector<std::string> texts = fact_sentences(w);
  texts.insert(texts.end(), w.general.begin(), w.general.end());
  return mixda::Vocab::build(texts, max_size);
}

// Cloze questions "the <entity> is located at <mask> ." labeled with the
// city class, for entities in [begin, end).
inline std::vector<mixda::LabeledExample> location_questions(const ToyWorld& w, int begin,
                                                             int end) {
  std::vector<mixda::LabeledExample> out;
  for (int e = begin; e < end; ++e) {
    const std::string& entity = w.entities.at(e);
    int label = -1;
    for (std::size_t c = 0; c < w.cities.size(); ++c)
      if (w.cities[c] == w.location.at(entity)) label = static_cast<int>(c);
    out.push_back({"the " + entity + " is located at <mask> .", "", static_cast<double>(label)});
  }
  return out;
}

// Train pool over [0, train_entities), test pool (the dataset's validation
// split) over [test_begin, test_end).
inline mixda::LabeledDataset location_task(const ToyWorld& w, int train_begin, int train_end,
                                           int test_begin, int test_end) {
  mixda::LabeledDataset task;
  task.num_classes = static_cast<int>(w.cities.size());
  task.train = location_questions(w, train_begin, train_end);
  task.validation = location_questions(w, test_begin, test_end);
  return task;
}

// Reference toy architecture used across the test suites.
inline mixda::ModelConfig toy_config(int vocab_size) {
  mixda::ModelConfig cfg;
  cfg.vocab_size = vocab_size;
  cfg.hidden_dim = 32;
  cfg.ffn_dim = 64;
  cfg.num_layers = 2;
  cfg.num_heads = 4;
  cfg.max_seq_len = 24;
  cfg.adapter_layers = {0, 1};
  cfg.adapter_reduction = 2;
  cfg.num_domain_adapters = 1;
  cfg.dropout = 0.0;
  return cfg;
}

// The architecture used by the end-to-end experiments: one extra layer whose
// attention carries adapter-injected content to the pooled first token.
inline mixda::ModelConfig pipeline_config(int vocab_size) {
  mixda::ModelConfig cfg = toy_config(vocab_size);
  cfg.num_layers = 3;
  cfg.adapter_layers = {0, 1};
  cfg.adapter_reduction = 1;
  cfg.task_adapter_reduction = 4;
  return cfg;
}

// Copies every value of `src` whose name exists in `dst`.
inline void copy_matching(const mixda::ParameterStore& src, mixda::ParameterStore& dst) {
  for (const auto& [name, t] : src.items()) {
    if (!dst.contains(name)) continue;
    mixda::Tensor target = dst.ref(name);
    std::copy(t.data().begin(), t.data().end(), target.data().begin());
  }
}

inline mixda::MlmCorpus fact_corpus(const ToyWorld& w, const mixda::Vocab& vocab, int max_len) {
  return mixda::corpus_from_triples(w.facts, w.templates, vocab, max_len);
}

inline mixda::MlmCorpus general_corpus(const ToyWorld& w, const mixda::Vocab& vocab,
                                       int max_len) {
  return mixda::corpus_from_texts(w.general, vocab, max_len);
}

}  // namespace testutil
