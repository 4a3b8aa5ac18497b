#include "mixda/runconfig.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>

namespace mixda {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

int to_int(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const int r = std::stoi(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return r;
  } catch (const std::exception&) {
    throw ConfigError("config: bad integer for '" + key + "': '" + v + "'");
  }
}

double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double r = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return r;
  } catch (const std::exception&) {
    throw ConfigError("config: bad number for '" + key + "': '" + v + "'");
  }
}

std::uint64_t to_u64(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const std::uint64_t r = std::stoull(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return r;
  } catch (const std::exception&) {
    throw ConfigError("config: bad seed for '" + key + "': '" + v + "'");
  }
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "1" || v == "true" || v == "yes") return true;
  if (v == "0" || v == "false" || v == "no") return false;
  throw ConfigError("config: bad boolean for '" + key + "': '" + v + "'");
}

template <class T, class F>
std::vector<T> to_list(const std::string& key, const std::string& v, F convert) {
  std::vector<T> out;
  std::istringstream in(v);
  std::string item;
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(convert(key, item));
  }
  if (out.empty()) throw ConfigError("config: empty list for '" + key + "'");
  return out;
}

CorpusFormat to_format(const std::string& key, const std::string& v) {
  auto f = parse_corpus_format(v);
  if (!f) throw ConfigError("config: unknown format for '" + key + "': '" + v + "'");
  return *f;
}

}  // namespace

RunConfig parse_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path.string());
  const std::filesystem::path base = path.has_parent_path()
                                         ? path.parent_path()
                                         : std::filesystem::path(".");
  auto resolve = [&base](const std::string& p) -> std::filesystem::path {
    const std::filesystem::path fp(p);
    return fp.is_absolute() ? fp : base / fp;
  };

  RunConfig rc;
  // Stage 2 plugs a Pfeiffer task adapter in unless the config says otherwise.
  rc.model.task_adapter_style = TaskAdapterStyle::pfeiffer;
  bool adapter_layers_set = false;
  std::string line, section;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    line = trim(line);
    if (line.empty() || line[0] == '#' || line[0] == ';') continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw ConfigError(path.string() + ":" + std::to_string(line_no) + ": bad section header");
      section = line.substr(1, line.size() - 2);
      if (section != "model" && section != "stage1" && section != "stage2" &&
          section != "data" && section != "run")
        throw ConfigError(path.string() + ":" + std::to_string(line_no) +
                          ": unknown section '" + section + "'");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(path.string() + ":" + std::to_string(line_no) + ": expected key=value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    const std::string qual = section + "." + key;

    if (section == "model") {
      if (key == "vocab_max_size") rc.vocab_max_size = to_int(qual, value);
      else if (key == "hidden_dim") rc.model.hidden_dim = to_int(qual, value);
      else if (key == "ffn_dim") rc.model.ffn_dim = to_int(qual, value);
      else if (key == "num_layers") rc.model.num_layers = to_int(qual, value);
      else if (key == "num_heads") rc.model.num_heads = to_int(qual, value);
      else if (key == "max_seq_len") rc.model.max_seq_len = to_int(qual, value);
      else if (key == "adapter_layers") {
        rc.model.adapter_layers = to_list<int>(qual, value, to_int);
        adapter_layers_set = true;
      } else if (key == "adapter_reduction") rc.model.adapter_reduction = to_int(qual, value);
      else if (key == "adapter_attachment")
        rc.model.adapter_attachment = parse_adapter_attachment(value);
      else if (key == "num_domain_adapters")
        rc.model.num_domain_adapters = to_int(qual, value);
      else if (key == "task_adapter_style")
        rc.model.task_adapter_style = parse_task_adapter_style(value);
      else if (key == "task_adapter_reduction")
        rc.model.task_adapter_reduction = to_int(qual, value);
      else if (key == "gate_style") rc.model.gate_style = parse_gate_style(value);
      else if (key == "gate_hidden_dim") rc.model.gate_hidden_dim = to_int(qual, value);
      else if (key == "gate_input") rc.model.gate_input = parse_gate_input(value);
      else if (key == "dropout") rc.model.dropout = to_double(qual, value);
      else if (key == "tie_lm_head") rc.model.tie_lm_head = to_bool(qual, value);
      else throw ConfigError("config: unknown key '" + qual + "'");
    } else if (section == "stage1") {
      if (key == "lambda") rc.stage1.lambda = to_double(qual, value);
      else if (key == "lr") rc.stage1.lr = to_double(qual, value);
      else if (key == "batch_size") rc.stage1.batch_size = to_int(qual, value);
      else if (key == "weight_decay") rc.stage1.weight_decay = to_double(qual, value);
      else if (key == "epochs") rc.stage1.epochs = to_int(qual, value);
      else if (key == "mix_ratio") rc.stage1.mix_ratio = to_double(qual, value);
      else if (key == "adapter_index") rc.stage1.adapter_index = to_int(qual, value);
      else throw ConfigError("config: unknown key '" + qual + "'");
    } else if (section == "stage2") {
      if (key == "lr") rc.stage2.lr = to_double(qual, value);
      else if (key == "batch_size") rc.stage2.batch_size = to_int(qual, value);
      else if (key == "epochs") rc.stage2.epochs = to_int(qual, value);
      else if (key == "warmup_epochs") rc.stage2.warmup_epochs = to_int(qual, value);
      else if (key == "weight_decay") rc.stage2.weight_decay = to_double(qual, value);
      else if (key == "task") rc.stage2.task = parse_task_kind(value);
      else if (key == "num_classes") rc.stage2.num_classes = to_int(qual, value);
      else if (key == "metric") rc.stage2.metric = value;
      else if (key == "few_shot_k") rc.stage2.few_shot_k = to_int(qual, value);
      else if (key == "lr_grid") rc.stage2.lr_grid = to_list<double>(qual, value, to_double);
      else if (key == "batch_grid") rc.stage2.batch_grid = to_list<int>(qual, value, to_int);
      else throw ConfigError("config: unknown key '" + qual + "'");
    } else if (section == "data") {
      if (key == "domain_corpus") rc.data.domain_corpus = resolve(value);
      else if (key == "domain_format") rc.data.domain_format = to_format(qual, value);
      else if (key == "general_corpus") rc.data.general_corpus = resolve(value);
      else if (key == "general_format") rc.data.general_format = to_format(qual, value);
      else if (key == "task_train") rc.data.task_train = resolve(value);
      else if (key == "task_validation") rc.data.task_validation = resolve(value);
      else if (key == "templates") rc.data.templates = resolve(value);
      else throw ConfigError("config: unknown key '" + qual + "'");
    } else if (section == "run") {
      if (key == "output_dir") rc.run.output_dir = resolve(value);
      else if (key == "seed") rc.run.seed = to_u64(qual, value);
      else if (key == "seeds") rc.run.seeds = to_list<std::uint64_t>(qual, value, to_u64);
      else throw ConfigError("config: unknown key '" + qual + "'");
    } else {
      throw ConfigError(path.string() + ":" + std::to_string(line_no) +
                        ": key outside any section");
    }
  }

  if (!adapter_layers_set)
    rc.model.adapter_layers = default_adapter_layers(rc.model.num_layers);
  rc.stage1.seed = rc.run.seed;
  return rc;
}

void apply_seed_override(RunConfig& rc) {
  const char* env = std::getenv("MIXDA_SEED");
  if (env == nullptr || *env == '\0') return;
  rc.run.seed = to_u64("MIXDA_SEED", env);
  rc.run.seeds = {rc.run.seed};
  rc.stage1.seed = rc.run.seed;
}

}  // namespace mixda
