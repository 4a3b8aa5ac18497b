#include "mixda/checkpoint.hpp"

#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

namespace mixda::checkpoint {

namespace {

constexpr char kMagic[6] = {'M', 'I', 'X', 'D', 'A', '1'};

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

// Value-level shifts make the byte order host-independent: byte i is always
// the i-th least significant, i.e. little-endian on disk.
void put_f64(std::string& out, double d) {
  std::uint64_t bits;
  std::memcpy(&bits, &d, sizeof(bits));
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xff));
}

class Reader {
 public:
  Reader(std::string data, std::string path) : data_(std::move(data)), path_(std::move(path)) {}

  void need(std::size_t n) {
    if (pos_ + n > data_.size())
      throw CheckpointError(CheckpointError::Code::truncated,
                            path_ + ": truncated (need " + std::to_string(n) + " bytes at offset " +
                                std::to_string(pos_) + ")");
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i)
      v |= static_cast<std::uint32_t>(static_cast<unsigned char>(data_[pos_ + i])) << (8 * i);
    pos_ += 4;
    return v;
  }
  double f64() {
    need(8);
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i)
      bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(data_[pos_ + i])) << (8 * i);
    pos_ += 8;
    double d;
    std::memcpy(&d, &bits, sizeof(d));
    return d;
  }
  std::string bytes(std::size_t n) {
    need(n);
    std::string s = data_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  bool exhausted() const { return pos_ == data_.size(); }
  const std::string& path() const { return path_; }

 private:
  std::string data_;
  std::string path_;
  std::size_t pos_ = 0;
};

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

std::string canonical_config_text(const ModelConfig& cfg, const Vocab& vocab) {
  std::ostringstream os;
  os << "[model]\n";
  std::ostringstream layers;
  for (std::size_t i = 0; i < cfg.adapter_layers.size(); ++i) {
    if (i) layers << ",";
    layers << cfg.adapter_layers[i];
  }
  os << "adapter_attachment=" << to_string(cfg.adapter_attachment) << "\n";
  os << "adapter_layers=" << layers.str() << "\n";
  os << "adapter_reduction=" << cfg.adapter_reduction << "\n";
  os << "dropout=" << fmt_double(cfg.dropout) << "\n";
  os << "ffn_dim=" << cfg.ffn_dim << "\n";
  os << "gate_hidden_dim=" << cfg.gate_hidden_dim << "\n";
  os << "gate_input=" << to_string(cfg.gate_input) << "\n";
  os << "gate_style=" << to_string(cfg.gate_style) << "\n";
  os << "hidden_dim=" << cfg.hidden_dim << "\n";
  os << "init_seed=" << cfg.init_seed << "\n";
  os << "max_seq_len=" << cfg.max_seq_len << "\n";
  os << "num_classes=" << cfg.num_classes << "\n";
  os << "num_domain_adapters=" << cfg.num_domain_adapters << "\n";
  os << "num_heads=" << cfg.num_heads << "\n";
  os << "num_layers=" << cfg.num_layers << "\n";
  os << "task_adapter_reduction=" << cfg.task_adapter_reduction << "\n";
  os << "task_adapter_style=" << to_string(cfg.task_adapter_style) << "\n";
  os << "task_kind=" << to_string(cfg.task_kind) << "\n";
  os << "tie_lm_head=" << (cfg.tie_lm_head ? 1 : 0) << "\n";
  os << "use_moa_gate=" << (cfg.use_moa_gate ? 1 : 0) << "\n";
  os << "vocab_size=" << cfg.vocab_size << "\n";
  os << "[vocab]\n";
  os << "max_size=" << vocab.max_size() << "\n";
  os << "entries=";
  const auto entries = vocab.entries();
  for (std::size_t i = 0; i < entries.size(); ++i) {
    if (i) os << " ";
    os << entries[i];
  }
  os << "\n";
  return os.str();
}

namespace {

std::pair<ModelConfig, Vocab> parse_config_text(const std::string& text,
                                                const std::string& path) {
  ModelConfig cfg;
  std::vector<std::string> vocab_entries;
  int vocab_max = 0;
  std::istringstream in(text);
  std::string line, section;
  auto bad = [&](const std::string& what) -> void {
    throw CheckpointError(CheckpointError::Code::malformed, path + ": bad config text: " + what);
  };
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line.front() == '[' && line.back() == ']') {
      section = line.substr(1, line.size() - 2);
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) bad("missing '=' in '" + line + "'");
    const std::string key = line.substr(0, eq);
    const std::string value = line.substr(eq + 1);
    try {
      if (section == "model") {
        if (key == "adapter_attachment") cfg.adapter_attachment = parse_adapter_attachment(value);
        else if (key == "adapter_layers") {
          cfg.adapter_layers.clear();
          std::istringstream ls(value);
          std::string item;
          while (std::getline(ls, item, ',')) cfg.adapter_layers.push_back(std::stoi(item));
        } else if (key == "adapter_reduction") cfg.adapter_reduction = std::stoi(value);
        else if (key == "dropout") cfg.dropout = std::stod(value);
        else if (key == "ffn_dim") cfg.ffn_dim = std::stoi(value);
        else if (key == "gate_hidden_dim") cfg.gate_hidden_dim = std::stoi(value);
        else if (key == "gate_input") cfg.gate_input = parse_gate_input(value);
        else if (key == "gate_style") cfg.gate_style = parse_gate_style(value);
        else if (key == "hidden_dim") cfg.hidden_dim = std::stoi(value);
        else if (key == "init_seed") cfg.init_seed = std::stoull(value);
        else if (key == "max_seq_len") cfg.max_seq_len = std::stoi(value);
        else if (key == "num_classes") cfg.num_classes = std::stoi(value);
        else if (key == "num_domain_adapters") cfg.num_domain_adapters = std::stoi(value);
        else if (key == "num_heads") cfg.num_heads = std::stoi(value);
        else if (key == "num_layers") cfg.num_layers = std::stoi(value);
        else if (key == "task_adapter_reduction") cfg.task_adapter_reduction = std::stoi(value);
        else if (key == "task_adapter_style") cfg.task_adapter_style = parse_task_adapter_style(value);
        else if (key == "task_kind") cfg.task_kind = parse_task_kind(value);
        else if (key == "tie_lm_head") cfg.tie_lm_head = value == "1";
        else if (key == "use_moa_gate") cfg.use_moa_gate = value == "1";
        else if (key == "vocab_size") cfg.vocab_size = std::stoi(value);
        else bad("unknown model key '" + key + "'");
      } else if (section == "vocab") {
        if (key == "max_size") vocab_max = std::stoi(value);
        else if (key == "entries") {
          std::istringstream ws(value);
          std::string w;
          while (ws >> w) vocab_entries.push_back(w);
        } else bad("unknown vocab key '" + key + "'");
      } else {
        bad("unknown section '" + section + "'");
      }
    } catch (const ConfigError& e) {
      bad(e.what());
    } catch (const std::invalid_argument&) {
      bad("bad value for '" + key + "'");
    } catch (const std::out_of_range&) {
      bad("bad value for '" + key + "'");
    }
  }
  Vocab vocab = Vocab::from_entries(vocab_entries, vocab_max);
  if (vocab.size() != cfg.vocab_size)
    throw CheckpointError(CheckpointError::Code::malformed,
                          path + ": vocab entry count disagrees with model vocab_size");
  return {cfg, vocab};
}

}  // namespace

void save(const std::filesystem::path& path, const ModelConfig& cfg, const Vocab& vocab,
          const std::map<std::string, Tensor>& tensors) {
  std::string out;
  out.append(kMagic, sizeof(kMagic));
  const std::string config = canonical_config_text(cfg, vocab);
  put_u32(out, static_cast<std::uint32_t>(config.size()));
  out += config;
  put_u32(out, static_cast<std::uint32_t>(tensors.size()));
  for (const auto& [name, tensor] : tensors) {  // std::map iterates sorted
    put_u32(out, static_cast<std::uint32_t>(name.size()));
    out += name;
    const Shape& shape = tensor.shape();
    put_u32(out, static_cast<std::uint32_t>(shape.size()));
    for (int e : shape) put_u32(out, static_cast<std::uint32_t>(e));
    for (double v : tensor.data()) put_f64(out, v);
  }
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw CheckpointError(CheckpointError::Code::io, "cannot write " + path.string());
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!f) throw CheckpointError(CheckpointError::Code::io, "short write to " + path.string());
}

Contents load(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw CheckpointError(CheckpointError::Code::io, "cannot open " + path.string());
  std::ostringstream buf;
  buf << f.rdbuf();
  Reader r(buf.str(), path.string());

  const std::string magic = r.bytes(sizeof(kMagic));
  if (std::memcmp(magic.data(), kMagic, sizeof(kMagic)) != 0)
    throw CheckpointError(CheckpointError::Code::bad_magic,
                          path.string() + ": not a MIXDA1 checkpoint");

  const std::uint32_t config_len = r.u32();
  const std::string config_text = r.bytes(config_len);
  auto [cfg, vocab] = parse_config_text(config_text, path.string());

  std::map<std::string, Shape> expected;
  for (auto& [name, shape] : parameter_shapes(cfg)) expected.emplace(name, shape);

  Contents contents;
  contents.config = cfg;
  contents.vocab = std::move(vocab);

  const std::uint32_t count = r.u32();
  std::string prev_name;
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::uint32_t name_len = r.u32();
    const std::string name = r.bytes(name_len);
    if (i > 0 && !(prev_name < name))
      throw CheckpointError(CheckpointError::Code::malformed,
                            path.string() + ": entry names not sorted ('" + name + "')");
    prev_name = name;
    const std::uint32_t rank = r.u32();
    Shape shape;
    std::int64_t n = 1;
    for (std::uint32_t k = 0; k < rank; ++k) {
      shape.push_back(static_cast<int>(r.u32()));
      n *= shape.back();
    }
    std::vector<double> values(static_cast<std::size_t>(n));
    for (double& v : values) v = r.f64();

    auto it = expected.find(name);
    if (it == expected.end())
      throw CheckpointError(CheckpointError::Code::shape_mismatch,
                            path.string() + ": entry '" + name +
                                "' is not a parameter of the embedded config");
    if (it->second != shape)
      throw CheckpointError(CheckpointError::Code::shape_mismatch,
                            path.string() + ": entry '" + name + "' has shape " +
                                shape_str(shape) + ", config implies " + shape_str(it->second));
    contents.tensors.emplace(name, Tensor::from(shape, std::move(values)));
  }
  if (!r.exhausted())
    throw CheckpointError(CheckpointError::Code::malformed,
                          path.string() + ": trailing bytes after the last entry");
  return contents;
}

std::map<std::string, Tensor> select_by_prefix(const ParameterStore& store,
                                               const std::string& substring) {
  std::map<std::string, Tensor> out;
  for (const auto& [name, t] : store.items())
    if (name.find(substring) != std::string::npos) out.emplace(name, t);
  return out;
}

std::map<std::string, Tensor> select_all(const ParameterStore& store) {
  std::map<std::string, Tensor> out;
  for (const auto& [name, t] : store.items()) out.emplace(name, t);
  return out;
}

std::map<std::string, Tensor> select_names(const ParameterStore& store,
                                           const std::set<std::string>& names) {
  std::map<std::string, Tensor> out;
  for (const std::string& name : names) out.emplace(name, store.at(name));
  return out;
}

}  // namespace mixda::checkpoint
