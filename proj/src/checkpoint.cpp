#include "facecycle/checkpoint.hpp"

#include <cstdio>
#include <cstring>
#include <fstream>
#include <map>

namespace facecycle::checkpoint {

namespace {

constexpr char kMagic[8] = {'F', 'C', 'Y', 'C', 'K', 'P', 'T', '1'};
constexpr uint32_t kVersion = 1;

void write_u32(std::ostream& os, uint32_t v) { os.write(reinterpret_cast<const char*>(&v), 4); }
void write_i64(std::ostream& os, int64_t v) { os.write(reinterpret_cast<const char*>(&v), 8); }
void write_u64(std::ostream& os, uint64_t v) { os.write(reinterpret_cast<const char*>(&v), 8); }
void write_str(std::ostream& os, const std::string& s) {
  write_u32(os, static_cast<uint32_t>(s.size()));
  os.write(s.data(), static_cast<std::streamsize>(s.size()));
}
void write_floats(std::ostream& os, const std::vector<float>& v) {
  write_u64(os, v.size());
  os.write(reinterpret_cast<const char*>(v.data()),
           static_cast<std::streamsize>(v.size() * sizeof(float)));
}

[[noreturn]] void corrupt() { throw std::runtime_error("checkpoint corrupt"); }

uint32_t read_u32(std::istream& is) {
  uint32_t v;
  is.read(reinterpret_cast<char*>(&v), 4);
  if (!is) corrupt();
  return v;
}
int64_t read_i64(std::istream& is) {
  int64_t v;
  is.read(reinterpret_cast<char*>(&v), 8);
  if (!is) corrupt();
  return v;
}
uint64_t read_u64(std::istream& is) {
  uint64_t v;
  is.read(reinterpret_cast<char*>(&v), 8);
  if (!is) corrupt();
  return v;
}
std::string read_str(std::istream& is) {
  uint32_t len = read_u32(is);
  if (len > (1u << 26)) corrupt();
  std::string s(len, '\0');
  is.read(s.data(), len);
  if (!is) corrupt();
  return s;
}
std::vector<float> read_floats(std::istream& is) {
  uint64_t count = read_u64(is);
  if (count > (1ull << 31)) corrupt();
  std::vector<float> v(count);
  is.read(reinterpret_cast<char*>(v.data()),
          static_cast<std::streamsize>(count * sizeof(float)));
  if (!is) corrupt();
  return v;
}

struct NetRef {
  std::string name;
  nn::Sequential* net;
  optim::Optimizer* opt;
};

std::vector<NetRef> net_refs(training::TrainState& st) {
  std::vector<NetRef> refs;
  refs.push_back({"G", &st.g.net, &st.opt_g});
  refs.push_back({"F", &st.f.net, &st.opt_f});
  for (size_t i = 0; i < st.d_y.size(); ++i)
    refs.push_back({"DY" + std::to_string(i + 1), &st.d_y[i].net, &st.opt_dy[i]});
  for (size_t i = 0; i < st.d_x.size(); ++i)
    refs.push_back({"DX" + std::to_string(i + 1), &st.d_x[i].net, &st.opt_dx[i]});
  return refs;
}

training::TrainState fill_from_file(std::istream& in, const config::TrainConfig& cfg,
                                     long long step, const std::string& rng_state) {
  training::TrainState st = training::init_state(cfg);
  st.step = step;
  st.data_rng.restore(rng_state);

  std::map<std::string, std::vector<float>> tensors;
  uint32_t n_tensors = read_u32(in);
  for (uint32_t i = 0; i < n_tensors; ++i) {
    std::string name = read_str(in);
    tensors[name] = read_floats(in);
  }
  std::map<std::string, int64_t> counters;
  uint32_t n_counters = read_u32(in);
  for (uint32_t i = 0; i < n_counters; ++i) {
    std::string name = read_str(in);
    counters[name] = read_i64(in);
  }
  // Trailing byte check: nothing may remain.
  char extra;
  if (in.read(&extra, 1)) corrupt();

  auto take = [&](const std::string& name, std::vector<float>& dst) {
    auto it = tensors.find(name);
    if (it == tensors.end())
      throw std::runtime_error("checkpoint structure mismatch: missing tensor '" + name + "'");
    if (it->second.size() != dst.size())
      throw std::runtime_error("checkpoint structure mismatch: tensor '" + name + "' has " +
                               std::to_string(it->second.size()) + " values, expected " +
                               std::to_string(dst.size()));
    dst = std::move(it->second);
    tensors.erase(it);
  };

  for (auto& ref : net_refs(st)) {
    auto params = ref.net->params(ref.name);
    auto& m = ref.opt->first_moments();
    auto& v = ref.opt->second_moments();
    for (size_t i = 0; i < params.size(); ++i) {
      take(params[i].name, *params[i].value);
      take("opt.m." + params[i].name, m[i]);
      take("opt.v." + params[i].name, v[i]);
    }
    auto it = counters.find("opt.t." + ref.name);
    if (it == counters.end())
      throw std::runtime_error("checkpoint structure mismatch: missing counter for " + ref.name);
    ref.opt->set_steps_taken(it->second);
    counters.erase(it);
  }
  if (!tensors.empty())
    throw std::runtime_error("checkpoint structure mismatch: unexpected tensor '" +
                             tensors.begin()->first + "'");
  if (!counters.empty())
    throw std::runtime_error("checkpoint structure mismatch: unexpected counter '" +
                             counters.begin()->first + "'");
  return st;
}

struct Header {
  uint64_t cfg_hash;
  long long step;
  std::string rng_state;
  std::string cfg_json;
};

Header read_header(std::istream& in) {
  char magic[8];
  in.read(magic, 8);
  if (!in || std::memcmp(magic, kMagic, 8) != 0) corrupt();
  uint32_t version = read_u32(in);
  if (version != kVersion) throw std::runtime_error("checkpoint version unsupported");
  Header h;
  h.cfg_hash = read_u64(in);
  h.step = read_i64(in);
  h.rng_state = read_str(in);
  h.cfg_json = read_str(in);
  return h;
}

}  // namespace

void save_checkpoint(training::TrainState& state, const config::TrainConfig& cfg,
                     const std::filesystem::path& path) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write checkpoint " + path.string());
    out.write(kMagic, 8);
    write_u32(out, kVersion);
    write_u64(out, state.cfg_hash);
    write_i64(out, state.step);
    write_str(out, state.data_rng.serialize());
    write_str(out, config::config_to_json(cfg));

    std::vector<std::pair<std::string, const std::vector<float>*>> tensors;
    std::vector<std::pair<std::string, int64_t>> counters;
    for (auto& ref : net_refs(state)) {
      auto params = ref.net->params(ref.name);
      auto& m = ref.opt->first_moments();
      auto& v = ref.opt->second_moments();
      for (size_t i = 0; i < params.size(); ++i) {
        tensors.emplace_back(params[i].name, params[i].value);
        tensors.emplace_back("opt.m." + params[i].name, &m[i]);
        tensors.emplace_back("opt.v." + params[i].name, &v[i]);
      }
      counters.emplace_back("opt.t." + ref.name, ref.opt->steps_taken());
    }
    write_u32(out, static_cast<uint32_t>(tensors.size()));
    for (auto& [name, data] : tensors) {
      write_str(out, name);
      write_floats(out, *data);
    }
    write_u32(out, static_cast<uint32_t>(counters.size()));
    for (auto& [name, value] : counters) {
      write_str(out, name);
      write_i64(out, value);
    }
    out.flush();
    if (!out) {
      std::error_code ec;
      std::filesystem::remove(tmp, ec);
      throw std::runtime_error("checkpoint write failed: " + path.string());
    }
  }
  std::filesystem::rename(tmp, path);
}

std::pair<config::TrainConfig, training::TrainState> load_checkpoint(
    const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("checkpoint corrupt");
  Header h = read_header(in);
  config::TrainConfig cfg = config::parse_config_json(h.cfg_json);
  auto state = fill_from_file(in, cfg, h.step, h.rng_state);
  return {std::move(cfg), std::move(state)};
}

training::TrainState load_checkpoint_into(const std::filesystem::path& path,
                                          const config::TrainConfig& active_cfg,
                                          std::string* hash_warning) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("checkpoint corrupt");
  Header h = read_header(in);
  if (h.cfg_hash != config::config_hash(active_cfg) && hash_warning)
    *hash_warning = "warning: checkpoint " + path.string() +
                    " was written with a different config (hash mismatch)";
  auto state = fill_from_file(in, active_cfg, h.step, h.rng_state);
  state.cfg_hash = config::config_hash(active_cfg);
  return state;
}

std::string checkpoint_name(long long step) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "ckpt_step%06lld.bin", step);
  return buf;
}

}  // namespace facecycle::checkpoint
