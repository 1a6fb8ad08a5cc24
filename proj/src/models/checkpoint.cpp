#include "pwm/models/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "json.hpp"
#include "pwm/errors.hpp"

namespace pwm::models {

using nlohmann::json;

namespace {

constexpr char kMagic[8] = {'P', 'W', 'M', 'C', 'K', 'P', 'T', '\n'};

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

void put_u32(std::ostream& out, std::uint32_t v) { out.write(reinterpret_cast<const char*>(&v), 4); }

std::uint32_t get_u32(std::istream& in) {
  std::uint32_t v = 0;
  if (!in.read(reinterpret_cast<char*>(&v), 4)) throw FormatError("checkpoint truncated");
  return v;
}

std::string get_bytes(std::istream& in, std::size_t n) {
  if (n > (1u << 28)) throw FormatError("checkpoint field length implausible");
  std::string s(n, '\0');
  if (n && !in.read(s.data(), static_cast<std::streamsize>(n))) throw FormatError("checkpoint truncated");
  return s;
}

std::string manifest_text(const WorldModel& m, const std::string& extra_json) {
  std::string s = "{\"format\":\"pwm-checkpoint\",\"version\":" + std::to_string(kCheckpointFormatVersion) +
                  ",\"kind\":\"" + to_string(m.kind) + "\",\"env\":\"" + m.env_fingerprint + "\"" +
                  ",\"dims\":{\"state\":" + std::to_string(m.dims.state) +
                  ",\"action\":" + std::to_string(m.dims.action) + ",\"latent\":" + std::to_string(m.dims.latent) +
                  ",\"hidden\":" + std::to_string(m.dims.hidden) +
                  ",\"mlp_hidden\":" + std::to_string(m.dims.mlp_hidden) +
                  ",\"residual\":" + (m.dims.residual ? "true" : "false") + "}" +
                  ",\"stats\":{\"state_mean\":" + data::format_reals(m.stats.state_mean) +
                  ",\"state_std\":" + data::format_reals(m.stats.state_std) +
                  ",\"action_mean\":" + data::format_reals(m.stats.action_mean) +
                  ",\"action_std\":" + data::format_reals(m.stats.action_std) + "}" + ",\"extra\":" + extra_json +
                  "}";
  return s;
}

}  // namespace

void round_to_checkpoint_precision(WorldModel& model) {
  for (auto& [_, e] : model.params.entries())
    for (double& v : e.value.storage()) v = static_cast<double>(static_cast<float>(v));
}

void save_checkpoint(const std::filesystem::path& path, const WorldModel& model, const std::string& extra_json) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot open " + path.string() + " for writing");
  out.write(kMagic, 8);
  const auto manifest = manifest_text(model, extra_json);
  put_u32(out, static_cast<std::uint32_t>(manifest.size()));
  out.write(manifest.data(), static_cast<std::streamsize>(manifest.size()));
  put_u32(out, static_cast<std::uint32_t>(model.params.entries().size()));
  for (const auto& [name, e] : model.params.entries()) {
    put_u32(out, static_cast<std::uint32_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    const auto group = static_cast<char>(e.group);
    out.write(&group, 1);
    put_u32(out, static_cast<std::uint32_t>(e.value.rank()));
    for (auto d : e.value.shape()) put_u32(out, static_cast<std::uint32_t>(d));
    for (double v : e.value.span()) {
      const float f = static_cast<float>(v);
      out.write(reinterpret_cast<const char*>(&f), 4);
    }
  }
  if (!out) throw FormatError("write failed for " + path.string());
}

namespace {

json read_manifest_json(std::istream& in) {
  char magic[8];
  if (!in.read(magic, 8) || std::memcmp(magic, kMagic, 8) != 0) throw FormatError("not a checkpoint file");
  const auto len = get_u32(in);
  try {
    return json::parse(get_bytes(in, len));
  } catch (const json::exception& e) {
    throw FormatError(std::string("checkpoint manifest unreadable: ") + e.what());
  }
}

}  // namespace

std::string read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open checkpoint " + path.string());
  return read_manifest_json(in).dump();
}

WorldModel load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open checkpoint " + path.string());
  const json man = read_manifest_json(in);
  WorldModel m;
  try {
    if (man.at("version").get<int>() != kCheckpointFormatVersion) throw FormatError("unsupported checkpoint version");
    m.kind = model_kind_from_string(man.at("kind").get<std::string>());
    m.env_fingerprint = man.at("env").get<std::string>();
    const auto& d = man.at("dims");
    m.dims.state = d.at("state").get<std::size_t>();
    m.dims.action = d.at("action").get<std::size_t>();
    m.dims.latent = d.at("latent").get<std::size_t>();
    m.dims.hidden = d.at("hidden").get<std::size_t>();
    m.dims.mlp_hidden = d.at("mlp_hidden").get<std::size_t>();
    m.dims.residual = d.at("residual").get<bool>();
    const auto& st = man.at("stats");
    m.stats.state_mean = st.at("state_mean").get<data::Vector>();
    m.stats.state_std = st.at("state_std").get<data::Vector>();
    m.stats.action_mean = st.at("action_mean").get<data::Vector>();
    m.stats.action_std = st.at("action_std").get<data::Vector>();
  } catch (const json::exception& e) {
    throw FormatError(std::string("checkpoint manifest incomplete: ") + e.what());
  } catch (const ConfigError& e) {
    throw FormatError(e.what());
  }

  const auto count = get_u32(in);
  for (std::uint32_t k = 0; k < count; ++k) {
    const auto name = get_bytes(in, get_u32(in));
    char group = 0;
    if (!in.read(&group, 1)) throw FormatError("checkpoint truncated");
    if (group < 0 || group > 2) throw FormatError("checkpoint parameter group invalid");
    const auto rank = get_u32(in);
    if (rank == 0 || rank > 4) throw FormatError("checkpoint tensor rank invalid");
    nn::Shape shape;
    for (std::uint32_t r = 0; r < rank; ++r) shape.push_back(get_u32(in));
    nn::Tensor t(shape);
    for (auto& v : t.storage()) {
      float f;
      if (!in.read(reinterpret_cast<char*>(&f), 4)) throw FormatError("checkpoint truncated");
      v = f;
    }
    m.params.add(name, std::move(t), static_cast<nn::ParamGroup>(group));
  }

  // The architecture implied by the manifest must match the stored tensors.
  const auto ref = WorldModel::create(m.kind, m.dims, 0);
  if (ref.params.names() != m.params.names()) throw FormatError("checkpoint tensors do not match its manifest");
  for (const auto& [name, e] : ref.params.entries())
    if (m.params.value(name).shape() != e.value.shape())
      throw FormatError("checkpoint tensor '" + name + "' has the wrong shape");
  return m;
}

}  // namespace pwm::models
