#include "perfquant/stnet/checkpoint.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <json.hpp>

#include "perfquant/error.hpp"

namespace perfquant::stnet {

namespace {

using nlohmann::json;

constexpr char kMagic[4] = {'S', 'T', 'N', '1'};

void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint64_t get_u64(std::span<const std::uint8_t> in, std::size_t at) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(in[at + static_cast<std::size_t>(i)]) << (8 * i);
  return v;
}

json manifest(const ModelParams& m) {
  json tensors = json::array();
  for (const auto& [name, t] : m.parameters()) tensors.push_back({{"name", name}, {"shape", t->shape()}});
  return {{"format", "STN1"},
          {"architecture",
           {{"patch", {kPatchExtent, kPatchExtent, kTimeLength}},
            {"dropout_p", m.dropout_p},
            {"local_first", m.local_first},
            {"leaky_slope", kLeakySlope}}},
          {"normalization",
           {{"target_mean", m.norm.target_mean},
            {"target_scale", m.norm.target_scale},
            {"signal_scale", m.norm.signal_scale},
            {"n_pre", m.norm.n_pre}}},
          {"tensors", tensors}};
}

}  // namespace

std::vector<std::uint8_t> serialize(const ModelParams& m) {
  const std::string text = manifest(m).dump();
  std::vector<std::uint8_t> out(std::begin(kMagic), std::end(kMagic));
  put_u64(out, text.size());
  out.insert(out.end(), text.begin(), text.end());
  for (const auto& p : m.parameters())
    for (double v : p.second->values()) put_u64(out, std::bit_cast<std::uint64_t>(v));
  return out;
}

ModelParams deserialize(std::span<const std::uint8_t> bytes) {
  require(bytes.size() >= 12 && std::memcmp(bytes.data(), kMagic, 4) == 0, ErrorKind::format,
          "checkpoint does not start with STN1");
  const std::uint64_t len = get_u64(bytes, 4);
  require(len <= bytes.size() - 12, ErrorKind::format, "checkpoint manifest is truncated");
  json doc;
  try {
    doc = json::parse(bytes.begin() + 12, bytes.begin() + 12 + static_cast<std::ptrdiff_t>(len));
  } catch (const json::exception& e) {
    fail(ErrorKind::format, std::string("checkpoint manifest is not JSON: ") + e.what());
  }
  try {
    const auto& arch = doc.at("architecture");
    ModelParams m(1, arch.at("dropout_p").get<double>());
    m.local_first = arch.at("local_first").get<bool>();
    const auto& norm = doc.at("normalization");
    m.norm.target_mean = norm.at("target_mean").get<std::array<double, 3>>();
    m.norm.target_scale = norm.at("target_scale").get<std::array<double, 3>>();
    m.norm.signal_scale = norm.at("signal_scale").get<double>();
    m.norm.n_pre = norm.at("n_pre").get<int>();

    const auto& tensors = doc.at("tensors");
    auto params = m.parameters();
    require(tensors.size() == params.size(), ErrorKind::format, "checkpoint tensor count does not match the model");
    std::size_t at = 12 + static_cast<std::size_t>(len);
    for (std::size_t i = 0; i < params.size(); ++i) {
      auto& [name, t] = params[i];
      require(tensors[i].at("name").get<std::string>() == name, ErrorKind::format,
              "checkpoint tensor " + std::to_string(i) + " is not " + name);
      require(tensors[i].at("shape").get<std::vector<std::size_t>>() == t->shape(), ErrorKind::format,
              "checkpoint shape mismatch for " + name);
      require(bytes.size() >= at + 8 * t->size(), ErrorKind::format, "checkpoint values are truncated");
      for (double& v : t->values()) {
        v = std::bit_cast<double>(get_u64(bytes, at));
        require(std::isfinite(v), ErrorKind::format, "checkpoint value in " + name + " is not finite");
        at += 8;
      }
    }
    require(at == bytes.size(), ErrorKind::format, "checkpoint has trailing bytes");
    return m;
  } catch (const json::exception& e) {
    fail(ErrorKind::format, std::string("checkpoint manifest: ") + e.what());
  }
}

void write_checkpoint(const ModelParams& m, const std::filesystem::path& path) {
  const auto bytes = serialize(m);
  std::ofstream out(path, std::ios::binary);
  require(static_cast<bool>(out), ErrorKind::io, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  require(static_cast<bool>(out), ErrorKind::io, "failed writing " + path.string());
}

ModelParams read_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), ErrorKind::io, "cannot open " + path.string());
  const std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return deserialize(bytes);
}

}  // namespace perfquant::stnet
