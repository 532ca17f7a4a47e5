#include "perfquant/volume_io.hpp"

#include <bit>
#include <cmath>
#include <fstream>
#include <iterator>

#include "json.hpp"
#include "perfquant/error.hpp"

namespace perfquant::io {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::vector<char> read_bytes(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), ErrorKind::io, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_bytes(const fs::path& path, const std::vector<char>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  require(static_cast<bool>(out), ErrorKind::io, "cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  require(static_cast<bool>(out), ErrorKind::io, "write failed for " + path.string());
}

json read_json(const fs::path& path) {
  const auto bytes = read_bytes(path);
  try {
    return json::parse(bytes.begin(), bytes.end());
  } catch (const json::exception& e) {
    fail(ErrorKind::format, path.string() + ": " + e.what());
  }
}

void write_json(const fs::path& path, const json& j) {
  const std::string text = j.dump(2) + "\n";
  write_bytes(path, std::vector<char>(text.begin(), text.end()));
}

std::vector<char> encode_f32(std::span<const double> values) {
  std::vector<char> bytes(values.size() * 4);
  for (std::size_t i = 0; i < values.size(); ++i) {
    const auto bits = std::bit_cast<std::uint32_t>(static_cast<float>(values[i]));
    for (int b = 0; b < 4; ++b) bytes[4 * i + b] = static_cast<char>((bits >> (8 * b)) & 0xFFu);
  }
  return bytes;
}

std::vector<double> decode_f32(const std::vector<char>& bytes, std::size_t expected, const fs::path& path) {
  require(bytes.size() == expected * 4, ErrorKind::format,
          path.string() + ": expected " + std::to_string(expected) + " float32 values, found " +
              std::to_string(bytes.size()) + " bytes");
  std::vector<double> values(expected);
  for (std::size_t i = 0; i < expected; ++i) {
    std::uint32_t bits = 0;
    for (int b = 0; b < 4; ++b)
      bits |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[4 * i + b])) << (8 * b);
    values[i] = static_cast<double>(std::bit_cast<float>(bits));
    require(std::isfinite(values[i]), ErrorKind::format, path.string() + ": non-finite value at " + std::to_string(i));
  }
  return values;
}

template <std::size_t N, typename T>
std::array<T, N> fixed_array(const json& j, const char* key, const fs::path& path) {
  require(j.contains(key), ErrorKind::format, path.string() + ": missing key '" + key + "'");
  const auto& a = j.at(key);
  require(a.is_array() && a.size() == N, ErrorKind::format,
          path.string() + ": '" + key + "' must be an array of " + std::to_string(N));
  std::array<T, N> out{};
  try {
    for (std::size_t i = 0; i < N; ++i) out[i] = a[i].get<T>();
  } catch (const json::exception& e) {
    fail(ErrorKind::format, path.string() + ": '" + key + "': " + e.what());
  }
  return out;
}

double number(const json& j, const char* key, const fs::path& path) {
  require(j.contains(key) && j.at(key).is_number(), ErrorKind::format,
          path.string() + ": missing numeric key '" + key + "'");
  return j.at(key).get<double>();
}

Spacing3 spacing_or_default(const json& j, const fs::path& path) {
  if (!j.contains("voxel_mm")) return {1.0, 1.0, 1.0};
  return fixed_array<3, double>(j, "voxel_mm", path);
}

void check_dims3(const Dims3& d, const fs::path& path) {
  for (int v : d) require(v >= 1, ErrorKind::format, path.string() + ": dims must be >= 1");
}

void check_spacing(const Spacing3& s) {
  for (double v : s)
    require(std::isfinite(v) && v > 0.0, ErrorKind::precondition, "voxel_mm components must be > 0");
}

}  // namespace

fs::path raw_path_for(const fs::path& header_path) {
  fs::path p = header_path;
  p.replace_extension(".raw");
  return p;
}

fs::path raw_path_for(const fs::path& header_path, std::string_view suffix) {
  fs::path p = header_path.parent_path() / (header_path.stem().string() + "_" + std::string(suffix) + ".raw");
  return p;
}

void VolumeHeader::validate() const {
  for (int d : dims) require(d >= 1, ErrorKind::precondition, "volume dims must all be >= 1");
  require(std::isfinite(dt_s) && dt_s > 0.0, ErrorKind::precondition, "dt_s must be > 0");
  require(std::isfinite(te_s) && te_s > 0.0, ErrorKind::precondition, "te_s must be > 0");
  check_spacing(voxel_mm);
}

Volume4D::Volume4D(VolumeHeader header, std::vector<double> data)
    : header_(header), data_(std::move(data)) {
  header_.validate();
  require(data_.size() == header_.samples(), ErrorKind::precondition,
          "volume data length " + std::to_string(data_.size()) + " does not match dims product " +
              std::to_string(header_.samples()));
  for (double v : data_) {
    require(std::isfinite(v), ErrorKind::precondition, "volume contains non-finite values");
    require(v >= 0.0, ErrorKind::precondition, "volume contains negative signal values");
  }
}

std::vector<double> Volume4D::voxel_series(std::size_t voxel) const {
  const std::size_t stride = header_.voxels();
  std::vector<double> s(static_cast<std::size_t>(header_.nt()));
  for (std::size_t t = 0; t < s.size(); ++t) s[t] = data_[voxel + stride * t];
  return s;
}

TimeSeries Volume4D::signal_series(std::size_t voxel) const {
  return TimeSeries{voxel_series(voxel), header_.dt_s, SeriesKind::signal};
}

Mask3D Mask3D::zeros(const Dims3& dims, const Spacing3& voxel_mm) {
  return Mask3D{dims, voxel_mm, std::vector<std::uint8_t>(voxel_count(dims), 0)};
}

std::size_t Mask3D::count() const {
  std::size_t n = 0;
  for (auto v : data) n += (v != 0);
  return n;
}

void Mask3D::validate() const {
  for (int d : dims) require(d >= 1, ErrorKind::precondition, "mask dims must be >= 1");
  check_spacing(voxel_mm);
  require(data.size() == voxel_count(dims), ErrorKind::precondition, "mask data length does not match dims");
  for (auto v : data) require(v <= 1, ErrorKind::precondition, "mask values must be 0 or 1");
}

ParameterMaps ParameterMaps::zeros(const Dims3& dims, const Spacing3& voxel_mm) {
  const std::size_t n = voxel_count(dims);
  return ParameterMaps{dims, voxel_mm, std::vector<double>(n, 0.0), std::vector<double>(n, 0.0),
                       std::vector<double>(n, 0.0), std::vector<double>(n, 0.0)};
}

void ParameterMaps::validate() const {
  for (int d : dims) require(d >= 1, ErrorKind::precondition, "map dims must be >= 1");
  check_spacing(voxel_mm);
  const std::size_t n = voxel_count(dims);
  for (const auto* plane : {&cbv, &cbf, &mtt, &tmax}) {
    require(plane->size() == n, ErrorKind::precondition, "map plane length does not match dims");
    for (double v : *plane) require(std::isfinite(v), ErrorKind::precondition, "map contains non-finite values");
  }
}

Volume4D read_volume(const fs::path& header_path) {
  const json j = read_json(header_path);
  VolumeHeader h;
  h.dims = fixed_array<4, int>(j, "dims", header_path);
  h.dt_s = number(j, "dt_s", header_path);
  h.te_s = number(j, "te_s", header_path);
  h.voxel_mm = spacing_or_default(j, header_path);
  for (int d : h.dims) require(d >= 1, ErrorKind::format, header_path.string() + ": dims must be >= 1");
  require(h.dt_s > 0.0, ErrorKind::format, header_path.string() + ": dt_s must be > 0");
  require(h.te_s > 0.0, ErrorKind::format, header_path.string() + ": te_s must be > 0");
  const fs::path raw = raw_path_for(header_path);
  auto data = decode_f32(read_bytes(raw), h.samples(), raw);
  for (double v : data) require(v >= 0.0, ErrorKind::format, raw.string() + ": negative signal value");
  return Volume4D(h, std::move(data));
}

void write_volume(const Volume4D& volume, const fs::path& header_path) {
  const auto& h = volume.header();
  json j;
  j["dims"] = h.dims;
  j["dt_s"] = h.dt_s;
  j["te_s"] = h.te_s;
  j["voxel_mm"] = h.voxel_mm;
  write_json(header_path, j);
  write_bytes(raw_path_for(header_path), encode_f32(volume.data()));
}

Mask3D read_mask(const fs::path& header_path) {
  const json j = read_json(header_path);
  Mask3D m;
  m.dims = fixed_array<3, int>(j, "dims", header_path);
  check_dims3(m.dims, header_path);
  m.voxel_mm = spacing_or_default(j, header_path);
  const fs::path raw = raw_path_for(header_path);
  const auto bytes = read_bytes(raw);
  require(bytes.size() == voxel_count(m.dims), ErrorKind::format,
          raw.string() + ": mask size " + std::to_string(bytes.size()) + " does not match header dims");
  m.data.resize(bytes.size());
  for (std::size_t i = 0; i < bytes.size(); ++i) {
    const auto v = static_cast<std::uint8_t>(bytes[i]);
    require(v <= 1, ErrorKind::format, raw.string() + ": mask values must be 0 or 1");
    m.data[i] = v;
  }
  return m;
}

void write_mask(const Mask3D& mask, const fs::path& header_path) {
  mask.validate();
  json j;
  j["dims"] = mask.dims;
  j["voxel_mm"] = mask.voxel_mm;
  write_json(header_path, j);
  write_bytes(raw_path_for(header_path), std::vector<char>(mask.data.begin(), mask.data.end()));
}

ParameterMaps read_maps(const fs::path& header_path) {
  const json j = read_json(header_path);
  ParameterMaps m;
  m.dims = fixed_array<3, int>(j, "dims", header_path);
  check_dims3(m.dims, header_path);
  m.voxel_mm = spacing_or_default(j, header_path);
  const std::size_t n = voxel_count(m.dims);
  auto load = [&](std::string_view name) {
    const fs::path raw = raw_path_for(header_path, name);
    return decode_f32(read_bytes(raw), n, raw);
  };
  m.cbv = load("cbv");
  m.cbf = load("cbf");
  m.mtt = load("mtt");
  m.tmax = load("tmax");
  return m;
}

void write_maps(const ParameterMaps& maps, const fs::path& header_path) {
  maps.validate();
  json j;
  j["dims"] = maps.dims;
  j["voxel_mm"] = maps.voxel_mm;
  j["planes"] = {"cbv", "cbf", "mtt", "tmax"};
  write_json(header_path, j);
  write_bytes(raw_path_for(header_path, "cbv"), encode_f32(maps.cbv));
  write_bytes(raw_path_for(header_path, "cbf"), encode_f32(maps.cbf));
  write_bytes(raw_path_for(header_path, "mtt"), encode_f32(maps.mtt));
  write_bytes(raw_path_for(header_path, "tmax"), encode_f32(maps.tmax));
}

TimeSeries read_series(const fs::path& path) {
  const json j = read_json(path);
  TimeSeries s;
  s.dt_s = number(j, "dt_s", path);
  require(j.contains("kind") && j.at("kind").is_string(), ErrorKind::format, path.string() + ": missing 'kind'");
  try {
    s.kind = series_kind_from_string(j.at("kind").get<std::string>());
  } catch (const Error& e) {
    fail(ErrorKind::format, path.string() + ": " + e.what());
  }
  require(j.contains("values") && j.at("values").is_array(), ErrorKind::format,
          path.string() + ": missing 'values' array");
  try {
    s.values = j.at("values").get<std::vector<double>>();
  } catch (const json::exception& e) {
    fail(ErrorKind::format, path.string() + ": " + e.what());
  }
  try {
    s.validate();
  } catch (const Error& e) {
    fail(ErrorKind::format, path.string() + ": " + e.what());
  }
  return s;
}

void write_series(const TimeSeries& series, const fs::path& path) {
  series.validate();
  json j;
  j["dt_s"] = series.dt_s;
  j["kind"] = std::string(to_string(series.kind));
  j["values"] = series.values;
  write_json(path, j);
}

}  // namespace perfquant::io
