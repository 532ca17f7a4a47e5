#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "perfquant/time_series.hpp"

namespace perfquant::io {

using Dims3 = std::array<int, 3>;
using Spacing3 = std::array<double, 3>;

inline std::size_t voxel_count(const Dims3& d) {
  return static_cast<std::size_t>(d[0]) * static_cast<std::size_t>(d[1]) *
         static_cast<std::size_t>(d[2]);
}

/// Spatial linear index, x fastest.
inline std::size_t voxel_index(const Dims3& d, int x, int y, int z) {
  return static_cast<std::size_t>(x) +
         static_cast<std::size_t>(d[0]) *
             (static_cast<std::size_t>(y) + static_cast<std::size_t>(d[1]) * static_cast<std::size_t>(z));
}

inline std::array<int, 3> voxel_coords(const Dims3& d, std::size_t index) {
  const auto nx = static_cast<std::size_t>(d[0]);
  const auto ny = static_cast<std::size_t>(d[1]);
  return {static_cast<int>(index % nx), static_cast<int>((index / nx) % ny),
          static_cast<int>(index / (nx * ny))};
}

struct VolumeHeader {
  std::array<int, 4> dims{1, 1, 1, 1};  // nx, ny, nz, nt
  double dt_s = 1.0;
  double te_s = 0.032;
  Spacing3 voxel_mm{1.0, 1.0, 1.0};

  int nt() const { return dims[3]; }
  Dims3 spatial() const { return {dims[0], dims[1], dims[2]}; }
  std::size_t voxels() const { return voxel_count(spatial()); }
  std::size_t samples() const { return voxels() * static_cast<std::size_t>(dims[3]); }

  void validate() const;
};

/// Raw DSC signal S(x,y,z,t). Stored x-fastest, t-slowest; the sample for
/// (x,y,z,t) lives at x + nx*(y + ny*(z + nz*t)).
class Volume4D {
 public:
  Volume4D() = default;
  /// Validates the header, the data length, finiteness and nonnegativity.
  Volume4D(VolumeHeader header, std::vector<double> data);

  const VolumeHeader& header() const { return header_; }
  std::span<const double> data() const { return data_; }

  std::size_t index(int x, int y, int z, int t) const {
    return voxel_index(header_.spatial(), x, y, z) + header_.voxels() * static_cast<std::size_t>(t);
  }
  double at(int x, int y, int z, int t) const { return data_[index(x, y, z, t)]; }

  /// Time course of one voxel given its spatial linear index.
  std::vector<double> voxel_series(std::size_t voxel) const;
  TimeSeries signal_series(std::size_t voxel) const;

 private:
  VolumeHeader header_;
  std::vector<double> data_;
};

struct Mask3D {
  Dims3 dims{1, 1, 1};
  Spacing3 voxel_mm{1.0, 1.0, 1.0};
  std::vector<std::uint8_t> data;

  static Mask3D zeros(const Dims3& dims, const Spacing3& voxel_mm = {1.0, 1.0, 1.0});

  bool operator()(std::size_t i) const { return data[i] != 0; }
  bool at(int x, int y, int z) const { return data[voxel_index(dims, x, y, z)] != 0; }
  std::size_t count() const;
  void validate() const;

  friend bool operator==(const Mask3D&, const Mask3D&) = default;
};

struct ParameterMaps {
  Dims3 dims{1, 1, 1};
  Spacing3 voxel_mm{1.0, 1.0, 1.0};
  std::vector<double> cbv;   // ml/100g
  std::vector<double> cbf;   // ml/100g/min
  std::vector<double> mtt;   // s
  std::vector<double> tmax;  // s

  static ParameterMaps zeros(const Dims3& dims, const Spacing3& voxel_mm = {1.0, 1.0, 1.0});
  void validate() const;
};

Volume4D read_volume(const std::filesystem::path& header_path);
void write_volume(const Volume4D& volume, const std::filesystem::path& header_path);

Mask3D read_mask(const std::filesystem::path& header_path);
void write_mask(const Mask3D& mask, const std::filesystem::path& header_path);

ParameterMaps read_maps(const std::filesystem::path& header_path);
void write_maps(const ParameterMaps& maps, const std::filesystem::path& header_path);

/// TimeSeries as JSON: {"dt_s": .., "kind": .., "values": [..]}.
TimeSeries read_series(const std::filesystem::path& path);
void write_series(const TimeSeries& series, const std::filesystem::path& path);

/// `<dir>/<stem>.raw` for a header `<dir>/<stem>.json`.
std::filesystem::path raw_path_for(const std::filesystem::path& header_path);
/// `<dir>/<stem>_<suffix>.raw`, used for the four parameter-map planes.
std::filesystem::path raw_path_for(const std::filesystem::path& header_path, std::string_view suffix);

}  // namespace perfquant::io
