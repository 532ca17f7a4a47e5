#include <doctest.h>

#include <fstream>

#include "perfquant/error.hpp"
#include "perfquant/volume_io.hpp"
#include "support.hpp"

using namespace perfquant;
using support::Gen;

namespace {

io::Volume4D random_volume(Gen& g, std::array<int, 4> dims) {
  io::VolumeHeader h;
  h.dims = dims;
  h.dt_s = 1.5;
  h.te_s = 0.03;
  h.voxel_mm = {1.0, 2.0, 3.5};
  std::vector<double> data(h.samples());
  // float-representable values so the float32 file is lossless
  for (double& v : data) v = static_cast<float>(g.uniform(0.0, 500.0));
  return io::Volume4D(h, data);
}

ErrorKind kind_of(auto&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected an Error");
  return ErrorKind::numeric;
}

}  // namespace

TEST_CASE("voxel_index and voxel_coords are inverse, x fastest") {
  Gen g(3);
  for (int trial = 0; trial < 100; ++trial) {
    const io::Dims3 d{g.integer(1, 9), g.integer(1, 9), g.integer(1, 9)};
    const int x = g.integer(0, d[0] - 1), y = g.integer(0, d[1] - 1), z = g.integer(0, d[2] - 1);
    const auto i = io::voxel_index(d, x, y, z);
    CHECK(i == static_cast<std::size_t>(x + d[0] * (y + d[1] * z)));
    CHECK(io::voxel_coords(d, i) == std::array<int, 3>{x, y, z});
  }
}

TEST_CASE("volume layout puts time slowest") {
  Gen g(1);
  const auto v = random_volume(g, {3, 4, 2, 5});
  CHECK(v.index(1, 2, 1, 3) == 1 + 3 * (2 + 4 * 1) + 24 * 3);
  const auto s = v.voxel_series(io::voxel_index(v.header().spatial(), 2, 3, 1));
  REQUIRE(s.size() == 5);
  for (int t = 0; t < 5; ++t) CHECK(s[static_cast<std::size_t>(t)] == v.at(2, 3, 1, t));
}

TEST_CASE("volume round trip is bit exact for float32 values") {
  Gen g(2);
  const auto dir = support::scratch_dir("vol_rt");
  const auto v = random_volume(g, {5, 4, 3, 7});
  io::write_volume(v, dir / "v.json");
  const auto back = io::read_volume(dir / "v.json");
  CHECK(back.header().dims == v.header().dims);
  CHECK(back.header().dt_s == v.header().dt_s);
  CHECK(back.header().te_s == v.header().te_s);
  CHECK(back.header().voxel_mm == v.header().voxel_mm);
  CHECK(std::equal(back.data().begin(), back.data().end(), v.data().begin(), v.data().end()));
  CHECK(std::filesystem::file_size(dir / "v.raw") == 5 * 4 * 3 * 7 * 4);
}

TEST_CASE("raw files are little-endian float32") {
  const auto dir = support::scratch_dir("vol_le");
  io::VolumeHeader h;
  h.dims = {1, 1, 1, 2};
  io::write_volume(io::Volume4D(h, {1.0, 2.0}), dir / "v.json");
  std::ifstream in(dir / "v.raw", std::ios::binary);
  std::vector<unsigned char> b((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  // 1.0f = 0x3F800000, 2.0f = 0x40000000
  CHECK(b == std::vector<unsigned char>{0x00, 0x00, 0x80, 0x3F, 0x00, 0x00, 0x00, 0x40});
}

TEST_CASE("mask and maps round trip") {
  Gen g(4);
  const auto dir = support::scratch_dir("mask_rt");
  auto m = g.mask({6, 5, 2}, 0.4);
  m.voxel_mm = {0.5, 0.5, 2.0};
  io::write_mask(m, dir / "m.json");
  CHECK(io::read_mask(dir / "m.json") == m);

  auto maps = io::ParameterMaps::zeros({4, 3, 2}, {1.0, 1.0, 2.0});
  for (auto* plane : {&maps.cbv, &maps.cbf, &maps.mtt, &maps.tmax})
    for (double& v : *plane) v = static_cast<float>(g.uniform(0.0, 80.0));
  io::write_maps(maps, dir / "maps.json");
  const auto back = io::read_maps(dir / "maps.json");
  CHECK(back.dims == maps.dims);
  CHECK(back.voxel_mm == maps.voxel_mm);
  CHECK(back.cbv == maps.cbv);
  CHECK(back.cbf == maps.cbf);
  CHECK(back.mtt == maps.mtt);
  CHECK(back.tmax == maps.tmax);
}

TEST_CASE("time series round trip keeps doubles exactly") {
  const auto dir = support::scratch_dir("series_rt");
  TimeSeries s{{0.1, 1.0 / 3.0, 2.5e-9, 7.0}, 0.75, SeriesKind::concentration};
  io::write_series(s, dir / "s.json");
  const auto back = io::read_series(dir / "s.json");
  CHECK(back.values == s.values);
  CHECK(back.dt_s == s.dt_s);
  CHECK(back.kind == s.kind);
}

TEST_CASE("malformed files raise format or io errors") {
  const auto dir = support::scratch_dir("vol_bad");
  Gen g(5);
  const auto v = random_volume(g, {2, 2, 1, 3});
  io::write_volume(v, dir / "v.json");

  SUBCASE("truncated raw") {
    std::filesystem::resize_file(dir / "v.raw", 8);
    CHECK(kind_of([&] { io::read_volume(dir / "v.json"); }) == ErrorKind::format);
  }
  SUBCASE("negative sample") {
    std::fstream f(dir / "v.raw", std::ios::binary | std::ios::in | std::ios::out);
    const float neg = -1.0f;
    f.write(reinterpret_cast<const char*>(&neg), 4);
    f.close();
    CHECK(kind_of([&] { io::read_volume(dir / "v.json"); }) == ErrorKind::format);
  }
  SUBCASE("missing file") {
    CHECK(kind_of([&] { io::read_volume(dir / "nope.json"); }) == ErrorKind::io);
  }
  SUBCASE("header without dims") {
    std::ofstream(dir / "v.json") << R"({"dt_s": 1, "te_s": 0.03})";
    CHECK(kind_of([&] { io::read_volume(dir / "v.json"); }) == ErrorKind::format);
  }
  SUBCASE("mask value 2") {
    auto m = io::Mask3D::zeros({2, 1, 1});
    io::write_mask(m, dir / "m.json");
    std::ofstream(dir / "m.raw", std::ios::binary) << '\x02' << '\x00';
    CHECK(kind_of([&] { io::read_mask(dir / "m.json"); }) == ErrorKind::format);
  }
}

TEST_CASE("in-memory invariants are enforced") {
  io::VolumeHeader h;
  h.dims = {2, 1, 1, 2};
  CHECK_THROWS_AS(io::Volume4D(h, {1.0, 2.0, 3.0}), Error);
  CHECK_THROWS_AS(io::Volume4D(h, {1.0, -2.0, 3.0, 4.0}), Error);
  h.dt_s = 0.0;
  CHECK_THROWS_AS(h.validate(), Error);
  auto maps = io::ParameterMaps::zeros({2, 2, 1});
  maps.cbf[1] = std::nan("");
  CHECK_THROWS_AS(maps.validate(), Error);
}
