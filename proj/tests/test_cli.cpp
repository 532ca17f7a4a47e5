#include <doctest.h>

#include <json.hpp>

#include "perfquant/volume_io.hpp"
#include "support.hpp"

using namespace perfquant;
using nlohmann::json;
using support::run_cli;
namespace fs = std::filesystem;

namespace {

json tiny_config() {
  return json::parse(R"({
    "phantom": {
      "dims": [16, 16, 1, 50],
      "snr": null,
      "seed": 5,
      "classes": [
        {"name": "normal", "cbf": 50.0, "cbv": 4.0, "delay_s": 0.0, "lesion": false, "box": [1, 15, 1, 15, 0, 1]},
        {"name": "core", "cbf": 15.0, "cbv": 2.0, "delay_s": 8.0, "lesion": true, "box": [4, 10, 4, 10, 0, 1]}
      ]
    },
    "kinetics": {"x_scale": 0.0005},
    "deconv": {"threshold_frac": 1e-6},
    "train": {"lr": 1e-3, "batch": 16, "max_epochs": 2, "patience": 5, "stride": 2, "seed": 2},
    "bench": {"batch": 64}
  })");
}

fs::path write_config(const fs::path& dir, const std::string& name, const json& doc) {
  const fs::path p = dir / name;
  std::ofstream(p) << doc.dump(2);
  return p;
}

json read_json(const fs::path& p) { return json::parse(support::read_text(p)); }

std::string q(const fs::path& p) { return "\"" + p.string() + "\""; }

// Every regular file under `dir`, relative path -> bytes.
std::map<std::string, std::string> snapshot(const fs::path& dir) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(dir))
    if (e.is_regular_file()) files[fs::relative(e.path(), dir).generic_string()] = support::read_text(e.path());
  return files;
}

bool single_error_line(const std::string& err, const std::string& kind) {
  const std::string prefix = "error: " + kind + ": ";
  return err.rfind(prefix, 0) == 0 && err.find('\n') == err.size() - 1;
}

struct Pipeline {
  fs::path root = support::scratch_dir("cli");
  fs::path cfg = write_config(root, "tiny.json", tiny_config());
  fs::path ph = root / "phantom";

  Pipeline() {
    const auto r = run_cli("phantom --config " + q(cfg) + " --out " + q(ph), root);
    REQUIRE(r.code == 0);
  }
  std::string inputs() const {
    return " --volume " + q(ph / "volume.json") + " --brain " + q(ph / "brain.json") + " --aif " +
           q(ph / "aif.json") + " --vof " + q(ph / "vof.json");
  }
};

Pipeline& pipeline() {
  static Pipeline p;
  return p;
}

}  // namespace

TEST_CASE("usage and schema errors") {
  const auto dir = support::scratch_dir("cli_errors");
  auto r = run_cli("phantom", dir);
  CHECK(r.code == 2);

  json doc = tiny_config();
  doc["phantom"].erase("classes");
  const auto bad = write_config(dir, "bad.json", doc);
  r = run_cli("phantom --config " + q(bad) + " --out " + q(dir / "o"), dir);
  CHECK(r.code == 5);
  CHECK(single_error_line(r.err, "schema"));
  CHECK(r.err.find("phantom.classes") != std::string::npos);

  doc = tiny_config();
  doc["deconv"]["threshhold"] = 0.1;
  r = run_cli("phantom --config " + q(write_config(dir, "typo.json", doc)) + " --out " + q(dir / "o"), dir);
  CHECK(r.code == 5);
  CHECK(r.err.find("deconv.threshhold") != std::string::npos);

  r = run_cli("deconv --out " + q(dir / "o") + " --volume " + q(dir / "nope.json"), dir);
  CHECK(r.code != 0);
  CHECK(r.err.rfind("error: ", 0) == 0);

  r = run_cli("phantom --config " + q(dir / "missing.json") + " --out " + q(dir / "o"), dir);
  CHECK(r.code == 3);
  CHECK(single_error_line(r.err, "io"));
}

TEST_CASE("phantom outputs and determinism") {
  auto& p = pipeline();
  for (const char* f : {"volume.json", "volume.raw", "truth.json", "brain.json", "lesion.json", "aif.json", "vof.json",
                        "provenance.json"})
    CHECK(fs::exists(p.ph / f));
  const auto vol = io::read_volume(p.ph / "volume.json");
  CHECK(vol.header().dims == std::array<int, 4>{16, 16, 1, 50});
  CHECK(io::read_mask(p.ph / "lesion.json").count() == 36u);

  const auto prov = read_json(p.ph / "provenance.json");
  CHECK(prov["command"] == "phantom");
  CHECK(prov.contains("toolkit_version"));
  CHECK(prov.contains("config"));
  CHECK(prov.contains("seeds"));

  const auto again = p.root / "phantom_again";
  REQUIRE(run_cli("phantom --config " + q(p.cfg) + " --out " + q(again), p.root).code == 0);
  CHECK(snapshot(again) == snapshot(p.ph));
}

TEST_CASE("deconv, evaluate and segment") {
  auto& p = pipeline();
  const auto dc = p.root / "deconv";
  auto r = run_cli("deconv --config " + q(p.cfg) + " --out " + q(dc) + p.inputs(), p.root);
  REQUIRE(r.code == 0);
  const auto maps = io::read_maps(dc / "maps.json");
  const auto truth = io::read_maps(p.ph / "truth.json");
  const auto brain = io::read_mask(p.ph / "brain.json");
  for (std::size_t v = 0; v < maps.cbv.size(); ++v) {
    if (!brain(v)) {
      CHECK(maps.cbv[v] == 0.0);
      continue;
    }
    CHECK(maps.cbv[v] == doctest::Approx(truth.cbv[v]).epsilon(0.02));
    if (maps.cbf[v] > 0.0) CHECK(maps.mtt[v] * maps.cbf[v] == doctest::Approx(60.0 * maps.cbv[v]).epsilon(1e-6));
  }
  CHECK(fs::exists(dc / "diagnostics.json"));

  SUBCASE("estimate equal to truth") {
    const auto ev = p.root / "eval_truth";
    r = run_cli("evaluate --config " + q(p.cfg) + " --out " + q(ev) + " --estimate " + q(p.ph / "truth.json") +
                    " --truth " + q(p.ph / "truth.json") + " --brain " + q(p.ph / "brain.json") + " --lesion " +
                    q(p.ph / "lesion.json"),
                p.root);
    REQUIRE(r.code == 0);
    const auto m = read_json(ev / "metrics.json");
    for (const char* map : {"cbv", "cbf", "mtt", "tmax"}) {
      CHECK(m["map"][map]["ssim"].get<double>() == doctest::Approx(1.0));
      CHECK(m["map"][map]["nrmse"].get<double>() == 0.0);
      CHECK(m["map"][map]["psnr"] == "inf");
    }
    CHECK(m["segmentation"]["dice"].get<double>() == 1.0);
    CHECK(m["segmentation"]["auc"].get<double>() == 1.0);
    CHECK(fs::exists(ev / "render" / "truth_tmax_z0.pgm"));
    CHECK(fs::exists(ev / "render" / "estimate_cbv_z0.pgm"));
    CHECK(support::read_text(ev / "render" / "truth_tmax_z0.pgm").rfind("P5\n16 16\n255\n", 0) == 0);
  }

  SUBCASE("segment") {
    const std::string base = " --config " + q(p.cfg) + " --tmax " + q(p.ph / "truth.json") + " --brain " +
                             q(p.ph / "brain.json");
    r = run_cli("segment" + base + " --out " + q(p.root / "seg_bad") + " --threshold auto", p.root);
    CHECK(r.code == 6);
    CHECK(single_error_line(r.err, "precondition"));

    r = run_cli("segment" + base + " --lesion " + q(p.ph / "lesion.json") + " --out " + q(p.root / "seg_auto") +
                    " --threshold auto",
                p.root);
    REQUIRE(r.code == 0);
    const auto rep = read_json(p.root / "seg_auto" / "segment_report.json");
    CHECK(rep["mode"] == "auto");
    CHECK(rep["dice"].get<double>() == 1.0);
    CHECK(rep["threshold_s"].get<double>() > 0.0);
    CHECK(rep["threshold_s"].get<double>() < 8.0);

    r = run_cli("segment" + base + " --out " + q(p.root / "seg_fixed") + " --threshold 6", p.root);
    REQUIRE(r.code == 0);
    CHECK(io::read_mask(p.root / "seg_fixed" / "segmentation.json") ==
          io::read_mask(p.root / "seg_auto" / "segmentation.json"));
    CHECK(io::read_mask(p.root / "seg_fixed" / "segmentation.json") == io::read_mask(p.ph / "lesion.json"));
  }

  SUBCASE("empty brain mask") {
    auto empty = io::Mask3D::zeros(brain.dims, brain.voxel_mm);
    io::write_mask(empty, p.root / "empty.json");
    r = run_cli("deconv --config " + q(p.cfg) + " --out " + q(p.root / "dc_empty") + " --volume " +
                    q(p.ph / "volume.json") + " --brain " + q(p.root / "empty.json") + " --aif " + q(p.ph / "aif.json") +
                    " --vof " + q(p.ph / "vof.json"),
                p.root);
    CHECK(r.code == 6);
  }
}

TEST_CASE("train, predict, bench") {
  auto& p = pipeline();
  const auto tr = p.root / "train";
  const std::string train_args = "train --config " + q(p.cfg) + " --out " + q(tr) + " --volume " +
                                 q(p.ph / "volume.json") + " --brain " + q(p.ph / "brain.json") + " --truth " +
                                 q(p.ph / "truth.json") + " --lesion " + q(p.ph / "lesion.json") + " --aif " +
                                 q(p.ph / "aif.json") + " --vof " + q(p.ph / "vof.json");
  auto r = run_cli(train_args, p.root);
  REQUIRE(r.code == 0);
  CHECK(r.out.find("best_epoch=") != std::string::npos);
  const auto log = support::read_text(tr / "train_log.csv");
  CHECK(log.rfind("epoch,train_loss,val_loss\n", 0) == 0);
  CHECK(std::count(log.begin(), log.end(), '\n') == 3);

  const auto tr2 = p.root / "train_again";
  std::string again_args = train_args;
  again_args.replace(again_args.find(q(tr)), q(tr).size(), q(tr2));
  REQUIRE(run_cli(again_args, p.root).code == 0);
  CHECK(support::read_text(tr / "model.stn") == support::read_text(tr2 / "model.stn"));

  const auto pr = p.root / "predict";
  r = run_cli("predict --config " + q(p.cfg) + " --out " + q(pr) + " --checkpoint " + q(tr / "model.stn") + p.inputs(),
              p.root);
  REQUIRE(r.code == 0);
  const auto maps = io::read_maps(pr / "maps.json");
  const auto brain = io::read_mask(p.ph / "brain.json");
  for (std::size_t v = 0; v < maps.cbv.size(); ++v) {
    if (!brain(v)) {
      CHECK(maps.cbv[v] == 0.0);
      CHECK(maps.cbf[v] == 0.0);
      CHECK(maps.mtt[v] == 0.0);
      CHECK(maps.tmax[v] == 0.0);
    } else if (maps.cbf[v] > 0.0) {
      CHECK(maps.mtt[v] * maps.cbf[v] == doctest::Approx(60.0 * maps.cbv[v]).epsilon(1e-6));
    }
  }
  const auto stats = read_json(pr / "predict_stats.json");
  CHECK(stats["voxels"].get<std::size_t>() == brain.count());

  const auto bench = p.root / "bench";
  r = run_cli("bench --config " + q(p.cfg) + " --out " + q(bench) + " --checkpoint " + q(tr / "model.stn") +
                  p.inputs(),
              p.root);
  REQUIRE(r.code == 0);
  const auto b = read_json(bench / "bench.json");
  CHECK(b["voxels"].get<std::size_t>() == brain.count());
  CHECK(b["stnet_voxels_predicted"].get<std::size_t>() == brain.count());
  CHECK(b["batch"] == 64);
  for (const char* key : {"deconv_seconds_per_10k_voxels", "stnet_seconds_per_10k_voxels", "ratio_deconv_over_stnet"}) {
    REQUIRE(b[key].is_number());
    CHECK(b[key].get<double>() > 0.0);
  }
}

TEST_CASE("sweep") {
  auto& p = pipeline();
  json doc = tiny_config();
  doc["train"]["max_epochs"] = 1;
  const auto cfg = write_config(p.root, "sweep.json", doc);
  const auto out = p.root / "sweep";
  const auto r = run_cli("sweep --config " + q(cfg) + " --out " + q(out) + " --axis stride --values 2,4", p.root);
  REQUIRE(r.code == 0);
  const auto csv = support::read_text(out / "sweep.csv");
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 3);
  CHECK(csv.rfind("value,", 0) == 0);
  CHECK(csv.find("\n2,") != std::string::npos);
  CHECK(csv.find("\n4,") != std::string::npos);
}
