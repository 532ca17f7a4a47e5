#include "perfquant/commands.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <ostream>

#include "perfquant/deconv.hpp"
#include "perfquant/error.hpp"
#include "perfquant/metrics.hpp"
#include "perfquant/phantom.hpp"
#include "perfquant/stnet/checkpoint.hpp"
#include "perfquant/stnet/inference.hpp"
#include "perfquant/stnet/patches.hpp"
#include "perfquant/stnet/train.hpp"

namespace perfquant::commands {

namespace {

using nlohmann::json;

const fs::path& need(const std::optional<fs::path>& p, const char* name) {
  require(p.has_value(), ErrorKind::schema, std::string("missing input '") + name + "' (--" + name + " or paths." + name + ")");
  return *p;
}

void prepare_out(const fs::path& out) {
  std::error_code ec;
  fs::create_directories(out, ec);
  require(!ec && fs::is_directory(out), ErrorKind::io, "cannot create output directory " + out.string());
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  require(static_cast<bool>(f), ErrorKind::io, "cannot write " + path.string());
  f << text;
  require(static_cast<bool>(f), ErrorKind::io, "failed writing " + path.string());
}

void write_json(const fs::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// JSON has no infinity; the +inf PSNR sentinel and an infinite threshold are
// written as the string "inf".
json number(double v) {
  if (std::isnan(v)) return nullptr;
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

template <typename F>
json defined_or_null(F&& f) {
  try {
    return number(f());
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::numeric) return nullptr;
    throw;
  }
}

using InputList = std::vector<std::pair<std::string, fs::path>>;

void write_provenance(const fs::path& out, const std::string& command, const config::RunConfig& cfg,
                      const InputList& inputs, const json& seeds) {
  json digests = json::object();
  for (const auto& [name, path] : inputs) {
    digests[name] = {{"path", path.generic_string()}, {"fnv1a64", hex64(file_digest(path))}};
    if (path.extension() != ".json") continue;
    const fs::path raw = io::raw_path_for(path);
    if (fs::exists(raw)) digests[name + ".raw"] = {{"path", raw.generic_string()}, {"fnv1a64", hex64(file_digest(raw))}};
    for (const char* plane : {"cbv", "cbf", "mtt", "tmax"}) {
      const fs::path p = io::raw_path_for(path, plane);
      if (fs::exists(p))
        digests[name + "_" + plane + ".raw"] = {{"path", p.generic_string()}, {"fnv1a64", hex64(file_digest(p))}};
    }
  }
  write_json(out / "provenance.json", {{"command", command},
                                       {"toolkit_version", PERFQUANT_VERSION},
                                       {"config", config::to_json(cfg)},
                                       {"seeds", seeds},
                                       {"inputs", digests}});
}

std::array<std::span<const double>, 4> planes(const io::ParameterMaps& m) { return {m.cbv, m.cbf, m.tmax, m.mtt}; }
constexpr std::array<const char*, 4> kPlaneNames{"cbv", "cbf", "tmax", "mtt"};

io::Mask3D load_nonempty_mask(const fs::path& p, const char* what) {
  io::Mask3D m = io::read_mask(p);
  require(m.count() > 0, ErrorKind::precondition, std::string(what) + " mask is empty");
  return m;
}

void check_grid(const io::Dims3& a, const io::Dims3& b, const std::string& what) {
  require(a == b, ErrorKind::precondition, what + " dims do not match the volume");
}

}  // namespace

std::uint64_t file_digest(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), ErrorKind::io, "cannot open " + path.string());
  std::uint64_t h = 0xcbf29ce484222325ull;
  char buf[1 << 16];
  while (in) {
    in.read(buf, sizeof buf);
    for (std::streamsize i = 0; i < in.gcount(); ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 0x100000001b3ull;
    }
  }
  return h;
}

void write_pgm(const fs::path& path, std::span<const double> map, const io::Dims3& dims, int z, double lo, double hi) {
  std::string text = "P5\n" + std::to_string(dims[0]) + " " + std::to_string(dims[1]) + "\n255\n";
  const double span = hi - lo;
  for (int y = 0; y < dims[1]; ++y)
    for (int x = 0; x < dims[0]; ++x) {
      const double v = map[io::voxel_index(dims, x, y, z)];
      const double u = span > 0.0 ? std::clamp((v - lo) / span, 0.0, 1.0) : 0.0;
      text.push_back(static_cast<char>(static_cast<unsigned char>(std::lround(255.0 * u))));
    }
  write_text(path, text);
}

json evaluate_maps(const io::ParameterMaps& estimate, const io::ParameterMaps& truth, const io::Mask3D& brain,
                   const io::Mask3D& lesion, const config::MetricsConfig& options) {
  require(estimate.dims == truth.dims && brain.dims == truth.dims && lesion.dims == truth.dims,
          ErrorKind::precondition, "estimate, truth and masks must share dims");
  json maps = json::object();
  const auto est = planes(estimate);
  const auto ref = planes(truth);
  metrics::SsimOptions ssim_options;
  ssim_options.window = options.ssim_window;
  for (std::size_t i = 0; i < kPlaneNames.size(); ++i) {
    const metrics::MaskedPair pair{ref[i], est[i], brain};
    maps[kPlaneNames[i]] = {{"psnr", defined_or_null([&] { return metrics::psnr(pair); })},
                            {"ssim", defined_or_null([&] { return metrics::ssim(pair, ssim_options); })},
                            {"pcc", defined_or_null([&] { return metrics::pcc(pair); })},
                            {"scc", defined_or_null([&] { return metrics::scc(pair); })},
                            {"nrmse", defined_or_null([&] { return metrics::nrmse(pair); })}};
  }
  const auto roc = metrics::roc_and_auc(estimate.tmax, lesion, brain);
  const double threshold = options.threshold_s ? *options.threshold_s : metrics::select_threshold(roc.curve);
  const io::Mask3D seg = metrics::segment_hypoperfusion(estimate.tmax, brain, threshold);
  json segmentation = {{"auc", number(roc.auc)},
                       {"dice", number(metrics::dice(seg, lesion))},
                       {"iou", number(metrics::iou(seg, lesion))},
                       {"hd95_mm", defined_or_null([&] { return metrics::hd95(seg, lesion, brain.voxel_mm); })},
                       {"threshold_s", number(threshold)}};
  return {{"map", maps}, {"segmentation", segmentation}};
}

void cmd_phantom(const config::RunConfig& cfg, const fs::path& out, std::ostream& log) {
  const auto& p = cfg.require_phantom();
  prepare_out(out);
  const phantom::PhantomTruth truth = phantom::generate_truth(p);
  const io::Volume4D volume = phantom::synthesize_dsc(truth, cfg.kinetics, p.header(), p.s0, p.snr, p.seed);
  io::write_volume(volume, out / "volume.json");
  io::write_maps(truth.maps, out / "truth.json");
  io::write_mask(truth.brain_mask, out / "brain.json");
  io::write_mask(truth.lesion_mask, out / "lesion.json");
  io::write_series(truth.aif, out / "aif.json");
  io::write_series(truth.vof, out / "vof.json");
  write_provenance(out, "phantom", cfg, {}, {{"phantom", p.seed}});
  log << "phantom: " << truth.brain_mask.count() << " brain voxels, " << truth.lesion_mask.count()
      << " lesion voxels\n";
}

void cmd_deconv(const config::RunConfig& cfg, const fs::path& out, std::ostream& log) {
  const auto& paths = cfg.paths;
  const io::Volume4D volume = io::read_volume(need(paths.volume, "volume"));
  const io::Mask3D brain = load_nonempty_mask(need(paths.brain, "brain"), "brain");
  check_grid(brain.dims, volume.header().spatial(), "brain mask");
  const TimeSeries aif = io::read_series(need(paths.aif, "aif"));
  const TimeSeries vof = io::read_series(need(paths.vof, "vof"));
  prepare_out(out);
  const auto result = deconv::deconvolve_volume(volume, brain, aif, vof, cfg.kinetics, cfg.deconv, cfg.n_pre);
  io::write_maps(result.maps, out / "maps.json");
  json diag = json::object();
  for (const auto& [k, v] : result.diagnostics) diag[k] = v;
  write_json(out / "diagnostics.json", diag);
  write_provenance(out, "deconv", cfg,
                   {{"volume", *paths.volume}, {"brain", *paths.brain}, {"aif", *paths.aif}, {"vof", *paths.vof}},
                   json::object());
  log << "deconv: " << result.diagnostics.at("voxels_processed") << " voxels, svd rank "
      << result.diagnostics.at("svd_rank") << "\n";
}

void cmd_train(const config::RunConfig& cfg, const std::vector<TrainSource>& extra, const fs::path& out,
               std::ostream& log) {
  const auto& paths = cfg.paths;
  std::vector<TrainSource> sources;
  if (paths.volume) sources.push_back({*paths.volume, need(paths.brain, "brain"), need(paths.truth, "truth"), paths.lesion});
  sources.insert(sources.end(), extra.begin(), extra.end());
  require(!sources.empty(), ErrorKind::schema, "missing input 'volume' (--volume or paths.volume)");
  const TimeSeries aif = io::read_series(need(paths.aif, "aif"));
  const TimeSeries vof = io::read_series(need(paths.vof, "vof"));
  const double kav = kinetics::compute_kav(aif, vof);

  InputList inputs{{"aif", *paths.aif}, {"vof", *paths.vof}};
  std::vector<stnet::Patch> patches;
  for (std::size_t s = 0; s < sources.size(); ++s) {
    const auto& src = sources[s];
    const io::Volume4D volume = io::read_volume(src.volume);
    const io::Mask3D brain = load_nonempty_mask(src.brain, "brain");
    const io::ParameterMaps truth = io::read_maps(src.truth);
    check_grid(brain.dims, volume.header().spatial(), "brain mask");
    check_grid(truth.dims, volume.header().spatial(), "truth maps");
    std::optional<io::Mask3D> lesion;
    if (src.lesion) {
      lesion = io::read_mask(*src.lesion);
      check_grid(lesion->dims, volume.header().spatial(), "lesion mask");
    }
    stnet::PatchOptions options;
    options.stride = cfg.train.stride;
    options.ratio = cfg.train.ratio;
    options.seed = cfg.train.seed + s;
    options.n_pre = cfg.n_pre;
    auto more = stnet::extract_patches(volume, brain, lesion ? &*lesion : nullptr, aif, cfg.kinetics, options, &truth);
    patches.insert(patches.end(), std::make_move_iterator(more.begin()), std::make_move_iterator(more.end()));
    const std::string tag = s == 0 ? "" : std::to_string(s);
    inputs.emplace_back("volume" + tag, src.volume);
    inputs.emplace_back("brain" + tag, src.brain);
    inputs.emplace_back("truth" + tag, src.truth);
    if (src.lesion) inputs.emplace_back("lesion" + tag, *src.lesion);
  }

  prepare_out(out);
  std::string csv = "epoch,train_loss,val_loss\n";
  const auto result = stnet::train(patches, cfg.train, cfg.kinetics, kav, cfg.n_pre, [&](const stnet::EpochLog& e) {
    csv += std::to_string(e.epoch) + "," + fmt(e.train_loss) + "," + fmt(e.val_loss) + "\n";
  });
  write_text(out / "train_log.csv", csv);
  stnet::write_checkpoint(result.params, out / "model.stn");
  write_provenance(out, "train", cfg, inputs, {{"train", cfg.train.seed}});
  log << "train: " << patches.size() << " patches, " << result.log.size() << " epochs\n";
  log << "best_epoch=" << result.best_epoch << " val_loss=" << fmt(result.best_val_loss) << "\n";
}

void cmd_predict(const config::RunConfig& cfg, const fs::path& out, std::ostream& log) {
  const auto& paths = cfg.paths;
  const io::Volume4D volume = io::read_volume(need(paths.volume, "volume"));
  const io::Mask3D brain = load_nonempty_mask(need(paths.brain, "brain"), "brain");
  check_grid(brain.dims, volume.header().spatial(), "brain mask");
  const TimeSeries aif = io::read_series(need(paths.aif, "aif"));
  const stnet::ModelParams model = stnet::read_checkpoint(need(paths.checkpoint, "checkpoint"));
  prepare_out(out);
  stnet::PredictStats stats;
  const io::ParameterMaps maps = stnet::predict_volume(volume, brain, aif, model, &stats);
  io::write_maps(maps, out / "maps.json");
  write_json(out / "predict_stats.json", {{"voxels", stats.voxels},
                                          {"skipped_baseline", stats.skipped_baseline},
                                          {"clamped_negative", stats.clamped_negative},
                                          {"undefined_mtt", stats.undefined_mtt}});
  write_provenance(out, "predict", cfg,
                   {{"volume", *paths.volume}, {"brain", *paths.brain}, {"aif", *paths.aif},
                    {"checkpoint", *paths.checkpoint}},
                   json::object());
  log << "predict: " << stats.voxels << " voxels\n";
}

void cmd_evaluate(const config::RunConfig& cfg, const fs::path& out, std::ostream& log) {
  const auto& paths = cfg.paths;
  const io::ParameterMaps estimate = io::read_maps(need(paths.estimate, "estimate"));
  const io::ParameterMaps truth = io::read_maps(need(paths.truth, "truth"));
  const io::Mask3D brain = load_nonempty_mask(need(paths.brain, "brain"), "brain");
  const io::Mask3D lesion = io::read_mask(need(paths.lesion, "lesion"));
  const json report = evaluate_maps(estimate, truth, brain, lesion, cfg.metrics);
  prepare_out(out);
  write_json(out / "metrics.json", report);

  const fs::path render = out / "render";
  prepare_out(render);
  const auto est = planes(estimate);
  const auto ref = planes(truth);
  for (std::size_t i = 0; i < kPlaneNames.size(); ++i) {
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (auto plane : {est[i], ref[i]})
      for (double v : plane) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
    for (int z = 0; z < truth.dims[2]; ++z) {
      const std::string suffix = std::string(kPlaneNames[i]) + "_z" + std::to_string(z) + ".pgm";
      write_pgm(render / ("estimate_" + suffix), est[i], truth.dims, z, lo, hi);
      write_pgm(render / ("truth_" + suffix), ref[i], truth.dims, z, lo, hi);
    }
  }
  write_provenance(out, "evaluate", cfg,
                   {{"estimate", *paths.estimate}, {"truth", *paths.truth}, {"brain", *paths.brain},
                    {"lesion", *paths.lesion}},
                   json::object());
  log << "evaluate: ssim(tmax)=" << report["map"]["tmax"]["ssim"].dump()
      << " dice=" << report["segmentation"]["dice"].dump() << "\n";
}

void cmd_segment(const config::RunConfig& cfg, const fs::path& out, std::ostream& log) {
  const auto& paths = cfg.paths;
  const fs::path& tmax_path = paths.tmax ? *paths.tmax : need(paths.estimate, "tmax");
  const io::ParameterMaps maps = io::read_maps(tmax_path);
  const io::Mask3D brain = load_nonempty_mask(need(paths.brain, "brain"), "brain");
  check_grid(brain.dims, maps.dims, "brain mask");
  std::optional<io::Mask3D> lesion;
  if (paths.lesion) {
    lesion = io::read_mask(*paths.lesion);
    check_grid(lesion->dims, maps.dims, "lesion mask");
  }

  json report = json::object();
  double threshold = 0.0;
  std::optional<metrics::Roc> roc;
  if (lesion) roc = metrics::roc_and_auc(maps.tmax, *lesion, brain);
  if (cfg.metrics.threshold_s) {
    threshold = *cfg.metrics.threshold_s;
    report["mode"] = "fixed";
  } else {
    require(lesion.has_value(), ErrorKind::precondition, "automatic threshold selection needs a lesion mask");
    threshold = metrics::select_threshold(roc->curve);
    report["mode"] = "auto";
  }
  const io::Mask3D seg = metrics::segment_hypoperfusion(maps.tmax, brain, threshold);
  report["threshold_s"] = number(threshold);
  report["segmented_voxels"] = seg.count();
  if (lesion) {
    report["auc"] = number(roc->auc);
    report["dice"] = number(metrics::dice(seg, *lesion));
    report["iou"] = number(metrics::iou(seg, *lesion));
    report["hd95_mm"] = defined_or_null([&] { return metrics::hd95(seg, *lesion, brain.voxel_mm); });
  }
  prepare_out(out);
  io::write_mask(seg, out / "segmentation.json");
  write_json(out / "segment_report.json", report);
  InputList inputs{{"tmax", tmax_path}, {"brain", *paths.brain}};
  if (paths.lesion) inputs.emplace_back("lesion", *paths.lesion);
  write_provenance(out, "segment", cfg, inputs, json::object());
  log << "segment: threshold " << report["threshold_s"].dump() << " s, " << seg.count() << " voxels\n";
}

void cmd_sweep(const config::RunConfig& cfg, const fs::path& out, std::ostream& log) {
  const auto& p = cfg.require_phantom();
  require(!cfg.sweep.values.empty(), ErrorKind::schema, "sweep.values must not be empty");
  const phantom::PhantomTruth truth = phantom::generate_truth(p);
  const io::Volume4D train_volume = phantom::synthesize_dsc(truth, cfg.kinetics, p.header(), p.s0, p.snr, p.seed);
  const io::Volume4D test_volume = phantom::synthesize_dsc(truth, cfg.kinetics, p.header(), p.s0, p.snr, p.seed + 1);
  const double kav = kinetics::compute_kav(truth.aif, truth.vof);
  prepare_out(out);

  std::string csv =
      "value,patches,best_epoch,best_val_loss,ssim_cbv,ssim_cbf,ssim_tmax,dice,"
      "lesion_nrmse_cbv,lesion_nrmse_cbf,lesion_nrmse_tmax\n";
  for (double value : cfg.sweep.values) {
    config::RunConfig run = cfg;
    const std::string& axis = cfg.sweep.axis;
    if (axis == "stride") {
      require(value >= 1.0 && value == std::floor(value), ErrorKind::schema, "stride sweep values must be integers >= 1");
      run.train.stride = static_cast<int>(value);
    } else if (axis == "ratio") {
      run.train.ratio = value;
    } else if (axis == "w_phys") {
      run.train.w_phys = value;
    } else {
      run.train.lr = value;
    }
    run.train.validate();

    stnet::PatchOptions options;
    options.stride = run.train.stride;
    options.ratio = run.train.ratio;
    options.seed = run.train.seed;
    options.n_pre = run.n_pre;
    const auto patches = stnet::extract_patches(train_volume, truth.brain_mask, &truth.lesion_mask, truth.aif,
                                                run.kinetics, options, &truth.maps);
    const auto result = stnet::train(patches, run.train, run.kinetics, kav, run.n_pre);
    const io::ParameterMaps est = stnet::predict_volume(test_volume, truth.brain_mask, truth.aif, result.params);
    const json report = evaluate_maps(est, truth.maps, truth.brain_mask, truth.lesion_mask, run.metrics);

    auto lesion_nrmse = [&](std::span<const double> ref, std::span<const double> e) {
      return defined_or_null([&] { return metrics::nrmse({ref, e, truth.lesion_mask}); });
    };
    auto cell = [](const json& j) { return j.is_number() ? fmt(j.get<double>()) : std::string(j.is_null() ? "" : j.get<std::string>()); };
    csv += fmt(value) + "," + std::to_string(patches.size()) + "," + std::to_string(result.best_epoch) + "," +
           fmt(result.best_val_loss) + "," + cell(report["map"]["cbv"]["ssim"]) + "," +
           cell(report["map"]["cbf"]["ssim"]) + "," + cell(report["map"]["tmax"]["ssim"]) + "," +
           cell(report["segmentation"]["dice"]) + "," + cell(lesion_nrmse(truth.maps.cbv, est.cbv)) + "," +
           cell(lesion_nrmse(truth.maps.cbf, est.cbf)) + "," + cell(lesion_nrmse(truth.maps.tmax, est.tmax)) + "\n";
    log << "sweep: " << axis << "=" << fmt(value) << " done\n";
  }
  write_text(out / "sweep.csv", csv);
  write_provenance(out, "sweep", cfg, {}, {{"phantom_train", p.seed}, {"phantom_test", p.seed + 1}, {"train", cfg.train.seed}});
}

void cmd_bench(const config::RunConfig& cfg, const fs::path& out, std::ostream& log) {
  using clock = std::chrono::steady_clock;
  const auto& paths = cfg.paths;
  const io::Volume4D volume = io::read_volume(need(paths.volume, "volume"));
  const io::Mask3D brain = load_nonempty_mask(need(paths.brain, "brain"), "brain");
  check_grid(brain.dims, volume.header().spatial(), "brain mask");
  const TimeSeries aif = io::read_series(need(paths.aif, "aif"));
  const TimeSeries vof = io::read_series(need(paths.vof, "vof"));
  const stnet::ModelParams model = stnet::read_checkpoint(need(paths.checkpoint, "checkpoint"));
  require(volume.header().nt() == stnet::kTimeLength, ErrorKind::precondition, "benchmark needs nt = 50");

  const auto t0 = clock::now();
  const auto svd = deconv::deconvolve_volume(volume, brain, aif, vof, cfg.kinetics, cfg.deconv, cfg.n_pre);
  const auto t1 = clock::now();

  const auto& h = volume.header();
  std::vector<stnet::NetInput> batch;
  std::size_t predicted = 0;
  auto flush = [&] {
    predicted += stnet::predict_batch(model, batch).size();
    batch.clear();
  };
  for (std::size_t i = 0; i < h.voxels(); ++i) {
    if (!brain(i)) continue;
    const auto c = io::voxel_coords(h.spatial(), i);
    double sum = 0.0;
    for (int t = 0; t < model.norm.n_pre; ++t) sum += volume.at(c[0], c[1], c[2], t);
    if (!(sum > 0.0)) continue;
    batch.push_back(stnet::make_input(stnet::crop_patch(volume, c, aif, model.norm.n_pre), model.norm));
    if (batch.size() == static_cast<std::size_t>(cfg.bench.batch)) flush();
  }
  flush();
  const auto t2 = clock::now();

  const double voxels = static_cast<double>(brain.count());
  const double deconv_s = std::chrono::duration<double>(t1 - t0).count();
  const double stnet_s = std::chrono::duration<double>(t2 - t1).count();
  const json report = {{"voxels", brain.count()},
                       {"stnet_voxels_predicted", predicted},
                       {"batch", cfg.bench.batch},
                       {"threads", 1},
                       {"deconv_seconds", deconv_s},
                       {"stnet_seconds", stnet_s},
                       {"deconv_seconds_per_10k_voxels", deconv_s * 1e4 / voxels},
                       {"stnet_seconds_per_10k_voxels", stnet_s * 1e4 / voxels},
                       {"ratio_deconv_over_stnet", stnet_s > 0.0 ? number(deconv_s / stnet_s) : json(nullptr)},
                       {"deconv_voxels_processed", svd.diagnostics.at("voxels_processed")}};
  prepare_out(out);
  write_json(out / "bench.json", report);
  write_provenance(out, "bench", cfg,
                   {{"volume", *paths.volume}, {"brain", *paths.brain}, {"aif", *paths.aif}, {"vof", *paths.vof},
                    {"checkpoint", *paths.checkpoint}},
                   json::object());
  log << "bench: deconv " << fmt(deconv_s * 1e4 / voxels) << " s/10k voxels, st-net "
      << fmt(stnet_s * 1e4 / voxels) << " s/10k voxels\n";
}

}  // namespace perfquant::commands
