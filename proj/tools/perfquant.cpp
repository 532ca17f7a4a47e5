#include <CLI11.hpp>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "perfquant/commands.hpp"
#include "perfquant/config.hpp"
#include "perfquant/error.hpp"

namespace {

using namespace perfquant;
namespace fs = std::filesystem;

struct Flags {
  std::string config, out;
  std::vector<std::string> volume, brain, lesion, truth;
  std::string aif, vof, checkpoint, estimate, tmax, threshold, axis, values;
};

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::io: return 3;
    case ErrorKind::format: return 4;
    case ErrorKind::schema: return 5;
    case ErrorKind::precondition: return 6;
    case ErrorKind::numeric: return 7;
  }
  return 1;
}

std::string one_line(std::string s) {
  for (char& c : s)
    if (c == '\n' || c == '\r') c = ' ';
  return s;
}

void apply(const Flags& f, config::RunConfig& cfg, bool multi_volume) {
  auto set = [](const std::string& v, std::optional<fs::path>& slot) {
    if (!v.empty()) slot = v;
  };
  if (!multi_volume) {
    require(f.volume.size() <= 1 && f.brain.size() <= 1 && f.lesion.size() <= 1 && f.truth.size() <= 1,
            ErrorKind::schema, "only train accepts repeated --volume/--brain/--lesion/--truth");
    if (!f.volume.empty()) cfg.paths.volume = f.volume[0];
    if (!f.brain.empty()) cfg.paths.brain = f.brain[0];
    if (!f.lesion.empty()) cfg.paths.lesion = f.lesion[0];
    if (!f.truth.empty()) cfg.paths.truth = f.truth[0];
  }
  set(f.aif, cfg.paths.aif);
  set(f.vof, cfg.paths.vof);
  set(f.checkpoint, cfg.paths.checkpoint);
  set(f.estimate, cfg.paths.estimate);
  set(f.tmax, cfg.paths.tmax);
  if (!f.threshold.empty()) {
    if (f.threshold == "auto") {
      cfg.metrics.threshold_s.reset();
    } else {
      double v = 0.0;
      std::size_t used = 0;
      try {
        v = std::stod(f.threshold, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      require(used == f.threshold.size() && v >= 0.0, ErrorKind::schema,
              "--threshold must be 'auto' or a number of seconds >= 0");
      cfg.metrics.threshold_s = v;
    }
  }
  if (!f.axis.empty()) {
    require(f.axis == "stride" || f.axis == "ratio" || f.axis == "w_phys" || f.axis == "lr", ErrorKind::schema,
            "--axis must be one of stride, ratio, w_phys, lr");
    cfg.sweep.axis = f.axis;
  }
  if (!f.values.empty()) {
    cfg.sweep.values.clear();
    std::stringstream ss(f.values);
    std::string item;
    while (std::getline(ss, item, ',')) {
      std::size_t used = 0;
      double v = 0.0;
      try {
        v = std::stod(item, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      require(used > 0 && used == item.size(), ErrorKind::schema, "--values must be a comma-separated list of numbers");
      cfg.sweep.values.push_back(v);
    }
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"perfquant: DSC-MRI perfusion quantification"};
  app.require_subcommand(1);
  Flags f;

  struct Spec {
    const char* name;
    const char* help;
  };
  const Spec specs[] = {
      {"phantom", "Generate a synthetic phantom with ground truth"},
      {"deconv", "Truncated-SVD deconvolution maps"},
      {"train", "Train the spatiotemporal network"},
      {"predict", "Whole-volume network inference"},
      {"evaluate", "Compare estimated maps with ground truth"},
      {"segment", "Threshold a Tmax map into a hypo-perfusion mask"},
      {"sweep", "Train and evaluate over a list of hyperparameter values"},
      {"bench", "Time deconvolution against network inference"},
  };
  for (const auto& s : specs) {
    auto* sub = app.add_subcommand(s.name, s.help);
    sub->add_option("--config", f.config, "JSON run configuration");
    sub->add_option("--out", f.out, "Output directory")->required();
    sub->add_option("--volume", f.volume, "Volume header (.json)");
    sub->add_option("--brain", f.brain, "Brain mask header");
    sub->add_option("--lesion", f.lesion, "Lesion mask header");
    sub->add_option("--truth", f.truth, "Ground-truth maps header");
    sub->add_option("--aif", f.aif, "AIF time series");
    sub->add_option("--vof", f.vof, "VOF time series");
    sub->add_option("--checkpoint", f.checkpoint, "STN1 checkpoint");
    sub->add_option("--estimate", f.estimate, "Estimated maps header");
    sub->add_option("--tmax", f.tmax, "Maps header whose Tmax plane is segmented");
    sub->add_option("--threshold", f.threshold, "Seconds, or 'auto'");
    sub->add_option("--axis", f.axis, "Sweep axis: stride, ratio, w_phys or lr");
    sub->add_option("--values", f.values, "Comma-separated sweep values");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: usage: " << one_line(e.what()) << "\n";
    return 2;
  }

  const std::string cmd = app.get_subcommands().front()->get_name();
  try {
    config::RunConfig cfg = f.config.empty() ? config::parse(nlohmann::json::object()) : config::load(f.config);
    const bool multi = cmd == "train";
    apply(f, cfg, multi);
    const fs::path out = f.out;
    if (cmd == "phantom") {
      commands::cmd_phantom(cfg, out, std::cout);
    } else if (cmd == "deconv") {
      commands::cmd_deconv(cfg, out, std::cout);
    } else if (cmd == "train") {
      std::vector<commands::TrainSource> sources;
      require(f.brain.size() == f.volume.size() && f.truth.size() == f.volume.size() &&
                  (f.lesion.empty() || f.lesion.size() == f.volume.size()),
              ErrorKind::schema, "train needs one --brain and --truth (and optionally --lesion) per --volume");
      for (std::size_t i = 0; i < f.volume.size(); ++i) {
        commands::TrainSource s{f.volume[i], f.brain[i], f.truth[i], std::nullopt};
        if (!f.lesion.empty()) s.lesion = f.lesion[i];
        sources.push_back(s);
      }
      if (!sources.empty()) cfg.paths.volume.reset();
      commands::cmd_train(cfg, sources, out, std::cout);
    } else if (cmd == "predict") {
      commands::cmd_predict(cfg, out, std::cout);
    } else if (cmd == "evaluate") {
      commands::cmd_evaluate(cfg, out, std::cout);
    } else if (cmd == "segment") {
      commands::cmd_segment(cfg, out, std::cout);
    } else if (cmd == "sweep") {
      commands::cmd_sweep(cfg, out, std::cout);
    } else {
      commands::cmd_bench(cfg, out, std::cout);
    }
  } catch (const Error& e) {
    std::cerr << "error: " << to_string(e.kind()) << ": " << one_line(e.what()) << "\n";
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "error: internal: " << one_line(e.what()) << "\n";
    return 1;
  }
  return 0;
}
