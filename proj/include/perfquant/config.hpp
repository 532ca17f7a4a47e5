#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "perfquant/deconv.hpp"
#include "perfquant/phantom.hpp"
#include "perfquant/stnet/train.hpp"
#include "perfquant/tracer_kinetics.hpp"

namespace perfquant::config {

struct MetricsConfig {
  std::optional<double> threshold_s = 6.0;  // none = ROC-based automatic selection
  int ssim_window = 7;
};

struct BenchConfig {
  int batch = 512;
};

struct SweepConfig {
  std::string axis = "stride";
  std::vector<double> values{1.0, 2.0, 4.0};
};

/// Input files; every entry can also be given on the command line, which wins.
struct Paths {
  std::optional<std::filesystem::path> volume, brain, lesion, aif, vof, truth, checkpoint, estimate, tmax;
};

/// Whole-run configuration. Sections absent from the JSON keep their
/// defaults, except phantom.classes, which has none.
struct RunConfig {
  std::optional<phantom::PhantomConfig> phantom;  // present only if the JSON has a phantom section
  kinetics::KineticConstants kinetics;
  deconv::DeconvConfig deconv;
  stnet::TrainConfig train;
  int n_pre = 4;
  MetricsConfig metrics;
  BenchConfig bench;
  SweepConfig sweep;
  Paths paths;

  /// The phantom section, or a schema error naming phantom.classes.
  const phantom::PhantomConfig& require_phantom() const;
};

/// Parses and validates; unknown keys and wrong types raise schema errors
/// naming the dotted key path.
RunConfig parse(const nlohmann::json& doc);
RunConfig load(const std::filesystem::path& path);

/// Fully expanded configuration, used for provenance records.
nlohmann::json to_json(const RunConfig& cfg);

}  // namespace perfquant::config
