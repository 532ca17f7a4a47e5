#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "perfquant/config.hpp"
#include "perfquant/volume_io.hpp"

// The pipeline steps behind each CLI subcommand. Every command reads its
// inputs from cfg.paths, writes into `out` (created if needed) and records
// a provenance.json there.
namespace perfquant::commands {

namespace fs = std::filesystem;

/// Extra training sets beyond cfg.paths; all share the AIF and VOF.
struct TrainSource {
  fs::path volume, brain, truth;
  std::optional<fs::path> lesion;
};

void cmd_phantom(const config::RunConfig& cfg, const fs::path& out, std::ostream& log);
void cmd_deconv(const config::RunConfig& cfg, const fs::path& out, std::ostream& log);
void cmd_train(const config::RunConfig& cfg, const std::vector<TrainSource>& sources, const fs::path& out,
               std::ostream& log);
void cmd_predict(const config::RunConfig& cfg, const fs::path& out, std::ostream& log);
void cmd_evaluate(const config::RunConfig& cfg, const fs::path& out, std::ostream& log);
void cmd_segment(const config::RunConfig& cfg, const fs::path& out, std::ostream& log);
void cmd_sweep(const config::RunConfig& cfg, const fs::path& out, std::ostream& log);
void cmd_bench(const config::RunConfig& cfg, const fs::path& out, std::ostream& log);

/// FNV-1a 64-bit digest of a file's bytes.
std::uint64_t file_digest(const fs::path& path);

/// Map-agreement and segmentation report in the metrics.json layout.
nlohmann::json evaluate_maps(const io::ParameterMaps& estimate, const io::ParameterMaps& truth,
                             const io::Mask3D& brain, const io::Mask3D& lesion, const config::MetricsConfig& options);

/// Binary PGM of one axial slice, min-max scaled with the given range.
void write_pgm(const fs::path& path, std::span<const double> map, const io::Dims3& dims, int z, double lo,
               double hi);

}  // namespace perfquant::commands
