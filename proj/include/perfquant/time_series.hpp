#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace perfquant {

enum class SeriesKind { signal, concentration, residue };

std::string_view to_string(SeriesKind kind);
SeriesKind series_kind_from_string(std::string_view name);

/// Uniformly sampled function of time: a raw signal curve, a concentration
/// curve (AIF, VOF, tissue) or a flow-scaled residue function.
struct TimeSeries {
  std::vector<double> values;
  double dt_s = 1.0;
  SeriesKind kind = SeriesKind::concentration;

  std::size_t size() const { return values.size(); }
  double operator[](std::size_t i) const { return values[i]; }

  /// Throws precondition unless length >= 2, dt_s > 0 and all values finite.
  void validate() const;
};

}  // namespace perfquant
