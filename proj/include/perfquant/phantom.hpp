#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "perfquant/time_series.hpp"
#include "perfquant/tracer_kinetics.hpp"
#include "perfquant/volume_io.hpp"

namespace perfquant::phantom {

struct GammaVariateParams {
  double t0_s = 3.0;
  double alpha = 2.0;
  double beta = 1.0;
  double amplitude = 1.0;

  void validate() const;
};

/// Half-open voxel box [x0,x1) x [y0,y1) x [z0,z1).
struct Box {
  int x0 = 0, x1 = 0, y0 = 0, y1 = 0, z0 = 0, z1 = 0;
};

struct TissueClass {
  std::string name;
  double cbf = 0.0;      // ml/100g/min
  double cbv = 0.0;      // ml/100g
  double delay_s = 0.0;  // arterial delay
  bool lesion = false;
  Box box;

  double mtt() const { return 60.0 * cbv / cbf; }
};

struct PhantomTruth {
  io::ParameterMaps maps;
  io::Mask3D lesion_mask;
  io::Mask3D brain_mask;
  TimeSeries aif;
  TimeSeries vof;
  std::vector<int> class_index;  // per voxel, -1 outside the brain
};

/// Everything needed to build a phantom; mirrors the phantom config JSON.
struct PhantomConfig {
  std::array<int, 4> dims{32, 32, 4, 50};
  double dt_s = 1.0;
  double te_s = 0.032;
  io::Spacing3 voxel_mm{1.0, 1.0, 1.0};
  double s0 = 200.0;
  std::optional<double> snr;  // none = noiseless
  std::uint64_t seed = 1;
  GammaVariateParams aif;
  bool aif_unit_area = true;  // rescale the sampled AIF to unit trapezoidal area
  int vof_delay_samples = 3;
  double vof_area_ratio = 2.0;  // integral(VOF) / integral(AIF)
  std::vector<TissueClass> classes;

  /// The 32x32x4x50 desk phantom: grey-matter shell, white-matter core and
  /// a delayed hypo-perfused lesion.
  static PhantomConfig desk();
  io::VolumeHeader header() const;
};

/// Peak-normalised gamma variate; zero for t <= t0.
TimeSeries gamma_variate(const GammaVariateParams& params, int n, double dt_s);

/// R[i] = exp(-i*dt/mtt).
TimeSeries residue_exponential(double mtt_s, int n, double dt_s);

/// Time constant whose sampled exponential has discrete area dt*sum(R) == mtt.
double area_matched_time_constant(double mtt_s, double dt_s);

TimeSeries make_aif(const PhantomConfig& cfg);
TimeSeries make_vof(const TimeSeries& aif, int delay_samples, double area_ratio);

/// Rasterises the class boxes (later boxes override earlier ones) and fills
/// the ground-truth maps, masks, AIF and VOF.
PhantomTruth generate_truth(const PhantomConfig& cfg);

/// Forward model: residue -> tissue concentration -> signal, plus optional
/// seeded Gaussian noise with sigma = s0/snr.
io::Volume4D synthesize_dsc(const PhantomTruth& truth, const kinetics::KineticConstants& k,
                            const io::VolumeHeader& header, double s0, std::optional<double> snr,
                            std::uint64_t seed);

/// Noiseless tissue concentration curve for one tissue class.
TimeSeries tissue_concentration(const TimeSeries& aif, double cbf, double cbv, double delay_s,
                                const kinetics::KineticConstants& k, double kav);

/// Inverse of signal_to_concentration: s = s0 * exp(-te * c / x_scale).
TimeSeries concentration_to_signal(const TimeSeries& c, double s0, double te_s,
                                   const kinetics::KineticConstants& k);

}  // namespace perfquant::phantom
