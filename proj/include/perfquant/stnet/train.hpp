#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <vector>

#include "perfquant/stnet/loss.hpp"
#include "perfquant/stnet/model.hpp"
#include "perfquant/stnet/patches.hpp"

namespace perfquant::stnet {

struct TrainConfig {
  double lr = 1e-4;
  int batch = 512;
  int max_epochs = 400;
  int patience = 50;
  int stride = 1;
  double ratio = 2.0;
  double w_phys = 0.1;
  double dropout_p = 0.2;
  std::uint64_t seed = 1;
  double val_frac = 0.2;

  void validate() const;
};

struct EpochLog {
  int epoch = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
};

struct TrainResult {
  ModelParams params;      // parameters of the best validation epoch
  std::vector<EpochLog> log;
  int best_epoch = 0;
  double best_val_loss = 0.0;
  std::vector<std::size_t> val_indices;  // into the input patch list, ascending
};

/// One labelled sample in network units.
struct Sample {
  NetInput input;
  Triple target{};
  double conc_integral = 0.0;
};

/// Zeroes the gradients, runs forward and backward over the batch and
/// returns the batch loss. `dropout_rng` null means dropout off.
LossTerms accumulate_batch(ModelParams& m, std::span<const Sample* const> batch, double w_phys,
                           const kinetics::KineticConstants& k, double kav, Workspace& ws,
                           std::mt19937_64* dropout_rng);

/// Loss without gradients or dropout.
LossTerms evaluate_loss(const ModelParams& m, std::span<const Sample* const> samples, double w_phys,
                        const kinetics::KineticConstants& k, double kav, Workspace& ws);

/// Target statistics and signal scale of a set of labelled patches.
Normalization fit_normalization(std::span<const Patch* const> patches, int n_pre);

Sample make_sample(const Patch& p, const Normalization& norm);

/// Seeded train/validation split, mini-batch Adam with dropout, early
/// stopping on the validation loss. `on_epoch` sees every log row.
TrainResult train(const std::vector<Patch>& patches, const TrainConfig& cfg, const kinetics::KineticConstants& k,
                  double kav, int n_pre = 4, const std::function<void(const EpochLog&)>& on_epoch = {});

}  // namespace perfquant::stnet
