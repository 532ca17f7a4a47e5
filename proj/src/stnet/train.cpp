#include "perfquant/stnet/train.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "perfquant/error.hpp"
#include "perfquant/stnet/adam.hpp"

namespace perfquant::stnet {

void TrainConfig::validate() const {
  require(lr > 0.0 && std::isfinite(lr), ErrorKind::schema, "train.lr must be > 0");
  require(batch >= 1, ErrorKind::schema, "train.batch must be >= 1");
  require(max_epochs >= 1, ErrorKind::schema, "train.max_epochs must be >= 1");
  require(patience >= 1, ErrorKind::schema, "train.patience must be >= 1");
  require(stride >= 1, ErrorKind::schema, "train.stride must be >= 1");
  require(ratio > 0.0, ErrorKind::schema, "train.ratio must be > 0");
  require(w_phys >= 0.0 && std::isfinite(w_phys), ErrorKind::schema, "train.w_phys must be >= 0");
  require(dropout_p >= 0.0 && dropout_p < 1.0, ErrorKind::schema, "train.dropout_p must be in [0,1)");
  require(val_frac > 0.0 && val_frac < 1.0, ErrorKind::schema, "train.val_frac must be in (0,1)");
}

LossTerms accumulate_batch(ModelParams& m, std::span<const Sample* const> batch, double w_phys,
                           const kinetics::KineticConstants& k, double kav, Workspace& ws,
                           std::mt19937_64* dropout_rng) {
  require(!batch.empty(), ErrorKind::precondition, "empty batch");
  m.zero_grad();
  const double inv_n = 1.0 / static_cast<double>(batch.size());
  std::vector<Triple> preds, targets;
  std::vector<double> integrals;
  for (const Sample* s : batch) {
    const Triple z = forward(m, s->input, ws, dropout_rng);
    const Triple zs[] = {z};
    const Triple ts[] = {s->target};
    const double is[] = {s->conc_integral};
    Triple g = total_loss_gradient(zs, ts, is, m.norm, w_phys, k, kav)[0];
    for (double& x : g) x *= inv_n;
    backward(m, ws, g);
    preds.push_back(z);
    targets.push_back(s->target);
    integrals.push_back(s->conc_integral);
  }
  return total_loss(preds, targets, integrals, m.norm, w_phys, k, kav);
}

LossTerms evaluate_loss(const ModelParams& m, std::span<const Sample* const> samples, double w_phys,
                        const kinetics::KineticConstants& k, double kav, Workspace& ws) {
  std::vector<Triple> preds, targets;
  std::vector<double> integrals;
  for (const Sample* s : samples) {
    preds.push_back(forward(m, s->input, ws, nullptr));
    targets.push_back(s->target);
    integrals.push_back(s->conc_integral);
  }
  return total_loss(preds, targets, integrals, m.norm, w_phys, k, kav);
}

Normalization fit_normalization(std::span<const Patch* const> patches, int n_pre) {
  require(!patches.empty(), ErrorKind::precondition, "no patches to normalise");
  Normalization norm;
  norm.n_pre = n_pre;
  const double n = static_cast<double>(patches.size());
  double baseline_sum = 0.0;
  for (const Patch* p : patches) baseline_sum += p->baseline;
  norm.signal_scale = baseline_sum / n;
  for (int j = 0; j < 3; ++j) {
    double sum = 0.0;
    for (const Patch* p : patches) {
      require(p->labels.has_value(), ErrorKind::precondition, "training patches need labels");
      sum += (*p->labels)[j];
    }
    const double mean = sum / n;
    double ss = 0.0;
    for (const Patch* p : patches) ss += ((*p->labels)[j] - mean) * ((*p->labels)[j] - mean);
    const double sd = std::sqrt(ss / n);
    norm.target_mean[j] = mean;
    norm.target_scale[j] = sd > 1e-12 ? sd : 1.0;
  }
  return norm;
}

Sample make_sample(const Patch& p, const Normalization& norm) {
  require(p.labels.has_value(), ErrorKind::precondition, "training patches need labels");
  Sample s;
  s.input = make_input(p, norm);
  for (int j = 0; j < 3; ++j) s.target[j] = norm.to_network(j, (*p.labels)[j]);
  s.conc_integral = p.conc_integral;
  return s;
}

TrainResult train(const std::vector<Patch>& patches, const TrainConfig& cfg, const kinetics::KineticConstants& k,
                  double kav, int n_pre, const std::function<void(const EpochLog&)>& on_epoch) {
  cfg.validate();
  require(patches.size() >= 2, ErrorKind::precondition, "training needs at least 2 patches");

  std::vector<std::size_t> order(patches.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 split_rng(cfg.seed);
  std::shuffle(order.begin(), order.end(), split_rng);
  auto n_val = static_cast<std::size_t>(std::llround(cfg.val_frac * static_cast<double>(patches.size())));
  n_val = std::clamp<std::size_t>(n_val, 1, patches.size() - 1);
  std::vector<std::size_t> val_idx(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_val));
  std::vector<std::size_t> train_idx(order.begin() + static_cast<std::ptrdiff_t>(n_val), order.end());
  std::sort(val_idx.begin(), val_idx.end());
  std::sort(train_idx.begin(), train_idx.end());

  std::vector<const Patch*> train_patches;
  for (auto i : train_idx) train_patches.push_back(&patches[i]);

  ModelParams model(cfg.seed, cfg.dropout_p);
  model.norm = fit_normalization(train_patches, n_pre);

  std::vector<Sample> samples(patches.size());
  for (std::size_t i = 0; i < patches.size(); ++i) samples[i] = make_sample(patches[i], model.norm);
  std::vector<const Sample*> train_set, val_set;
  for (auto i : train_idx) train_set.push_back(&samples[i]);
  for (auto i : val_idx) val_set.push_back(&samples[i]);

  std::mt19937_64 shuffle_rng(cfg.seed + 1);
  std::mt19937_64 dropout_rng(cfg.seed + 2);
  AdamState adam;
  const AdamConfig adam_cfg{cfg.lr};
  Workspace ws;

  TrainResult result{model, {}, 0, std::numeric_limits<double>::infinity(), val_idx};
  const std::size_t batch = static_cast<std::size_t>(cfg.batch);
  for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
    std::shuffle(train_set.begin(), train_set.end(), shuffle_rng);
    double loss_sum = 0.0;
    for (std::size_t start = 0; start < train_set.size(); start += batch) {
      const std::size_t len = std::min(batch, train_set.size() - start);
      const std::span<const Sample* const> b(train_set.data() + start, len);
      const LossTerms terms = accumulate_batch(model, b, cfg.w_phys, k, kav, ws, &dropout_rng);
      loss_sum += terms.total * static_cast<double>(len);
      adam_step(model, adam, adam_cfg);
    }
    EpochLog row{epoch, loss_sum / static_cast<double>(train_set.size()),
                 evaluate_loss(model, val_set, cfg.w_phys, k, kav, ws).total};
    require(std::isfinite(row.train_loss) && std::isfinite(row.val_loss), ErrorKind::numeric,
            "training diverged at epoch " + std::to_string(epoch));
    result.log.push_back(row);
    if (on_epoch) on_epoch(row);
    if (row.val_loss < result.best_val_loss) {
      result.best_val_loss = row.val_loss;
      result.best_epoch = epoch;
      result.params = model;
    }
    if (epoch - result.best_epoch >= cfg.patience) break;
  }
  return result;
}

}  // namespace perfquant::stnet
