#include "perfquant/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "perfquant/error.hpp"

namespace perfquant::metrics {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void check_pair(const MaskedPair& p) {
  const std::size_t n = io::voxel_count(p.mask.dims);
  require(p.reference.size() == n && p.estimate.size() == n && p.mask.data.size() == n, ErrorKind::precondition,
          "masked pair: reference, estimate and mask must have equal lengths");
  require(p.mask.count() > 0, ErrorKind::precondition, "masked pair: mask is empty");
}

void check_same_dims(const io::Mask3D& a, const io::Mask3D& b) {
  require(a.dims == b.dims && a.data.size() == b.data.size(), ErrorKind::precondition, "mask dims differ");
}

struct Gathered {
  std::vector<double> ref;
  std::vector<double> est;
};

Gathered gather(const MaskedPair& p) {
  Gathered g;
  for (std::size_t i = 0; i < p.mask.data.size(); ++i) {
    if (!p.mask(i)) continue;
    g.ref.push_back(p.reference[i]);
    g.est.push_back(p.estimate[i]);
  }
  return g;
}

double pearson(std::span<const double> a, std::span<const double> b) {
  const auto n = static_cast<double>(a.size());
  const double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
  const double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
  double saa = 0.0, sbb = 0.0, sab = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double da = a[i] - ma, db = b[i] - mb;
    saa += da * da;
    sbb += db * db;
    sab += da * db;
  }
  require(saa > 0.0 && sbb > 0.0, ErrorKind::numeric, "correlation undefined for zero variance");
  return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

// 1-D squared distance transform (Felzenszwalb-Huttenlocher) on samples at
// positions i*spacing.
void edt_1d(std::vector<double>& f, double spacing) {
  const std::size_t n = f.size();
  std::vector<double> out(n);
  std::vector<std::size_t> v(n);
  std::vector<double> z(n + 1);
  auto pos = [spacing](std::size_t i) { return static_cast<double>(i) * spacing; };
  auto intersect = [&](std::size_t q, std::size_t p) {
    return ((f[q] + pos(q) * pos(q)) - (f[p] + pos(p) * pos(p))) / (2.0 * (pos(q) - pos(p)));
  };
  std::size_t k = 0;
  std::size_t first = n;
  for (std::size_t q = 0; q < n; ++q)
    if (f[q] < kInf) {
      first = q;
      break;
    }
  if (first == n) return;  // no finite samples on this line
  v[0] = first;
  z[0] = -kInf;
  z[1] = kInf;
  for (std::size_t q = first + 1; q < n; ++q) {
    if (f[q] == kInf) continue;
    // z[0] = -inf stops the pop loop at k = 0.
    double s = intersect(q, v[k]);
    while (s <= z[k]) {
      --k;
      s = intersect(q, v[k]);
    }
    ++k;
    v[k] = q;
    z[k] = s;
    z[k + 1] = kInf;
  }
  k = 0;
  for (std::size_t q = 0; q < n; ++q) {
    while (z[k + 1] < pos(q)) ++k;
    const double d = pos(q) - pos(v[k]);
    out[q] = d * d + f[v[k]];
  }
  f.swap(out);
}

}  // namespace

double psnr(const MaskedPair& p) {
  check_pair(p);
  const Gathered g = gather(p);
  const double peak = *std::max_element(g.ref.begin(), g.ref.end());
  require(peak > 0.0, ErrorKind::numeric, "psnr: reference peak is not positive");
  double se = 0.0;
  for (std::size_t i = 0; i < g.ref.size(); ++i) se += (g.est[i] - g.ref[i]) * (g.est[i] - g.ref[i]);
  if (se == 0.0) return kInf;
  const double mse = se / static_cast<double>(g.ref.size());
  return 10.0 * std::log10(peak * peak / mse);
}

double ssim(const MaskedPair& p, const SsimOptions& options) {
  check_pair(p);
  require(options.window >= 1 && options.window % 2 == 1, ErrorKind::precondition, "ssim window must be odd");
  double range = 0.0;
  if (options.dynamic_range) {
    range = *options.dynamic_range;
  } else {
    const Gathered g = gather(p);
    const auto [lo, hi] = std::minmax_element(g.ref.begin(), g.ref.end());
    range = *hi - *lo;
  }
  require(range > 0.0, ErrorKind::numeric, "ssim: degenerate dynamic range L = 0");
  const double c1 = (0.01 * range) * (0.01 * range);
  const double c2 = (0.03 * range) * (0.03 * range);

  const auto& d = p.mask.dims;
  const int half = options.window / 2;
  double total = 0.0;
  std::size_t windows = 0;
  for (int z = 0; z < d[2]; ++z)
    for (int y = 0; y < d[1]; ++y)
      for (int x = 0; x < d[0]; ++x) {
        if (!p.mask.at(x, y, z)) continue;
        const int y0 = std::max(0, y - half), y1 = std::min(d[1] - 1, y + half);
        const int x0 = std::max(0, x - half), x1 = std::min(d[0] - 1, x + half);
        double sr = 0.0, se = 0.0;
        int n = 0;
        for (int yy = y0; yy <= y1; ++yy)
          for (int xx = x0; xx <= x1; ++xx) {
            const std::size_t i = io::voxel_index(d, xx, yy, z);
            if (!p.mask(i)) continue;
            sr += p.reference[i];
            se += p.estimate[i];
            ++n;
          }
        const double mr = sr / n, me = se / n;
        double vr = 0.0, ve = 0.0, cov = 0.0;
        for (int yy = y0; yy <= y1; ++yy)
          for (int xx = x0; xx <= x1; ++xx) {
            const std::size_t i = io::voxel_index(d, xx, yy, z);
            if (!p.mask(i)) continue;
            const double dr = p.reference[i] - mr, de = p.estimate[i] - me;
            vr += dr * dr;
            ve += de * de;
            cov += dr * de;
          }
        vr /= n;
        ve /= n;
        cov /= n;
        total += ((2.0 * mr * me + c1) * (2.0 * cov + c2)) / ((mr * mr + me * me + c1) * (vr + ve + c2));
        ++windows;
      }
  return total / static_cast<double>(windows);
}

double pcc(const MaskedPair& p) {
  check_pair(p);
  const Gathered g = gather(p);
  require(g.ref.size() >= 2, ErrorKind::precondition, "pcc needs at least 2 masked voxels");
  return pearson(g.ref, g.est);
}

std::vector<double> midranks(std::span<const double> values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
    const double rank = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = rank;
    i = j + 1;
  }
  return ranks;
}

double scc(const MaskedPair& p) {
  check_pair(p);
  const Gathered g = gather(p);
  require(g.ref.size() >= 2, ErrorKind::precondition, "scc needs at least 2 masked voxels");
  return pearson(midranks(g.ref), midranks(g.est));
}

double nrmse(const MaskedPair& p) {
  check_pair(p);
  const Gathered g = gather(p);
  const auto n = static_cast<double>(g.ref.size());
  const double mean = std::accumulate(g.ref.begin(), g.ref.end(), 0.0) / n;
  require(mean != 0.0, ErrorKind::numeric, "nrmse: reference mean is zero");
  double se = 0.0;
  for (std::size_t i = 0; i < g.ref.size(); ++i) se += (g.est[i] - g.ref[i]) * (g.est[i] - g.ref[i]);
  return std::sqrt(se / n) / mean;
}

Roc roc_and_auc(std::span<const double> tmax, const io::Mask3D& lesion, const io::Mask3D& brain) {
  check_same_dims(lesion, brain);
  require(tmax.size() == brain.data.size(), ErrorKind::precondition, "roc: tmax map size does not match masks");
  std::vector<std::pair<double, bool>> scored;
  for (std::size_t i = 0; i < brain.data.size(); ++i) {
    if (lesion(i)) require(brain(i), ErrorKind::precondition, "roc: lesion mask must lie inside the brain mask");
    if (brain(i)) scored.emplace_back(tmax[i], lesion(i));
  }
  const auto positives = static_cast<double>(lesion.count());
  const auto negatives = static_cast<double>(scored.size()) - positives;
  require(positives > 0.0, ErrorKind::precondition, "roc: lesion mask is empty");
  require(negatives > 0.0, ErrorKind::precondition, "roc: lesion mask covers the whole brain");

  std::sort(scored.begin(), scored.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });

  Roc roc;
  // Walk distinct values upwards; after consuming a run of equal scores the
  // voxels still ahead are exactly those with tmax > threshold.
  double tp_above = positives, fp_above = negatives;
  std::size_t i = 0;
  while (i < scored.size()) {
    const double value = scored[i].first;
    while (i < scored.size() && scored[i].first == value) {
      (scored[i].second ? tp_above : fp_above) -= 1.0;
      ++i;
    }
    const double threshold = i < scored.size() ? 0.5 * (value + scored[i].first) : kInf;
    roc.curve.thresholds.push_back(threshold);
    roc.curve.tpr.push_back(tp_above / positives);
    roc.curve.fpr.push_back(fp_above / negatives);
  }

  double prev_fpr = 1.0, prev_tpr = 1.0;
  for (std::size_t k = 0; k < roc.curve.thresholds.size(); ++k) {
    roc.auc += (prev_fpr - roc.curve.fpr[k]) * 0.5 * (prev_tpr + roc.curve.tpr[k]);
    prev_fpr = roc.curve.fpr[k];
    prev_tpr = roc.curve.tpr[k];
  }
  roc.auc += prev_fpr * 0.5 * prev_tpr;  // down to (0,0)
  return roc;
}

double select_threshold(const RocCurve& roc) {
  require(!roc.thresholds.empty(), ErrorKind::precondition, "select_threshold: empty curve");
  require(roc.tpr.size() == roc.thresholds.size() && roc.fpr.size() == roc.thresholds.size(),
          ErrorKind::precondition, "select_threshold: curve arrays differ in length");
  std::size_t best = 0;
  double best_gap = kInf;
  for (std::size_t k = 0; k < roc.thresholds.size(); ++k) {
    const double gap = std::abs(roc.tpr[k] - (1.0 - roc.fpr[k]));
    if (gap < best_gap || (gap == best_gap && roc.thresholds[k] < roc.thresholds[best])) {
      best = k;
      best_gap = gap;
    }
  }
  return roc.thresholds[best];
}

io::Mask3D segment_hypoperfusion(std::span<const double> tmax, const io::Mask3D& brain, double threshold_s) {
  require(threshold_s >= 0.0, ErrorKind::precondition, "segmentation threshold must be >= 0");
  require(tmax.size() == brain.data.size(), ErrorKind::precondition, "tmax map size does not match brain mask");
  io::Mask3D out = io::Mask3D::zeros(brain.dims, brain.voxel_mm);
  for (std::size_t i = 0; i < tmax.size(); ++i) out.data[i] = (brain(i) && tmax[i] > threshold_s) ? 1 : 0;
  return out;
}

double dice(const io::Mask3D& a, const io::Mask3D& b) {
  check_same_dims(a, b);
  std::size_t inter = 0, na = 0, nb = 0;
  for (std::size_t i = 0; i < a.data.size(); ++i) {
    na += a(i);
    nb += b(i);
    inter += a(i) && b(i);
  }
  if (na + nb == 0) return 1.0;
  return 2.0 * static_cast<double>(inter) / static_cast<double>(na + nb);
}

double iou(const io::Mask3D& a, const io::Mask3D& b) {
  check_same_dims(a, b);
  std::size_t inter = 0, uni = 0;
  for (std::size_t i = 0; i < a.data.size(); ++i) {
    inter += a(i) && b(i);
    uni += a(i) || b(i);
  }
  if (uni == 0) return 1.0;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

std::vector<std::size_t> surface_voxels(const io::Mask3D& m) {
  const auto& d = m.dims;
  std::vector<std::size_t> out;
  constexpr int offsets[6][3] = {{1, 0, 0}, {-1, 0, 0}, {0, 1, 0}, {0, -1, 0}, {0, 0, 1}, {0, 0, -1}};
  for (int z = 0; z < d[2]; ++z)
    for (int y = 0; y < d[1]; ++y)
      for (int x = 0; x < d[0]; ++x) {
        if (!m.at(x, y, z)) continue;
        bool boundary = false;
        for (const auto& o : offsets) {
          const int xx = x + o[0], yy = y + o[1], zz = z + o[2];
          if (xx < 0 || yy < 0 || zz < 0 || xx >= d[0] || yy >= d[1] || zz >= d[2] || !m.at(xx, yy, zz)) {
            boundary = true;
            break;
          }
        }
        if (boundary) out.push_back(io::voxel_index(d, x, y, z));
      }
  return out;
}

std::vector<double> squared_distance_transform(const io::Mask3D& m, const io::Spacing3& voxel_mm) {
  const auto& d = m.dims;
  std::vector<double> f(m.data.size());
  for (std::size_t i = 0; i < f.size(); ++i) f[i] = m(i) ? 0.0 : kInf;

  const std::array<std::size_t, 3> n{static_cast<std::size_t>(d[0]), static_cast<std::size_t>(d[1]),
                                     static_cast<std::size_t>(d[2])};
  const std::array<std::size_t, 3> stride{1, n[0], n[0] * n[1]};
  for (int axis = 0; axis < 3; ++axis) {
    const int a1 = (axis + 1) % 3, a2 = (axis + 2) % 3;
    std::vector<double> line(n[axis]);
    for (std::size_t i = 0; i < n[a1]; ++i)
      for (std::size_t j = 0; j < n[a2]; ++j) {
        const std::size_t base = i * stride[a1] + j * stride[a2];
        for (std::size_t k = 0; k < n[axis]; ++k) line[k] = f[base + k * stride[axis]];
        edt_1d(line, voxel_mm[static_cast<std::size_t>(axis)]);
        for (std::size_t k = 0; k < n[axis]; ++k) f[base + k * stride[axis]] = line[k];
      }
  }
  return f;
}

double percentile(std::vector<double> values, double q) {
  require(!values.empty(), ErrorKind::precondition, "percentile of an empty set");
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return values[lo] + frac * (values[hi] - values[lo]);
}

double hd95(const io::Mask3D& a, const io::Mask3D& b, const io::Spacing3& voxel_mm) {
  check_same_dims(a, b);
  require(a.count() > 0 && b.count() > 0, ErrorKind::numeric, "hd95 undefined for an empty mask");
  auto directed = [&](const io::Mask3D& from, const io::Mask3D& to) {
    const std::vector<double> dist2 = squared_distance_transform(to, voxel_mm);
    std::vector<double> d;
    for (std::size_t i : surface_voxels(from)) d.push_back(std::sqrt(dist2[i]));
    return percentile(std::move(d), 0.95);
  };
  return std::max(directed(a, b), directed(b, a));
}

}  // namespace perfquant::metrics
