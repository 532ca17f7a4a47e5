#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "perfquant/volume_io.hpp"

// Slow, direct reference implementations of the evaluation metrics.
namespace oracle {

using namespace perfquant;

inline double mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

inline double pearson_oracle(const std::vector<double>& a, const std::vector<double>& b) {
  const double ma = mean(a), mb = mean(b);
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  return sab / std::sqrt(saa * sbb);
}

inline std::vector<double> masked(const std::vector<double>& v, const io::Mask3D& m) {
  std::vector<double> out;
  for (std::size_t i = 0; i < v.size(); ++i)
    if (m(i)) out.push_back(v[i]);
  return out;
}

// Rank by counting: 1 + #smaller + (#equal - 1)/2.
inline std::vector<double> rank_oracle(const std::vector<double>& v) {
  std::vector<double> r(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    double less = 0, equal = 0;
    for (double w : v) {
      less += w < v[i] ? 1 : 0;
      equal += w == v[i] ? 1 : 0;
    }
    r[i] = 1.0 + less + (equal - 1.0) / 2.0;
  }
  return r;
}

inline double ssim_oracle(const std::vector<double>& ref, const std::vector<double>& est, const io::Mask3D& m, int window,
                   double range) {
  const double c1 = std::pow(0.01 * range, 2), c2 = std::pow(0.03 * range, 2);
  const auto& d = m.dims;
  double total = 0;
  int count = 0;
  for (int z = 0; z < d[2]; ++z)
    for (int y = 0; y < d[1]; ++y)
      for (int x = 0; x < d[0]; ++x) {
        if (!m.at(x, y, z)) continue;
        std::vector<double> a, b;
        for (int yy = y - window / 2; yy <= y + window / 2; ++yy)
          for (int xx = x - window / 2; xx <= x + window / 2; ++xx) {
            if (xx < 0 || yy < 0 || xx >= d[0] || yy >= d[1] || !m.at(xx, yy, z)) continue;
            a.push_back(ref[io::voxel_index(d, xx, yy, z)]);
            b.push_back(est[io::voxel_index(d, xx, yy, z)]);
          }
        const double ma = mean(a), mb = mean(b);
        double va = 0, vb = 0, cab = 0;
        for (std::size_t i = 0; i < a.size(); ++i) {
          va += (a[i] - ma) * (a[i] - ma);
          vb += (b[i] - mb) * (b[i] - mb);
          cab += (a[i] - ma) * (b[i] - mb);
        }
        const double n = static_cast<double>(a.size());
        va /= n;
        vb /= n;
        cab /= n;
        total += (2 * ma * mb + c1) * (2 * cab + c2) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
        ++count;
      }
  return total / count;
}

inline double auc_pairs(const std::vector<double>& tmax, const io::Mask3D& lesion, const io::Mask3D& brain) {
  double wins = 0, pairs = 0;
  for (std::size_t i = 0; i < tmax.size(); ++i) {
    if (!lesion(i)) continue;
    for (std::size_t j = 0; j < tmax.size(); ++j) {
      if (!brain(j) || lesion(j)) continue;
      wins += tmax[i] > tmax[j] ? 1.0 : (tmax[i] == tmax[j] ? 0.5 : 0.0);
      pairs += 1;
    }
  }
  return wins / pairs;
}

inline bool on_surface(const io::Mask3D& m, int x, int y, int z) {
  const auto& d = m.dims;
  const int off[6][3] = {{1, 0, 0}, {-1, 0, 0}, {0, 1, 0}, {0, -1, 0}, {0, 0, 1}, {0, 0, -1}};
  for (const auto& o : off) {
    const int a = x + o[0], b = y + o[1], c = z + o[2];
    if (a < 0 || b < 0 || c < 0 || a >= d[0] || b >= d[1] || c >= d[2] || !m.at(a, b, c)) return true;
  }
  return false;
}

inline double percentile_oracle(std::vector<double> v, double q) {
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

inline double directed_oracle(const io::Mask3D& a, const io::Mask3D& b, const io::Spacing3& s) {
  const auto& d = a.dims;
  std::vector<double> dist;
  for (int z = 0; z < d[2]; ++z)
    for (int y = 0; y < d[1]; ++y)
      for (int x = 0; x < d[0]; ++x) {
        if (!a.at(x, y, z) || !on_surface(a, x, y, z)) continue;
        double best = std::numeric_limits<double>::infinity();
        for (int zz = 0; zz < d[2]; ++zz)
          for (int yy = 0; yy < d[1]; ++yy)
            for (int xx = 0; xx < d[0]; ++xx)
              if (b.at(xx, yy, zz))
                best = std::min(best, std::hypot((x - xx) * s[0], (y - yy) * s[1], (z - zz) * s[2]));
        dist.push_back(best);
      }
  return percentile_oracle(dist, 0.95);
}

}  // namespace oracle
