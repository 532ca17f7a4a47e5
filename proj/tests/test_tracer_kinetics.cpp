#include <doctest.h>

#include <cmath>

#include "perfquant/error.hpp"
#include "perfquant/phantom.hpp"
#include "perfquant/tracer_kinetics.hpp"
#include "support.hpp"

using namespace perfquant;
using namespace perfquant::kinetics;
using support::Gen;
using support::rel_err;

namespace {

TimeSeries series(std::vector<double> v, double dt = 1.0, SeriesKind kind = SeriesKind::concentration) {
  return TimeSeries{std::move(v), dt, kind};
}

KineticConstants unit_constants() {
  KineticConstants k;
  k.rho = 1.0;
  k.h_lv = 0.0;
  k.h_sv = 0.0;
  return k;
}

// Closed-form area of the peak-normalised gamma variate:
// A * (e/(alpha*beta))^alpha * beta^(alpha+1) * Gamma(alpha+1).
double gamma_area(const phantom::GammaVariateParams& p) {
  return p.amplitude * std::pow(std::exp(1.0) / (p.alpha * p.beta), p.alpha) * std::pow(p.beta, p.alpha + 1.0) *
         std::tgamma(p.alpha + 1.0);
}

}  // namespace

TEST_CASE("signal_to_concentration") {
  KineticConstants k;
  SUBCASE("constant signal gives zero") {
    const auto c = signal_to_concentration(series({200, 200, 200}, 1.0, SeriesKind::signal), 200.0, 0.03, k);
    for (double v : c.values) CHECK(v == 0.0);
  }
  SUBCASE("inverse construction") {
    const double te = 0.025;
    const auto c = signal_to_concentration(series({100 * std::exp(-te * 10), 100 * std::exp(-te * 10)}, 1.0,
                                                  SeriesKind::signal),
                                           100.0, te, k);
    CHECK(c[0] == doctest::Approx(10.0).epsilon(1e-14));
  }
  SUBCASE("matches a long double oracle") {
    const auto c = signal_to_concentration(series({160, 160}, 1.0, SeriesKind::signal), 200.0, 0.04, k);
    const long double oracle = -(1.0L / 0.04L) * std::log(160.0L / 200.0L);
    CHECK(rel_err(c[0], static_cast<double>(oracle)) < 1e-14);
    CHECK(c[0] == doctest::Approx(5.578589).epsilon(1e-6));
  }
  SUBCASE("x_scale multiplies") {
    KineticConstants k2 = k;
    k2.x_scale = 5e-4;
    const auto a = signal_to_concentration(series({150, 120}, 1.0, SeriesKind::signal), 200.0, 0.03, k);
    const auto b = signal_to_concentration(series({150, 120}, 1.0, SeriesKind::signal), 200.0, 0.03, k2);
    CHECK(rel_err(b[1], 5e-4 * a[1]) < 1e-15);
  }
  SUBCASE("errors") {
    CHECK_THROWS_AS(signal_to_concentration(series({100, 0}, 1.0, SeriesKind::signal), 100.0, 0.03, k), Error);
    CHECK_THROWS_AS(signal_to_concentration(series({100, 90}, 1.0, SeriesKind::signal), 0.0, 0.03, k), Error);
  }
}

TEST_CASE("concentration to signal and back is the identity") {
  Gen g(11);
  for (int trial = 0; trial < 50; ++trial) {
    KineticConstants k;
    k.x_scale = g.uniform(1e-4, 2.0);
    const double te = g.uniform(0.01, 0.1);
    const double s0 = g.uniform(10.0, 1000.0);
    const auto c = series(g.vector(20, 0.0, 5.0 * k.x_scale));
    const auto s = phantom::concentration_to_signal(c, s0, te, k);
    const auto back = signal_to_concentration(s, s0, te, k);
    for (std::size_t i = 0; i < c.size(); ++i) CHECK(std::abs(back[i] - c[i]) <= 1e-10 * std::max(1.0, std::abs(c[i])));
  }
}

TEST_CASE("compute_baseline") {
  CHECK(compute_baseline(std::vector<double>{100, 100, 100, 50, 20}, 3) == 100.0);
  CHECK(compute_baseline(std::vector<double>{90, 110, 100, 10}, 3) == 100.0);
  CHECK(compute_baseline(std::vector<double>{7, 7, 7, 7}, 2) == 7.0);
  CHECK_THROWS_AS(compute_baseline(std::vector<double>{1, 2, 3}, 3), Error);
  CHECK_THROWS_AS(compute_baseline(std::vector<double>{0, 0, 3}, 2), Error);
}

TEST_CASE("integrate is the trapezoid rule") {
  CHECK(integrate(series(std::vector<double>(11, 1.0))) == 10.0);
  CHECK(integrate(series(std::vector<double>(5, 0.0))) == 0.0);
  CHECK(integrate(series({1.0, 3.0, 2.0}, 0.5)) == doctest::Approx(0.5 * (0.5 + 3.0 + 1.0)));

  SUBCASE("exact for linear functions") {
    Gen g(5);
    for (int trial = 0; trial < 20; ++trial) {
      const double a = g.uniform(-3, 3), b = g.uniform(-3, 3), dt = g.uniform(0.1, 2.0);
      const int n = g.integer(2, 40);
      std::vector<double> v(static_cast<std::size_t>(n));
      for (int i = 0; i < n; ++i) v[static_cast<std::size_t>(i)] = a * i * dt + b;
      const double len = (n - 1) * dt;
      CHECK(integrate(series(v, dt)) == doctest::Approx(0.5 * a * len * len + b * len).epsilon(1e-12));
    }
  }

  SUBCASE("gamma variate against 10x oversampled quadrature and the closed form") {
    phantom::GammaVariateParams p{3.0, 2.0, 1.0, 1.0};
    const double coarse = integrate(phantom::gamma_variate(p, 50, 1.0));
    const double fine = integrate(phantom::gamma_variate(p, 491, 0.1));
    CHECK(rel_err(coarse, fine) < 0.01);
    CHECK(rel_err(fine, gamma_area(p)) < 1e-3);
  }

  SUBCASE("second-order convergence") {
    auto sampled = [](int n) {
      const double dt = 2.0 / (n - 1);
      std::vector<double> v(static_cast<std::size_t>(n));
      for (int i = 0; i < n; ++i) v[static_cast<std::size_t>(i)] = std::exp(i * dt);
      return series(v, dt);
    };
    const double exact = std::exp(2.0) - 1.0;
    const double e1 = std::abs(integrate(sampled(21)) - exact);
    const double e2 = std::abs(integrate(sampled(41)) - exact);
    // halving dt shrinks the error by ~4
    CHECK(e1 / e2 > 3.9);
    CHECK(e1 / e2 < 4.1);
  }
}

TEST_CASE("compute_kav") {
  const auto a = series({0, 1, 3, 2, 0});
  CHECK(compute_kav(a, a) == 1.0);
  CHECK(compute_kav(series({0, 20, 0}, 1.0), series({0, 40, 0}, 1.0)) == 0.5);
  SUBCASE("gamma pair against the closed-form area ratio") {
    phantom::GammaVariateParams pa{2.0, 3.0, 1.0, 1.0}, pv{5.0, 2.5, 1.6, 0.8};
    const double analytic = gamma_area(pa) / gamma_area(pv);
    const double kav = compute_kav(phantom::gamma_variate(pa, 1200, 0.05), phantom::gamma_variate(pv, 1200, 0.05));
    CHECK(rel_err(kav, analytic) < 0.005);
  }
  CHECK_THROWS_AS(compute_kav(a, series({0, 0, 0, 0, 0})), Error);
}

TEST_CASE("hematocrit factor, cbv, cbf, mtt") {
  CHECK(hematocrit_factor(unit_constants(), 1.0) == 1.0);
  const KineticConstants k;
  const double f = hematocrit_factor(k, 1.0);
  CHECK(rel_err(f, 0.75 / (1.04 * 0.55)) < 1e-15);
  CHECK(f == doctest::Approx(1.311189).epsilon(1e-6));
  CHECK(rel_err(hematocrit_factor(k, 2.0), 2.0 * f) < 1e-15);

  CHECK(compute_cbv(series({0, 0, 0}), k, 1.0) == 0.0);
  CHECK(compute_cbv(series(std::vector<double>(11, 1.0)), unit_constants(), 1.0) == doctest::Approx(1000.0));
  CHECK(cbv_from_integral(0.04, k, 1.0) == doctest::Approx(5.24476).epsilon(1e-5));

  CHECK(compute_cbf(series({0.0, 0.01, 0.005}, 1.0, SeriesKind::residue), unit_constants(), 1.0) ==
        doctest::Approx(60.0));
  CHECK(compute_cbf(series({0, 0, 0}, 1.0, SeriesKind::residue), k, 1.0) == 0.0);
  CHECK(compute_cbf(series({0.002, 0.008}, 1.0, SeriesKind::residue), k, 1.0) == doctest::Approx(62.937).epsilon(1e-4));

  CHECK(compute_mtt(4.0, 60.0).seconds == doctest::Approx(4.0));
  CHECK(compute_mtt(0.0, 60.0).seconds == 0.0);
  CHECK(compute_mtt(3.2, 25.0).seconds == doctest::Approx(7.68));
  const auto undefined = compute_mtt(3.0, 0.0);
  CHECK_FALSE(undefined.valid);
  CHECK(undefined.seconds == 0.0);
}

TEST_CASE("cbv is linear in the concentration curve") {
  Gen g(8);
  const KineticConstants k;
  for (int trial = 0; trial < 30; ++trial) {
    const auto a = g.vector(30, 0.0, 1.0), b = g.vector(30, 0.0, 1.0);
    const double la = g.uniform(-2, 2), lb = g.uniform(-2, 2);
    std::vector<double> mix(30);
    for (std::size_t i = 0; i < 30; ++i) mix[i] = la * a[i] + lb * b[i];
    const double lhs = compute_cbv(series(mix), k, 0.7);
    const double rhs = la * compute_cbv(series(a), k, 0.7) + lb * compute_cbv(series(b), k, 0.7);
    CHECK(std::abs(lhs - rhs) < 1e-10);
  }
}

TEST_CASE("scaling the residue scales cbf and keeps tmax") {
  Gen g(9);
  const KineticConstants k;
  for (int trial = 0; trial < 50; ++trial) {
    const auto r = series(g.vector(40, 0.0, 0.05), 1.0, SeriesKind::residue);
    const double lambda = g.uniform(0.1, 10.0);
    TimeSeries scaled = r;
    for (double& v : scaled.values) v *= lambda;
    CHECK(rel_err(compute_cbf(scaled, k, 0.5), lambda * compute_cbf(r, k, 0.5)) < 1e-14);
    CHECK(compute_tmax(scaled) == compute_tmax(r));
  }
}

TEST_CASE("compute_tmax picks the earliest maximum") {
  CHECK(compute_tmax(series({0, 0.2, 0.9, 0.9, 0.1}, 1.5, SeriesKind::residue)) == 3.0);
  CHECK(compute_tmax(series({5, 4, 3, 2}, 1.0, SeriesKind::residue)) == 0.0);
  std::vector<double> rising(50);
  for (int i = 0; i < 50; ++i) rising[static_cast<std::size_t>(i)] = i;
  CHECK(compute_tmax(series(rising, 1.0, SeriesKind::residue)) == 49.0);
}

TEST_CASE("convolve_forward") {
  SUBCASE("delta of height 1/dt is the identity") {
    const double dt = 0.5;
    std::vector<double> delta(8, 0.0);
    delta[0] = 1.0 / dt;
    Gen g(1);
    const auto r = series(g.vector(8, 0, 1), dt, SeriesKind::residue);
    const auto c = convolve_forward(series(delta, dt), r);
    for (std::size_t i = 0; i < 8; ++i) CHECK(c[i] == doctest::Approx(r[i]).epsilon(1e-15));
  }
  SUBCASE("zero residue") {
    const auto c = convolve_forward(series({1, 2, 3}), series({0, 0, 0}, 1.0, SeriesKind::residue));
    for (double v : c.values) CHECK(v == 0.0);
  }
  SUBCASE("boxcar with boxcar against a double-loop oracle") {
    const int n = 20;
    std::vector<double> box(n, 0.0);
    for (int i = 0; i < 5; ++i) box[static_cast<std::size_t>(i)] = 1.0;
    const auto c = convolve_forward(series(box, 2.0), series(box, 2.0, SeriesKind::residue));
    for (int i = 0; i < n; ++i) {
      double ref = 0.0;
      for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b)
          if (a + b == i) ref += box[static_cast<std::size_t>(a)] * box[static_cast<std::size_t>(b)];
      CHECK(c[static_cast<std::size_t>(i)] == doctest::Approx(2.0 * ref));
    }
    // triangle: 1,2,3,4,5,4,3,2,1 (times dt)
    CHECK(c[4] == doctest::Approx(10.0));
    CHECK(c[8] == doctest::Approx(2.0));
    CHECK(c[9] == 0.0);
  }
  SUBCASE("bilinear and commutative") {
    Gen g(4);
    for (int trial = 0; trial < 20; ++trial) {
      const auto a = series(g.vector(25, -1, 1)), b = series(g.vector(25, -1, 1)), r = series(g.vector(25, -1, 1));
      const double la = g.uniform(-2, 2);
      TimeSeries mix = a;
      for (std::size_t i = 0; i < 25; ++i) mix.values[i] = la * a[i] + b[i];
      const auto lhs = convolve_forward(mix, r);
      const auto ca = convolve_forward(a, r), cb = convolve_forward(b, r), swapped = convolve_forward(r, a);
      for (std::size_t i = 0; i < 25; ++i) {
        CHECK(std::abs(lhs[i] - (la * ca[i] + cb[i])) < 1e-12);
        CHECK(std::abs(swapped[i] - ca[i]) < 1e-12);
      }
    }
  }
  CHECK_THROWS_AS(convolve_forward(series({1, 2, 3}), series({1, 2})), Error);
}
