#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "cmm/diagnostics.hpp"
#include "cmm/spectral.hpp"

using namespace cmm;

namespace {

std::vector<double> sample(const GridSpec& g, auto&& fn) {
  std::vector<double> v(g.size());
  for (std::size_t k = 0; k < g.size(); ++k) v[k] = fn(g.node(k));
  return v;
}

// Random real field with modes up to |k| <= kband.
std::vector<double> random_band_limited(const GridSpec& g, int kband, unsigned seed) {
  std::mt19937 rng(seed);
  std::normal_distribution<double> d;
  std::vector<std::array<double, 4>> modes;
  for (int kx = 0; kx <= kband; ++kx)
    for (int ky = -kband; ky <= kband; ++ky) modes.push_back({double(kx), double(ky), d(rng), d(rng)});
  return sample(g, [&](Vec2 p) {
    double s = 0;
    for (const auto& m : modes) s += m[2] * std::cos(m[0] * p.x + m[1] * p.y) + m[3] * std::sin(m[0] * p.x + m[1] * p.y);
    return s;
  });
}

double mean(const std::vector<double>& v) {
  double s = 0;
  for (double x : v) s += x;
  return s / v.size();
}

}  // namespace

TEST(Spectral, ForwardInverseRoundTrip) {
  const GridSpec g = GridSpec::square(32);
  SpectralWorkspace ws(g);
  const auto f = random_band_limited(g, 5, 3);
  EXPECT_LE(linf_error(ws.inverse(ws.forward(f)), f), 1e-12);
  EXPECT_THROW(SpectralWorkspace(GridSpec::square(15)), std::invalid_argument);
}

TEST(Spectral, BiotSavartZeroVorticity) {
  const GridSpec g = GridSpec::square(16);
  SpectralWorkspace ws(g);
  const auto u = biot_savart(ws, std::vector<double>(g.size(), 0.0), 0.9);
  EXPECT_EQ(max_abs(u.x.values()), 0.0);
  EXPECT_EQ(max_abs(u.y.values()), 0.0);
}

TEST(Spectral, BiotSavartOrszagTangByHand) {
  // psi solves -lap psi = omega: psi = (cos 2x + cos 2y) / 2, u = (d_y psi, -d_x psi).
  const GridSpec g = GridSpec::square(32);
  SpectralWorkspace ws(g);
  const auto omega = sample(g, [](Vec2 p) { return 2 * (std::cos(2 * p.x) + std::cos(2 * p.y)); });
  const auto uh = biot_savart_spectrum(ws, ws.forward(omega), 0.9);
  for (std::size_t j = 0; j < static_cast<std::size_t>(g.ny); ++j)
    for (std::size_t i = 0; i < ws.columns(); ++i) {
      const double k = std::hypot(ws.kx_index(i), ws.ky_index(j));
      const std::size_t idx = j * ws.columns() + i;
      if (k != 2.0) {
        EXPECT_LT(std::abs(uh.x[idx]) + std::abs(uh.y[idx]), 1e-14);
      }
    }
  const auto u = biot_savart(ws, omega, 0.9);
  for (std::size_t k = 0; k < g.size(); ++k) {
    const Vec2 p = g.node(k);
    EXPECT_NEAR(u.x.values()[k], -std::sin(2 * p.y), 1e-13);
    EXPECT_NEAR(u.y.values()[k], std::sin(2 * p.x), 1e-13);
    EXPECT_NEAR(u.x.dy()[k], -2 * std::cos(2 * p.y), 1e-12);
    EXPECT_NEAR(u.y.dx()[k], 2 * std::cos(2 * p.x), 1e-12);
  }
}

TEST(Spectral, BiotSavartCurlRoundTrip) {
  const GridSpec g = GridSpec::square(64);
  SpectralWorkspace ws(g);
  const auto omega = random_band_limited(g, 31, 11);
  const auto u = biot_savart(ws, omega, 0.9);
  const std::vector<double> ux(u.x.values().begin(), u.x.values().end());
  const std::vector<double> uy(u.y.values().begin(), u.y.values().end());
  auto expected = lowpass(ws, omega, 0.9);
  const double m = mean(expected);
  for (double& v : expected) v -= m;
  EXPECT_LE(linf_error(curl2d(ws, ux, uy), expected), 1e-10);
  EXPECT_LE(max_abs(div2d(ws, ux, uy)), 1e-10);
}

TEST(Spectral, BiotSavartSinX) {
  const GridSpec g = GridSpec::square(32);
  SpectralWorkspace ws(g);
  const auto omega = sample(g, [](Vec2 p) { return std::sin(p.x); });
  const auto u = biot_savart(ws, omega, 1.0);
  const std::vector<double> ux(u.x.values().begin(), u.x.values().end());
  const std::vector<double> uy(u.y.values().begin(), u.y.values().end());
  EXPECT_LE(max_abs(ux), 1e-14);
  EXPECT_LE(max_abs(div2d(ws, ux, uy)), 1e-12);
  EXPECT_LE(linf_error(curl2d(ws, ux, uy), omega), 1e-10);
}

TEST(Spectral, LowpassCutoffOneIsIdentity) {
  const GridSpec g = GridSpec::square(32);
  SpectralWorkspace ws(g);
  const auto f = random_band_limited(g, 15, 5);
  EXPECT_LE(linf_error(lowpass(ws, f, 1.0), f), 1e-13 * max_abs(f));
}

TEST(Spectral, LowpassRemovesModeAboveCutoff) {
  const GridSpec g = GridSpec::square(64);
  SpectralWorkspace ws(g);
  const auto f = sample(g, [](Vec2 p) { return std::cos(30 * p.x); });
  EXPECT_LE(max_abs(lowpass(ws, f, 0.5)), 1e-13);
}

TEST(Spectral, LowpassIsIdempotent) {
  const GridSpec g = GridSpec::square(64);
  SpectralWorkspace ws(g);
  const auto f = random_band_limited(g, 31, 9);
  const auto once = lowpass(ws, f, 0.4);
  EXPECT_LE(linf_error(lowpass(ws, once, 0.4), once), 1e-13 * max_abs(f));
  EXPECT_THROW(lowpass(ws, f, 0.0), std::invalid_argument);
  EXPECT_THROW(lowpass(ws, f, 1.5), std::invalid_argument);
}

TEST(Spectral, CurlOfOrszagTangField) {
  const GridSpec g = GridSpec::square(32);
  SpectralWorkspace ws(g);
  const auto bx = sample(g, [](Vec2 p) { return -2 * std::sin(2 * p.y); });
  const auto by = sample(g, [](Vec2 p) { return 4 * std::sin(p.x); });
  const auto j = curl2d(ws, bx, by);
  EXPECT_LE(linf_error(j, sample(g, [](Vec2 p) { return 4 * std::cos(p.x) + 4 * std::cos(2 * p.y); })), 1e-12);
}

TEST(Spectral, DivergenceOfGradientIsLaplacian) {
  const GridSpec g = GridSpec::square(32);
  SpectralWorkspace ws(g);
  const auto f = random_band_limited(g, 10, 17);
  const auto [gx, gy] = grad_spectral(ws, f);
  EXPECT_LE(linf_error(div2d(ws, gx, gy), laplacian(ws, f)), 1e-12 * max_abs(laplacian(ws, f)));
}

TEST(Spectral, PoissonRecoversPotential) {
  const GridSpec g = GridSpec::square(32);
  SpectralWorkspace ws(g);
  const auto bx = sample(g, [](Vec2 p) { return -2 * std::sin(2 * p.y); });
  const auto by = sample(g, [](Vec2 p) { return 4 * std::sin(p.x); });
  const auto sol = inv_laplace(ws, curl2d(ws, bx, by));
  EXPECT_NEAR(sol.removed_mean, 0.0, 1e-14);
  // lap a = j with j = curl B gives B = -(d_y a, -d_x a).
  const auto [ax, ay] = grad_spectral(ws, sol.solution);
  std::vector<double> cx(g.size()), cy(g.size());
  for (std::size_t k = 0; k < g.size(); ++k) {
    cx[k] = -ay[k];
    cy[k] = ax[k];
  }
  EXPECT_LE(linf_error(cx, bx), 1e-10);
  EXPECT_LE(linf_error(cy, by), 1e-10);
  const auto with_mean = inv_laplace(ws, std::vector<double>(g.size(), 3.0));
  EXPECT_NEAR(with_mean.removed_mean, 3.0, 1e-14);
  EXPECT_LE(max_abs(with_mean.solution), 1e-14);
}

TEST(Spectral, LerayProjection) {
  const GridSpec g = GridSpec::square(32);
  SpectralWorkspace ws(g);
  const auto psi = random_band_limited(g, 8, 21);
  const auto phi = random_band_limited(g, 8, 22);
  const auto [px, py] = grad_spectral(ws, psi);
  const auto [fx, fy] = grad_spectral(ws, phi);
  std::vector<double> vx(g.size()), vy(g.size());
  for (std::size_t k = 0; k < g.size(); ++k) {
    vx[k] = py[k] + fx[k];  // solenoidal part plus a gradient
    vy[k] = -px[k] + fy[k];
  }
  const auto p = leray_project(ws, {ws.forward(vx), ws.forward(vy)});
  const auto ox = ws.inverse(p.x), oy = ws.inverse(p.y);
  EXPECT_LE(max_abs(div2d(ws, ox, oy)), 1e-11);
  for (std::size_t k = 0; k < g.size(); ++k) {
    EXPECT_NEAR(ox[k], py[k], 1e-11);
    EXPECT_NEAR(oy[k], -px[k], 1e-11);
  }
}

TEST(Spectral, ShellSpectrumOfSinX) {
  const GridSpec g = GridSpec::square(32);
  SpectralWorkspace ws(g);
  const auto vx = sample(g, [](Vec2 p) { return std::sin(p.x); });
  const std::vector<double> vy(g.size(), 0.0);
  const auto e = shell_spectrum(ws, vx, vy);
  EXPECT_NEAR(e[1], 0.25, 1e-14);
  for (std::size_t k = 0; k < e.size(); ++k) {
    if (k != 1) {
      EXPECT_LE(e[k], 1e-30);
    }
  }

  // Brute-force DFT of the k = (1, 0) mode.
  std::complex<double> c{};
  for (std::size_t k = 0; k < g.size(); ++k) c += vx[k] * std::exp(std::complex<double>(0, -g.node(k).x));
  c /= static_cast<double>(g.size());
  EXPECT_NEAR(0.5 * 2 * std::norm(c), 0.25, 1e-14);

  const auto z = shell_spectrum(ws, vy, vy);
  for (double v : z) EXPECT_EQ(v, 0.0);
}

TEST(Spectral, ShellSpectrumParseval) {
  const GridSpec g = GridSpec::square(64);
  SpectralWorkspace ws(g);
  const auto ux = random_band_limited(g, 31, 31);
  const auto uy = random_band_limited(g, 31, 32);
  const auto e = shell_spectrum(ws, ux, uy);
  double total = 0;
  for (double v : e) total += v;
  const double energy = 0.5 * (inner(ux, ux) + inner(uy, uy));
  EXPECT_NEAR(total, energy, 1e-12 * energy);
}

TEST(Spectral, TailFraction) {
  const GridSpec g = GridSpec::square(64);
  SpectralWorkspace ws(g);
  const int k = static_cast<int>(0.9 * ws.kmax());
  const auto high = sample(g, [&](Vec2 p) { return std::cos(k * p.x); });
  EXPECT_NEAR(spectral_tail_fraction(ws, high, 2.0 / 3.0), 1.0, 1e-12);
  const auto low = sample(g, [](Vec2 p) { return 5.0 + std::cos(3 * p.x); });
  EXPECT_LE(spectral_tail_fraction(ws, low, 2.0 / 3.0), 1e-28);
  EXPECT_EQ(spectral_tail_fraction(ws, std::vector<double>(g.size(), 1.0), 2.0 / 3.0), 0.0);
}

TEST(Spectral, HermiteDataFromSpectrumMatchAnalyticDerivatives) {
  const GridSpec g = GridSpec::square(32);
  SpectralWorkspace ws(g);
  const auto f = hermite_from_spectrum(
      ws, ws.forward(sample(g, [](Vec2 p) { return std::sin(p.x + 2 * p.y); })));
  for (std::size_t k = 0; k < g.size(); ++k) {
    const Vec2 p = g.node(k);
    const double c = std::cos(p.x + 2 * p.y), s = std::sin(p.x + 2 * p.y);
    EXPECT_NEAR(f.dx()[k], c, 1e-12);
    EXPECT_NEAR(f.dy()[k], 2 * c, 1e-12);
    EXPECT_NEAR(f.dxy()[k], -2 * s, 1e-12);
  }
}
