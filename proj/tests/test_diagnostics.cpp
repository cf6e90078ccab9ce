#include <gtest/gtest.h>

#include <cmath>

#include "cmm/diagnostics.hpp"

using namespace cmm;

namespace {

VectorGrid sample(const GridSpec& g, auto&& fn) {
  VectorGrid v{std::vector<double>(g.size()), std::vector<double>(g.size())};
  for (std::size_t k = 0; k < g.size(); ++k) {
    const Vec2 w = fn(g.node(k));
    v.x[k] = w.x;
    v.y[k] = w.y;
  }
  return v;
}

}  // namespace

TEST(Diagnostics, KineticEnergyOfSinX) {
  const GridSpec g = GridSpec::square(32);
  const auto u = sample(g, [](Vec2 p) { return Vec2{std::sin(p.x), 0.0}; });
  const auto zero = sample(g, [](Vec2) { return Vec2{}; });
  const auto e = energies(u, zero);
  EXPECT_NEAR(e.kinetic, 0.25, 1e-15);
  EXPECT_EQ(e.potential, 0.0);
  EXPECT_EQ(e.total, e.kinetic);
  EXPECT_EQ(cross_helicity(u, zero), 0.0);
}

TEST(Diagnostics, SquaredPotential) {
  // B = (-sin y, 0): j = cos y, a = -cos y, 1/2 <a, a> = 1/4.
  const GridSpec g = GridSpec::square(32);
  SpectralWorkspace ws(g);
  const auto b = sample(g, [](Vec2 p) { return Vec2{-std::sin(p.y), 0.0}; });
  EXPECT_NEAR(squared_potential(ws, b), 0.25, 1e-14);
}

TEST(Diagnostics, OrszagTangInvariants) {
  const GridSpec g = GridSpec::square(64);
  SpectralWorkspace ws(g);
  const auto u = sample(g, [](Vec2 p) { return Vec2{-std::sin(2 * p.y), std::sin(2 * p.x)}; });
  const auto b = sample(g, [](Vec2 p) { return Vec2{-2 * std::sin(2 * p.y), 4 * std::sin(p.x)}; });
  const auto e = energies(u, b);
  EXPECT_NEAR(e.kinetic, 0.5, 1e-14);
  EXPECT_NEAR(e.potential, 5.0, 1e-13);
  EXPECT_NEAR(cross_helicity(u, b), 1.0, 1e-14);
  EXPECT_NEAR(squared_potential(ws, b), 4.25, 1e-13);
}

TEST(Diagnostics, Norms) {
  const std::vector<double> a{1, -3, 2}, b{1, 1, 2};
  EXPECT_EQ(linf_error(a, b), 4.0);
  EXPECT_EQ(max_abs(a), 3.0);
  EXPECT_NEAR(inner(a, b), 2.0 / 3.0, 1e-15);
  EXPECT_EQ(max_norm(VectorGrid{{3.0}, {4.0}}), 5.0);
  EXPECT_THROW(linf_error(a, std::vector<double>{1.0}), std::invalid_argument);
  EXPECT_THROW(inner(std::vector<double>{}, std::vector<double>{}), std::invalid_argument);
}

TEST(Diagnostics, ConvergenceOrders) {
  const std::vector<double> e{8.0, 1.0}, s{2.0, 1.0};
  EXPECT_NEAR(eoc(e, s)[0], 3.0, 1e-14);
  const std::vector<double> e2{4.0, 2.0, 1.0}, s2{1.0, 0.5, 0.25};
  for (double o : eoc(e2, s2)) EXPECT_NEAR(o, 1.0, 1e-14);
  EXPECT_THROW(eoc(std::vector<double>{1.0}, std::vector<double>{1.0}), std::invalid_argument);
  EXPECT_THROW(eoc(std::vector<double>{1.0, 0.0}, s), std::invalid_argument);
}

TEST(Diagnostics, SpectrumFitRecoversPowerLaw) {
  std::vector<double> e(32, 0.0);
  for (int k = 1; k < 32; ++k) e[k] = 3.0 * std::pow(k, -2.0);
  EXPECT_NEAR(spectrum_fit(e, 1, 14), -2.0, 1e-12);
  e[5] = 0.0;  // empty shells are skipped
  EXPECT_NEAR(spectrum_fit(e, 1, 14), -2.0, 1e-12);
  EXPECT_THROW(spectrum_fit(e, 0, 14), std::invalid_argument);
  EXPECT_THROW(spectrum_fit(std::vector<double>(4, 0.0), 1, 3), std::invalid_argument);
}
