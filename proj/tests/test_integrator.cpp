#include <gtest/gtest.h>

#include <cmath>

#include "cmm/integrator.hpp"
#include "cmm/mhd.hpp"
#include "cmm/swirl.hpp"

using namespace cmm;

TEST(Integrator, LagrangeWeights) {
  const std::vector<double> t{0.0, 0.1, 0.2};
  const auto w = lagrange_weights(t, 0.3);
  EXPECT_NEAR(w[0], 1.0, 1e-14);
  EXPECT_NEAR(w[1], -3.0, 1e-14);
  EXPECT_NEAR(w[2], 3.0, 1e-14);
  // reproduces quadratics
  auto q = [](double s) { return 1 - 2 * s + 5 * s * s; };
  EXPECT_NEAR(w[0] * q(0.0) + w[1] * q(0.1) + w[2] * q(0.2), q(0.3), 1e-13);
  const auto at_node = lagrange_weights(t, 0.1);
  EXPECT_EQ(at_node[0], 0.0);
  EXPECT_EQ(at_node[1], 1.0);
  EXPECT_THROW(lagrange_weights(std::vector<double>{}, 0.0), std::invalid_argument);
}

TEST(Integrator, HistoryOrderAndErrors) {
  const GridSpec g = GridSpec::square(8);
  SourceHistory h(2);
  EXPECT_THROW(h.at(0.0), std::logic_error);
  EXPECT_THROW(h.newest_time(), std::logic_error);
  auto field = [&](double c) {
    return project_to_hermite(g, [c](Vec2) { return std::array<double, 4>{c, 0, 0, 0}; });
  };
  h.push(0.0, field(1.0));
  EXPECT_EQ(h.at(5.0).values()[0], 1.0);  // one snapshot: constant in time
  h.push(0.5, field(2.0));
  EXPECT_NEAR(h.at(1.0).values()[3], 3.0, 1e-15);
  h.push(1.0, field(4.0));
  EXPECT_EQ(h.size(), 2u);
  EXPECT_EQ(h.time(0), 0.5);
  EXPECT_THROW(h.push(1.0, field(0.0)), std::invalid_argument);
  EXPECT_THROW(SourceHistory(0), std::invalid_argument);
}

TEST(Integrator, RejectsBadSetup) {
  const GridSpec g = GridSpec::square(8);
  IntegratorOptions o;
  EXPECT_THROW(CmmIntegrator(g, std::nullopt, o, SnapshotProvider{}), std::invalid_argument);
  o.gamma = 0;
  EXPECT_THROW(CmmIntegrator(g, std::nullopt, o, [](const SubmapStack&, double) { return Snapshot{}; }),
               std::invalid_argument);
  CmmIntegrator ok(g, g, IntegratorOptions{}, [&](const SubmapStack&, double) {
    return Snapshot{VectorHermite(g), HermiteField{}};
  });
  EXPECT_THROW(ok.step(0.1), std::logic_error);  // sourced problem without a source
  EXPECT_THROW(ok.step(-1.0), std::invalid_argument);
}

TEST(Integrator, SwirlRunsAreBitwiseDeterministic) {
  SwirlConfig c;
  c.map_grid = c.velocity_grid = c.eval_grid = 32;
  c.dt = 1.0 / 16;
  c.t_end = 0.5;
  const auto a = run_swirl(c), b = run_swirl(c);
  EXPECT_EQ(a.theta, b.theta);
  EXPECT_EQ(a.linf_error, b.linf_error);
}

TEST(Integrator, OrszagTangRunsAreBitwiseDeterministic) {
  MhdConfig c;
  c.map_grid = 16;
  c.velocity_grid = 32;
  c.dt = 0.01;
  c.delta_det = 1e-7;
  auto run = [&] {
    MhdSolver s(c);
    s.advance_to(0.1);
    return std::pair{s.vorticity(GridSpec::square(16)), s.stack().remap_count()};
  };
  const auto a = run(), b = run();
  EXPECT_EQ(a.first, b.first);
  EXPECT_EQ(a.second, b.second);
  EXPECT_GT(a.second, 0u);
}

TEST(Integrator, RemapCountFollowsMonitor) {
  SwirlConfig c;
  c.map_grid = c.velocity_grid = c.eval_grid = 32;
  c.dt = 1.0 / 32;
  c.t_end = 1.0;
  c.remap = true;
  c.delta_det = 2e-5;
  std::size_t fired = 0;
  run_swirl(c, [&](const CmmIntegrator& in) {
    if (in.last_remap_check().fire) {
      ++fired;
      const auto& r = in.last_remap_check();
      EXPECT_TRUE(r.det_deviation > 2e-5 || r.source_tail > c.source_tail);
      EXPECT_EQ(in.stack().head().t_start, in.time());
    }
    EXPECT_EQ(in.stack().remap_count(), fired);
  });
  EXPECT_GT(fired, 2u);
  c.remap = false;
  EXPECT_EQ(run_swirl(c).remaps, 0u);
}

TEST(Integrator, StartupCorrectorImprovesFirstStep) {
  // One large step of the swirl map against a fine reference.
  auto map_after = [](bool corrector, double dt, int steps) {
    const GridSpec g = GridSpec::square(32);
    IntegratorOptions o;
    o.remap = false;
    o.startup_corrector = corrector;
    CmmIntegrator in(g, std::nullopt, o, [g](const SubmapStack&, double t) {
      HermiteField ux(g), uy(g);
      for (std::size_t k = 0; k < g.size(); ++k) {
        const auto d = SwirlProblem::velocity_node_data(g.node(k), t + 2.0);
        ux.set_node(k, d[0][0], d[0][1], d[0][2], d[0][3]);
        uy.set_node(k, d[1][0], d[1][1], d[1][2], d[1][3]);
      }
      return Snapshot{VectorHermite(std::move(ux), std::move(uy)), HermiteField{}};
    });
    for (int s = 0; s < steps; ++s) in.step(dt);
    return in.stack().map({2.0, 1.0});
  };
  const Vec2 ref = map_after(true, 0.005, 100);
  const double with = norm(map_after(true, 0.5, 1) - ref);
  const double without = norm(map_after(false, 0.5, 1) - ref);
  EXPECT_LT(with, without / 4);
}
