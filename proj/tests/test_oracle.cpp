#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "cppll/model.hpp"
#include "cppll/oracle.hpp"

using namespace cppll;
using namespace cppll::oracle;

namespace {

// Physical parameters with the given normalized image at T_ref = 1 us.
PhysicalParameters physical_for(const NormalizedParameters& np, double vco_free_hz = 1e6) {
  const double k = 1e5, ip = 5e-3, t = 1e-6;
  return {np.alpha / (k * ip * t), k * ip * t * t / (2.0 * np.beta), k, ip, t, vco_free_hz};
}

// Brute-force reference: fixed-step RK4 on (v_c, theta_vco) with edges
// located by linear interpolation inside the step. Returns edge times.
struct DenseEdge {
  double time;
  bool ref, vco;
};

std::vector<DenseEdge> dense_edges(ContinuousState cs, const PhysicalParameters& ph, double t_end,
                                   std::size_t steps_per_period) {
  const double T = ph.ref_period_seconds;
  const double h = T / static_cast<double>(steps_per_period);
  std::vector<DenseEdge> out;
  auto current = [&](Pfd s) { return s == Pfd::Plus ? ph.pump_current_amps : s == Pfd::Minus ? -ph.pump_current_amps : 0.0; };
  auto rk4 = [&](double& vc, double& th, double i, double dt) {
    auto f = [&](double v) { return ph.vco_free_hz + ph.vco_gain_hz_per_volt * (v + ph.resistance_ohms * i); };
    const double dv = i / ph.capacitance_farads;
    const double k1 = f(vc), k2 = f(vc + 0.5 * dt * dv), k3 = k2, k4 = f(vc + dt * dv);
    th += dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4);
    vc += dt * dv;
  };
  while (cs.t_seconds < t_end) {
    const double i = current(cs.pfd);
    double vc = cs.v_c_volts, th = cs.theta_vco;
    rk4(vc, th, i, h);
    const double tr = cs.theta_ref + h / T;
    const double nr = std::floor(cs.theta_ref) + 1.0, nv = std::floor(cs.theta_vco) + 1.0;
    const double fr = tr >= nr ? (nr - cs.theta_ref) / (tr - cs.theta_ref) : 2.0;
    const double fv = th >= nv ? (nv - cs.theta_vco) / (th - cs.theta_vco) : 2.0;
    if (fr > 1.0 && fv > 1.0) {
      cs.v_c_volts = vc;
      cs.theta_vco = th;
      cs.theta_ref = tr;
      cs.t_seconds += h;
      continue;
    }
    const double f = std::min(fr, fv);
    const bool ref = std::abs(fr - f) * h <= 1e-12 * T, vco = std::abs(fv - f) * h <= 1e-12 * T;
    vc = cs.v_c_volts;
    th = cs.theta_vco;
    rk4(vc, th, i, f * h);
    cs.v_c_volts = vc;
    cs.theta_vco = vco ? nv : th;
    cs.theta_ref = ref ? nr : cs.theta_ref + f * h / T;
    cs.t_seconds += f * h;
    out.push_back({cs.t_seconds, ref, vco});
    if (ref && vco) cs.pfd = Pfd::Zero;
    else if (ref) cs.pfd = cs.pfd == Pfd::Minus ? Pfd::Zero : Pfd::Plus;
    else cs.pfd = cs.pfd == Pfd::Plus ? Pfd::Zero : Pfd::Minus;
  }
  return out;
}

}  // namespace

TEST(Pfd, TransitionTable) {
  EXPECT_EQ(pfd_transition(Pfd::Zero, EventKind::RefEdge), Pfd::Plus);
  EXPECT_EQ(pfd_transition(Pfd::Plus, EventKind::RefEdge), Pfd::Plus);
  EXPECT_EQ(pfd_transition(Pfd::Minus, EventKind::RefEdge), Pfd::Zero);
  EXPECT_EQ(pfd_transition(Pfd::Zero, EventKind::VcoEdge), Pfd::Minus);
  EXPECT_EQ(pfd_transition(Pfd::Minus, EventKind::VcoEdge), Pfd::Minus);
  EXPECT_EQ(pfd_transition(Pfd::Plus, EventKind::VcoEdge), Pfd::Zero);
  EXPECT_EQ(pfd_transition(Pfd::Plus, EventKind::BothEdges), Pfd::Zero);
  EXPECT_EQ(pfd_transition(Pfd::Minus, EventKind::BothEdges), Pfd::Zero);
  EXPECT_THROW(pfd_transition(Pfd::Zero, EventKind::OverloadOnset), std::invalid_argument);
}

TEST(NextEvent, LockedStateGivesBothEdges) {
  const auto ph = physical_for({0.3, 1.0});
  ContinuousState cs;  // aligned phases, v_c = 0, omega = vco_free = 1 / T
  const auto ne = next_event(cs, ph);
  EXPECT_EQ(ne.kind, EventKind::BothEdges);
  EXPECT_NEAR(ne.time, ph.ref_period_seconds, 1e-12 * ph.ref_period_seconds);
}

TEST(NextEvent, ClosedFormMatchesDenseIntegration) {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> a(0.05, 0.95), b(0.1, 1.9), p(-0.15, 0.15), u(-0.1, 0.3);
  int compared = 0;
  for (int trial = 0; trial < 12; ++trial) {
    const NormalizedParameters np{a(rng), b(rng)};
    const auto ph = physical_for(np);
    const DiscreteState s0{p(rng), u(rng)};
    ContinuousState cs;
    try {
      cs = start_state(ph, s0);
    } catch (const std::domain_error&) {
      continue;
    }
    SimulateOptions so;
    so.horizon_events = 12;
    const auto log = simulate(cs, ph, so);
    if (log.stop == StopReason::Overload) continue;
    const double t_end = log.events.back().time - 1e-3 * ph.ref_period_seconds;
    const auto dense = dense_edges(cs, ph, t_end, 1000000);
    // Oracle events after the initial one, dropping none: every oracle event
    // is an edge here since no overload occurred.
    std::vector<double> oracle_times;
    for (std::size_t k = 1; k < log.events.size() && log.events[k].time < t_end; ++k) {
      oracle_times.push_back(log.events[k].time);
    }
    ASSERT_EQ(dense.size(), oracle_times.size()) << "trial " << trial;
    for (std::size_t k = 0; k < dense.size(); ++k) {
      EXPECT_NEAR(dense[k].time, oracle_times[k], 1e-8 * ph.ref_period_seconds);
    }
    ++compared;
  }
  EXPECT_GE(compared, 8);
}

TEST(Simulate, LockedStateStaysLocked) {
  const auto ph = physical_for({0.4, 0.8});
  SimulateOptions so;
  so.horizon_events = 200;
  const auto log = simulate(start_state(ph, DiscreteState{0.0, 0.0}), ph, so);
  EXPECT_EQ(log.stop, StopReason::Horizon);
  for (const auto& e : log.events) {
    EXPECT_EQ(e.kind, EventKind::BothEdges);
    EXPECT_EQ(e.pfd_after, Pfd::Zero);
  }
  for (const auto& s : extract_discrete(log, ph)) {
    EXPECT_NEAR(s.p, 0.0, 1e-12);
    EXPECT_NEAR(s.u, 0.0, 1e-12);
  }
}

TEST(Simulate, InvariantsOnRandomRuns) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> a(0.05, 0.95), b(0.1, 1.9), p(-0.5, 0.5), u(-0.3, 1.0);
  for (int trial = 0; trial < 30; ++trial) {
    const NormalizedParameters np{a(rng), b(rng)};
    const auto ph = physical_for(np);
    ContinuousState cs;
    try {
      cs = start_state(ph, DiscreteState{p(rng), u(rng)});
    } catch (const std::domain_error&) {
      continue;
    }
    SimulateOptions so;
    so.horizon_events = 300;
    const auto log = simulate(cs, ph, so);
    const auto again = simulate(cs, ph, so);
    ASSERT_EQ(log.events.size(), again.events.size());
    for (std::size_t k = 0; k < log.events.size(); ++k) {
      // Determinism: bit-identical logs.
      EXPECT_EQ(log.events[k].time, again.events[k].time);
      EXPECT_EQ(log.events[k].v_c, again.events[k].v_c);
    }
    for (std::size_t k = 1; k < log.events.size(); ++k) {
      const auto& e0 = log.events[k - 1];
      const auto& e1 = log.events[k];
      EXPECT_GE(e1.time, e0.time);
      // Charge conservation with the current held between the two events.
      const double dt = e1.time - e0.time;
      const double i = pump_current(e0.pfd_after, ph);
      EXPECT_NEAR(e1.v_c - e0.v_c, i * dt / ph.capacitance_farads,
                  1e-9 * (1.0 + std::abs(e1.v_c)));
      // The PFD state only changes at events.
      EXPECT_EQ(e1.pfd_before, e0.pfd_after);
      // Sign law: +I_p starts at a reference edge, -I_p at a VCO edge.
      if (e1.pfd_before == Pfd::Zero && e1.pfd_after == Pfd::Plus) EXPECT_EQ(e1.kind, EventKind::RefEdge);
      if (e1.pfd_before == Pfd::Zero && e1.pfd_after == Pfd::Minus) EXPECT_EQ(e1.kind, EventKind::VcoEdge);
      if (e1.kind != EventKind::OverloadOnset) EXPECT_GT(e1.omega_vco, 0.0);
    }
  }
}

TEST(Simulate, TextbookSetReachesOverloadOnset) {
  const PhysicalParameters ph{0.2, 0.01, 20.0, 0.1, 0.125, 8.0};
  const auto log = simulate(start_state(ph, 0.0125, 1.0), ph);
  EXPECT_EQ(log.stop, StopReason::Overload);
  EXPECT_EQ(log.events.back().kind, EventKind::OverloadOnset);
  for (const auto& e : log.events) EXPECT_TRUE(std::isfinite(e.time) && std::isfinite(e.v_c));
}

TEST(Simulate, PeriodThreePattern) {
  const NormalizedParameters np{0.2, 1.6};
  const auto ph = physical_for(np);
  SimulateOptions so;
  so.horizon_events = 3000;
  const auto log = simulate(start_state(ph, DiscreteState{0.02, 0.36}), ph, so);
  ASSERT_EQ(log.stop, StopReason::Horizon);
  const auto ds = extract_discrete(log, ph);
  ASSERT_GT(ds.size(), 300u);
  // The tail repeats with period 3 and visits the closed-form orbit.
  const std::vector<DiscreteState> orbit = {{0.0, 1.0 / 3.0}, {-0.25, -7.0 / 15.0}, {0.25, 1.0 / 3.0}};
  for (std::size_t k = ds.size() - 30; k < ds.size(); ++k) {
    double best = 1e9;
    for (const auto& o : orbit) best = std::min(best, std::max(std::abs(ds[k].p - o.p), std::abs(ds[k].u - o.u)));
    EXPECT_LT(best, 1e-6) << k;
  }
}

TEST(Simulate, LocalOverloadAcrossAlphaOne) {
  // Small negative pulse at matched frequency; near lock the overload
  // depends only on alpha.
  for (const double alpha : {0.9, 1.1}) {
    const auto ph = physical_for({alpha, 1.0});
    SimulateOptions so;
    so.horizon_events = 400;
    const auto log = simulate(start_state(ph, DiscreteState{-1e-3, 0.0}), ph, so);
    if (alpha < 1.0) {
      EXPECT_NE(log.stop, StopReason::Overload);
    } else {
      EXPECT_EQ(log.stop, StopReason::Overload);
    }
  }
}

TEST(Extract, MatchesDiscreteMap) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> a(0.05, 0.95), b(0.1, 1.9), p(-0.5, 0.5), u(-0.4, 1.0);
  int compared = 0;
  for (int trial = 0; trial < 60; ++trial) {
    const NormalizedParameters np{a(rng), b(rng)};
    const auto ph = physical_for(np);
    const DiscreteState s0{p(rng), u(rng)};
    IterateOptions io;
    io.max_steps = 100;
    io.lock_tolerance = 1e-300;
    const auto t = iterate(s0, normalize(ph), io);
    if (t.termination == Termination::Overloaded) continue;
    ContinuousState cs;
    try {
      cs = start_state(ph, s0);
    } catch (const std::domain_error&) {
      continue;
    }
    SimulateOptions so;
    so.horizon_events = 1000;
    const auto ds = extract_discrete(simulate(cs, ph, so), ph);
    ASSERT_GE(ds.size(), t.states.size());
    for (std::size_t k = 0; k < t.states.size(); ++k) {
      ASSERT_NEAR(ds[k].p, t.states[k].p, 1e-9) << trial << " step " << k;
      ASSERT_NEAR(ds[k].u, t.states[k].u, 1e-9) << trial << " step " << k;
    }
    ++compared;
  }
  EXPECT_GE(compared, 30);
}

TEST(Extract, OverloadPredicateAgreesWithOracleOnGrid) {
  // The first map step overloads iff the continuous run hits zero VCO
  // frequency during the second pulse.
  std::size_t checked = 0, overloads = 0;
  for (const NormalizedParameters np : {NormalizedParameters{0.3, 0.6}, NormalizedParameters{0.8, 1.2},
                                        NormalizedParameters{0.5, 0.25}, NormalizedParameters{0.1, 1.9}}) {
    const auto ph = physical_for(np);
    const auto npx = normalize(ph);
    for (int i = 0; i < 50; ++i)
      for (int j = 0; j < 50; ++j) {
        const DiscreteState s{-0.98 + 1.96 * i / 49.0, -0.9 + 2.9 * j / 49.0};
        ContinuousState cs;
        try {
          cs = start_state(ph, s);
        } catch (const std::domain_error&) {
          continue;
        }
        SimulateOptions so;
        so.horizon_events = 64;
        const auto log = simulate(cs, ph, so);
        if (log.pulses.empty()) continue;  // overloaded inside the given first pulse
        const auto r = step(s, npx);
        const bool map_overload = r.overload != OverloadStatus::None;
        const bool oracle_overload = log.stop == StopReason::Overload && log.pulses.size() == 1;
        // Skip states within rounding of the predicate boundary.
        if (r.next && std::abs((s.u + 1.0) + 2.0 * npx.beta * r.next->p - npx.alpha) < 1e-9) continue;
        EXPECT_EQ(map_overload, oracle_overload) << np.alpha << "," << np.beta << " at (" << s.p << "," << s.u << ")";
        ++checked;
        overloads += map_overload;
      }
  }
  EXPECT_GT(checked, 5000u);
  EXPECT_GT(overloads, 100u);
}
