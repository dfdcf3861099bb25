#include "cppll/oracle.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace cppll::oracle {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kCoincidence = 1e-12;  // fraction of T_ref

double next_integer(double theta) { return std::floor(theta) + 1.0; }

// Time for the phase to gain `r` cycles with frequency omega0 + slope * t,
// assuming the frequency stays positive until then. `r` > 0, omega0 > 0.
double phase_gain_time(double omega0, double slope, double r) {
  const double disc = omega0 * omega0 + 2.0 * slope * r;
  if (disc < 0.0) return kInf;
  return 2.0 * r / (omega0 + std::sqrt(disc));
}

}  // namespace

std::string_view to_string(Pfd p) {
  switch (p) {
    case Pfd::Minus: return "Minus";
    case Pfd::Zero: return "Zero";
    case Pfd::Plus: return "Plus";
  }
  return "?";
}

std::string_view to_string(EventKind k) {
  switch (k) {
    case EventKind::RefEdge: return "RefEdge";
    case EventKind::VcoEdge: return "VcoEdge";
    case EventKind::BothEdges: return "BothEdges";
    case EventKind::PfdToZero: return "PfdToZero";
    case EventKind::OverloadOnset: return "OverloadOnset";
  }
  return "?";
}

std::string_view to_string(StopReason r) {
  switch (r) {
    case StopReason::Horizon: return "Horizon";
    case StopReason::Overload: return "Overload";
    case StopReason::Locked: return "Locked";
  }
  return "?";
}

Pfd pfd_transition(Pfd pfd, EventKind edge) {
  switch (edge) {
    case EventKind::RefEdge:
      return pfd == Pfd::Minus ? Pfd::Zero : Pfd::Plus;
    case EventKind::VcoEdge:
      return pfd == Pfd::Plus ? Pfd::Zero : Pfd::Minus;
    case EventKind::BothEdges:
      return Pfd::Zero;
    default:
      throw std::invalid_argument("pfd_transition: not an edge event");
  }
}

double pump_current(Pfd pfd, const PhysicalParameters& phys) {
  switch (pfd) {
    case Pfd::Plus: return phys.pump_current_amps;
    case Pfd::Minus: return -phys.pump_current_amps;
    case Pfd::Zero: return 0.0;
  }
  return 0.0;
}

double vco_frequency(const ContinuousState& cs, const PhysicalParameters& phys) {
  const double i = pump_current(cs.pfd, phys);
  return phys.vco_free_hz + phys.vco_gain_hz_per_volt * (cs.v_c_volts + phys.resistance_ohms * i);
}

NextEvent next_event(const ContinuousState& cs, const PhysicalParameters& phys) {
  const double T = phys.ref_period_seconds;
  const double omega0 = vco_frequency(cs, phys);
  const double slope =
      phys.vco_gain_hz_per_volt * pump_current(cs.pfd, phys) / phys.capacitance_farads;

  if (omega0 <= 0.0) return {cs.t_seconds, EventKind::OverloadOnset};

  const double dt_ref = (next_integer(cs.theta_ref) - cs.theta_ref) * T;
  const double dt_vco = phase_gain_time(omega0, slope, next_integer(cs.theta_vco) - cs.theta_vco);
  const double dt_zero = slope < 0.0 ? omega0 / -slope : kInf;

  const double dt_edge = std::min(dt_ref, dt_vco);
  if (dt_zero <= dt_edge) return {cs.t_seconds + dt_zero, EventKind::OverloadOnset};

  EventKind kind;
  if (std::abs(dt_ref - dt_vco) <= kCoincidence * T) {
    kind = EventKind::BothEdges;
  } else {
    kind = dt_ref < dt_vco ? EventKind::RefEdge : EventKind::VcoEdge;
  }
  return {cs.t_seconds + dt_edge, kind};
}

ContinuousState advance(const ContinuousState& cs, const PhysicalParameters& phys, double dt) {
  const double i = pump_current(cs.pfd, phys);
  const double omega0 = vco_frequency(cs, phys);
  const double slope = phys.vco_gain_hz_per_volt * i / phys.capacitance_farads;
  ContinuousState out = cs;
  out.t_seconds += dt;
  out.v_c_volts += i / phys.capacitance_farads * dt;
  out.theta_vco += omega0 * dt + 0.5 * slope * dt * dt;
  out.theta_ref += dt / phys.ref_period_seconds;
  return out;
}

double voltage_from_u(const PhysicalParameters& phys, double u) {
  return ((u + 1.0) / phys.ref_period_seconds - phys.vco_free_hz) / phys.vco_gain_hz_per_volt;
}

double u_from_voltage(const PhysicalParameters& phys, double v) {
  return phys.ref_period_seconds * (phys.vco_free_hz + phys.vco_gain_hz_per_volt * v) - 1.0;
}

ContinuousState start_state(const PhysicalParameters& phys, double tau0, double v0) {
  phys.validate();
  const double T = phys.ref_period_seconds;
  const double ip = phys.pump_current_amps;
  ContinuousState cs;
  cs.v_c_volts = v0 - ip * tau0 / phys.capacitance_farads;
  if (tau0 > 0.0) {
    cs.pfd = Pfd::Plus;
    cs.theta_ref = 0.0;
    const double omega0 = vco_frequency(cs, phys);
    const double slope = phys.vco_gain_hz_per_volt * ip / phys.capacitance_farads;
    const double gain = omega0 * tau0 + 0.5 * slope * tau0 * tau0;
    if (!(gain > 0.0 && gain <= 1.0)) {
      throw std::domain_error("start_state: VCO phase gain over the first pulse must lie in (0, 1]");
    }
    cs.theta_vco = 1.0 - gain;
  } else if (tau0 < 0.0) {
    if (!(tau0 > -T)) throw std::domain_error("start_state: negative pulse longer than T_ref");
    cs.pfd = Pfd::Minus;
    cs.theta_vco = 0.0;
    cs.theta_ref = 1.0 + tau0 / T;
    // Another VCO edge inside the pulse would end a different interval.
    const double omega0 = vco_frequency(cs, phys);
    const double slope = -phys.vco_gain_hz_per_volt * ip / phys.capacitance_farads;
    const double gain = -omega0 * tau0 + 0.5 * slope * tau0 * tau0;
    if (!(gain < 1.0)) {
      throw std::domain_error("start_state: VCO phase gain over the first pulse must lie below 1");
    }
  } else {
    cs.pfd = Pfd::Zero;
  }
  return cs;
}

ContinuousState start_state(const PhysicalParameters& phys, const DiscreteState& s0) {
  return start_state(phys, s0.p * phys.ref_period_seconds, voltage_from_u(phys, s0.u));
}

EventLog simulate(const ContinuousState& cs0, const PhysicalParameters& phys,
                  const SimulateOptions& opts) {
  phys.validate();
  if (opts.horizon_events < 1) throw std::invalid_argument("horizon_events must be >= 1");
  const double T = phys.ref_period_seconds;

  EventLog log;
  ContinuousState cs = cs0;

  auto make_event = [&](EventKind kind, Pfd before) {
    const double vf = cs.v_c_volts + phys.resistance_ohms * pump_current(cs.pfd, phys);
    return Event{cs.t_seconds, kind, before, cs.pfd, cs.v_c_volts, vf, vco_frequency(cs, phys)};
  };

  bool in_pulse = false;
  double pulse_start = 0.0;
  double pulse_sign = 0.0;
  std::size_t in_lock = 0;

  // Returns true when the lock criterion is met.
  auto record_pulse = [&](double t_start, double tau) {
    log.pulses.push_back({t_start, tau, cs.v_c_volts});
    if (opts.lock_tolerance <= 0.0) return false;
    const double p = tau / T;
    const double u = u_from_voltage(phys, cs.v_c_volts);
    if (std::max(std::abs(p), std::abs(u)) < opts.lock_tolerance) {
      return ++in_lock >= opts.lock_window;
    }
    in_lock = 0;
    return false;
  };

  const bool at_ref_edge = cs.theta_ref == std::floor(cs.theta_ref);
  const bool at_vco_edge = cs.theta_vco == std::floor(cs.theta_vco);
  if (cs.pfd == Pfd::Plus) {
    log.events.push_back(make_event(EventKind::RefEdge, Pfd::Zero));
    in_pulse = true;
    pulse_start = cs.t_seconds;
    pulse_sign = 1.0;
  } else if (cs.pfd == Pfd::Minus) {
    log.events.push_back(make_event(EventKind::VcoEdge, Pfd::Zero));
    in_pulse = true;
    pulse_start = cs.t_seconds;
    pulse_sign = -1.0;
  } else if (at_ref_edge && at_vco_edge) {
    log.events.push_back(make_event(EventKind::BothEdges, Pfd::Zero));
    if (record_pulse(cs.t_seconds, 0.0)) {
      log.stop = StopReason::Locked;
      log.final_state = cs;
      return log;
    }
  }

  while (log.events.size() < opts.horizon_events) {
    const NextEvent ne = next_event(cs, phys);
    const double ref_target = next_integer(cs.theta_ref);
    const double vco_target = next_integer(cs.theta_vco);
    cs = advance(cs, phys, ne.time - cs.t_seconds);
    cs.t_seconds = ne.time;

    if (ne.kind == EventKind::OverloadOnset) {
      log.events.push_back(make_event(EventKind::OverloadOnset, cs.pfd));
      log.stop = StopReason::Overload;
      break;
    }
    if (ne.kind != EventKind::VcoEdge) cs.theta_ref = ref_target;
    if (ne.kind != EventKind::RefEdge) cs.theta_vco = vco_target;

    const Pfd before = cs.pfd;
    cs.pfd = pfd_transition(before, ne.kind);
    EventKind logged = ne.kind;
    if (before != Pfd::Zero && cs.pfd == Pfd::Zero && ne.kind != EventKind::BothEdges) {
      logged = EventKind::PfdToZero;
    }
    log.events.push_back(make_event(logged, before));

    bool locked = false;
    if (before == Pfd::Zero) {
      if (cs.pfd == Pfd::Zero) {
        locked = record_pulse(cs.t_seconds, 0.0);
      } else {
        in_pulse = true;
        pulse_start = cs.t_seconds;
        pulse_sign = cs.pfd == Pfd::Plus ? 1.0 : -1.0;
      }
    } else if (cs.pfd == Pfd::Zero && in_pulse) {
      in_pulse = false;
      locked = record_pulse(pulse_start, (cs.t_seconds - pulse_start) * pulse_sign);
    }
    if (locked) {
      log.stop = StopReason::Locked;
      break;
    }
  }
  log.final_state = cs;
  return log;
}

std::vector<DiscreteState> extract_discrete(const EventLog& log, const PhysicalParameters& phys) {
  std::vector<DiscreteState> out;
  out.reserve(log.pulses.size());
  for (const Pulse& pl : log.pulses) {
    out.push_back({pl.tau_seconds / phys.ref_period_seconds, u_from_voltage(phys, pl.v_volts)});
  }
  return out;
}

}  // namespace cppll::oracle
