// Event-driven simulator of the continuous-time CP-PLL. Between PFD events
// the capacitor voltage is affine in t and the VCO phase is quadratic, so
// every event time is solved in closed form.
#pragma once

#include <cstddef>
#include <string_view>
#include <vector>

#include "cppll/model.hpp"

namespace cppll::oracle {

enum class Pfd { Minus, Zero, Plus };

enum class EventKind { RefEdge, VcoEdge, BothEdges, PfdToZero, OverloadOnset };

std::string_view to_string(Pfd p);
std::string_view to_string(EventKind k);

struct ContinuousState {
  double t_seconds = 0.0;
  double v_c_volts = 0.0;
  double theta_vco = 0.0;  // cycles; trailing edge at every integer
  double theta_ref = 0.0;  // cycles
  Pfd pfd = Pfd::Zero;
};

/// PFD reaction to a trailing edge. `edge` must be RefEdge, VcoEdge or
/// BothEdges.
Pfd pfd_transition(Pfd pfd, EventKind edge);

/// Charge-pump current for a PFD state.
double pump_current(Pfd pfd, const PhysicalParameters& phys);

/// Instantaneous VCO frequency (Hz) with the PFD state of `cs`.
double vco_frequency(const ContinuousState& cs, const PhysicalParameters& phys);

struct NextEvent {
  double time = 0.0;
  EventKind kind = EventKind::RefEdge;  // RefEdge, VcoEdge, BothEdges or OverloadOnset
};

/// Earliest event after cs.t with the PFD state held constant. Edges closer
/// than 1e-12 * T_ref are reported as BothEdges. OverloadOnset is returned
/// when the VCO frequency reaches zero before either edge.
NextEvent next_event(const ContinuousState& cs, const PhysicalParameters& phys);

/// Closed-form state at time cs.t + dt with constant PFD state.
ContinuousState advance(const ContinuousState& cs, const PhysicalParameters& phys, double dt);

/// One logged event. Values are taken right after the event; between two
/// events v_c and the VCO frequency are affine with slopes fixed by
/// pfd_after.
struct Event {
  double time = 0.0;
  EventKind kind = EventKind::RefEdge;
  Pfd pfd_before = Pfd::Zero;
  Pfd pfd_after = Pfd::Zero;
  double v_c = 0.0;
  double v_f = 0.0;
  double omega_vco = 0.0;
};

/// One completed PFD interval: signed pulse width and the filter output on
/// the following zero-current segment.
struct Pulse {
  double t_start = 0.0;
  double tau_seconds = 0.0;
  double v_volts = 0.0;
};

enum class StopReason { Horizon, Overload, Locked };
std::string_view to_string(StopReason r);

struct EventLog {
  std::vector<Event> events;
  std::vector<Pulse> pulses;
  ContinuousState final_state;
  StopReason stop = StopReason::Horizon;
};

struct SimulateOptions {
  std::size_t horizon_events = 1000;
  double lock_tolerance = 0.0;  // 0 disables the lock stop
  std::size_t lock_window = 8;
};

/// State at the first trailing edge t = 0, with the PFD already switched,
/// realizing a first pulse of signed width tau0 followed by filter output
/// v0 (the discrete pair (tau_0, v_0)). Throws std::domain_error when no
/// consistent phase assignment exists.
ContinuousState start_state(const PhysicalParameters& phys, double tau0_seconds, double v0_volts);

/// Same, from a normalized discrete state (p_0, u_0).
ContinuousState start_state(const PhysicalParameters& phys, const DiscreteState& s0);

/// Filter output v_k corresponding to a normalized frequency offset u_k,
/// and the inverse.
double voltage_from_u(const PhysicalParameters& phys, double u);
double u_from_voltage(const PhysicalParameters& phys, double v);

/// Runs from cs0 until the event horizon, an overload onset or lock.
/// A state at a trailing edge (as built by start_state) logs that edge as
/// its first event.
EventLog simulate(const ContinuousState& cs0, const PhysicalParameters& phys,
                  const SimulateOptions& opts = {});

/// Normalized (p_k, u_k) of every completed interval in the log.
std::vector<DiscreteState> extract_discrete(const EventLog& log, const PhysicalParameters& phys);

}  // namespace cppll::oracle
