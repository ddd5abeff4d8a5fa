// Copyright 2026 The fiberq Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

// Closed-loop polarization stabilization: finite-difference gradient descent
// over the four piezo voltages with an adaptive step schedule, and
// duty-cycled operation against a drifting link.

#include <algorithm>
#include <cmath>
#include <functional>
#include <ostream>
#include <string>
#include <vector>

#include "fiberq/channel.hpp"
#include "fiberq/errors.hpp"
#include "fiberq/instruments.hpp"
#include "fiberq/polcore.hpp"

namespace fiberq {

struct StabilizerConfig {
    double fp_threshold = 0.99;   ///< F_P,th
    double fp_crossover = 0.95;   ///< F_P,0
    double step0 = 1.2;           ///< D_0
    double step1 = 0.1;           ///< D_1
    double delta_u0 = 0.2;        ///< Delta U_0, V
    double delta_u1 = 0.02;       ///< Delta U_1, V
    int max_iterations = 200;
};

inline void validate(const StabilizerConfig &c) {
    if (!(c.fp_crossover > 0.0 && c.fp_crossover < c.fp_threshold && c.fp_threshold <= 1.0))
        throw Error(ErrorCode::InvalidArgument, "require 0 < F_P,0 < F_P,th <= 1");
    if (!(c.step0 > 0 && c.step1 > 0 && c.delta_u0 > 0 && c.delta_u1 > 0))
        throw Error(ErrorCode::InvalidArgument, "step sizes must be positive");
    if (c.max_iterations < 0) throw Error(ErrorCode::InvalidArgument, "max_iterations must be >= 0");
}

struct StepParameters {
    double step = 0.0;     ///< D
    double delta_u = 0.0;  ///< Delta U
};

/// Step size and search voltage for the current fidelity: held at
/// (D_0, dU_0) below F_P,0, then scaled by (1 - F_P)/(1 - F_P,0) plus the
/// minimum values.
inline StepParameters adapt_parameters(const StabilizerConfig &cfg, double current_fp) {
    if (current_fp < cfg.fp_crossover) return {cfg.step0, cfg.delta_u0};
    const double s = (1.0 - current_fp) / (1.0 - cfg.fp_crossover);
    return {s * cfg.step0 + cfg.step1, s * cfg.delta_u0 + cfg.delta_u1};
}

/// Counts probe cycles and simulated time spent in the loop.
struct LoopClock {
    TimingModel timing;
    int evaluations = 0;
    double elapsed_s = 0.0;

    void cycle() {
        ++evaluations;
        elapsed_s += timing.feedback_cycle_s;
    }
    void overhead() { elapsed_s += timing.iteration_overhead_s; }
};

struct ProbeReadout {
    StokesVector s1;  ///< output for the H reference
    StokesVector s2;  ///< output for the D reference
};

/// Noise-free probe outputs after link and compensator.
inline ProbeReadout exact_probes(const ChannelState &ch, const PiezoController &piezo, const Voltages &u) {
    const PolRotation comp = piezo_rotation(piezo, u);
    return {comp.apply(transmit_probe(ch, reference_switch(ReferenceLaser::H))),
            comp.apply(transmit_probe(ch, reference_switch(ReferenceLaser::D)))};
}

/// Inject H then D, read both outputs with the polarimeter.
template <class Generator>
ProbeReadout measure_probes(const ChannelState &ch, const PiezoController &piezo, const Voltages &u,
                            const Polarimeter &pol, Generator &rng, LoopClock *clock = nullptr) {
    const ProbeReadout exact = exact_probes(ch, piezo, u);
    if (clock) clock->cycle();
    return {polarimeter_read(pol, exact.s1, rng), polarimeter_read(pol, exact.s2, rng)};
}

/// f = |S1 - S_H|^2 + |S2 - S_D|^2.
inline double error_from_probes(const ProbeReadout &r) {
    return (r.s1.v - StokesVector::H().v).squaredNorm() + (r.s2.v - StokesVector::D().v).squaredNorm();
}

/// Process fidelity from the same two probes (normalized before use).
inline double fidelity_from_probes(const ProbeReadout &r) {
    const double tr = trace_from_probe_pair(r.s1.normalized(), r.s2.normalized());
    return std::clamp(fidelity_from_trace(tr), 0.0, 1.0);
}

/// Process fidelity of link + compensator without measurement noise.
inline double compensated_fidelity(const ChannelState &ch, const PiezoController &piezo) {
    return fidelity_from_probes(exact_probes(ch, piezo, piezo.voltages));
}

/// Qubit operator of link + compensator, comp * B * U.
inline Mat2c compensated_kraus(const ChannelState &ch, const PiezoController &piezo) {
    return piezo_rotation(piezo).su2() * transmit_qubit_kraus(ch);
}

template <class Generator>
double error_function(const ChannelState &ch, const PiezoController &piezo, const Polarimeter &pol,
                      Generator &rng, LoopClock *clock = nullptr) {
    return error_from_probes(measure_probes(ch, piezo, piezo.voltages, pol, rng, clock));
}

/// (f(u - e_i du) - f(u + e_i du)) / (2 du) for any f over voltages.
template <class F>
double central_difference(F &&f, const Voltages &u, int i, double delta_u) {
    Voltages up = u, down = u;
    up[i] += delta_u;
    down[i] -= delta_u;
    return (f(down) - f(up)) / (2.0 * delta_u);
}

/// Finite-difference gradient vector
///   g_i = (f(U - e_i dU) - f(U + e_i dU)) / (2 dU),
/// i.e. minus the gradient of f: stepping along g lowers the error. A probe
/// that would leave the voltage range is replaced by a one-sided difference
/// against f(U).
template <class Generator>
Voltages gradient(const ChannelState &ch, const PiezoController &piezo, const Polarimeter &pol, double delta_u,
                  Generator &rng, LoopClock *clock = nullptr) {
    if (!(delta_u > 0.0)) throw Error(ErrorCode::InvalidArgument, "search voltage must be positive");
    const Voltages u = piezo.voltages;
    if (!piezo.in_range(u)) throw Error(ErrorCode::VoltageOutOfRange, "current voltages outside limits");
    auto f_at = [&](const Voltages &x) {
        return error_from_probes(measure_probes(ch, piezo, x, pol, rng, clock));
    };
    Voltages g = Voltages::Zero();
    double f_here = NAN;
    for (int i = 0; i < kPiezoChannels; ++i) {
        Voltages up = u, down = u;
        up[i] += delta_u;
        down[i] -= delta_u;
        const bool up_ok = piezo.in_range(up), down_ok = piezo.in_range(down);
        if (up_ok && down_ok) {
            g[i] = central_difference(f_at, u, i, delta_u);
            continue;
        }
        if (!up_ok && !down_ok)
            throw Error(ErrorCode::VoltageOutOfRange, "search voltage exceeds the controller range");
        if (std::isnan(f_here)) f_here = f_at(u);
        g[i] = up_ok ? (f_here - f_at(up)) / delta_u : (f_at(down) - f_here) / delta_u;
    }
    return g;
}

enum class StabilizerOutcome { Converged, MaxIterations };

struct IterationRecord {
    int iteration = 0;
    Voltages u = Voltages::Zero();
    double f = 0.0;
    double fp = 0.0;       ///< measured (probe-based) process fidelity
    double fp_true = 0.0;  ///< noise-free process fidelity
    double t_s = 0.0;      ///< simulated time since the run started
};

struct StabilizerRun {
    std::vector<IterationRecord> trace;
    StabilizerOutcome outcome = StabilizerOutcome::MaxIterations;
    int iterations = 0;
    int evaluations = 0;
    int wraps = 0;
    int clamps = 0;
    double duration_s = 0.0;

    bool converged() const { return outcome == StabilizerOutcome::Converged; }
    double final_fp() const { return trace.empty() ? 0.0 : trace.back().fp; }
    double final_fp_true() const { return trace.empty() ? 0.0 : trace.back().fp_true; }
};

/// Keep voltages inside the controller range. A channel that leaves the
/// range is moved by one full turn (same rotation); if that is not enough
/// it is clamped.
inline Voltages unwind_voltages(const PiezoController &piezo, Voltages u, int *wraps, int *clamps) {
    for (int i = 0; i < kPiezoChannels; ++i) {
        if (u[i] >= piezo.u_min && u[i] <= piezo.u_max) continue;
        const double turn = piezo.full_turn_voltage(i);
        const double moved = u[i] > piezo.u_max ? u[i] - turn : u[i] + turn;
        if (moved >= piezo.u_min && moved <= piezo.u_max) {
            u[i] = moved;
            if (wraps) ++*wraps;
        } else {
            u[i] = std::clamp(u[i], piezo.u_min, piezo.u_max);
            if (clamps) ++*clamps;
        }
    }
    return u;
}

/// Gradient descent until the probe-based F_P reaches F_P,th. The link is
/// treated as static for the duration of the run; the controller keeps the
/// final voltages.
template <class Generator>
StabilizerRun stabilize(const ChannelState &ch, PiezoController &piezo, const Polarimeter &pol,
                        const StabilizerConfig &cfg, Generator &rng, const TimingModel &timing = {}) {
    validate(cfg);
    check_piezo(piezo);
    LoopClock clock{timing};
    StabilizerRun run;

    auto record = [&](int it, const ProbeReadout &r) {
        IterationRecord rec;
        rec.iteration = it;
        rec.u = piezo.voltages;
        rec.f = error_from_probes(r);
        rec.fp = fidelity_from_probes(r);
        rec.fp_true = compensated_fidelity(ch, piezo);
        rec.t_s = clock.elapsed_s;
        run.trace.push_back(rec);
        return rec.fp;
    };

    double fp = record(0, measure_probes(ch, piezo, piezo.voltages, pol, rng, &clock));
    StepParameters sp = adapt_parameters(cfg, fp);
    int it = 0;
    while (fp < cfg.fp_threshold && it < cfg.max_iterations) {
        ++it;
        const Voltages g = gradient(ch, piezo, pol, sp.delta_u, rng, &clock);
        // g already points downhill (see gradient()), so the update moves along it.
        piezo.voltages = unwind_voltages(piezo, piezo.voltages + sp.step * g, &run.wraps, &run.clamps);
        clock.overhead();
        fp = record(it, measure_probes(ch, piezo, piezo.voltages, pol, rng, &clock));
        sp = adapt_parameters(cfg, fp);
    }
    run.iterations = it;
    run.outcome = fp >= cfg.fp_threshold ? StabilizerOutcome::Converged : StabilizerOutcome::MaxIterations;
    run.evaluations = clock.evaluations;
    run.duration_s = clock.elapsed_s;
    return run;
}

inline void write_trace_csv_header(std::ostream &os) {
    os << "run,iteration,u1_v,u2_v,u3_v,u4_v,f,fp,fp_true,t_s\n";
}

inline void write_trace_csv(std::ostream &os, const StabilizerRun &run, int run_index = 0) {
    char buf[512];
    for (const auto &r : run.trace) {
        std::snprintf(buf, sizeof buf, "%d,%d,%.9f,%.9f,%.9f,%.9f,%.9e,%.9f,%.9f,%.3f\n", run_index, r.iteration,
                      r.u[0], r.u[1], r.u[2], r.u[3], r.f, r.fp, r.fp_true, r.t_s);
        os << buf;
    }
}

// ---------------------------------------------------------------------------
// Duty-cycled operation

enum class StabilizationPolicy {
    Scheduled,   ///< run the stabilizer at every window boundary
    CheckFirst,  ///< measure F_P at the boundary, stabilize only below the trigger
};

struct DutyCycleConfig {
    double transmit_window_s = 100.0;
    double total_s = 3600.0;
    StabilizationPolicy policy = StabilizationPolicy::CheckFirst;
    double retrigger_fp = 0.99;
    double max_drift_step_s = 1.0;
    double transmit_budget_s = 0.0;  ///< stop after this much transmit time; 0 = no limit
};

struct WindowRecord {
    double t_start_s = 0.0;
    double fp_start = 0.0;  ///< noise-free, at the start of the transmit window
    double fp_end = 0.0;    ///< noise-free, at the end of the transmit window
};

struct StabilizationEvent {
    double t_s = 0.0;
    bool ran = false;  ///< false if a boundary check found F_P above the trigger
    int iterations = 0;
    bool converged = false;
    double duration_s = 0.0;
    double fp_after = 0.0;
};

struct SessionLog {
    std::vector<WindowRecord> windows;
    std::vector<StabilizationEvent> events;
    double transmit_time_s = 0.0;
    double stabilization_time_s = 0.0;

    int stabilization_runs() const {
        return static_cast<int>(std::count_if(events.begin(), events.end(), [](const auto &e) { return e.ran; }));
    }
    double mean_stabilization_s() const {
        double sum = 0.0;
        int n = 0;
        for (const auto &e : events)
            if (e.ran) {
                sum += e.duration_s;
                ++n;
            }
        return n ? sum / n : 0.0;
    }
    /// Transmit window over mean stabilization duration.
    double duty_ratio(double transmit_window_s) const {
        const double m = mean_stabilization_s();
        return m > 0.0 ? transmit_window_s / m : INFINITY;
    }
};

/// Called for every drift sub-step inside a transmit window with the link,
/// the compensator, the session time at the start of the sub-step and its
/// length.
using TransmitObserver = std::function<void(const ChannelState &, const PiezoController &, double, double)>;

/// Alternates transmit windows and stabilization. The link drifts during
/// both; a stabilization run lets it drift for the run's simulated duration
/// afterwards.
template <class Generator>
SessionLog duty_cycle_run(ChannelState &ch, PiezoController &piezo, const Polarimeter &pol,
                          const StabilizerConfig &cfg, const DutyCycleConfig &dc, Generator &rng,
                          const TimingModel &timing = {}, const TransmitObserver &observer = {}) {
    if (!(dc.transmit_window_s > 0.0) || !(dc.total_s > 0.0))
        throw Error(ErrorCode::InvalidArgument, "windows must be positive");
    SessionLog log;
    double t = 0.0;

    auto run_stabilizer = [&](bool force) {
        StabilizationEvent ev;
        ev.t_s = t;
        bool go = force || dc.policy == StabilizationPolicy::Scheduled;
        if (!go) {
            LoopClock clock{timing};
            const double fp = fidelity_from_probes(measure_probes(ch, piezo, piezo.voltages, pol, rng, &clock));
            ch.advance(clock.elapsed_s, dc.max_drift_step_s);
            t += clock.elapsed_s;
            log.stabilization_time_s += clock.elapsed_s;
            go = fp < dc.retrigger_fp;
            ev.fp_after = fp;
        }
        if (go) {
            const StabilizerRun run = stabilize(ch, piezo, pol, cfg, rng, timing);
            ev.ran = true;
            ev.iterations = run.iterations;
            ev.converged = run.converged();
            ev.duration_s = run.duration_s;
            ev.fp_after = run.final_fp();
            ch.advance(run.duration_s, dc.max_drift_step_s);
            t += run.duration_s;
            log.stabilization_time_s += run.duration_s;
        }
        log.events.push_back(ev);
    };

    auto budget_left = [&] {
        return dc.transmit_budget_s > 0.0 ? dc.transmit_budget_s - log.transmit_time_s : INFINITY;
    };
    run_stabilizer(true);
    while (t < dc.total_s && budget_left() > 1e-9) {
        WindowRecord w;
        w.t_start_s = t;
        w.fp_start = compensated_fidelity(ch, piezo);
        const double window = std::min({dc.transmit_window_s, dc.total_s - t, budget_left()});
        const auto n = static_cast<long>(std::max(1.0, std::ceil(window / dc.max_drift_step_s - 1e-9)));
        const double dt = window / static_cast<double>(n);
        for (long k = 0; k < n; ++k) {
            if (observer) observer(ch, piezo, t, dt);
            ch.advance(dt, dt);
            t += dt;
        }
        w.fp_end = compensated_fidelity(ch, piezo);
        log.windows.push_back(w);
        log.transmit_time_s += window;
        if (t < dc.total_s && budget_left() > 1e-9) run_stabilizer(false);
    }
    return log;
}

}  // namespace fiberq
