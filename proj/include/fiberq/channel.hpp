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

// Time-dependent model of a deployed fiber link: polarization drift,
// polarization-dependent loss, static attenuation budget, background counts,
// and propagation-delay drift.

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "fiberq/errors.hpp"
#include "fiberq/polcore.hpp"
#include "fiberq/rng.hpp"

namespace fiberq {

inline constexpr double kSecondsPerDay = 86400.0;

/// Daytime window on the local clock, in hours.
struct DaySchedule {
    double day_start_h = 7.5;
    double day_end_h = 18.0;

    bool is_day(double clock_s) const {
        double h = std::fmod(clock_s, kSecondsPerDay);
        if (h < 0) h += kSecondsPerDay;
        h /= 3600.0;
        return h >= day_start_h && h < day_end_h;
    }

    /// Next day/night boundary strictly after clock_s.
    double next_boundary(double clock_s) const {
        const double day = std::floor(clock_s / kSecondsPerDay) * kSecondsPerDay;
        for (int k = 0; k < 3; ++k) {
            for (double h : {day_start_h, day_end_h}) {
                const double b = day + k * kSecondsPerDay + h * 3600.0;
                if (b > clock_s) return b;
            }
        }
        return clock_s + kSecondsPerDay;
    }
};

struct DriftParams {
    double day_rate_rad2_per_s = 3e-4;
    double night_rate_rad2_per_s = 4e-5;
    DaySchedule schedule;
    double start_clock_s = 0.0;  ///< local time of day at t = 0
};

/// Isotropic angular random walk on SO(3) with a piecewise-constant
/// diffusion rate. Each step left-multiplies a small rotation with an axis
/// uniform on the sphere and angle ~ Normal(0, sqrt(2 * integral of rate)).
class DriftProcess {
  public:
    DriftProcess() : DriftProcess(DriftParams{}, PolRotation{}, 0) {}

    DriftProcess(const DriftParams &params, const PolRotation &initial, std::uint64_t seed)
        : params_(params), rotation_(initial), rng_(seed) {
        if (!(params.day_rate_rad2_per_s >= 0.0) || !(params.night_rate_rad2_per_s >= 0.0))
            throw Error(ErrorCode::InvalidArgument, "diffusion rates must be non-negative");
    }

    const DriftParams &params() const { return params_; }
    const PolRotation &rotation() const { return rotation_; }
    void set_rotation(const PolRotation &r) { rotation_ = r; }
    double elapsed() const { return t_; }
    double clock() const { return params_.start_clock_s + t_; }
    bool is_day() const { return params_.schedule.is_day(clock()); }

    double rate_at_clock(double clock_s) const {
        return params_.schedule.is_day(clock_s) ? params_.day_rate_rad2_per_s : params_.night_rate_rad2_per_s;
    }

    /// Angle variance 2 * integral(rate) accumulated over [clock, clock + dt].
    double angle_variance(double dt) const {
        double c = clock();
        const double end = c + dt;
        double var = 0.0;
        while (c < end) {
            const double next = std::min(end, params_.schedule.next_boundary(c));
            var += 2.0 * rate_at_clock(c) * (next - c);
            c = next;
        }
        return var;
    }

    /// One random increment over dt.
    void step(double dt) {
        if (!(dt > 0.0)) throw Error(ErrorCode::InvalidArgument, "drift step requires dt > 0");
        const double var = angle_variance(dt);
        t_ += dt;
        if (var == 0.0) return;
        std::normal_distribution<double> normal(0.0, 1.0);
        Vec3 axis(normal(rng_), normal(rng_), normal(rng_));
        while (axis.norm() < 1e-12) axis = Vec3(normal(rng_), normal(rng_), normal(rng_));
        const double angle = std::sqrt(var) * normal(rng_);
        rotation_ = PolRotation::axis_angle(axis, angle) * rotation_;
    }

    /// Advances by `duration` in increments no longer than max_step.
    void advance(double duration, double max_step = 1.0) {
        if (duration <= 0.0) return;
        const auto n = static_cast<long>(std::ceil(duration / max_step - 1e-9));
        const double dt = duration / static_cast<double>(std::max(1L, n));
        for (long i = 0; i < std::max(1L, n); ++i) step(dt);
    }

  private:
    DriftParams params_;
    PolRotation rotation_;
    Rng rng_;
    double t_ = 0.0;
};

/// Value-returning form of DriftProcess::step.
inline DriftProcess drift_step(DriftProcess state, double dt) {
    state.step(dt);
    return state;
}

struct AttenuationComponent {
    std::string label;
    double loss_db = 0.0;
};

struct AttenuationBudget {
    std::vector<AttenuationComponent> components;

    void add(std::string label, double loss_db) {
        if (!(loss_db >= 0.0)) throw Error(ErrorCode::InvalidArgument, "loss must be non-negative: " + label);
        components.push_back({std::move(label), loss_db});
    }
};

inline double total_loss_db(const AttenuationBudget &budget) {
    if (budget.components.empty()) throw Error(ErrorCode::InvalidArgument, "empty attenuation budget");
    double total = 0.0;
    for (const auto &c : budget.components) {
        if (!(c.loss_db >= 0.0)) throw Error(ErrorCode::InvalidArgument, "negative loss: " + c.label);
        total += c.loss_db;
    }
    return total;
}

inline double db_to_transmission(double db) { return std::pow(10.0, -db / 10.0); }

/// Attenuation budget of the reference deployed link, in dB.
inline AttenuationBudget reference_link_budget() {
    AttenuationBudget b;
    b.add("qfc_and_lab_transfer", 6.78);
    b.add("link_q_fiber", 10.4);
    b.add("stabilization_sender", 0.46);
    b.add("stabilization_receiver", 1.3);
    b.add("filter_and_projection", 0.65);
    b.add("detector_efficiency", 0.97);
    b.add("residual_connections", 2.17);
    return b;
}

struct BackgroundSource {
    double rate_per_s = 19.7;
    std::string filter_tag = "250MHz";
};

template <class Generator>
std::uint64_t sample_background(const BackgroundSource &bg, double window_s, Generator &rng) {
    if (!(window_s > 0.0)) throw Error(ErrorCode::InvalidArgument, "window must be positive");
    if (!(bg.rate_per_s >= 0.0)) throw Error(ErrorCode::InvalidArgument, "background rate must be >= 0");
    const double mean = bg.rate_per_s * window_s;
    if (mean == 0.0) return 0;
    std::poisson_distribution<std::uint64_t> dist(mean);
    return dist(rng);
}

struct DelayDriftModel {
    double overhead_length_km = 1.278;           ///< one-way; loop geometry doubles it
    double sensitivity_ps_per_km_k = 37.4;
    double nu0_hz = 1.9986e14;
    double t_gate_s = 0.01;
};

inline void check_delay_model(const DelayDriftModel &m) {
    if (!(m.overhead_length_km > 0 && m.sensitivity_ps_per_km_k > 0 && m.nu0_hz > 0 && m.t_gate_s > 0))
        throw Error(ErrorCode::InvalidArgument, "delay model fields must be positive");
}

/// Delay accumulated during one counter gate for a Doppler shift delta_nu_d:
/// dT = delta_nu_d / (2 nu0) * t_gate.
inline double doppler_delay_step(const DelayDriftModel &m, double delta_nu_d_hz) {
    check_delay_model(m);
    return delta_nu_d_hz / (2.0 * m.nu0_hz) * m.t_gate_s;
}

struct TimedValue {
    double t_s = 0.0;
    double value = 0.0;
};

/// Delay drift (ps) predicted from a temperature series (K) through the
/// doubled overhead section: sensitivity * 2 L * (T(t) - T(0)).
inline std::vector<TimedValue> temperature_delay_prediction(const DelayDriftModel &m,
                                                            const std::vector<TimedValue> &temps) {
    check_delay_model(m);
    if (temps.empty()) throw Error(ErrorCode::EmptySeries, "temperature series is empty");
    for (std::size_t i = 1; i < temps.size(); ++i)
        if (!(temps[i].t_s >= temps[i - 1].t_s))
            throw Error(ErrorCode::InvalidArgument, "timestamps must be monotone");
    const double k = m.sensitivity_ps_per_km_k * 2.0 * m.overhead_length_km;
    std::vector<TimedValue> out;
    out.reserve(temps.size());
    for (const auto &p : temps) out.push_back({p.t_s, k * (p.value - temps.front().value)});
    return out;
}

/// Optional PDL dynamics: slow axis diffusion and Poisson-triggered spikes
/// that temporarily raise the PDL.
struct PdlDynamics {
    double axis_rate_rad2_per_s = 0.0;
    double spike_rate_per_s = 0.0;
    double spike_pdl_db = 0.5;
    double spike_duration_s = 60.0;
};

/// The complete link. Advance and transmit calls on one instance must be
/// serialized; independent instances are independent timelines.
class ChannelState {
  public:
    ChannelState() = default;

    ChannelState(DriftProcess drift, PdlElement pdl, std::uint64_t pdl_seed = 0)
        : drift_(std::move(drift)), pdl_(pdl), pdl_rng_(pdl_seed) {}

    DriftProcess &drift() { return drift_; }
    const DriftProcess &drift() const { return drift_; }
    const PolRotation &rotation() const { return drift_.rotation(); }

    const PdlElement &base_pdl() const { return pdl_; }
    void set_pdl(const PdlElement &p) { pdl_ = p; }
    PdlDynamics &pdl_dynamics() { return dyn_; }
    const PdlDynamics &pdl_dynamics() const { return dyn_; }

    /// PDL element in effect now (spike-raised if a spike is active).
    PdlElement current_pdl() const {
        if (spike_left_s_ > 0.0 && dyn_.spike_pdl_db > pdl_.db())
            return PdlElement::from_db(pdl_.pass_axis(), dyn_.spike_pdl_db);
        return pdl_;
    }

    bool spike_active() const { return spike_left_s_ > 0.0; }

    AttenuationBudget budget = reference_link_budget();
    BackgroundSource background;
    DelayDriftModel delay;

    double elapsed() const { return drift_.elapsed(); }

    void advance(double duration, double max_step = 1.0) {
        if (duration <= 0.0) return;
        const auto n = static_cast<long>(std::max(1.0, std::ceil(duration / max_step - 1e-9)));
        const double dt = duration / static_cast<double>(n);
        for (long i = 0; i < n; ++i) {
            drift_.step(dt);
            step_pdl(dt);
        }
    }

  private:
    void step_pdl(double dt) {
        if (dyn_.axis_rate_rad2_per_s > 0.0) {
            std::normal_distribution<double> normal(0.0, 1.0);
            Vec3 w(normal(pdl_rng_), normal(pdl_rng_), normal(pdl_rng_));
            w *= std::sqrt(2.0 * dyn_.axis_rate_rad2_per_s * dt / 3.0);
            const Vec3 axis = PolRotation::from_rotation_vector(w).matrix() * pdl_.pass_axis();
            pdl_ = PdlElement(axis, pdl_.amplitude_transmission());
        }
        spike_left_s_ = std::max(0.0, spike_left_s_ - dt);
        if (dyn_.spike_rate_per_s > 0.0) {
            std::poisson_distribution<int> events(dyn_.spike_rate_per_s * dt);
            if (events(pdl_rng_) > 0) spike_left_s_ = dyn_.spike_duration_s;
        }
    }

    DriftProcess drift_;
    PdlElement pdl_;
    PdlDynamics dyn_;
    Rng pdl_rng_{0};
    double spike_left_s_ = 0.0;
};

/// Probe polarization after the link: drift rotation, then PDL.
inline StokesVector transmit_probe(const ChannelState &ch, const StokesVector &s_in) {
    return pdl_apply_bloch(ch.rotation().apply(s_in), ch.current_pdl());
}

/// Single-qubit operator K = B U of the link (not trace preserving); the
/// post-selected map is rho -> K rho K^dag / tr(K rho K^dag).
inline Mat2c transmit_qubit_kraus(const ChannelState &ch) {
    return ch.current_pdl().operator_matrix() * ch.rotation().su2();
}

}  // namespace fiberq
