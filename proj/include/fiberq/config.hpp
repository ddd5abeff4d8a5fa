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

// Scenario files.
//
// Line-oriented text: `[section]` headers, `key = value` pairs, `#` or `;`
// comments. Units are part of the key name (exposure_window_us, pdl_db).
// Every key is known in advance; unknown keys, duplicates and out-of-range
// values are reported with their line number.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "fiberq/channel.hpp"
#include "fiberq/errors.hpp"
#include "fiberq/instruments.hpp"
#include "fiberq/quantum.hpp"
#include "fiberq/stabilizer.hpp"

namespace fiberq {

enum class Protocol { PdlCharacterize, DriftCharacterize, Stabilize, DistributeEntanglement, IonPhoton, Teleport, DelayDrift };

inline const std::vector<std::pair<std::string, Protocol>> &protocol_names() {
    static const std::vector<std::pair<std::string, Protocol>> names{
        {"pdl-characterize", Protocol::PdlCharacterize},
        {"drift-characterize", Protocol::DriftCharacterize},
        {"stabilize", Protocol::Stabilize},
        {"distribute-entanglement", Protocol::DistributeEntanglement},
        {"ion-photon", Protocol::IonPhoton},
        {"teleport", Protocol::Teleport},
        {"delay-drift", Protocol::DelayDrift}};
    return names;
}

inline std::string protocol_name(Protocol p) {
    for (const auto &[n, v] : protocol_names())
        if (v == p) return n;
    return "?";
}

struct PdlScan {
    int points = 200;
    int inputs_first = 100;
    int inputs_second = 10;
    double detection_pdl_db = 0.23;
    double point_interval_s = 91.0;
    double power_noise_rel = 0.002;
};

struct DriftScan {
    double tau_step_s = 5.0;
    double tau_max_s = 240.0;
    bool after_stabilization = false;
    int fp_bins = 100;
    double fp_min = 0.9;
};

struct DutyScan {
    std::vector<double> intervals_s{5, 20, 60, 160};
    double basis_integration_s = 100.0;
    int sessions = 4;
    bool poisson = false;
    bool check_first = false;
};

struct TomographyScan {
    double integration_s = 100.0;
    bool poisson = true;
    int mc_resamples = 200;
    bool maximum_likelihood = false;
};

struct TeleportScan {
    bool sampled = false;
    int shots_per_setting = 20000;
};

struct DelayScan {
    double duration_h = 288.0;
    double sample_interval_s = 600.0;
    double temperature_mean_k = 283.15;
    double daily_amplitude_k = 4.0;
    double weather_walk_k_per_sqrt_h = 0.3;
    double measurement_noise_ps = 3.0;
};

struct Scenario {
    std::string name = "unnamed";
    Protocol protocol = Protocol::Stabilize;
    std::uint64_t seed = 1;
    int trials = 100;
    std::string output_dir;

    // channel
    DriftParams drift;
    double pdl_db = 0.0;
    Vec3 pdl_axis = Vec3::UnitX();
    PdlDynamics pdl_dynamics;
    BackgroundSource background;
    DelayDriftModel delay;
    AttenuationBudget budget = reference_link_budget();
    bool random_initial_rotation = true;

    // instruments
    Polarimeter polarimeter;
    PiezoController piezo;
    Detector detector = Detector::snspd();
    TimingModel timing;

    StabilizerConfig stabilizer;
    double transmit_window_s = 100.0;

    SpdcSource source{0.0, 144.4, 0.0};
    double singles_a_per_s = 0.0;
    double singles_b_per_s = 0.0;
    double coincidence_window_ns = 0.0;

    IonMemory ion;

    PdlScan pdl_scan;
    DriftScan drift_scan;
    DutyScan duty_scan;
    TomographyScan tomography;
    TeleportScan teleport;
    DelayScan delay_scan;

    double accidental_rate_per_s() const {
        return singles_a_per_s * singles_b_per_s * coincidence_window_ns * 1e-9;
    }
};

struct ConfigDiagnostic {
    int line = 0;  ///< 0 when the problem is not tied to one line
    std::string field;
    std::string message;

    std::string str() const {
        std::string s = line > 0 ? "line " + std::to_string(line) + ": " : std::string();
        if (!field.empty()) s += field + ": ";
        return s + message;
    }
};

class ConfigError : public Error {
  public:
    explicit ConfigError(std::vector<ConfigDiagnostic> d)
        : Error(ErrorCode::ConfigInvalid, summarize(d)), diags_(std::move(d)) {}
    const std::vector<ConfigDiagnostic> &diagnostics() const { return diags_; }

  private:
    static std::string summarize(const std::vector<ConfigDiagnostic> &d) {
        std::string s = "invalid scenario";
        for (const auto &x : d) s += "\n  " + x.str();
        return s;
    }
    std::vector<ConfigDiagnostic> diags_;
};

namespace detail {

inline std::string trim(const std::string &s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

struct Entry {
    std::string value;
    int line = 0;
};

using RawConfig = std::map<std::string, Entry>;  // "section.key"

inline RawConfig parse_raw(std::istream &is, std::vector<ConfigDiagnostic> &diags) {
    RawConfig raw;
    std::string line, section;
    int n = 0;
    while (std::getline(is, line)) {
        ++n;
        const auto c = line.find_first_of("#;");
        if (c != std::string::npos) line.erase(c);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']' || line.size() < 3) {
                diags.push_back({n, "", "malformed section header"});
                continue;
            }
            section = trim(line.substr(1, line.size() - 2));
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            diags.push_back({n, "", "expected 'key = value'"});
            continue;
        }
        const std::string key = trim(line.substr(0, eq)), value = trim(line.substr(eq + 1));
        if (section.empty()) {
            diags.push_back({n, key, "key outside of any [section]"});
            continue;
        }
        if (key.empty()) {
            diags.push_back({n, "", "empty key"});
            continue;
        }
        const std::string full = section + "." + key;
        if (raw.count(full)) {
            diags.push_back({n, full, "duplicate key (first on line " + std::to_string(raw[full].line) + ")"});
            continue;
        }
        raw[full] = {value, n};
    }
    return raw;
}

struct Range {
    double lo = -INFINITY;
    double hi = INFINITY;
    bool lo_open = false;
    bool hi_open = false;

    bool contains(double x) const {
        if (std::isnan(x)) return false;
        if (lo_open ? !(x > lo) : !(x >= lo)) return false;
        if (hi_open ? !(x < hi) : !(x <= hi)) return false;
        return true;
    }
    std::string str() const {
        auto num = [](double v) {
            std::ostringstream o;
            o << v;
            return o.str();
        };
        return std::string(lo_open ? "(" : "[") + num(lo) + ", " + num(hi) + (hi_open ? ")" : "]");
    }
};

inline Range non_negative() { return {0.0, INFINITY}; }
inline Range positive() { return {0.0, INFINITY, true}; }
inline Range unit_interval() { return {0.0, 1.0}; }

class Binder {
  public:
    Binder(const RawConfig &raw, std::vector<ConfigDiagnostic> &diags) : raw_(raw), diags_(diags) {}

    void number(const std::string &key, double &out, Range r = {}) {
        known_.push_back(key);
        const auto it = raw_.find(key);
        if (it == raw_.end()) return;
        double v;
        if (!parse_double(it->second.value, v)) {
            diags_.push_back({it->second.line, key, "not a number: '" + it->second.value + "'"});
            return;
        }
        if (!r.contains(v)) {
            diags_.push_back({it->second.line, key, "value " + it->second.value + " outside " + r.str()});
            return;
        }
        out = v;
    }

    void integer(const std::string &key, int &out, long lo, long hi) {
        known_.push_back(key);
        const auto it = raw_.find(key);
        if (it == raw_.end()) return;
        long v;
        if (!parse_long(it->second.value, v)) {
            diags_.push_back({it->second.line, key, "not an integer: '" + it->second.value + "'"});
            return;
        }
        if (v < lo || v > hi) {
            diags_.push_back({it->second.line, key,
                              "value " + it->second.value + " outside [" + std::to_string(lo) + ", " +
                                  std::to_string(hi) + "]"});
            return;
        }
        out = static_cast<int>(v);
    }

    void seed(const std::string &key, std::uint64_t &out) {
        known_.push_back(key);
        const auto it = raw_.find(key);
        if (it == raw_.end()) return;
        try {
            std::size_t pos = 0;
            const auto v = std::stoull(it->second.value, &pos);
            if (pos != it->second.value.size() || it->second.value.front() == '-') throw std::invalid_argument("");
            out = v;
        } catch (const std::exception &) {
            diags_.push_back({it->second.line, key, "not an unsigned 64-bit integer: '" + it->second.value + "'"});
        }
    }

    void boolean(const std::string &key, bool &out) {
        known_.push_back(key);
        const auto it = raw_.find(key);
        if (it == raw_.end()) return;
        const auto &v = it->second.value;
        if (v == "true" || v == "yes" || v == "1") out = true;
        else if (v == "false" || v == "no" || v == "0") out = false;
        else diags_.push_back({it->second.line, key, "expected true/false, got '" + v + "'"});
    }

    void text(const std::string &key, std::string &out) {
        known_.push_back(key);
        const auto it = raw_.find(key);
        if (it != raw_.end()) out = it->second.value;
    }

    template <class E>
    void choice(const std::string &key, E &out, const std::vector<std::pair<std::string, E>> &options) {
        known_.push_back(key);
        const auto it = raw_.find(key);
        if (it == raw_.end()) return;
        for (const auto &[name, v] : options)
            if (name == it->second.value) {
                out = v;
                return;
            }
        std::string list;
        for (const auto &o : options) list += (list.empty() ? "" : ", ") + o.first;
        diags_.push_back({it->second.line, key, "unknown value '" + it->second.value + "' (expected one of " + list + ")"});
    }

    void number_list(const std::string &key, std::vector<double> &out, Range r = {}) {
        known_.push_back(key);
        const auto it = raw_.find(key);
        if (it == raw_.end()) return;
        std::vector<double> v;
        std::stringstream ss(it->second.value);
        std::string item;
        while (std::getline(ss, item, ',')) {
            double x;
            if (!parse_double(trim(item), x) || !r.contains(x)) {
                diags_.push_back({it->second.line, key, "bad list element '" + trim(item) + "' (each in " + r.str() + ")"});
                return;
            }
            v.push_back(x);
        }
        if (v.empty()) {
            diags_.push_back({it->second.line, key, "empty list"});
            return;
        }
        out = v;
    }

    bool present(const std::string &key) const { return raw_.count(key) != 0; }
    int line_of(const std::string &key) const {
        const auto it = raw_.find(key);
        return it == raw_.end() ? 0 : it->second.line;
    }

    /// Marks every key of a free-form section as known.
    std::vector<std::pair<std::string, Entry>> section(const std::string &name) {
        std::vector<std::pair<std::string, Entry>> out;
        const std::string prefix = name + ".";
        for (const auto &[k, e] : raw_)
            if (k.compare(0, prefix.size(), prefix) == 0) {
                known_.push_back(k);
                out.emplace_back(k.substr(prefix.size()), e);
            }
        return out;
    }

    void report_unknown() {
        for (const auto &[k, e] : raw_)
            if (std::find(known_.begin(), known_.end(), k) == known_.end())
                diags_.push_back({e.line, k, "unknown key"});
    }

  private:
    static bool parse_double(const std::string &s, double &v) {
        if (s.empty()) return false;
        try {
            std::size_t pos = 0;
            v = std::stod(s, &pos);
            return pos == s.size() && std::isfinite(v);
        } catch (const std::exception &) {
            return false;
        }
    }
    static bool parse_long(const std::string &s, long &v) {
        if (s.empty()) return false;
        try {
            std::size_t pos = 0;
            v = std::stol(s, &pos);
            return pos == s.size();
        } catch (const std::exception &) {
            return false;
        }
    }

    const RawConfig &raw_;
    std::vector<ConfigDiagnostic> &diags_;
    std::vector<std::string> known_;
};

}  // namespace detail

/// Parses and range-checks a scenario. Returns all problems found; the
/// scenario is meaningful only when the list is empty.
inline std::vector<ConfigDiagnostic> parse_scenario(std::istream &is, Scenario &sc) {
    using namespace detail;
    std::vector<ConfigDiagnostic> diags;
    const RawConfig raw = parse_raw(is, diags);
    Binder b(raw, diags);

    b.text("scenario.name", sc.name);
    b.choice("scenario.protocol", sc.protocol, protocol_names());
    if (!b.present("scenario.protocol")) diags.push_back({0, "scenario.protocol", "required key missing"});
    b.seed("scenario.seed", sc.seed);
    b.integer("scenario.trials", sc.trials, 1, 1000000);
    b.text("scenario.output_dir", sc.output_dir);

    b.number("channel.drift_day_rad2_per_s", sc.drift.day_rate_rad2_per_s, non_negative());
    b.number("channel.drift_night_rad2_per_s", sc.drift.night_rate_rad2_per_s, non_negative());
    double day_start = sc.drift.schedule.day_start_h, day_end = sc.drift.schedule.day_end_h;
    b.number("channel.day_start_h", day_start, {0.0, 24.0});
    b.number("channel.day_end_h", day_end, {0.0, 24.0});
    sc.drift.schedule.day_start_h = day_start;
    sc.drift.schedule.day_end_h = day_end;
    if (!(day_start < day_end))
        diags.push_back({b.line_of("channel.day_end_h"), "channel.day_end_h", "day must end after it starts"});
    double start_h = sc.drift.start_clock_s / 3600.0;
    b.number("channel.start_clock_h", start_h, {0.0, 24.0, false, true});
    sc.drift.start_clock_s = start_h * 3600.0;
    b.number("channel.pdl_db", sc.pdl_db, non_negative());
    b.number("channel.pdl_axis_s1", sc.pdl_axis[0]);
    b.number("channel.pdl_axis_s2", sc.pdl_axis[1]);
    b.number("channel.pdl_axis_s3", sc.pdl_axis[2]);
    if (!(sc.pdl_axis.norm() > 0.0)) diags.push_back({0, "channel.pdl_axis_s1", "PDL axis must be nonzero"});
    b.number("channel.pdl_axis_rate_rad2_per_s", sc.pdl_dynamics.axis_rate_rad2_per_s, non_negative());
    b.number("channel.pdl_spike_rate_per_s", sc.pdl_dynamics.spike_rate_per_s, non_negative());
    b.number("channel.pdl_spike_db", sc.pdl_dynamics.spike_pdl_db, non_negative());
    b.number("channel.pdl_spike_duration_s", sc.pdl_dynamics.spike_duration_s, non_negative());
    b.number("channel.background_rate_per_s", sc.background.rate_per_s, non_negative());
    b.text("channel.background_filter", sc.background.filter_tag);
    b.number("channel.overhead_length_km", sc.delay.overhead_length_km, positive());
    b.number("channel.temperature_sensitivity_ps_per_km_k", sc.delay.sensitivity_ps_per_km_k, positive());
    b.number("channel.laser_frequency_hz", sc.delay.nu0_hz, positive());
    b.number("channel.counter_gate_s", sc.delay.t_gate_s, positive());
    b.boolean("channel.random_initial_rotation", sc.random_initial_rotation);

    // [budget]: free-form components, each `<label>_loss_db = value`.
    const auto budget = b.section("budget");
    if (!budget.empty()) {
        sc.budget.components.clear();
        for (const auto &[key, e] : budget) {
            const std::string suffix = "_loss_db";
            double v = 0.0;
            bool ok = key.size() > suffix.size() && key.compare(key.size() - suffix.size(), suffix.size(), suffix) == 0;
            if (!ok) {
                diags.push_back({e.line, "budget." + key, "budget keys must end in _loss_db"});
                continue;
            }
            try {
                std::size_t pos = 0;
                v = std::stod(e.value, &pos);
                ok = pos == e.value.size() && std::isfinite(v);
            } catch (const std::exception &) {
                ok = false;
            }
            if (!ok) diags.push_back({e.line, "budget." + key, "not a number: '" + e.value + "'"});
            else if (v < 0.0) diags.push_back({e.line, "budget." + key, "loss must be >= 0 dB, got " + e.value});
            else sc.budget.components.push_back({key.substr(0, key.size() - suffix.size()), v});
        }
    }

    b.number("instruments.polarimeter_sigma", sc.polarimeter.sigma, non_negative());
    b.number("instruments.polarimeter_latency_s", sc.polarimeter.latency_s, non_negative());
    double gain = sc.piezo.gains[0];
    b.number("instruments.piezo_gain_rad_per_v", gain, positive());
    sc.piezo.gains.setConstant(gain);
    double limit = sc.piezo.u_max;
    b.number("instruments.piezo_limit_v", limit, positive());
    sc.piezo.u_min = -limit;
    sc.piezo.u_max = limit;
    std::string det = "snspd";
    b.choice("instruments.detector", det, std::vector<std::pair<std::string, std::string>>{{"snspd", "snspd"}, {"apd", "apd"}});
    sc.detector = det == "apd" ? Detector::apd() : Detector::snspd();
    b.number("instruments.feedback_cycle_s", sc.timing.feedback_cycle_s, positive());
    b.number("instruments.iteration_overhead_s", sc.timing.iteration_overhead_s, non_negative());

    b.number("stabilizer.fp_threshold", sc.stabilizer.fp_threshold, {0.0, 1.0, true, false});
    b.number("stabilizer.fp_crossover", sc.stabilizer.fp_crossover, {0.0, 1.0, true, true});
    b.number("stabilizer.step0", sc.stabilizer.step0, positive());
    b.number("stabilizer.step1", sc.stabilizer.step1, positive());
    b.number("stabilizer.delta_u0_v", sc.stabilizer.delta_u0, positive());
    b.number("stabilizer.delta_u1_v", sc.stabilizer.delta_u1, positive());
    b.integer("stabilizer.max_iterations", sc.stabilizer.max_iterations, 0, 100000);
    b.number("stabilizer.transmit_window_s", sc.transmit_window_s, positive());
    if (sc.stabilizer.fp_crossover >= sc.stabilizer.fp_threshold)
        diags.push_back({b.line_of("stabilizer.fp_crossover"), "stabilizer.fp_crossover",
                         "must be below stabilizer.fp_threshold"});

    double phase_deg = sc.source.phase_rad * 180.0 / std::numbers::pi;
    b.number("source.phase_deg", phase_deg);
    sc.source.phase_rad = phase_deg * std::numbers::pi / 180.0;
    b.number("source.pair_rate_per_s", sc.source.pair_rate_per_s, non_negative());
    b.number("source.white_noise", sc.source.white_noise, unit_interval());
    b.number("source.singles_a_per_s", sc.singles_a_per_s, non_negative());
    b.number("source.singles_b_per_s", sc.singles_b_per_s, non_negative());
    b.number("source.coincidence_window_ns", sc.coincidence_window_ns, non_negative());

    double exposure_us = sc.ion.exposure_s * 1e6;
    b.number("ion.exposure_window_us", exposure_us, non_negative());
    sc.ion.exposure_s = exposure_us * 1e-6;
    b.number("ion.dephasing_rate_per_s", sc.ion.dephasing_rate_per_s, non_negative());

    auto &ps = sc.pdl_scan;
    b.integer("pdl.points", ps.points, 1, 1000000);
    b.integer("pdl.inputs_first", ps.inputs_first, 2, 100000);
    b.integer("pdl.inputs_second", ps.inputs_second, 1, 100000);
    b.number("pdl.detection_pdl_db", ps.detection_pdl_db, non_negative());
    b.number("pdl.point_interval_s", ps.point_interval_s, positive());
    b.number("pdl.power_noise_rel", ps.power_noise_rel, {0.0, 0.5});

    auto &ds = sc.drift_scan;
    b.number("drift.tau_step_s", ds.tau_step_s, positive());
    b.number("drift.tau_max_s", ds.tau_max_s, positive());
    b.boolean("drift.after_stabilization", ds.after_stabilization);
    b.integer("drift.fp_bins", ds.fp_bins, 1, 100000);
    b.number("drift.fp_min", ds.fp_min, {0.0, 1.0, false, true});
    if (ds.tau_max_s < ds.tau_step_s)
        diags.push_back({b.line_of("drift.tau_max_s"), "drift.tau_max_s", "must be at least drift.tau_step_s"});

    auto &du = sc.duty_scan;
    b.number_list("duty.intervals_s", du.intervals_s, positive());
    b.number("duty.basis_integration_s", du.basis_integration_s, positive());
    b.integer("duty.sessions", du.sessions, 1, 100000);
    b.boolean("duty.poisson", du.poisson);
    b.boolean("duty.check_first", du.check_first);

    auto &ts = sc.tomography;
    b.number("tomography.integration_s", ts.integration_s, positive());
    b.boolean("tomography.poisson", ts.poisson);
    b.integer("tomography.mc_resamples", ts.mc_resamples, 100, 1000000);
    b.boolean("tomography.maximum_likelihood", ts.maximum_likelihood);

    b.boolean("teleport.sampled", sc.teleport.sampled);
    b.integer("teleport.shots_per_setting", sc.teleport.shots_per_setting, 1, 100000000);

    auto &dl = sc.delay_scan;
    b.number("delay.duration_h", dl.duration_h, positive());
    b.number("delay.sample_interval_s", dl.sample_interval_s, positive());
    b.number("delay.temperature_mean_k", dl.temperature_mean_k, positive());
    b.number("delay.daily_amplitude_k", dl.daily_amplitude_k, non_negative());
    b.number("delay.weather_walk_k_per_sqrt_h", dl.weather_walk_k_per_sqrt_h, non_negative());
    b.number("delay.measurement_noise_ps", dl.measurement_noise_ps, non_negative());

    b.report_unknown();
    std::stable_sort(diags.begin(), diags.end(),
                     [](const ConfigDiagnostic &x, const ConfigDiagnostic &y) { return x.line < y.line; });
    return diags;
}

inline Scenario load_scenario(const std::string &path) {
    std::ifstream f(path);
    if (!f) throw ConfigError({{0, "", "cannot read scenario file " + path}});
    Scenario sc;
    auto diags = parse_scenario(f, sc);
    if (!diags.empty()) throw ConfigError(std::move(diags));
    return sc;
}

inline Scenario parse_scenario_text(const std::string &text) {
    std::istringstream is(text);
    Scenario sc;
    auto diags = parse_scenario(is, sc);
    if (!diags.empty()) throw ConfigError(std::move(diags));
    return sc;
}

}  // namespace fiberq
