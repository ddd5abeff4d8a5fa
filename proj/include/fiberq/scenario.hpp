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

// Protocol runners behind `fiberq run`. Each runner draws from labeled RNG
// streams under the scenario seed, writes its datasets into the output
// directory and returns a JSON summary. run_scenario adds manifest.json.

#include <algorithm>
#include <array>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <numbers>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fiberq/analysis.hpp"
#include "fiberq/channel.hpp"
#include "fiberq/config.hpp"
#include "fiberq/hash.hpp"
#include "fiberq/instruments.hpp"
#include "fiberq/io.hpp"
#include "fiberq/quantum.hpp"
#include "fiberq/rng.hpp"
#include "fiberq/stabilizer.hpp"
#include "fiberq/tomography.hpp"

#ifndef FIBERQ_VERSION
#define FIBERQ_VERSION "0.0.0"
#endif

namespace fiberq {

namespace fs = std::filesystem;

/// Files written by a runner, relative to the output directory.
class OutputSet {
  public:
    explicit OutputSet(fs::path dir) : dir_(std::move(dir)) { fs::create_directories(dir_); }

    std::ofstream open(const std::string &name) {
        std::ofstream f(dir_ / name, std::ios::binary | std::ios::trunc);
        if (!f) throw Error(ErrorCode::ProtocolFailed, "cannot write " + (dir_ / name).string());
        files_.push_back(name);
        return f;
    }

    void write_json(const std::string &name, const nlohmann::json &j) { open(name) << j.dump(2) << '\n'; }

    const fs::path &dir() const { return dir_; }
    const std::vector<std::string> &files() const { return files_; }

  private:
    fs::path dir_;
    std::vector<std::string> files_;
};

namespace detail {

inline ChannelState make_channel(const Scenario &sc, std::uint64_t seed) {
    Rng init = make_rng(seed, "initial");
    const PolRotation start = sc.random_initial_rotation ? random_rotation(init) : PolRotation::identity();
    ChannelState ch(DriftProcess(sc.drift, start, derive_seed(seed, "drift")),
                    PdlElement::from_db(sc.pdl_axis.normalized(), sc.pdl_db), derive_seed(seed, "pdl"));
    ch.pdl_dynamics() = sc.pdl_dynamics;
    ch.background = sc.background;
    ch.delay = sc.delay;
    ch.budget = sc.budget;
    return ch;
}

/// Roughly uniform points on the sphere (golden-angle spiral).
inline std::vector<StokesVector> sphere_points(int n) {
    std::vector<StokesVector> out;
    const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
    for (int k = 0; k < n; ++k) {
        const double z = 1.0 - 2.0 * (k + 0.5) / n;
        const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
        out.emplace_back(r * std::cos(golden * k), r * std::sin(golden * k), z);
    }
    return out;
}

inline MeanSd mean_se(const std::vector<double> &v) {
    MeanSd m = mean_sd(v);
    m.sd = v.size() > 1 ? m.sd / std::sqrt(static_cast<double>(v.size())) : 0.0;
    return m;
}

template <class Generator>
TomographyTable sample_or_expect(const TomographyTable &expected, bool poisson, Generator &rng) {
    return poisson ? poisson_resample(expected, rng) : expected;
}

}  // namespace detail

// ---------------------------------------------------------------------------

/// Scrambled PDL measurement of the loop-back link (Link-Q, Link-C and the
/// detection stage) and of the detection stage alone.
inline nlohmann::json run_pdl_characterize(const Scenario &sc, OutputSet &out) {
    const auto &p = sc.pdl_scan;
    Rng rng = make_rng(sc.seed, "pdl-characterize");
    const auto inputs = detail::sphere_points(p.inputs_first);
    std::vector<Mat2c> rho_in;
    for (const auto &s : inputs) rho_in.push_back(density_from_stokes(s));

    const PdlElement link_q = PdlElement::from_db(sc.pdl_axis.normalized(), sc.pdl_db);
    const PdlElement link_c = PdlElement::from_db(random_pure_stokes(rng).v, sc.pdl_db);
    const PdlElement det = PdlElement::from_db(random_pure_stokes(rng).v, p.detection_pdl_db);
    DriftProcess drift_q(sc.drift, random_rotation(rng), derive_seed(sc.seed, "pdl-drift-q"));
    DriftProcess drift_c(sc.drift, random_rotation(rng), derive_seed(sc.seed, "pdl-drift-c"));
    std::normal_distribution<double> noise(0.0, p.power_noise_rel);

    auto scrambled_pdl = [&](const auto &make_kraus) {
        double sum = 0.0;
        for (int j = 0; j < p.inputs_second; ++j) {
            const Mat2c k = make_kraus(random_rotation(rng).su2());
            double lo = INFINITY, hi = 0.0;
            for (const auto &r : rho_in) {
                const double pw = (k * r * k.adjoint()).trace().real() * (1.0 + noise(rng));
                lo = std::min(lo, pw);
                hi = std::max(hi, pw);
            }
            sum += pdl_db(hi, lo);
        }
        return sum / p.inputs_second;
    };

    std::vector<double> tot, dets;
    auto ts = out.open("pdl_timeseries.csv");
    ts << "point,t_s,l_tot_db,l_det_db\n";
    for (int k = 0; k < p.points; ++k) {
        if (k > 0) {
            drift_q.advance(p.point_interval_s, 1.0);
            drift_c.advance(p.point_interval_s, 1.0);
        }
        const Mat2c vq = drift_q.rotation().su2(), vc = drift_c.rotation().su2();
        const double lt = scrambled_pdl([&](const Mat2c &s2) {
            return Mat2c(det.operator_matrix() * link_c.operator_matrix() * vc * s2 * link_q.operator_matrix() * vq);
        });
        const double ld = scrambled_pdl([&](const Mat2c &s2) { return Mat2c(det.operator_matrix() * s2); });
        tot.push_back(lt);
        dets.push_back(ld);
        ts << k << ',' << csv_row({k * p.point_interval_s, lt, ld}) << '\n';
    }
    const auto est = pdl_statistics(tot, dets);
    const double hi = std::max(*std::max_element(tot.begin(), tot.end()), 0.01);
    { auto f = out.open("pdl_histogram_tot.csv"); write_histogram_csv(f, make_histogram(tot, 0.0, 1.2 * hi, 40), "l_tot"); }
    { auto f = out.open("pdl_histogram_det.csv"); write_histogram_csv(f, make_histogram(dets, 0.0, 1.2 * hi, 40), "l_det"); }
    const MeanSd mt = mean_sd(tot), md = mean_sd(dets);
    nlohmann::json s{{"l_tot_mean_db", mt.mean},
                     {"l_tot_sd_db", mt.sd},
                     {"l_det_mean_db", md.mean},
                     {"l_det_sd_db", md.sd},
                     {"single_fiber_pdl_db", est.mean_db},
                     {"single_fiber_sigma_db", est.sigma_db},
                     {"configured_pdl_db", sc.pdl_db},
                     {"fidelity_bound", pdl_fidelity_bound(amplitude_transmission_from_db(std::max(0.0, est.mean_db)))}};
    out.write_json("pdl_summary.json", s);
    return s;
}

/// Drift quantile surface, either from an unstabilized link starting at
/// identity or from the compensated link right after a stabilization run.
inline nlohmann::json run_drift_characterize(const Scenario &sc, OutputSet &out) {
    const auto &d = sc.drift_scan;
    std::vector<double> taus;
    for (int k = 1; k * d.tau_step_s <= d.tau_max_s + 1e-9; ++k) taus.push_back(k * d.tau_step_s);
    std::vector<DriftSample> samples;
    if (!d.after_stabilization) {
        Rng rng = make_rng(sc.seed, "drift-characterize");
        samples = free_drift_samples(sc.drift, taus, sc.trials, rng);
    } else {
        const std::uint64_t root = derive_seed(sc.seed, "drift-characterize");
        for (int t = 0; t < sc.trials; ++t) {
            const std::uint64_t ts = derive_seed(root, static_cast<std::uint64_t>(t));
            ChannelState ch = detail::make_channel(sc, ts);
            PiezoController pz = sc.piezo;
            Rng rng = make_rng(ts, "polarimeter");
            stabilize(ch, pz, sc.polarimeter, sc.stabilizer, rng, sc.timing);
            double now = 0.0;
            for (double tau : taus) {
                ch.advance(tau - now, 1.0);
                now = tau;
                samples.push_back({tau, compensated_fidelity(ch, pz)});
            }
        }
    }
    QuantileOptions opt;
    opt.fp_bins = d.fp_bins;
    opt.fp_min = d.fp_min;
    opt.levels = d.after_stabilization ? std::vector<double>{0.90, 0.99} : std::vector<double>{0.90, 0.99, 0.999};
    const auto surf = quantile_surface(samples, opt);
    {
        auto f = out.open("drift_quantiles.csv");
        write_quantile_curves_csv(f, surf);
    }
    {
        auto f = out.open("drift_incidence.csv");
        write_incidence_csv(f, surf);
    }

    nlohmann::json horizons = nlohmann::json::object();
    for (std::size_t k = 0; k < surf.levels.size(); ++k) {
        for (double th : {0.99, 0.98}) {
            double last = 0.0;
            for (std::size_t c = 0; c < surf.tau_s.size() && surf.curves[k][c] >= th; ++c) last = surf.tau_s[c];
            char key[48];
            std::snprintf(key, sizeof key, "q%g_above_%g_until_s", surf.levels[k] * 100, th);
            horizons[key] = last;
        }
    }
    nlohmann::json s{{"trials", sc.trials},
                     {"after_stabilization", d.after_stabilization},
                     {"horizons", horizons},
                     {"warnings", surf.warnings}};
    out.write_json("drift_summary.json", s);
    return s;
}

/// Stabilization of independent random static links.
inline nlohmann::json run_stabilize(const Scenario &sc, OutputSet &out) {
    const std::uint64_t root = derive_seed(sc.seed, "stabilize");
    auto trace = out.open("stabilizer_trace.csv");
    write_trace_csv_header(trace);
    auto runs = out.open("stabilizer_runs.csv");
    runs << "run,iterations,converged,final_fp,final_fp_true,duration_s,wraps,clamps\n";
    int converged = 0;
    std::vector<double> its, durs;
    for (int t = 0; t < sc.trials; ++t) {
        const std::uint64_t ts = derive_seed(root, static_cast<std::uint64_t>(t));
        ChannelState ch = detail::make_channel(sc, ts);
        PiezoController pz = sc.piezo;
        Rng rng = make_rng(ts, "polarimeter");
        const auto run = stabilize(ch, pz, sc.polarimeter, sc.stabilizer, rng, sc.timing);
        write_trace_csv(trace, run, t);
        runs << t << ',' << run.iterations << ',' << (run.converged() ? 1 : 0) << ','
             << csv_row({run.final_fp(), run.final_fp_true(), run.duration_s}) << ',' << run.wraps << ','
             << run.clamps << '\n';
        if (run.converged()) {
            ++converged;
            its.push_back(run.iterations);
            durs.push_back(run.duration_s);
        }
    }
    nlohmann::json s{{"trials", sc.trials}, {"converged", converged},
                     {"converged_fraction", static_cast<double>(converged) / sc.trials}};
    if (!durs.empty()) {
        const double md = mean_sd(durs).mean;
        s["mean_iterations"] = mean_sd(its).mean;
        s["mean_duration_s"] = md;
        s["transmit_window_s"] = sc.transmit_window_s;
        if (md > 0) s["duty_ratio"] = sc.transmit_window_s / md;
    }
    out.write_json("stabilizer_summary.json", s);
    return s;
}

/// One entanglement-distribution session: 16 tomography settings measured
/// back to back, with stabilization every `interval_s` of transmit time.
struct DutySession {
    TomographyTable counts;  ///< raw (accidentals included)
    double fidelity_raw = 0.0;
    double fidelity_corrected = 0.0;
    double fp_after_stabilization = 0.0;
    int stabilization_runs = 0;
    double mean_stabilization_s = 0.0;
};

inline DutySession run_duty_session(const Scenario &sc, double interval_s, std::uint64_t seed) {
    const auto &du = sc.duty_scan;
    ChannelState ch = detail::make_channel(sc, seed);
    PiezoController pz = sc.piezo;
    Rng rng = make_rng(seed, "polarimeter");
    const DensityMatrix2Q src = spdc_state(sc.source);
    std::array<Mat4c, 16> acc;
    acc.fill(Mat4c::Zero());
    const double basis_t = du.basis_integration_s;
    double transmitted = 0.0;
    auto observer = [&](const ChannelState &c, const PiezoController &p, double, double dt) {
        const Mat4c full = kron(Mat2c(Mat2c::Identity()), compensated_kraus(c, p));
        const auto k = std::min<std::size_t>(15, static_cast<std::size_t>((transmitted + 1e-9) / basis_t));
        acc[k] += dt * (full * src.matrix() * full.adjoint());
        transmitted += dt;
    };
    DutyCycleConfig dc;
    dc.transmit_window_s = interval_s;
    dc.total_s = 1e12;
    dc.policy = du.check_first ? StabilizationPolicy::CheckFirst : StabilizationPolicy::Scheduled;
    dc.retrigger_fp = sc.stabilizer.fp_threshold;
    dc.transmit_budget_s = 16.0 * basis_t;
    const SessionLog log = duty_cycle_run(ch, pz, sc.polarimeter, sc.stabilizer, dc, rng, sc.timing, observer);

    DutySession s;
    TomographyTable expected = standard_tomography_bases(basis_t);
    const double acc_rate = sc.accidental_rate_per_s();
    for (std::size_t k = 0; k < 16; ++k) {
        const double p = std::max(0.0, (record_projector(expected[k]) * acc[k]).trace().real());
        expected[k].counts = sc.source.pair_rate_per_s * p + acc_rate * basis_t;
    }
    Rng count_rng = make_rng(seed, "counts");
    s.counts = detail::sample_or_expect(expected, du.poisson, count_rng);
    const Vec4c target = spdc_ket(sc.source.phase_rad);
    TomographyOptions opt;
    opt.maximum_likelihood = sc.tomography.maximum_likelihood;
    s.fidelity_raw = tomography_2q(s.counts, opt).fidelity(target);
    s.fidelity_corrected =
        tomography_2q(background_correction(s.counts, sc.singles_a_per_s, sc.singles_b_per_s,
                                            sc.coincidence_window_ns * 1e-9),
                      opt)
            .fidelity(target);
    double fp = 0.0;
    int n = 0;
    for (const auto &e : log.events)
        if (e.ran) {
            fp += e.fp_after;
            ++n;
        }
    s.fp_after_stabilization = n ? fp / n : 0.0;
    s.stabilization_runs = log.stabilization_runs();
    s.mean_stabilization_s = log.mean_stabilization_s();
    return s;
}

inline nlohmann::json run_distribute_entanglement(const Scenario &sc, OutputSet &out) {
    const auto &du = sc.duty_scan;
    const std::uint64_t root = derive_seed(sc.seed, "distribute-entanglement");
    auto table = out.open("ppe_dutycycle.csv");
    table << "interval_s,sessions,fidelity_raw,fidelity_raw_se,fidelity_corrected,fidelity_corrected_se,"
             "fp_after_stabilization,stabilization_runs,mean_stabilization_s,duty_ratio\n";
    nlohmann::json rows = nlohmann::json::array();
    for (double interval : du.intervals_s) {
        std::vector<double> fr, fc, fp, nr, ms;
        for (int s = 0; s < du.sessions; ++s) {
            // Sessions share seeds across intervals (common random numbers).
            const auto d = run_duty_session(sc, interval, derive_seed(root, static_cast<std::uint64_t>(s)));
            fr.push_back(d.fidelity_raw);
            fc.push_back(d.fidelity_corrected);
            fp.push_back(d.fp_after_stabilization);
            nr.push_back(d.stabilization_runs);
            ms.push_back(d.mean_stabilization_s);
            if (s == 0) {
                char name[64];
                std::snprintf(name, sizeof name, "ppe_counts_%gs.csv", interval);
                auto f = out.open(name);
                write_tomography_csv(f, d.counts);
            }
        }
        const auto r = detail::mean_se(fr), c = detail::mean_se(fc);
        const double mean_stab = mean_sd(ms).mean;
        const double duty = mean_stab > 0 ? interval / mean_stab : 0.0;
        table << csv_row({interval, static_cast<double>(du.sessions), r.mean, r.sd, c.mean, c.sd, mean_sd(fp).mean,
                          mean_sd(nr).mean, mean_stab, duty})
              << '\n';
        rows.push_back({{"interval_s", interval},
                        {"fidelity_raw", r.mean},
                        {"fidelity_raw_se", r.sd},
                        {"fidelity_corrected", c.mean},
                        {"fidelity_corrected_se", c.sd},
                        {"fp_after_stabilization", mean_sd(fp).mean},
                        {"duty_ratio", duty}});
    }
    nlohmann::json s{{"sessions", du.sessions}, {"basis_integration_s", du.basis_integration_s}, {"intervals", rows}};
    out.write_json("ppe_summary.json", s);
    return s;
}

/// Link on arm B after one stabilization run (noise-free compensator state).
inline Mat2c stabilized_arm_operator(const Scenario &sc, std::uint64_t seed) {
    ChannelState ch = detail::make_channel(sc, seed);
    PiezoController pz = sc.piezo;
    Rng rng = make_rng(seed, "polarimeter");
    stabilize(ch, pz, sc.polarimeter, sc.stabilizer, rng, sc.timing);
    return compensated_kraus(ch, pz);
}

inline nlohmann::json run_ion_photon(const Scenario &sc, OutputSet &out) {
    const std::uint64_t root = derive_seed(sc.seed, "ion-photon");
    const auto arm = apply_operator_arm_b(spdc_state(sc.source), stabilized_arm_operator(sc, root));
    const DensityMatrix2Q rho = heralded_absorption(arm.rho, sc.ion);
    const auto &t = sc.tomography;
    const TomographyTable expected =
        expected_counts(rho, standard_tomography_bases(t.integration_s), sc.source.pair_rate_per_s * arm.success_prob,
                        sc.accidental_rate_per_s());
    Rng rng = make_rng(root, "counts");
    const TomographyTable counts = detail::sample_or_expect(expected, t.poisson, rng);
    {
        auto f = out.open("ion_photon_counts.csv");
        write_tomography_csv(f, counts);
    }
    TomographyOptions opt;
    opt.maximum_likelihood = t.maximum_likelihood;
    const TomographyTable corrected =
        background_correction(counts, sc.singles_a_per_s, sc.singles_b_per_s, sc.coincidence_window_ns * 1e-9);
    const auto raw_rho = tomography_2q(counts, opt);
    const auto cor_rho = tomography_2q(corrected, opt);
    Rng mc = make_rng(root, "mc");
    const auto unc = mc_uncertainty(counts, t.mc_resamples, ion_photon_target(), mc, opt);
    out.write_json("ion_photon_rho.json", {{"model", matrix_to_json(rho.matrix())},
                                           {"reconstructed", matrix_to_json(raw_rho.matrix())},
                                           {"reconstructed_corrected", matrix_to_json(cor_rho.matrix())}});
    nlohmann::json s{{"fidelity_model", rho.fidelity(ion_photon_target())},
                     {"fidelity_reconstructed", raw_rho.fidelity(ion_photon_target())},
                     {"fidelity_corrected", cor_rho.fidelity(ion_photon_target())},
                     {"fidelity_mc_mean", unc.mean_fidelity},
                     {"fidelity_mc_sigma", unc.sigma_fidelity},
                     {"degenerate", unc.degenerate},
                     {"arm_b_success", arm.success_prob},
                     {"ion_coherence", sc.ion.coherence()}};
    out.write_json("ion_photon_summary.json", s);
    return s;
}

inline nlohmann::json run_teleport(const Scenario &sc, OutputSet &out) {
    const std::uint64_t root = derive_seed(sc.seed, "teleport");
    const auto arm = apply_operator_arm_b(spdc_state(sc.source), stabilized_arm_operator(sc, root));
    const auto inputs = standard_process_inputs();
    const std::array<BsmHerald, 2> heralds{BsmHerald::PhiMinus, BsmHerald::PhiPlus};
    nlohmann::json s{{"mode", sc.teleport.sampled ? "sampled" : "exact"}, {"arm_b_success", arm.success_prob}};

    std::map<BsmHerald, ProcessMatrix> chi;
    if (!sc.teleport.sampled) {
        for (auto h : heralds) chi[h] = teleport_process(arm.rho, sc.ion, h);
        double p = 0.0;
        for (const auto &in : inputs)
            for (const auto &b : teleport_branches(in, arm.rho, sc.ion)) p += b.probability;
        s["herald_probability"] = p / static_cast<double>(inputs.size());
    } else {
        // counts[h][input][axis][port]
        std::map<BsmHerald, std::vector<std::array<std::array<double, 2>, 3>>> counts;
        for (auto h : heralds) counts[h].assign(inputs.size(), {});
        Rng rng = make_rng(root, "shots");
        std::uniform_real_distribution<double> u(0.0, 1.0);
        long heralded = 0, shots = 0;
        for (std::size_t j = 0; j < inputs.size(); ++j)
            for (int axis = 0; axis < 3; ++axis)
                for (int n = 0; n < sc.teleport.shots_per_setting; ++n) {
                    ++shots;
                    const auto ev = bsm_teleport(inputs[j], arm.rho, sc.ion, rng);
                    if (!ev.heralded) continue;
                    ++heralded;
                    const StokesVector sv = stokes_from_density(photon_to_logical(ev.photon));
                    const int port = u(rng) < 0.5 * (1.0 + sv[axis]) ? 0 : 1;
                    counts[ev.herald][j][static_cast<size_t>(axis)][static_cast<size_t>(port)] += 1.0;
                }
        auto csv = out.open("teleport_counts.csv");
        csv << "herald,input,axis,plus,minus\n";
        static constexpr std::array<char, 4> in_labels{'H', 'V', 'D', 'R'};
        static constexpr std::array<const char *, 3> ax_labels{"s1", "s2", "s3"};
        for (auto h : heralds) {
            std::vector<Mat2c> outs;
            for (std::size_t j = 0; j < inputs.size(); ++j) {
                for (int a = 0; a < 3; ++a)
                    csv << herald_name(h) << ',' << in_labels[j] << ',' << ax_labels[static_cast<size_t>(a)] << ','
                        << fmt_num(counts[h][j][static_cast<size_t>(a)][0]) << ','
                        << fmt_num(counts[h][j][static_cast<size_t>(a)][1]) << '\n';
                outs.push_back(density_from_stokes(tomography_1q(counts[h][j])));
            }
            chi[h] = process_from_pairs(inputs, outs);
        }
        s["herald_probability"] = static_cast<double>(heralded) / static_cast<double>(shots);
    }
    nlohmann::json fid = nlohmann::json::object();
    for (auto h : heralds) {
        out.write_json(std::string("teleport_chi_") + herald_name(h) + ".json",
                       {{"herald", herald_name(h)},
                        {"basis", {"sigma_0", "sigma_x", "sigma_y", "sigma_z"}},
                        {"chi", matrix_to_json(chi[h].chi)}});
        fid[herald_name(h)] = teleport_process_fidelity(chi[h], h);
    }
    s["process_fidelity"] = fid;
    s["chi_00_phi_minus"] = chi[BsmHerald::PhiMinus].element(0);
    s["chi_zz_phi_plus"] = chi[BsmHerald::PhiPlus].element(3);
    out.write_json("teleport_summary.json", s);
    return s;
}

/// Temperature-driven delay drift of the overhead section against a noisy
/// delay record.
inline nlohmann::json run_delay_drift(const Scenario &sc, OutputSet &out) {
    const auto &d = sc.delay_scan;
    Rng rng = make_rng(sc.seed, "delay-drift");
    std::normal_distribution<double> n01(0.0, 1.0);
    std::vector<TimedValue> temps;
    double walk = 0.0;
    const double dt = d.sample_interval_s;
    for (double t = 0.0; t <= d.duration_h * 3600.0 + 1e-9; t += dt) {
        const double daily = d.daily_amplitude_k * std::sin(2.0 * std::numbers::pi * (t / kSecondsPerDay - 0.375));
        temps.push_back({t, d.temperature_mean_k + daily + walk});
        walk += d.weather_walk_k_per_sqrt_h * std::sqrt(dt / 3600.0) * n01(rng);
    }
    const auto predicted = temperature_delay_prediction(sc.delay, temps);
    std::vector<TimedValue> measured;
    for (const auto &p : predicted) measured.push_back({p.t_s, p.value + d.measurement_noise_ps * n01(rng)});
    const auto corr = delay_correlation(measured, predicted);
    auto csv = out.open("delay_series.csv");
    csv << "t_s,temperature_k,predicted_ps,measured_ps\n";
    for (std::size_t k = 0; k < temps.size(); ++k)
        csv << csv_row({temps[k].t_s, temps[k].value, predicted[k].value, measured[k].value}) << '\n';
    nlohmann::json s{{"points", corr.points},
                     {"pearson_r", corr.r},
                     {"rms_ps", corr.rms},
                     {"ps_per_kelvin", sc.delay.sensitivity_ps_per_km_k * 2.0 * sc.delay.overhead_length_km}};
    out.write_json("delay_summary.json", s);
    return s;
}

// ---------------------------------------------------------------------------

struct RunResult {
    nlohmann::json summary;
    nlohmann::json manifest;
};

inline RunResult run_scenario(const Scenario &sc, const fs::path &out_dir, const std::string &config_text) {
    OutputSet out(out_dir);
    nlohmann::json summary;
    try {
        switch (sc.protocol) {
            case Protocol::PdlCharacterize: summary = run_pdl_characterize(sc, out); break;
            case Protocol::DriftCharacterize: summary = run_drift_characterize(sc, out); break;
            case Protocol::Stabilize: summary = run_stabilize(sc, out); break;
            case Protocol::DistributeEntanglement: summary = run_distribute_entanglement(sc, out); break;
            case Protocol::IonPhoton: summary = run_ion_photon(sc, out); break;
            case Protocol::Teleport: summary = run_teleport(sc, out); break;
            case Protocol::DelayDrift: summary = run_delay_drift(sc, out); break;
        }
    } catch (const Error &e) {
        if (e.code() == ErrorCode::ProtocolFailed) throw;
        throw Error(ErrorCode::ProtocolFailed, protocol_name(sc.protocol) + ": " + e.what());
    }
    std::vector<std::string> files = out.files();
    std::sort(files.begin(), files.end());
    nlohmann::json outputs = nlohmann::json::array();
    for (const auto &f : files) {
        const std::string bytes = read_file_bytes((out.dir() / f).string());
        outputs.push_back({{"file", f}, {"sha256", sha256_hex(bytes)}, {"bytes", bytes.size()}});
    }
    nlohmann::json manifest{{"name", sc.name},
                            {"protocol", protocol_name(sc.protocol)},
                            {"seed", sc.seed},
                            {"trials", sc.trials},
                            {"version", FIBERQ_VERSION},
                            {"config_sha256", sha256_hex(config_text)},
                            {"outputs", outputs}};
    std::ofstream(out.dir() / "manifest.json", std::ios::binary | std::ios::trunc) << manifest.dump(2) << '\n';
    return {summary, manifest};
}

}  // namespace fiberq
