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

// Acceptance checks: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails. Tolerances and runtime limits are fixed here.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "fiberq/analysis.hpp"
#include "fiberq/channel.hpp"
#include "fiberq/config.hpp"
#include "fiberq/hash.hpp"
#include "fiberq/polcore.hpp"
#include "fiberq/quantum.hpp"
#include "fiberq/scenario.hpp"
#include "fiberq/stabilizer.hpp"
#include "fiberq/tomography.hpp"

using namespace fiberq;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool ok = true;
    std::string detail;

    void require(bool cond, const std::string &what) {
        if (!cond) {
            ok = false;
            detail += (detail.empty() ? "" : "; ") + what;
        }
    }
    void note(const std::string &s) {
        if (ok) detail += (detail.empty() ? "" : "; ") + s;
    }
};

std::string num(double x, int prec = 6) {
    std::ostringstream o;
    o.precision(prec);
    o << x;
    return o.str();
}

fs::path scratch(const std::string &name) {
    const fs::path p = fs::temp_directory_path() / "fiberq_acceptance" / name;
    fs::remove_all(p);
    return p;
}

RunResult run_preset(const std::string &name, const fs::path &out) {
    const std::string path = std::string(FIBERQ_PRESET_DIR) + "/" + name + ".cfg";
    return run_scenario(load_scenario(path), out, read_file_bytes(path));
}

ChannelState static_channel(const PolRotation &r, const PdlElement &pdl) {
    DriftParams p;
    p.day_rate_rad2_per_s = 0.0;
    p.night_rate_rad2_per_s = 0.0;
    return ChannelState(DriftProcess(p, r, 0), pdl);
}

// ---------------------------------------------------------------------------

Outcome pdl_bound() {
    Outcome o;
    const double f = pdl_fidelity_bound(amplitude_transmission_from_db(0.08));
    o.require(std::abs(f - 0.991) <= 1e-3, "bound at 0.08 dB = " + num(f));
    double prev = 2.0;
    for (int k = 0; k <= 300; ++k) {
        const double v = pdl_fidelity_bound(amplitude_transmission_from_db(0.01 * k));
        if (!(v < prev)) {
            o.require(false, "not decreasing at " + num(0.01 * k) + " dB");
            break;
        }
        prev = v;
    }
    o.note("F_P bound " + num(f));
    return o;
}

Outcome trace_formula() {
    Outcome o;
    Rng rng(2);
    double worst = 0.0;
    for (int i = 0; i < 10000; ++i) {
        const auto m = random_rotation(rng);
        const double probe = trace_from_probe_pair(m.apply(StokesVector::H()), m.apply(StokesVector::D()));
        worst = std::max(worst, std::abs(probe - m.matrix().trace()));
    }
    o.require(worst <= 1e-9, "max deviation " + num(worst));
    o.note("max deviation " + num(worst, 3));
    return o;
}

Outcome pdl_bloch() {
    Outcome o;
    Rng rng(3);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    double worst = 0.0, worst_purity = 0.0;
    for (int i = 0; i < 10000; ++i) {
        const PdlElement pdl = PdlElement::from_db(random_pure_stokes(rng).v, 3.0 * u(rng));
        const bool pure = i % 2 == 0;
        const StokesVector in(random_pure_stokes(rng).v * (pure ? 1.0 : u(rng)));
        const StokesVector a = pdl_apply_bloch(in, pdl);
        const StokesVector b = apply_operator_bloch(pdl.operator_matrix(), in);
        worst = std::max(worst, (a.v - b.v).norm());
        if (pure) worst_purity = std::max(worst_purity, std::abs(a.norm() - 1.0));
    }
    o.require(worst <= 1e-10, "max deviation " + num(worst));
    o.require(worst_purity <= 1e-10, "purity loss " + num(worst_purity));
    o.note("max deviation " + num(worst, 3));
    return o;
}

Outcome pdl_estimator() {
    Outcome o;
    const double exact = pdl_statistics({0.39}, {0.23}).mean_db;
    o.require(std::abs(exact - 0.08) <= 1e-12, "means give " + num(exact, 12));
    Rng rng(4);
    std::normal_distribution<double> t(0.39, 0.05), d(0.23, 0.05);
    std::vector<double> tv, dv;
    for (int i = 0; i < 2000; ++i) {
        tv.push_back(t(rng));
        dv.push_back(d(rng));
    }
    const double est = pdl_statistics(tv, dv).mean_db;
    const double from_means = (mean_sd(tv).mean - mean_sd(dv).mean) / 2.0;
    o.require(std::abs(est - from_means) <= 1e-12, "distribution estimate off its means");
    o.note("L = " + num(exact) + " dB");
    return o;
}

Outcome loss_budget() {
    Outcome o;
    const double total = total_loss_db(reference_link_budget());
    o.require(std::abs(total - 22.73) <= 1e-9, "total " + num(total, 12));
    o.require(std::abs(total - 9.07 - 13.66) <= 1e-9, "difference " + num(total - 9.07, 12));
    o.note("total " + num(total) + " dB");
    return o;
}

Outcome stabilizer_convergence() {
    Outcome o;
    const StabilizerConfig cfg;
    auto count = [&](const Polarimeter &pol, std::uint64_t seed) {
        Rng rng(seed);
        int ok = 0;
        for (int i = 0; i < 500; ++i) {
            const auto ch = static_channel(random_rotation(rng), PdlElement::from_db(random_pure_stokes(rng).v, 0.08));
            PiezoController pz;
            if (stabilize(ch, pz, pol, cfg, rng).converged()) ++ok;
        }
        return ok;
    };
    const int clean = count(Polarimeter{0.0, 0.0}, 61);
    const int noisy = count(Polarimeter{1e-3, 0.0}, 62);
    o.require(clean >= 495, "noise-free " + std::to_string(clean) + "/500");
    o.require(noisy >= 470, "sigma 1e-3 " + std::to_string(noisy) + "/500");

    // f(u) = (u - c)^T A (u - c) has descent direction -2 A (u - c).
    Eigen::Matrix4d a;
    a << 3, 1, 0, 0.5, 1, 2, 0.2, 0, 0, 0.2, 1.5, 0.3, 0.5, 0, 0.3, 4;
    const Voltages c(0.3, -1.1, 2.0, 0.7), u(1.0, 0.5, -0.4, 2.2);
    auto f = [&](const Voltages &x) { return (x - c).dot(a * (x - c)); };
    const Voltages exact = -2.0 * a * (u - c);
    double worst = 0.0;
    for (int i = 0; i < 4; ++i) worst = std::max(worst, std::abs(central_difference(f, u, i, 1e-3) - exact[i]));
    o.require(worst < 1e-6, "gradient deviation " + num(worst));
    o.note(std::to_string(clean) + "/500 noise-free, " + std::to_string(noisy) + "/500 at sigma 1e-3, gradient " +
           num(worst, 3));
    return o;
}

Outcome adaptive_schedule() {
    Outcome o;
    const StabilizerConfig cfg;
    struct Row {
        double fp, step, delta_u;
    };
    const double s95 = (1.0 - 0.95) / (1.0 - cfg.fp_crossover);
    const Row rows[] = {{0.5, cfg.step0, cfg.delta_u0},
                        {0.95, s95 * cfg.step0 + cfg.step1, s95 * cfg.delta_u0 + cfg.delta_u1},
                        {1.0, cfg.step1, cfg.delta_u1}};
    for (const auto &r : rows) {
        const auto p = adapt_parameters(cfg, r.fp);
        o.require(p.step == r.step && p.delta_u == r.delta_u, "mismatch at F_P = " + num(r.fp));
    }
    o.require(s95 == 1.0, "crossover scale not 1");
    o.note("D = " + num(adapt_parameters(cfg, 0.5).step) + " / " + num(adapt_parameters(cfg, 0.95).step) + " / " +
           num(adapt_parameters(cfg, 1.0).step));
    return o;
}

Outcome teleport_limits() {
    Outcome o;
    const auto ideal = spdc_state(SpdcSource{});
    const double c00 = teleport_process(ideal, IonMemory{}, BsmHerald::PhiMinus).element(0);
    const double czz = teleport_process(ideal, IonMemory{}, BsmHerald::PhiPlus).element(3);
    o.require(std::abs(c00 - 1.0) <= 1e-9, "chi_00 = " + num(c00, 12));
    o.require(std::abs(czz - 1.0) <= 1e-9, "chi_zz = " + num(czz, 12));

    const auto noisy = spdc_state(SpdcSource{0.0, 1e3, 0.2187});
    const IonMemory ion{400e-6, kCalibratedIonDephasing};
    std::string fids;
    for (auto h : {BsmHerald::PhiMinus, BsmHerald::PhiPlus}) {
        const double f = teleport_process_fidelity(teleport_process(noisy, ion, h), h);
        o.require(f >= 0.70 && f <= 0.95, std::string("exact ") + herald_name(h) + " " + num(f));
        fids += num(f, 4) + " ";
    }
    const auto run = run_preset("teleport_noisy", scratch("teleport_noisy"));
    for (const auto &[h, f] : run.summary["process_fidelity"].items()) {
        const double v = f.get<double>();
        o.require(v >= 0.70 && v <= 0.95, "sampled " + h + " " + num(v));
        fids += num(v, 4) + " ";
    }
    o.note("exact then sampled F = " + fids);
    return o;
}

Outcome tomography_round_trip() {
    Outcome o;
    Rng rng(9);
    std::normal_distribution<double> n(0.0, 1.0);
    double worst = 1.0;
    for (int i = 0; i < 100; ++i) {
        Mat4c g;
        for (int r = 0; r < 4; ++r)
            for (int c = 0; c < 4; ++c) g(r, c) = Complex(n(rng), n(rng));
        const auto rho = DensityMatrix2Q::normalized(g * g.adjoint());
        worst = std::min(worst, tomography_2q(expected_counts(rho, standard_tomography_bases(), 1e4)).fidelity(rho));
    }
    o.require(worst >= 0.9999, "worst exact fidelity " + num(worst));

    const auto truth = spdc_state(SpdcSource{0.0, 1.0, white_noise_for_fidelity(0.98)});
    const auto counts = poisson_resample(expected_counts(truth, standard_tomography_bases(), 1e4), rng);
    const auto mc = mc_uncertainty(counts, 500, bell::psi_plus(), rng);
    const double dev = std::abs(mc.point_fidelity - 0.98);
    o.require(!mc.degenerate && dev <= 3.0 * mc.sigma_fidelity,
              "Poisson deviation " + num(dev) + " vs 3 sigma " + num(3.0 * mc.sigma_fidelity));
    o.note("worst exact " + num(worst, 8) + ", Poisson " + num(mc.point_fidelity, 5) + " +- " +
           num(mc.sigma_fidelity, 2));
    return o;
}

Outcome duty_cycle() {
    Outcome o;
    const auto run = run_preset("ppe_dutycycle", scratch("ppe_dutycycle"));
    const auto &rows = run.summary["intervals"];
    std::string vals;
    double prev = 0.0, prev_se = 0.0;
    bool first = true;
    for (const auto &r : rows) {
        const double t = r["interval_s"], f = r["fidelity_corrected"], se = r["fidelity_corrected_se"];
        vals += num(t) + "s:" + num(f, 5) + " ";
        if (t <= 60.0) o.require(f >= 0.98, "F = " + num(f) + " at " + num(t) + " s");
        // Non-increasing up to two combined standard errors of sampling noise.
        if (!first) o.require(f <= prev + 2.0 * std::hypot(se, prev_se), "rise at " + num(t) + " s");
        prev = f;
        prev_se = se;
        first = false;
    }
    o.require(rows.size() == 4, "expected four intervals");
    o.note("corrected " + vals);
    return o;
}

Outcome delay_model() {
    Outcome o;
    const DelayDriftModel m;
    const double step = temperature_delay_prediction(m, {{0.0, 280.0}, {60.0, 281.0}}).back().value;
    o.require(std::abs(step - 95.6) <= 0.1, "+1 K gives " + num(step) + " ps");
    const double dop = doppler_delay_step(m, 100.0);
    o.require(std::abs(dop - 2.50e-15) <= 1e-17, "Doppler step " + num(dop));
    o.note(num(step, 5) + " ps, " + num(dop, 4) + " s");
    return o;
}

Outcome background() {
    Outcome o;
    Rng rng(12);
    const BackgroundSource bg;
    const int n = 10000;
    double sum = 0.0;
    for (int i = 0; i < n; ++i) sum += static_cast<double>(sample_background(bg, 100.0, rng));
    const double mean = sum / n, expect = 19.7 * 100.0, se = std::sqrt(expect / n);
    o.require(std::abs(mean - expect) <= 3.0 * se, "mean " + num(mean) + " vs " + num(expect));
    o.note("mean " + num(mean) + " counts per 100 s");
    return o;
}

Outcome determinism() {
    Outcome o;
    for (const std::string name : {"teleport_noisy", "pdl_link", "delay_overhead"}) {
        const fs::path a = scratch(name + "_a"), b = scratch(name + "_b");
        const auto ra = run_preset(name, a);
        run_preset(name, b);
        for (const auto &out : ra.manifest["outputs"]) {
            const std::string f = out["file"];
            if (read_file_bytes((a / f).string()) != read_file_bytes((b / f).string()))
                o.require(false, name + "/" + f + " differs");
        }
        if (read_file_bytes((a / "manifest.json").string()) != read_file_bytes((b / "manifest.json").string()))
            o.require(false, name + "/manifest.json differs");
    }
    o.note("3 presets byte-identical");
    return o;
}

}  // namespace

int main() {
    struct Criterion {
        int id;
        const char *name;
        double limit_s;
        std::function<Outcome()> run;
    };
    const std::vector<Criterion> all = {
        {1, "pdl fidelity bound", 1, pdl_bound},
        {2, "trace formula equivalence", 1, trace_formula},
        {3, "pdl bloch map oracle", 5, pdl_bloch},
        {4, "pdl estimator", 1, pdl_estimator},
        {5, "loss budget", 1, loss_budget},
        {6, "stabilizer convergence", 60, stabilizer_convergence},
        {7, "adaptive schedule", 1, adaptive_schedule},
        {8, "teleportation limits", 300, teleport_limits},
        {9, "tomography round trip", 60, tomography_round_trip},
        {10, "duty cycle fidelity", 300, duty_cycle},
        {11, "delay model", 1, delay_model},
        {12, "background statistics", 5, background},
        {13, "determinism", 300, determinism},
    };
    int failed = 0;
    for (const auto &c : all) {
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception &e) {
            o.require(false, std::string("exception: ") + e.what());
        }
        const double dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        o.require(dt < c.limit_s, "runtime " + num(dt, 3) + " s over " + num(c.limit_s) + " s");
        if (!o.ok) ++failed;
        std::printf("%s %2d %-28s %7.2fs  %s\n", o.ok ? "PASS" : "FAIL", c.id, c.name, dt, o.detail.c_str());
        std::fflush(stdout);
    }
    fs::remove_all(fs::temp_directory_path() / "fiberq_acceptance");
    std::printf("%d/%zu criteria passed\n", static_cast<int>(all.size()) - failed, all.size());
    return failed == 0 ? 0 : 1;
}
