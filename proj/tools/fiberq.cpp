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

// Scenario runner.
//
//   fiberq run <scenario> [--seed N] [--out DIR] [--trials N] [--quiet]
//   fiberq validate <scenario>
//   fiberq presets list
//
// <scenario> is a path to a scenario file or the name of a shipped preset.
// Exit codes: 0 success, 2 invalid scenario, 3 protocol failure, 1 other.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "fiberq/config.hpp"
#include "fiberq/hash.hpp"
#include "fiberq/scenario.hpp"

#ifndef FIBERQ_PRESET_DIR
#define FIBERQ_PRESET_DIR "presets"
#endif

namespace fs = std::filesystem;

namespace {

fs::path preset_dir() {
    if (const char *env = std::getenv("FIBERQ_PRESETS")) return env;
    return FIBERQ_PRESET_DIR;
}

/// A readable file, else a preset named by the argument (or its stem).
fs::path resolve(const std::string &arg) {
    const fs::path p(arg);
    if (fs::is_regular_file(p)) return p;
    for (const fs::path &cand : {preset_dir() / (p.filename().string() + ".cfg"), preset_dir() / p.filename()})
        if (fs::is_regular_file(cand)) return cand;
    throw fiberq::ConfigError({{0, "", "no scenario file or preset named '" + arg + "'"}});
}

void print_diagnostics(const fiberq::ConfigError &e, const fs::path &path) {
    for (const auto &d : e.diagnostics()) std::cerr << path.string() << ": " << d.str() << '\n';
}

}  // namespace

int main(int argc, char **argv) {
    CLI::App app{"fiberq: polarization quantum channel simulator"};
    app.require_subcommand(1);

    std::string scenario_arg;
    std::optional<std::uint64_t> seed;
    std::optional<int> trials;
    std::string out_dir;
    bool quiet = false;

    auto *run = app.add_subcommand("run", "run a scenario and write its datasets");
    run->add_option("scenario", scenario_arg, "scenario file or preset name")->required();
    run->add_option("--seed", seed, "override the scenario seed");
    run->add_option("--out", out_dir, "output directory");
    run->add_option("--trials", trials, "override the trial count")->check(CLI::PositiveNumber);
    run->add_flag("--quiet", quiet, "do not print the summary");

    auto *validate = app.add_subcommand("validate", "check a scenario without running it");
    validate->add_option("scenario", scenario_arg, "scenario file or preset name")->required();

    auto *presets = app.add_subcommand("presets", "shipped scenario presets");
    presets->require_subcommand(1);
    auto *list = presets->add_subcommand("list", "list preset names");

    CLI11_PARSE(app, argc, argv);

    if (list->parsed()) {
        std::vector<std::string> names;
        if (fs::is_directory(preset_dir()))
            for (const auto &e : fs::directory_iterator(preset_dir()))
                if (e.path().extension() == ".cfg") names.push_back(e.path().stem().string());
        std::sort(names.begin(), names.end());
        for (const auto &n : names) std::cout << n << '\n';
        return 0;
    }

    fs::path path;
    try {
        path = resolve(scenario_arg);
        const std::string text = fiberq::read_file_bytes(path.string());
        fiberq::Scenario sc = fiberq::parse_scenario_text(text);
        if (validate->parsed()) {
            if (!quiet) std::cout << path.string() << ": ok (" << fiberq::protocol_name(sc.protocol) << ")\n";
            return 0;
        }
        if (seed) sc.seed = *seed;
        if (trials) sc.trials = *trials;
        fs::path out = !out_dir.empty()          ? fs::path(out_dir)
                       : !sc.output_dir.empty()  ? fs::path(sc.output_dir)
                                                 : fs::path("out") / sc.name;
        const auto result = fiberq::run_scenario(sc, out, text);
        if (!quiet) {
            std::cout << result.summary.dump(2) << '\n';
            std::cout << "wrote " << result.manifest["outputs"].size() << " files and manifest.json to "
                      << out.string() << '\n';
        }
        return 0;
    } catch (const fiberq::ConfigError &e) {
        print_diagnostics(e, path.empty() ? fs::path(scenario_arg) : path);
        return 2;
    } catch (const fiberq::Error &e) {
        std::cerr << "error: " << e.what() << '\n';
        return e.code() == fiberq::ErrorCode::ProtocolFailed ? 3 : 1;
    } catch (const std::exception &e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
