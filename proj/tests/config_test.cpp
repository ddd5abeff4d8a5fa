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

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <gtest/gtest.h>

#include "fiberq/config.hpp"
#include "fiberq/hash.hpp"
#include "fiberq/io.hpp"
#include "fiberq/scenario.hpp"

namespace fiberq {
namespace {

namespace fs = std::filesystem;

std::vector<ConfigDiagnostic> diagnose(const std::string &text) {
    std::istringstream is(text);
    Scenario sc;
    return parse_scenario(is, sc);
}

TEST(Config, MinimalScenarioUsesDefaults) {
    const auto sc = parse_scenario_text("[scenario]\nprotocol = stabilize\n");
    EXPECT_EQ(sc.protocol, Protocol::Stabilize);
    EXPECT_DOUBLE_EQ(sc.stabilizer.fp_threshold, 0.99);
    EXPECT_DOUBLE_EQ(sc.drift.night_rate_rad2_per_s, 4e-5);
    EXPECT_NEAR(total_loss_db(sc.budget), 22.73, 1e-9);
}

TEST(Config, ThresholdAboveOneNamesTheBound) {
    const auto d = diagnose("[scenario]\nprotocol = stabilize\n[stabilizer]\nfp_threshold = 1.2\n");
    ASSERT_EQ(d.size(), 1u);
    EXPECT_EQ(d[0].line, 4);
    EXPECT_EQ(d[0].field, "stabilizer.fp_threshold");
    EXPECT_NE(d[0].message.find("(0, 1]"), std::string::npos);
    try {
        parse_scenario_text("[scenario]\nprotocol = stabilize\n[stabilizer]\nfp_threshold = 1.2\n");
        FAIL();
    } catch (const ConfigError &e) {
        EXPECT_EQ(e.code(), ErrorCode::ConfigInvalid);
        EXPECT_NE(std::string(e.what()).find("stabilizer.fp_threshold"), std::string::npos);
    }
}

TEST(Config, NegativeLossIsRejectedWithField) {
    const auto d = diagnose("[scenario]\nprotocol = stabilize\n[budget]\nsplice_loss_db = -0.5\n");
    ASSERT_EQ(d.size(), 1u);
    EXPECT_EQ(d[0].field, "budget.splice_loss_db");
    EXPECT_EQ(d[0].line, 4);
    const auto pdl = diagnose("[scenario]\nprotocol = stabilize\n[channel]\npdl_db = -0.1\n");
    ASSERT_EQ(pdl.size(), 1u);
    EXPECT_EQ(pdl[0].field, "channel.pdl_db");
}

TEST(Config, CustomBudgetReplacesReference) {
    const auto sc = parse_scenario_text("[scenario]\nprotocol = stabilize\n[budget]\na_loss_db = 1.5\nb_loss_db = 2\n");
    ASSERT_EQ(sc.budget.components.size(), 2u);
    EXPECT_DOUBLE_EQ(total_loss_db(sc.budget), 3.5);
}

TEST(Config, UnknownDuplicateAndMalformed) {
    const auto d = diagnose(
        "[scenario]\nprotocol = stabilize\n[channel]\npdl_db = 0.1\npdl_db = 0.2\nfoo = 1\nnot a pair\n[bad\n");
    ASSERT_EQ(d.size(), 4u);
    EXPECT_EQ(d[0].line, 5);
    EXPECT_NE(d[0].message.find("duplicate"), std::string::npos);
    EXPECT_EQ(d[1].line, 6);
    EXPECT_EQ(d[1].field, "channel.foo");
    EXPECT_EQ(d[2].line, 7);
    EXPECT_EQ(d[3].line, 8);
}

TEST(Config, TypeAndRequiredErrors) {
    EXPECT_EQ(diagnose("[scenario]\nname = x\n").size(), 1u);
    EXPECT_EQ(diagnose("[scenario]\nprotocol = warp\n").size(), 1u);
    EXPECT_EQ(diagnose("[scenario]\nprotocol = stabilize\nseed = -3\n").size(), 1u);
    EXPECT_EQ(diagnose("[scenario]\nprotocol = stabilize\ntrials = 2.5\n").size(), 1u);
    EXPECT_EQ(diagnose("[scenario]\nprotocol = stabilize\n[duty]\npoisson = maybe\n").size(), 1u);
    EXPECT_EQ(diagnose("[scenario]\nprotocol = stabilize\n[stabilizer]\nfp_crossover = 0.995\n").size(), 1u);
    EXPECT_EQ(diagnose("protocol = stabilize\n").size(), 2u);
}

TEST(Config, ShippedPresetsValidate) {
    int n = 0;
    for (const auto &e : fs::directory_iterator(FIBERQ_PRESET_DIR)) {
        if (e.path().extension() != ".cfg") continue;
        ++n;
        EXPECT_NO_THROW(load_scenario(e.path().string())) << e.path();
    }
    EXPECT_GE(n, 7);
}

TEST(Io, TomographyCsvRoundTrip) {
    const auto t = expected_counts(DensityMatrix2Q::pure(bell::psi_plus()), standard_tomography_bases(2.5), 123.456);
    std::stringstream ss;
    write_tomography_csv(ss, t);
    const auto back = read_tomography_csv(ss);
    ASSERT_EQ(back.size(), t.size());
    for (std::size_t i = 0; i < t.size(); ++i) {
        EXPECT_EQ(back[i].basis_a, t[i].basis_a);
        EXPECT_EQ(back[i].basis_b, t[i].basis_b);
        EXPECT_DOUBLE_EQ(back[i].counts, t[i].counts);
        EXPECT_DOUBLE_EQ(back[i].integration_s, t[i].integration_s);
    }
    std::stringstream bad("basis_a,basis_b,counts,integration_s\nH,Q,1,1\n");
    EXPECT_THROW(read_tomography_csv(bad), Error);
    std::stringstream noheader("H,V,1,1\n");
    EXPECT_THROW(read_tomography_csv(noheader), Error);
}

TEST(Io, MatrixJsonRoundTrip) {
    Mat4c m;
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) m(i, j) = Complex(0.1 * i - 1.0 / 3.0, j * std::sqrt(2.0));
    const auto j = nlohmann::json::parse(matrix_to_json(m).dump());
    EXPECT_EQ((matrix_from_json(j) - Eigen::MatrixXcd(m)).norm(), 0.0);
    EXPECT_THROW(matrix_from_json(nlohmann::json{{"rows", 2}, {"cols", 2}, {"data", nlohmann::json::array()}}), Error);
}

TEST(Hash, KnownDigests) {
    EXPECT_EQ(sha256_hex(""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(RunScenario, DeterministicOutputs) {
    const std::string text =
        "[scenario]\nprotocol = stabilize\nseed = 5\ntrials = 5\n[instruments]\npolarimeter_sigma = 0.001\n";
    const auto sc = parse_scenario_text(text);
    const fs::path base = fs::temp_directory_path() / "fiberq_config_test";
    fs::remove_all(base);
    const auto a = run_scenario(sc, base / "a", text);
    const auto b = run_scenario(sc, base / "b", text);
    EXPECT_EQ(a.manifest, b.manifest);
    EXPECT_FALSE(a.manifest["outputs"].empty());
    for (const auto &o : a.manifest["outputs"]) {
        const std::string f = o["file"];
        EXPECT_EQ(read_file_bytes((base / "a" / f).string()), read_file_bytes((base / "b" / f).string())) << f;
    }
    Scenario other = sc;
    other.seed = 6;
    const auto c = run_scenario(other, base / "c", text);
    EXPECT_NE(a.manifest["outputs"], c.manifest["outputs"]);
    fs::remove_all(base);
}

}  // namespace
}  // namespace fiberq
