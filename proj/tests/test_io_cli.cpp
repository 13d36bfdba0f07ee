// Copyright 2026 The qdirect Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "commands.hpp"

namespace qdirect {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

class TempDir : public ::testing::Test {
  protected:
    void SetUp() override {
        const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
        dir_ = fs::temp_directory_path() / (std::string("qdirect_") + info->test_suite_name() + "_" + info->name());
        fs::remove_all(dir_);
        fs::create_directories(dir_);
    }
    void TearDown() override { fs::remove_all(dir_); }
    [[nodiscard]] std::string path(const std::string& name) const { return (dir_ / name).string(); }
    fs::path dir_;
};

// ------------------------------------------------------------------- io

TEST(Io, FormatDoubleRoundTrips) {
    for (const double x : {0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, 0.0}) {
        EXPECT_EQ(std::stod(io::format_double(x)), x);
    }
}

TEST(Io, StateRoundTripIsLossless) {
    const auto psi = random_pure_state(StateLayout::oam_walsh(1, 1), 4);
    const auto back = io::state_from_json(json::parse(io::state_to_json(psi).dump()));
    EXPECT_TRUE(back.coefficients() == psi.coefficients());
    EXPECT_TRUE(back.layout() == psi.layout());
}

TEST(Io, StateFileIsRescaled) {
    const json j = json::parse(R"({"dim":2,"basis":"flat","coefficients":[[3,0],[0,4]]})");
    const auto psi = io::state_from_json(j);
    EXPECT_NEAR(psi[0].real(), 0.6, 1e-15);
    EXPECT_NEAR(psi[1].imag(), 0.8, 1e-15);
    EXPECT_THROW(io::state_from_json(json::parse(R"({"coefficients":[[1,0]]})")), Error);
}

TEST(Io, PlanAndRecordRoundTripAreLossless) {
    const auto psi = random_pure_state(StateLayout::flat_bipartite(3, 2), 4);
    const auto plan = build_full_plan(psi.layout(), {1, 1});
    const auto record = simulate_counts(psi, plan, ShotModel{}, 8);
    const io::Meta meta{8, "abc"};

    std::stringstream plan_stream;
    io::write_plan(plan_stream, plan, meta);
    const auto plan_back = io::plan_from_json(json::parse(plan_stream.str()));
    ASSERT_EQ(plan_back.setting_count(), plan.setting_count());
    for (std::size_t s = 0; s < plan.setting_count(); ++s) EXPECT_TRUE(plan_back.settings[s] == plan.settings[s]);
    for (std::size_t e = 0; e < plan.block_count(); ++e) {
        ASSERT_EQ(plan_back.entries[e].terms.size(), plan.entries[e].terms.size());
        for (std::size_t t = 0; t < plan.entries[e].terms.size(); ++t) {
            EXPECT_EQ(plan_back.entries[e].terms[t].weight, plan.entries[e].terms[t].weight);
        }
    }

    std::stringstream record_stream;
    io::write_count_record(record_stream, record, meta);
    const auto record_back = io::count_record_from_json(json::parse(record_stream.str()));
    EXPECT_TRUE(reconstruct(record_back, plan_back).coefficients() == reconstruct(record, plan).coefficients());
}

TEST(Io, DecompositionRoundTrip) {
    const auto dec = five_projector_joint_decomposition(0, 1, 2, 0, 3, 2);
    const auto back = io::decomposition_from_json(json::parse(io::decomposition_to_json(dec).dump()));
    EXPECT_EQ(back.kind, dec.kind);
    ASSERT_EQ(back.terms.size(), 5u);
    EXPECT_LT(residual(back, back.target_operator()), 1e-13);
}

// ------------------------------------------------------------------ cli

TEST(CliParse, Dims) {
    EXPECT_TRUE(cli::parse_dims("5") == StateLayout::single(5));
    EXPECT_TRUE(cli::parse_dims("2x3") == StateLayout::flat_bipartite(2, 3));
    EXPECT_TRUE(cli::parse_dims("31x11-oam-walsh") == StateLayout::oam_walsh(15, 10));
    EXPECT_THROW(cli::parse_dims("4x3-oam-walsh"), Error);
    EXPECT_THROW(cli::parse_dims("0"), Error);
    EXPECT_THROW(cli::parse_dims("2y3"), Error);
}

TEST(CliParse, Indices) {
    const auto layout = StateLayout::flat_bipartite(2, 2);
    EXPECT_EQ(cli::parse_index("1,0", layout), (BasisIndex{1, 0}));
    EXPECT_THROW(cli::parse_index("2,0", layout), Error);
    EXPECT_THROW(cli::parse_index("1", layout), Error);
    EXPECT_THROW(cli::parse_index("1,x", layout), Error);
}

using CliCommand = TempDir;

TEST_F(CliCommand, DecomposeExamples) {
    cli::DecomposeOptions opt;
    opt.dims = "2x2";
    opt.ref = "0,0";
    opt.out_dir = path("five");
    opt.target = "1,1";
    auto r = cli::cmd_decompose(opt);
    EXPECT_EQ(r.summary["terms"], 5);
    EXPECT_LT(r.summary["residual"].get<double>(), 1e-13);
    const auto file = io::read_json_file(path("five/decomposition.json"));
    EXPECT_EQ(file["meta"]["tool"], "qdirect");
    EXPECT_EQ(io::decomposition_from_json(file).terms.size(), 5u);

    opt.target = "0,0";
    opt.out_dir = path("one");
    EXPECT_EQ(cli::cmd_decompose(opt).summary["terms"], 1);
    opt.target = "0,1";
    opt.out_dir = path("three");
    r = cli::cmd_decompose(opt);
    EXPECT_EQ(r.summary["terms"], 3);
    EXPECT_EQ(r.summary["kind"], "special_case");
    opt.target = "2,0";
    EXPECT_THROW(cli::cmd_decompose(opt), Error);
}

TEST_F(CliCommand, RunDemoExact) {
    cli::RunOptions opt;
    opt.demo = true;
    opt.dims = "5x5";
    opt.shot.noise = NoiseMode::exact;
    opt.out_dir = path("run");
    const auto r = cli::cmd_run(opt);
    EXPECT_GT(r.summary["fidelity"].get<double>(), 1.0 - 1e-10);
    EXPECT_EQ(r.summary["setting_count"], 105);
    for (const auto* name : {"plan.json", "counts.json", "reconstructed.json", "error_bounds.csv", "summary.json",
                             "truth.json"}) {
        EXPECT_TRUE(fs::exists(dir_ / "run" / name)) << name;
    }
    const auto psi = io::state_from_json(io::read_json_file(path("run/reconstructed.json")));
    const auto truth = io::state_from_json(io::read_json_file(path("run/truth.json")));
    EXPECT_GT(pure_overlap_fidelity(psi, truth), 1.0 - 1e-10);
}

TEST_F(CliCommand, RunFromStateFileAndRerunIsByteIdentical) {
    const auto psi = random_pure_state(StateLayout::flat_bipartite(3, 3), 2);
    io::write_json_file(path("state.json"), io::state_to_json(psi));
    cli::RunOptions opt;
    opt.state_path = path("state.json");
    opt.seed = 77;
    opt.out_dir = path("a");
    cli::cmd_run(opt);
    opt.out_dir = path("b");
    cli::cmd_run(opt);
    for (const auto& entry : fs::directory_iterator(dir_ / "a")) {
        EXPECT_EQ(slurp(entry.path()), slurp(dir_ / "b" / entry.path().filename())) << entry.path();
    }
    const auto summary = io::read_json_file(path("a/summary.json"));
    EXPECT_EQ(summary["meta"]["seed"], 77);
    EXPECT_EQ(slurp(dir_ / "a" / "error_bounds.csv").rfind("# qdirect", 0), 0u);
}

TEST_F(CliCommand, RunRejectsBadInput) {
    cli::RunOptions opt;
    opt.out_dir = path("x");
    EXPECT_THROW(cli::cmd_run(opt), Error);
    opt.demo = true;
    opt.dims = "4x4";
    EXPECT_THROW(cli::cmd_run(opt), Error);
    std::ofstream(path("bad.json")) << "{\"coefficients\": 3}";
    opt.demo = false;
    opt.dims.reset();
    opt.state_path = path("bad.json");
    EXPECT_THROW(cli::cmd_run(opt), Error);
}

TEST_F(CliCommand, AnalyzeBellAndDemo) {
    const double h = 1.0 / std::sqrt(2.0);
    CVector bell = CVector::Zero(4);
    bell(0) = h;
    bell(3) = h;
    io::write_json_file(path("bell.json"), io::state_to_json(StateVector(bell, StateLayout::flat_bipartite(2, 2))));
    cli::AnalyzeOptions opt;
    opt.state_path = path("bell.json");
    opt.out_dir = path("bell");
    const auto r = cli::cmd_analyze(opt);
    EXPECT_NEAR(r.summary["schmidt_number"].get<double>(), 2.0, 1e-12);

    DemoStateParams p;
    p.max_oam = 2;
    p.max_radial = 1;
    p.leakage = 0.0;
    const auto demo = generate_demo_spdc_state(p);
    io::write_json_file(path("demo.json"), io::state_to_json(demo));
    opt.state_path = path("demo.json");
    opt.out_dir = path("demo");
    cli::cmd_analyze(opt);
    // Probability CSV: mass only where l1 = -l2 and k1 = k2, summing to one.
    std::ifstream in(path("demo/probabilities.csv"));
    std::string line;
    std::getline(in, line);
    ASSERT_EQ(line.rfind("# qdirect", 0), 0u);
    double total = 0.0;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        std::stringstream ss(line);
        std::string cell;
        std::size_t col = 0;
        while (std::getline(ss, cell, ',')) {
            const double v = std::stod(cell);
            total += v;
            if (!demo.layout().is_diagonal({row, col})) {
                EXPECT_EQ(v, 0.0);
            }
            ++col;
        }
        ++row;
    }
    EXPECT_EQ(row, 10u);
    EXPECT_NEAR(total, 1.0, 1e-10);
}

TEST_F(CliCommand, AnalyzeNonBipartiteFails) {
    io::write_json_file(path("single.json"), io::state_to_json(random_pure_state(3, 1)));
    cli::AnalyzeOptions opt;
    opt.state_path = path("single.json");
    opt.out_dir = path("out");
    EXPECT_THROW(cli::cmd_analyze(opt), Error);
}

TEST_F(CliCommand, StudyConfigAndDeterminism) {
    std::ofstream(path("cfg.json")) << R"({"dims":[4],"ranks":[1,2],"purities":[0.7,1.0],"trials":5,"seed":3})";
    cli::StudyOptions opt;
    opt.config_path = path("cfg.json");
    opt.out_dir = path("s1");
    const auto r = cli::cmd_study(opt);
    EXPECT_EQ(r.summary["cells"], 3);
    EXPECT_EQ(r.summary["skipped"], 1);
    opt.out_dir = path("s2");
    cli::cmd_study(opt);
    EXPECT_EQ(slurp(dir_ / "s1" / "trials.csv"), slurp(dir_ / "s2" / "trials.csv"));
    EXPECT_EQ(slurp(dir_ / "s1" / "aggregate.json"), slurp(dir_ / "s2" / "aggregate.json"));
    const auto aggregate = io::read_json_file(path("s1/aggregate.json"));
    for (const auto& cell : aggregate["cells"]) {
        if (cell["purity"] == 1.0) {
            EXPECT_EQ(cell["success_fraction"], 1.0);
        }
    }
    EXPECT_EQ(aggregate["meta"]["seed"], 3);

    std::ofstream(path("bad.json")) << R"({"dims":[4],"trails":5})";
    opt.config_path = path("bad.json");
    EXPECT_THROW(cli::cmd_study(opt), Error);
}

TEST_F(CliCommand, CrossValidateExact) {
    cli::CrossValidateOptions opt;
    opt.demo = true;
    opt.dims = "5x5";
    opt.shot.noise = NoiseMode::exact;
    opt.batches = 2;
    opt.out_dir = path("cv");
    const auto r = cli::cmd_cross_validate(opt);
    for (const auto& b : r.summary["batches"]) {
        EXPECT_GT(b["fidelity"].get<double>(), 0.999);
        EXPECT_GT(b["purity"].get<double>(), 0.999);
    }
    EXPECT_TRUE(fs::exists(dir_ / "cv" / "cross_validation.json"));
}

// --------------------------------------------------------------- binary

using CliBinary = TempDir;

int run_tool(const std::string& args, const std::string& stderr_path) {
    const std::string cmd = std::string(QDIRECT_CLI) + " " + args + " > /dev/null 2> " + stderr_path;
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

TEST_F(CliBinary, ExitCodesAndErrorJson) {
    EXPECT_EQ(run_tool("decompose --dims 3x3 --ref 0,0 --target 2,1 --out-dir " + path("ok"), path("err0")), 0);
    EXPECT_TRUE(fs::exists(dir_ / "ok" / "decomposition.json"));

    EXPECT_NE(run_tool("decompose --dims 3x3 --ref 0,0 --target 3,1 --out-dir " + path("bad"), path("err1")), 0);
    const auto err = json::parse(slurp(dir_ / "err1"));
    EXPECT_NE(err["error"].get<std::string>().find("out of range"), std::string::npos);

    EXPECT_NE(run_tool("run --noise loud --demo --dims 3x3", path("err2")), 0);
    EXPECT_NE(run_tool("frobnicate", path("err3")), 0);
}

TEST_F(CliBinary, SeededRunsAreByteIdentical) {
    const std::string args = "run --demo --dims 5x5 --seed 11 --drift 0.05 --out-dir ";
    ASSERT_EQ(run_tool(args + path("a"), path("e")), 0);
    ASSERT_EQ(run_tool(args + path("b"), path("e")), 0);
    std::size_t files = 0;
    for (const auto& entry : fs::directory_iterator(dir_ / "a")) {
        EXPECT_EQ(slurp(entry.path()), slurp(dir_ / "b" / entry.path().filename())) << entry.path();
        ++files;
    }
    EXPECT_EQ(files, 6u);
}

} // namespace
} // namespace qdirect
