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

#include <CLI11.hpp>

#include <functional>
#include <iostream>
#include <map>
#include <string>

#include "commands.hpp"

namespace {

using namespace qdirect;
using namespace qdirect::cli;

const std::map<std::string, NoiseMode> kNoiseModes{{"poisson", NoiseMode::poisson}, {"exact", NoiseMode::exact}};

void add_shot_options(CLI::App* sub, ShotModel& shot) {
    sub->add_option("--noise", shot.noise, "Count model")->transform(CLI::CheckedTransformer(kNoiseModes));
    sub->add_option("--rate", shot.reference_rate, "Coincidence rate for unit probability (counts/s)");
    sub->add_option("--t-off-diagonal", shot.t_off_diagonal, "Integration time per off-diagonal setting (s)");
    sub->add_option("--t-diagonal", shot.t_diagonal, "Integration time per diagonal setting (s)");
    sub->add_option("--drift", shot.drift_amplitude, "Relative source drift amplitude");
    sub->add_option("--drift-period", shot.drift_period, "Source drift period (s)");
}

void add_demo_options(CLI::App* sub, DemoStateParams& demo) {
    sub->add_option("--oam-width", demo.oam_width, "Demo state OAM spread");
    sub->add_option("--radial-width", demo.radial_width, "Demo state radial spread");
    sub->add_option("--gouy-rate", demo.gouy_rate, "Demo state Gouy phase per mode order (rad)");
    sub->add_option("--leakage", demo.leakage, "Demo state off-diagonal leakage amplitude");
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Direct measurement of high-dimensional quantum states"};
    app.set_version_flag("--version", std::string(qdirect::kVersion));
    app.require_subcommand(1);

    std::string command;
    std::function<CommandResult()> action;

    DecomposeOptions dec;
    auto* sub_dec = app.add_subcommand("decompose", "Write a projector decomposition of |a><j|");
    sub_dec->add_option("--dims", dec.dims, "N, AxB or AxB-oam-walsh")->capture_default_str();
    sub_dec->add_option("--ref", dec.ref, "Reference index (j or j1,j2)")->capture_default_str();
    sub_dec->add_option("--target", dec.target, "Target index (j or j1,j2)")->capture_default_str();
    sub_dec->add_flag("--search", dec.search, "Use differential-evolution search instead of the analytic recipe");
    sub_dec->add_option("--terms", dec.de.terms, "Projectors in a searched decomposition");
    sub_dec->add_option("--population", dec.de.population, "Search population size");
    sub_dec->add_option("--generations", dec.de.max_generations, "Search generation limit");
    sub_dec->add_option("--seed", dec.seed, "Root seed")->capture_default_str();
    sub_dec->add_option("--out-dir", dec.out_dir, "Output directory")->capture_default_str();
    sub_dec->callback([&] { action = [&] { return cmd_decompose(dec); }; });

    RunOptions run;
    std::string run_dims, run_ref, run_state;
    auto* sub_run = app.add_subcommand("run", "Simulate and reconstruct a full direct measurement");
    sub_run->add_option("--state", run_state, "State JSON file");
    sub_run->add_flag("--demo", run.demo, "Use the built-in down-conversion demo state");
    sub_run->add_option("--dims", run_dims, "N, AxB or AxB-oam-walsh");
    sub_run->add_option("--ref", run_ref, "Reference index (default: most probable element)");
    add_shot_options(sub_run, run.shot);
    add_demo_options(sub_run, run.demo_params);
    sub_run->add_option("--seed", run.seed, "Root seed")->capture_default_str();
    sub_run->add_option("--out-dir", run.out_dir, "Output directory")->capture_default_str();
    sub_run->callback([&] {
        if (!run_state.empty()) run.state_path = run_state;
        if (!run_dims.empty()) run.dims = run_dims;
        if (!run_ref.empty()) run.ref = run_ref;
        action = [&] { return cmd_run(run); };
    });

    AnalyzeOptions ana;
    auto* sub_ana = app.add_subcommand("analyze", "Probabilities, Schmidt spectrum and diagonal phases of a state");
    sub_ana->add_option("--state", ana.state_path, "State JSON file")->required();
    sub_ana->add_option("--seed", ana.seed, "Recorded seed")->capture_default_str();
    sub_ana->add_option("--out-dir", ana.out_dir, "Output directory")->capture_default_str();
    sub_ana->callback([&] { action = [&] { return cmd_analyze(ana); }; });

    StudyOptions study;
    std::string study_config;
    std::uint64_t study_seed = 0;
    auto* sub_study = app.add_subcommand("study", "Mixed-state column-measurement study");
    sub_study->add_option("--config", study_config, "Study config JSON");
    auto* seed_opt = sub_study->add_option("--seed", study_seed, "Root seed (overrides the config)");
    sub_study->add_option("--out-dir", study.out_dir, "Output directory")->capture_default_str();
    sub_study->callback([&] {
        if (!study_config.empty()) study.config_path = study_config;
        if (seed_opt->count() > 0) study.seed = study_seed;
        action = [&] { return cmd_study(study); };
    });

    CrossValidateOptions cv;
    std::string cv_dims, cv_state;
    auto* sub_cv = app.add_subcommand("cross-validate", "Compare direct measurement with projective tomography");
    sub_cv->add_option("--state", cv_state, "State JSON file");
    sub_cv->add_flag("--demo", cv.demo, "Use the built-in down-conversion demo state");
    sub_cv->add_option("--dims", cv_dims, "N, AxB or AxB-oam-walsh");
    add_shot_options(sub_cv, cv.shot);
    add_demo_options(sub_cv, cv.demo_params);
    sub_cv->add_option("--batches", cv.batches, "Tomography batches")->capture_default_str();
    sub_cv->add_option("--settings-per-batch", cv.settings_per_batch, "Random projections per batch")
        ->capture_default_str();
    sub_cv->add_option("--tomo-rate", cv.tomography_rate, "Count rate of the brightest basis mode (counts/s)")
        ->capture_default_str();
    sub_cv->add_option("--tomo-time", cv.tomography_time, "Integration time per projection (s)")
        ->capture_default_str();
    sub_cv->add_option("--seed", cv.seed, "Root seed")->capture_default_str();
    sub_cv->add_option("--out-dir", cv.out_dir, "Output directory")->capture_default_str();
    sub_cv->callback([&] {
        if (!cv_state.empty()) cv.state_path = cv_state;
        if (!cv_dims.empty()) cv.dims = cv_dims;
        action = [&] { return cmd_cross_validate(cv); };
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() != 0) {
            std::cerr << nlohmann::json{{"error", e.what()}, {"kind", "usage"}}.dump() << '\n';
        }
        return app.exit(e);
    }

    try {
        const auto result = action();
        std::cout << result.summary.dump(2) << '\n';
    } catch (const std::exception& e) {
        std::cerr << nlohmann::json{{"error", e.what()}, {"kind", "runtime"}}.dump() << '\n';
        return 1;
    }
    return 0;
}
