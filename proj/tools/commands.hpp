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

// Subcommand implementations for the qdirect tool. Each command takes a plain
// options struct, writes its artifacts under out_dir and returns a JSON
// summary (also printed by the tool). Every artifact carries the tool
// version, the seed and a hash of the options that produced it.

#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "qdirect/qdirect.hpp"

namespace qdirect::cli {

using nlohmann::json;

/// "N" (single system), "AxB" (flat bipartite) or "AxB-oam-walsh" (per-photon
/// grid of A = 2L+1 OAM values by B = K+1 radial values).
inline StateLayout parse_dims(const std::string& text) {
    const std::string suffix = "-oam-walsh";
    std::string body = text;
    bool oam = false;
    if (body.size() > suffix.size() && body.compare(body.size() - suffix.size(), suffix.size(), suffix) == 0) {
        oam = true;
        body.resize(body.size() - suffix.size());
    }
    const auto parse_positive = [&](const std::string& s) {
        std::size_t pos = 0;
        unsigned long long v = 0;
        try {
            v = std::stoull(s, &pos);
        } catch (const std::exception&) {
            throw Error("invalid dims '" + text + "'");
        }
        if (pos != s.size() || v == 0) {
            throw Error("invalid dims '" + text + "'");
        }
        return static_cast<std::size_t>(v);
    };
    const auto x = body.find('x');
    if (x == std::string::npos) {
        if (oam) {
            throw Error("oam-walsh dims need the form AxB-oam-walsh");
        }
        return StateLayout::single(parse_positive(body));
    }
    const auto a = parse_positive(body.substr(0, x));
    const auto b = parse_positive(body.substr(x + 1));
    if (!oam) {
        return StateLayout::flat_bipartite(a, b);
    }
    if (a % 2 == 0) {
        throw Error("oam-walsh dims need an odd number of OAM values (2L+1)");
    }
    return StateLayout::oam_walsh(static_cast<int>((a - 1) / 2), static_cast<int>(b - 1));
}

/// "j" or "j1,j2".
inline BasisIndex parse_index(const std::string& text, const StateLayout& layout) {
    std::vector<std::size_t> parts;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            std::size_t pos = 0;
            parts.push_back(static_cast<std::size_t>(std::stoull(item, &pos)));
            if (pos != item.size()) {
                throw Error("");
            }
        } catch (const std::exception&) {
            throw Error("invalid index '" + text + "'");
        }
    }
    BasisIndex index;
    if (layout.bipartite) {
        if (parts.size() != 2) {
            throw Error("index '" + text + "' must have the form j1,j2 for a bipartite state");
        }
        index = {parts[0], parts[1]};
    } else {
        if (parts.size() != 1) {
            throw Error("index '" + text + "' must be a single integer for a single system");
        }
        index = {parts[0], 0};
    }
    if (!index.valid(layout.shape)) {
        throw Error("index '" + text + "' out of range");
    }
    return index;
}

struct CommandResult {
    json summary;
    std::vector<std::string> written;
};

namespace detail {

inline std::string prepare_dir(const std::string& dir) {
    std::filesystem::create_directories(dir);
    return dir;
}

inline std::string path_in(const std::string& dir, const std::string& name) {
    return (std::filesystem::path(dir) / name).string();
}

inline json shot_to_json(const ShotModel& s) {
    return json{{"reference_rate", s.reference_rate}, {"t_off_diagonal", s.t_off_diagonal},
                {"t_diagonal", s.t_diagonal},         {"drift_amplitude", s.drift_amplitude},
                {"drift_period", s.drift_period},     {"noise", to_string(s.noise)}};
}

inline json demo_to_json(const DemoStateParams& p) {
    return json{{"max_oam", p.max_oam},       {"max_radial", p.max_radial}, {"oam_width", p.oam_width},
                {"radial_width", p.radial_width}, {"gouy_rate", p.gouy_rate},   {"leakage", p.leakage},
                {"seed", p.seed}};
}

/// Demo state matching the requested dims: AxB-oam-walsh maps directly, AxA
/// with A odd becomes a single radial order with l in [-(A-1)/2, (A-1)/2].
inline DemoStateParams demo_params_for(const StateLayout& layout, DemoStateParams params) {
    if (layout.basis == BasisKind::oam_walsh) {
        params.max_oam = layout.modes.max_oam;
        params.max_radial = layout.modes.max_radial;
        return params;
    }
    if (!layout.bipartite || layout.shape.first != layout.shape.second || layout.shape.first % 2 == 0) {
        throw Error("--demo needs dims AxA with A odd, or AxB-oam-walsh");
    }
    params.max_oam = static_cast<int>((layout.shape.first - 1) / 2);
    params.max_radial = 0;
    return params;
}

template <typename Writer>
void write_file(const std::string& path, std::vector<std::string>& written, Writer&& writer) {
    std::ofstream out(path);
    if (!out) {
        throw Error("cannot write '" + path + "'");
    }
    writer(out);
    out.flush();
    if (!out) {
        throw Error("failed writing '" + path + "'");
    }
    written.push_back(path);
}

inline void write_json(const std::string& path, std::vector<std::string>& written, const json& j) {
    write_file(path, written, [&](std::ostream& os) { os << j.dump(2) << '\n'; });
}

using io::format_double;

} // namespace detail

// ---------------------------------------------------------------- decompose

struct DecomposeOptions {
    std::string dims = "2";
    std::string ref = "0";
    std::string target = "1";
    bool search = false;
    DESearchConfig de;
    std::uint64_t seed = 1;
    std::string out_dir = ".";

    [[nodiscard]] json to_json() const {
        json j{{"command", "decompose"}, {"dims", dims}, {"ref", ref}, {"target", target}, {"search", search}};
        if (search) {
            j["de"] = {{"population", de.population},
                       {"differential_weight", de.differential_weight},
                       {"crossover_rate", de.crossover_rate},
                       {"max_generations", de.max_generations},
                       {"residual_target", de.residual_target},
                       {"terms", de.terms}};
        }
        return j;
    }
};

inline CommandResult cmd_decompose(const DecomposeOptions& opt) {
    const auto layout = parse_dims(opt.dims);
    const auto a = parse_index(opt.ref, layout);
    const auto j = parse_index(opt.target, layout);
    const auto meta = io::Meta::from_config(opt.to_json(), opt.seed);

    ProjectorDecomposition dec;
    if (opt.search) {
        auto cfg = opt.de;
        cfg.seed = opt.seed;
        dec = de_search(ColumnOperator(layout.shape, a, j), cfg);
    } else {
        dec = analytic_decomposition(layout.shape, a, j);
    }

    CommandResult result;
    json file = io::decomposition_to_json(dec);
    file["meta"] = meta.to_json();
    detail::write_json(detail::path_in(detail::prepare_dir(opt.out_dir), "decomposition.json"), result.written, file);
    result.summary = {{"command", "decompose"},
                      {"kind", to_string(dec.kind)},
                      {"terms", dec.terms.size()},
                      {"residual", dec.residual},
                      {"converged", dec.converged},
                      {"meta", meta.to_json()},
                      {"files", result.written}};
    return result;
}

// ---------------------------------------------------------------------- run

struct RunOptions {
    std::optional<std::string> state_path;
    bool demo = false;
    std::optional<std::string> dims;
    std::optional<std::string> ref;
    ShotModel shot;
    DemoStateParams demo_params;
    std::uint64_t seed = 1;
    std::string out_dir = ".";

    [[nodiscard]] json to_json() const {
        json j{{"command", "run"},
               {"state", state_path ? json(*state_path) : json(nullptr)},
               {"demo", demo},
               {"dims", dims ? json(*dims) : json(nullptr)},
               {"ref", ref ? json(*ref) : json(nullptr)},
               {"shot", detail::shot_to_json(shot)}};
        if (demo) {
            j["demo_params"] = detail::demo_to_json(demo_params);
        }
        return j;
    }
};

inline StateVector load_or_generate_state(const std::optional<std::string>& state_path, bool demo,
                                          const std::optional<std::string>& dims, DemoStateParams params,
                                          std::uint64_t seed) {
    if (state_path && demo) {
        throw Error("give either --state or --demo, not both");
    }
    if (state_path) {
        auto state = io::state_from_json(io::read_json_file(*state_path));
        if (dims && !(parse_dims(*dims) == state.layout())) {
            throw Error("--dims does not match the state file");
        }
        return state;
    }
    if (!demo) {
        throw Error("one of --state or --demo is required");
    }
    if (!dims) {
        throw Error("--demo requires --dims");
    }
    params.seed = seed;
    return generate_demo_spdc_state(detail::demo_params_for(parse_dims(*dims), params));
}

inline CommandResult cmd_run(const RunOptions& opt) {
    opt.shot.validate();
    const auto truth = load_or_generate_state(opt.state_path, opt.demo, opt.dims, opt.demo_params, opt.seed);
    const auto& layout = truth.layout();
    const auto reference =
        opt.ref ? parse_index(*opt.ref, layout) : choose_reference(born_probabilities(truth), layout.shape);
    const auto meta = io::Meta::from_config(opt.to_json(), opt.seed);
    const auto dir = detail::prepare_dir(opt.out_dir);

    CommandResult result;
    const auto plan = build_full_plan(layout, reference);
    detail::write_file(detail::path_in(dir, "plan.json"), result.written,
                       [&](std::ostream& os) { io::write_plan(os, plan, meta); });

    const auto record = simulate_counts(truth, plan, opt.shot, opt.seed);
    detail::write_file(detail::path_in(dir, "counts.json"), result.written,
                       [&](std::ostream& os) { io::write_count_record(os, record, meta); });

    const auto psi = reconstruct(record, plan);
    const auto errors = error_bounds(record, plan);

    json truth_file = io::state_to_json(truth);
    truth_file["meta"] = meta.to_json();
    detail::write_json(detail::path_in(dir, "truth.json"), result.written, truth_file);

    json state_file = io::state_to_json(psi);
    state_file["meta"] = meta.to_json();
    state_file["reference"] = {reference.first, reference.second};
    detail::write_json(detail::path_in(dir, "reconstructed.json"), result.written, state_file);

    detail::write_file(detail::path_in(dir, "error_bounds.csv"), result.written, [&](std::ostream& os) {
        os << meta.csv_comment() << '\n';
        os << "j1,j2,re,im,amplitude,phase,sigma_amplitude,sigma_phase\n";
        for (std::size_t flat = 0; flat < psi.dim(); ++flat) {
            const auto j = BasisIndex::from_flat(flat, layout.shape);
            const Complex c = psi[flat];
            os << j.first << ',' << j.second << ',' << detail::format_double(c.real()) << ','
               << detail::format_double(c.imag()) << ',' << detail::format_double(std::abs(c)) << ','
               << detail::format_double(std::arg(c)) << ',' << detail::format_double(errors[flat].sigma_amplitude)
               << ',' << detail::format_double(errors[flat].sigma_phase) << '\n';
        }
    });

    const double simulated_seconds = record.total_time();
    json summary{{"command", "run"},
                 {"meta", meta.to_json()},
                 {"dim", layout.dim()},
                 {"shape", {layout.shape.first, layout.shape.second}},
                 {"reference", {reference.first, reference.second}},
                 {"overlap_nu", std::abs(truth.at(reference))},
                 {"setting_count", plan.setting_count()},
                 {"expected_setting_count", expected_setting_count(layout.shape)},
                 {"measurements", plan.setting_count() + plan.block_count()},
                 {"simulated_seconds", simulated_seconds},
                 {"simulated_days", simulated_seconds / 86400.0},
                 {"noise", to_string(opt.shot.noise)},
                 {"fidelity", pure_overlap_fidelity(psi, truth)}};
    detail::write_json(detail::path_in(dir, "summary.json"), result.written, summary);
    summary["files"] = result.written;
    result.summary = std::move(summary);
    return result;
}

// ------------------------------------------------------------------ analyze

struct AnalyzeOptions {
    std::string state_path;
    std::uint64_t seed = 0;
    std::string out_dir = ".";

    [[nodiscard]] json to_json() const { return {{"command", "analyze"}, {"state", state_path}}; }
};

inline CommandResult cmd_analyze(const AnalyzeOptions& opt) {
    const auto psi = io::state_from_json(io::read_json_file(opt.state_path));
    const auto& layout = psi.layout();
    const auto meta = io::Meta::from_config(opt.to_json(), opt.seed);
    const auto dir = detail::prepare_dir(opt.out_dir);
    CommandResult result;

    const RVector probs = born_probabilities(psi);
    detail::write_file(detail::path_in(dir, "probabilities.csv"), result.written, [&](std::ostream& os) {
        os << meta.csv_comment() << '\n';
        for (std::size_t j1 = 0; j1 < layout.shape.first; ++j1) {
            for (std::size_t j2 = 0; j2 < layout.shape.second; ++j2) {
                if (j2 > 0) os << ',';
                os << detail::format_double(probs(static_cast<Eigen::Index>(j1 * layout.shape.second + j2)));
            }
            os << '\n';
        }
    });

    const auto schmidt = schmidt_decompose(psi);
    detail::write_file(detail::path_in(dir, "schmidt.csv"), result.written, [&](std::ostream& os) {
        os << meta.csv_comment() << '\n' << "index,singular_value,probability\n";
        for (Eigen::Index i = 0; i < schmidt.values.size(); ++i) {
            os << i << ',' << detail::format_double(schmidt.values(i)) << ','
               << detail::format_double(schmidt.values(i) * schmidt.values(i)) << '\n';
        }
    });

    detail::write_file(detail::path_in(dir, "diagonal_phase.csv"), result.written, [&](std::ostream& os) {
        os << meta.csv_comment() << '\n';
        if (layout.basis == BasisKind::oam_walsh) {
            os << "l,k,amplitude,phase\n";
            const auto& modes = layout.modes;
            for (int l = -modes.max_oam; l <= modes.max_oam; ++l) {
                for (int k = 0; k <= modes.max_radial; ++k) {
                    const Complex c = psi.at({modes.index(l, k), modes.index(-l, k)});
                    os << l << ',' << k << ',' << detail::format_double(std::abs(c)) << ','
                       << detail::format_double(std::arg(c)) << '\n';
                }
            }
        } else {
            os << "j,amplitude,phase\n";
            for (std::size_t j = 0; j < std::min(layout.shape.first, layout.shape.second); ++j) {
                const Complex c = psi.at({j, j});
                os << j << ',' << detail::format_double(std::abs(c)) << ',' << detail::format_double(std::arg(c))
                   << '\n';
            }
        }
    });

    json summary{{"command", "analyze"},
                 {"meta", meta.to_json()},
                 {"dim", layout.dim()},
                 {"shape", {layout.shape.first, layout.shape.second}},
                 {"probability_sum", probs.sum()},
                 {"most_probable", choose_reference(probs)},
                 {"schmidt_number", schmidt.schmidt_number},
                 {"schmidt_rank", schmidt.thresholded_rank()}};
    detail::write_json(detail::path_in(dir, "analysis.json"), result.written, summary);
    summary["files"] = result.written;
    result.summary = std::move(summary);
    return result;
}

// -------------------------------------------------------------------- study

inline MixedStudyConfig default_study_config() {
    MixedStudyConfig cfg;
    cfg.dims = {4, 16, 64};
    cfg.ranks = {1, 2, 4};
    cfg.purities = {0.5, 0.7, 0.81, 0.85, 0.9, 0.95, 1.0};
    cfg.trials = 100;
    cfg.threshold = 0.99;
    cfg.seed = 1;
    return cfg;
}

inline json study_config_to_json(const MixedStudyConfig& cfg) {
    return {{"dims", cfg.dims},         {"ranks", cfg.ranks},         {"purities", cfg.purities},
            {"trials", cfg.trials},     {"threshold", cfg.threshold}, {"seed", cfg.seed}};
}

/// Reads {dims, ranks, purities, trials, threshold, seed}; missing keys keep
/// the defaults, unknown keys are rejected.
inline MixedStudyConfig study_config_from_json(const json& j) {
    if (!j.is_object()) {
        throw Error("study config must be a JSON object");
    }
    MixedStudyConfig cfg = default_study_config();
    try {
        for (const auto& [key, value] : j.items()) {
            if (key == "dims") cfg.dims = value.get<std::vector<std::size_t>>();
            else if (key == "ranks") cfg.ranks = value.get<std::vector<std::size_t>>();
            else if (key == "purities") cfg.purities = value.get<std::vector<double>>();
            else if (key == "trials") cfg.trials = value.get<std::size_t>();
            else if (key == "threshold") cfg.threshold = value.get<double>();
            else if (key == "seed") cfg.seed = value.get<std::uint64_t>();
            else throw Error("unknown study config key '" + key + "'");
        }
    } catch (const json::exception& e) {
        throw Error(std::string("malformed study config: ") + e.what());
    }
    cfg.validate();
    return cfg;
}

struct StudyOptions {
    std::optional<std::string> config_path;
    std::optional<std::uint64_t> seed;
    std::string out_dir = ".";
};

inline CommandResult cmd_study(const StudyOptions& opt) {
    auto cfg = opt.config_path ? study_config_from_json(io::read_json_file(*opt.config_path)) : default_study_config();
    if (opt.seed) {
        cfg.seed = *opt.seed;
    }
    const json config = study_config_to_json(cfg);
    const auto meta = io::Meta::from_config(json{{"command", "study"}, {"config", config}}, cfg.seed);
    const auto dir = detail::prepare_dir(opt.out_dir);
    const auto study = run_mixed_state_study(cfg);
    CommandResult result;

    detail::write_file(detail::path_in(dir, "trials.csv"), result.written, [&](std::ostream& os) {
        os << meta.csv_comment() << '\n' << "dim,rank,purity,trial,fidelity\n";
        for (const auto& t : study.trials) {
            os << t.dim << ',' << t.rank << ',' << detail::format_double(t.purity) << ',' << t.trial << ','
               << detail::format_double(t.fidelity) << '\n';
        }
    });

    json cells = json::array();
    for (const auto& c : study.cells) {
        json q = json::object();
        for (const auto& [level, value] : c.quantiles) {
            q[detail::format_double(level)] = value;
        }
        cells.push_back({{"dim", c.dim},
                         {"rank", c.rank},
                         {"purity", c.purity},
                         {"trials", c.trials},
                         {"successes", c.successes},
                         {"success_fraction", c.success_fraction},
                         {"mean_fidelity", c.mean_fidelity},
                         {"quantiles", q}});
    }
    json skipped = json::array();
    for (const auto& s : study.skipped) {
        skipped.push_back({{"dim", s.dim}, {"rank", s.rank}, {"purity", s.purity}, {"reason", s.reason}});
        std::cerr << "skipped infeasible cell dim=" << s.dim << " rank=" << s.rank << " purity=" << s.purity << ": "
                  << s.reason << '\n';
    }
    json aggregate{{"meta", meta.to_json()}, {"config", config}, {"cells", cells}, {"skipped", skipped}};
    detail::write_json(detail::path_in(dir, "aggregate.json"), result.written, aggregate);

    // Success fraction versus purity, one column per (dim, rank).
    detail::write_file(detail::path_in(dir, "success_table.csv"), result.written, [&](std::ostream& os) {
        os << meta.csv_comment() << '\n' << "purity";
        for (const auto d : cfg.dims) {
            for (const auto r : cfg.ranks) {
                os << ",d" << d << "_r" << r;
            }
        }
        os << '\n';
        for (const double p : cfg.purities) {
            os << detail::format_double(p);
            for (const auto d : cfg.dims) {
                for (const auto r : cfg.ranks) {
                    os << ',';
                    for (const auto& c : study.cells) {
                        if (c.dim == d && c.rank == r && c.purity == p) {
                            os << detail::format_double(c.success_fraction);
                        }
                    }
                }
            }
            os << '\n';
        }
    });

    result.summary = {{"command", "study"},
                      {"meta", meta.to_json()},
                      {"cells", study.cells.size()},
                      {"skipped", study.skipped.size()},
                      {"files", result.written}};
    return result;
}

// ----------------------------------------------------------- cross-validate

struct CrossValidateOptions {
    std::optional<std::string> state_path;
    bool demo = false;
    std::optional<std::string> dims;
    ShotModel shot;
    DemoStateParams demo_params;
    std::size_t batches = 8;
    std::size_t settings_per_batch = 1000;
    double tomography_rate = 18000.0;
    double tomography_time = 1.0;
    std::uint64_t seed = 1;
    std::string out_dir = ".";

    [[nodiscard]] json to_json() const {
        json j{{"command", "cross-validate"},
               {"state", state_path ? json(*state_path) : json(nullptr)},
               {"demo", demo},
               {"dims", dims ? json(*dims) : json(nullptr)},
               {"shot", detail::shot_to_json(shot)},
               {"batches", batches},
               {"settings_per_batch", settings_per_batch},
               {"tomography_rate", tomography_rate},
               {"tomography_time", tomography_time}};
        if (demo) {
            j["demo_params"] = detail::demo_to_json(demo_params);
        }
        return j;
    }
};

inline CommandResult cmd_cross_validate(const CrossValidateOptions& opt) {
    opt.shot.validate();
    const auto truth = load_or_generate_state(opt.state_path, opt.demo, opt.dims, opt.demo_params, opt.seed);
    const auto meta = io::Meta::from_config(opt.to_json(), opt.seed);
    CrossValidationOptions cv;
    cv.direct_shot = opt.shot;
    cv.batches = opt.batches;
    cv.settings_per_batch = opt.settings_per_batch;
    cv.tomography_rate = opt.tomography_rate;
    cv.tomography_time = opt.tomography_time;
    cv.seed = opt.seed;
    const auto report = cross_validate(truth, cv);

    json batches = json::array();
    for (const auto& b : report.batches) {
        batches.push_back({{"fidelity", b.fidelity}, {"purity", b.purity}, {"rate_error", b.rate_error}});
    }
    json out{{"meta", meta.to_json()},
             {"dim", truth.dim()},
             {"noise", to_string(opt.shot.noise)},
             {"direct_fidelity", report.direct_fidelity},
             {"batches", batches},
             {"fidelity_mean", report.fidelity_mean},
             {"fidelity_std", report.fidelity_std},
             {"purity_mean", report.purity_mean},
             {"purity_std", report.purity_std},
             {"rate_error_mean", report.rate_error_mean}};
    CommandResult result;
    detail::write_json(detail::path_in(detail::prepare_dir(opt.out_dir), "cross_validation.json"), result.written,
                       out);
    out["files"] = result.written;
    out["command"] = "cross-validate";
    result.summary = std::move(out);
    return result;
}

} // namespace qdirect::cli
