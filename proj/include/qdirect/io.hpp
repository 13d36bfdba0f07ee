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

/**
 * @file
 * JSON file formats.
 *
 * State:         {dim, shape: [D1, D2] | null, basis: "flat" | "oam-walsh",
 *                 L, K (oam-walsh only), coefficients: [[re, im], ...]}
 *                 OAM-Walsh per-photon index is (l + L) * (K + 1) + k.
 * Density:       {dim, entries: row-major [[re, im], ...]}
 * Decomposition: {dim | [D1, D2], reference, target, kind, terms:
 *                 [{weight: [re, im], direction: [[re, im], ...],
 *                 local_factors?: [[...], [...]]}], residual, tolerance,
 *                 converged}
 * Plan, CountRecord: compact arrays, written incrementally so that plans
 *                 with hundreds of thousands of settings never sit in a JSON
 *                 tree in memory.
 *
 * Doubles are written in shortest round-trip form, so every format reads
 * back bit-exactly.
 */

#pragma once

#include <charconv>
#include <cstdint>
#include <fstream>
#include <ostream>
#include <string>
#include <system_error>

#include <nlohmann/json.hpp>

#include "qdirect/core.hpp"
#include "qdirect/decomposition.hpp"
#include "qdirect/measurement.hpp"
#include "qdirect/version.hpp"

namespace qdirect::io {

using nlohmann::json;

/// Shortest round-trip decimal form of a double.
inline std::string format_double(double x) {
    if (!std::isfinite(x)) {
        throw Error("cannot serialise a non-finite number");
    }
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, x);
    if (res.ec != std::errc()) {
        throw Error("number formatting failed");
    }
    std::string s(buf, res.ptr);
    // Keep doubles recognisable as floating point when read back.
    if (s.find_first_of(".eE") == std::string::npos && s.find("inf") == std::string::npos) {
        s += ".0";
    }
    return s;
}

inline std::uint64_t fnv1a(const std::string& text) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::string hex64(std::uint64_t v) {
    static constexpr char digits[] = "0123456789abcdef";
    std::string s(16, '0');
    for (int i = 15; i >= 0; --i) {
        s[static_cast<std::size_t>(i)] = digits[v & 0xf];
        v >>= 4;
    }
    return s;
}

/// Provenance block embedded in every output file.
struct Meta {
    std::uint64_t seed = 0;
    std::string config_hash;

    [[nodiscard]] json to_json() const {
        return json{{"tool", "qdirect"}, {"version", kVersion}, {"seed", seed}, {"config_hash", config_hash}};
    }

    [[nodiscard]] std::string csv_comment() const {
        return std::string("# qdirect ") + kVersion + " seed=" + std::to_string(seed) + " config_hash=" + config_hash;
    }

    static Meta from_config(const json& config, std::uint64_t seed) { return {seed, hex64(fnv1a(config.dump()))}; }
};

inline json complex_to_json(Complex c) { return json::array({c.real(), c.imag()}); }

inline Complex complex_from_json(const json& j) {
    if (!j.is_array() || j.size() != 2) {
        throw Error("complex number must be [re, im]");
    }
    return {j.at(0).get<double>(), j.at(1).get<double>()};
}

inline json vector_to_json(const CVector& v) {
    json arr = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        arr.push_back(complex_to_json(v(i)));
    }
    return arr;
}

inline CVector vector_from_json(const json& arr) {
    if (!arr.is_array()) {
        throw Error("expected an array of [re, im] pairs");
    }
    CVector v(static_cast<Eigen::Index>(arr.size()));
    for (std::size_t i = 0; i < arr.size(); ++i) {
        v(static_cast<Eigen::Index>(i)) = complex_from_json(arr[i]);
    }
    return v;
}

inline json layout_to_json(const StateLayout& layout) {
    json j;
    j["dim"] = layout.dim();
    j["shape"] = layout.bipartite ? json::array({layout.shape.first, layout.shape.second}) : json(nullptr);
    if (layout.basis == BasisKind::oam_walsh) {
        j["basis"] = "oam-walsh";
        j["L"] = layout.modes.max_oam;
        j["K"] = layout.modes.max_radial;
    } else {
        j["basis"] = "flat";
    }
    return j;
}

inline StateLayout layout_from_json(const json& j) {
    const auto dim = j.at("dim").get<std::size_t>();
    const std::string basis = j.value("basis", std::string("flat"));
    StateLayout layout;
    if (basis == "oam-walsh") {
        layout = StateLayout::oam_walsh(j.at("L").get<int>(), j.at("K").get<int>());
    } else if (basis == "flat") {
        const auto& shape = j.contains("shape") ? j.at("shape") : json(nullptr);
        if (shape.is_null()) {
            layout = StateLayout::single(dim);
        } else {
            if (!shape.is_array() || shape.size() != 2) {
                throw Error("shape must be [D1, D2] or null");
            }
            layout = StateLayout::flat_bipartite(shape.at(0).get<std::size_t>(), shape.at(1).get<std::size_t>());
        }
    } else {
        throw Error("unknown basis '" + basis + "'");
    }
    if (layout.dim() != dim) {
        throw Error("declared dim does not match the shape");
    }
    return layout;
}

inline json state_to_json(const StateVector& psi) {
    json j = layout_to_json(psi.layout());
    j["coefficients"] = vector_to_json(psi.coefficients());
    return j;
}

/// Reads a state file. Coefficients that are not unit norm are rescaled; the
/// phase convention of the file is kept.
inline StateVector state_from_json(const json& j) {
    try {
        const auto layout = layout_from_json(j);
        CVector c = vector_from_json(j.at("coefficients"));
        require_same_dim(static_cast<std::size_t>(c.size()), layout.dim());
        const double n = c.norm();
        if (!(n > 0.0) || !std::isfinite(n)) {
            throw Error("degenerate state");
        }
        if (std::abs(n - 1.0) > tolerance::construction) {
            c /= n;
        }
        return StateVector(std::move(c), layout);
    } catch (const json::exception& e) {
        throw Error(std::string("malformed state file: ") + e.what());
    }
}

inline json density_to_json(const DensityMatrix& rho) {
    json entries = json::array();
    for (std::size_t m = 0; m < rho.dim(); ++m) {
        for (std::size_t n = 0; n < rho.dim(); ++n) {
            entries.push_back(complex_to_json(rho(m, n)));
        }
    }
    return json{{"dim", rho.dim()}, {"entries", entries}};
}

inline DensityMatrix density_from_json(const json& j) {
    try {
        const auto d = j.at("dim").get<std::size_t>();
        const CVector flat = vector_from_json(j.at("entries"));
        require_same_dim(static_cast<std::size_t>(flat.size()), d * d);
        CMatrix m(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
        for (std::size_t r = 0; r < d; ++r) {
            for (std::size_t c = 0; c < d; ++c) {
                m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
                    flat(static_cast<Eigen::Index>(r * d + c));
            }
        }
        return DensityMatrix(m);
    } catch (const json::exception& e) {
        throw Error(std::string("malformed density file: ") + e.what());
    }
}

inline json index_to_json(const BasisIndex& i, bool joint) {
    return joint ? json::array({i.first, i.second}) : json(i.first);
}

inline BasisIndex index_from_json(const json& j) {
    if (j.is_array()) {
        return {j.at(0).get<std::size_t>(), j.at(1).get<std::size_t>()};
    }
    return {j.get<std::size_t>(), 0};
}

inline json decomposition_to_json(const ProjectorDecomposition& dec) {
    json j;
    j["dim"] = dec.joint ? json::array({dec.shape.first, dec.shape.second}) : json(dec.shape.first);
    j["kind"] = to_string(dec.kind);
    j["reference"] = index_to_json(dec.reference, dec.joint);
    j["target"] = index_to_json(dec.target, dec.joint);
    json terms = json::array();
    for (const auto& term : dec.terms) {
        json t;
        t["weight"] = complex_to_json(term.weight);
        t["direction"] = vector_to_json(CVector(term.direction));
        if (term.local_factors) {
            t["local_factors"] = json::array(
                {vector_to_json(CVector(term.local_factors->first)), vector_to_json(CVector(term.local_factors->second))});
        }
        terms.push_back(std::move(t));
    }
    j["terms"] = std::move(terms);
    j["residual"] = dec.residual;
    j["tolerance"] = dec.tolerance;
    j["converged"] = dec.converged;
    return j;
}

inline ProjectorDecomposition decomposition_from_json(const json& j) {
    try {
        ProjectorDecomposition dec;
        const auto& dim = j.at("dim");
        dec.joint = dim.is_array();
        dec.shape = dec.joint ? Shape{dim.at(0).get<std::size_t>(), dim.at(1).get<std::size_t>()}
                              : Shape{dim.get<std::size_t>(), 1};
        dec.kind = decomposition_kind_from_string(j.value("kind", std::string("searched")));
        dec.reference = index_from_json(j.at("reference"));
        dec.target = index_from_json(j.at("target"));
        for (const auto& t : j.at("terms")) {
            ProjectorTerm term;
            term.weight = complex_from_json(t.at("weight"));
            term.direction = vector_from_json(t.at("direction")).sparseView(0.0, 0.0);
            if (t.contains("local_factors")) {
                const auto& lf = t.at("local_factors");
                term.local_factors = std::make_pair(SparseState(vector_from_json(lf.at(0)).sparseView(0.0, 0.0)),
                                                    SparseState(vector_from_json(lf.at(1)).sparseView(0.0, 0.0)));
            }
            dec.terms.push_back(std::move(term));
        }
        dec.residual = j.at("residual").get<double>();
        dec.tolerance = j.value("tolerance", 0.0);
        dec.converged = j.value("converged", true);
        return dec;
    } catch (const json::exception& e) {
        throw Error(std::string("malformed decomposition file: ") + e.what());
    }
}

namespace detail {

inline void write_local(std::ostream& os, const LocalDirection& d) {
    os << '[';
    for (std::size_t t = 0; t < d.support; ++t) {
        if (t > 0) os << ',';
        os << '[' << d.index[t] << ',' << format_double(d.amplitude[t].real()) << ','
           << format_double(d.amplitude[t].imag()) << ']';
    }
    os << ']';
}

inline LocalDirection read_local(const json& j, std::size_t dim) {
    if (!j.is_array() || j.empty() || j.size() > 2) {
        throw Error("local direction must list one or two components");
    }
    LocalDirection d;
    d.dim = dim;
    d.support = j.size();
    for (std::size_t t = 0; t < d.support; ++t) {
        d.index[t] = j[t].at(0).get<std::size_t>();
        d.amplitude[t] = {j[t].at(1).get<double>(), j[t].at(2).get<double>()};
    }
    if (d.support == 1) {
        d.index[1] = d.index[0];
        d.amplitude[1] = 0.0;
    }
    return d;
}

inline void write_shot(std::ostream& os, const ShotModel& s) {
    os << "{\"reference_rate\":" << format_double(s.reference_rate)
       << ",\"t_off_diagonal\":" << format_double(s.t_off_diagonal)
       << ",\"t_diagonal\":" << format_double(s.t_diagonal)
       << ",\"drift_amplitude\":" << format_double(s.drift_amplitude)
       << ",\"drift_period\":" << format_double(s.drift_period) << ",\"noise\":\"" << to_string(s.noise) << "\"}";
}

inline void write_measurements(std::ostream& os, const std::vector<Measurement>& ms) {
    os << '[';
    for (std::size_t i = 0; i < ms.size(); ++i) {
        if (i > 0) os << ",\n";
        const auto& m = ms[i];
        os << '[' << format_double(m.probability) << ',' << format_double(m.integration_time) << ','
           << format_double(m.counts) << ',' << format_double(m.timestamp) << ']';
    }
    os << ']';
}

inline std::vector<Measurement> read_measurements(const json& arr) {
    std::vector<Measurement> out;
    out.reserve(arr.size());
    for (const auto& m : arr) {
        out.push_back({m.at(0).get<double>(), m.at(1).get<double>(), m.at(2).get<double>(), m.at(3).get<double>()});
    }
    return out;
}

} // namespace detail

inline ShotModel shot_from_json(const json& j) {
    ShotModel s;
    s.reference_rate = j.at("reference_rate").get<double>();
    s.t_off_diagonal = j.at("t_off_diagonal").get<double>();
    s.t_diagonal = j.at("t_diagonal").get<double>();
    s.drift_amplitude = j.at("drift_amplitude").get<double>();
    s.drift_period = j.at("drift_period").get<double>();
    s.noise = noise_mode_from_string(j.at("noise").get<std::string>());
    s.validate();
    return s;
}

/// Streams a plan as JSON: {meta, layout, reference, reference_setting,
/// setting_count, settings: [[first_support, second_support], ...],
/// block_begin, entries: [{target, kind, diagonal, terms: [[re, im, setting]]}]}.
inline void write_plan(std::ostream& os, const MeasurementPlan& plan, const Meta& meta) {
    os << "{\"meta\":" << meta.to_json().dump() << ",\n\"layout\":" << layout_to_json(plan.layout).dump()
       << ",\n\"reference\":[" << plan.reference.first << ',' << plan.reference.second << ']'
       << ",\n\"reference_setting\":" << plan.reference_setting << ",\n\"setting_count\":" << plan.setting_count()
       << ",\n\"settings\":[";
    for (std::size_t s = 0; s < plan.settings.size(); ++s) {
        if (s > 0) os << ",\n";
        os << '[';
        detail::write_local(os, plan.settings[s].first);
        os << ',';
        detail::write_local(os, plan.settings[s].second);
        os << ']';
    }
    os << "],\n\"block_begin\":[";
    for (std::size_t b = 0; b < plan.block_begin.size(); ++b) {
        if (b > 0) os << ',';
        os << plan.block_begin[b];
    }
    os << "],\n\"entries\":[";
    for (std::size_t e = 0; e < plan.entries.size(); ++e) {
        const auto& entry = plan.entries[e];
        if (e > 0) os << ",\n";
        os << "{\"target\":[" << entry.target.first << ',' << entry.target.second << "],\"kind\":\""
           << to_string(entry.kind) << "\",\"diagonal\":" << (entry.diagonal ? "true" : "false") << ",\"terms\":[";
        for (std::size_t t = 0; t < entry.terms.size(); ++t) {
            if (t > 0) os << ',';
            os << '[' << format_double(entry.terms[t].weight.real()) << ','
               << format_double(entry.terms[t].weight.imag()) << ',' << entry.terms[t].setting << ']';
        }
        os << "]}";
    }
    os << "]}\n";
}

inline MeasurementPlan plan_from_json(const json& j) {
    try {
        MeasurementPlan plan;
        plan.layout = layout_from_json(j.at("layout"));
        plan.reference = index_from_json(j.at("reference"));
        plan.reference_setting = j.at("reference_setting").get<std::size_t>();
        for (const auto& s : j.at("settings")) {
            plan.settings.push_back({detail::read_local(s.at(0), plan.layout.shape.first),
                                     detail::read_local(s.at(1), plan.layout.shape.second)});
        }
        plan.block_begin = j.at("block_begin").get<std::vector<std::size_t>>();
        for (const auto& e : j.at("entries")) {
            PlanEntry entry;
            entry.target = index_from_json(e.at("target"));
            entry.kind = decomposition_kind_from_string(e.at("kind").get<std::string>());
            entry.diagonal = e.at("diagonal").get<bool>();
            for (const auto& t : e.at("terms")) {
                entry.terms.push_back({{t.at(0).get<double>(), t.at(1).get<double>()}, t.at(2).get<std::size_t>()});
            }
            plan.entries.push_back(std::move(entry));
        }
        if (plan.block_begin.size() != plan.entries.size() + 1 || plan.block_begin.back() != plan.settings.size()) {
            throw Error("plan block table is inconsistent");
        }
        for (const auto& entry : plan.entries) {
            for (const auto& term : entry.terms) {
                if (term.setting >= plan.settings.size()) {
                    throw Error("plan term refers to a missing setting");
                }
            }
        }
        return plan;
    } catch (const json::exception& e) {
        throw Error(std::string("malformed plan file: ") + e.what());
    }
}

/// Streams a count record: {meta, seed, dim, shot, settings:
/// [[probability, time, counts, timestamp], ...], monitors: [...]}.
inline void write_count_record(std::ostream& os, const CountRecord& record, const Meta& meta) {
    os << "{\"meta\":" << meta.to_json().dump() << ",\n\"seed\":" << record.seed << ",\n\"dim\":" << record.dim
       << ",\n\"shot\":";
    detail::write_shot(os, record.shot);
    os << ",\n\"settings\":";
    detail::write_measurements(os, record.settings);
    os << ",\n\"monitors\":";
    detail::write_measurements(os, record.monitors);
    os << "}\n";
}

inline CountRecord count_record_from_json(const json& j) {
    try {
        CountRecord record;
        record.seed = j.at("seed").get<std::uint64_t>();
        record.dim = j.at("dim").get<std::size_t>();
        record.shot = shot_from_json(j.at("shot"));
        record.settings = detail::read_measurements(j.at("settings"));
        record.monitors = detail::read_measurements(j.at("monitors"));
        return record;
    } catch (const json::exception& e) {
        throw Error(std::string("malformed count record: ") + e.what());
    }
}

inline json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw Error("cannot open '" + path + "'");
    }
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw Error("'" + path + "' is not valid JSON: " + e.what());
    }
}

inline void write_json_file(const std::string& path, const json& j) {
    std::ofstream out(path);
    if (!out) {
        throw Error("cannot write '" + path + "'");
    }
    out << j.dump(2) << '\n';
    if (!out) {
        throw Error("failed writing '" + path + "'");
    }
}

} // namespace qdirect::io
