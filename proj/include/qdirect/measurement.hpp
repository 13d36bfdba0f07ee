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
 * Measurement plans, count simulation and direct state reconstruction.
 *
 * A plan lists one block per coefficient c_j. Each block is preceded by a
 * measurement of the reference projector (the monitor), then measures the
 * product-projector settings of that coefficient's decomposition. Outcomes are
 * normalised to the monitor rate of their block, which cancels both the
 * unknown proportionality between probability and count rate and slow drift
 * of the source. The weighted sum of normalised outcomes gives c_j up to the
 * common factor <Psi|a> / |<Psi|a>|^2, which the final normalisation removes.
 */

#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <numbers>
#include <random>
#include <string>
#include <unordered_map>
#include <vector>

#include "qdirect/core.hpp"
#include "qdirect/decomposition.hpp"
#include "qdirect/random.hpp"

namespace qdirect {

/// A joint measurement setting: the product projector |s1 s2><s1 s2|.
struct Setting {
    LocalDirection first;
    LocalDirection second;

    friend bool operator==(const Setting& x, const Setting& y) { return x.first == y.first && x.second == y.second; }
};

struct PlanTerm {
    Complex weight;
    std::size_t setting = 0;
};

/// The column-operator block for one coefficient.
struct PlanEntry {
    BasisIndex target;
    DecompositionKind kind = DecompositionKind::reference_projector;
    bool diagonal = false;
    std::vector<PlanTerm> terms;
};

struct MeasurementPlan {
    StateLayout layout;
    BasisIndex reference;
    std::vector<Setting> settings;
    std::vector<PlanEntry> entries;        ///< one per coefficient, in flat order; entry i is block i
    std::vector<std::size_t> block_begin;  ///< settings first measured in block b: [block_begin[b], block_begin[b+1])
    std::size_t reference_setting = 0;

    [[nodiscard]] std::size_t setting_count() const { return settings.size(); }
    [[nodiscard]] std::size_t block_count() const { return entries.size(); }
    [[nodiscard]] std::size_t dim() const { return layout.dim(); }
};

/// 5(D1-1)(D2-1) + 3(D1-1) + 3(D2-1) + 1
inline std::size_t expected_setting_count(const Shape& shape) {
    const std::size_t m1 = shape.first - 1;
    const std::size_t m2 = shape.second - 1;
    return 5 * m1 * m2 + 3 * m1 + 3 * m2 + 1;
}

namespace detail {

inline std::uint64_t mix_bits(std::uint64_t h, std::uint64_t v) {
    return splitmix64(h ^ (v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2)));
}

inline std::uint64_t double_bits(double x) {
    std::uint64_t bits = 0;
    static_assert(sizeof bits == sizeof x);
    std::memcpy(&bits, &x, sizeof x);
    return bits;
}

struct SettingHash {
    std::size_t operator()(const Setting& s) const {
        std::uint64_t h = 0;
        for (const auto* d : {&s.first, &s.second}) {
            h = mix_bits(h, d->dim);
            h = mix_bits(h, d->support);
            for (std::size_t t = 0; t < d->support; ++t) {
                h = mix_bits(h, d->index[t]);
                h = mix_bits(h, double_bits(d->amplitude[t].real()));
                h = mix_bits(h, double_bits(d->amplitude[t].imag()));
            }
        }
        return static_cast<std::size_t>(h);
    }
};

} // namespace detail

/// Plan covering every coefficient of the layout with reference index a.
/// Identical settings are measured once; equality is exact on the directions,
/// so two settings that merely share a hash are never merged.
inline MeasurementPlan build_full_plan(const StateLayout& layout, const BasisIndex& a) {
    const Shape shape = layout.shape;
    if (shape.first == 0 || shape.second == 0) {
        throw Error("plan dimensions must be positive");
    }
    if (!a.valid(shape)) {
        throw Error("reference index out of range");
    }
    MeasurementPlan plan;
    plan.layout = layout;
    plan.reference = a;
    plan.entries.reserve(shape.dim());
    plan.settings.reserve(expected_setting_count(shape));
    plan.block_begin.reserve(shape.dim() + 1);

    std::unordered_map<Setting, std::size_t, detail::SettingHash> index;
    index.reserve(expected_setting_count(shape) * 2);

    for (std::size_t flat = 0; flat < shape.dim(); ++flat) {
        const auto j = BasisIndex::from_flat(flat, shape);
        plan.block_begin.push_back(plan.settings.size());
        PlanEntry entry;
        entry.target = j;
        entry.kind = recipe::joint_kind(a, j);
        if (shape.second == 1 && entry.kind == DecompositionKind::special_case) {
            entry.kind = DecompositionKind::three_projector;
        }
        entry.diagonal = layout.is_diagonal(j);
        for (const auto& term : recipe::joint(shape, a, j)) {
            Setting setting{term.first, term.second};
            auto [it, inserted] = index.try_emplace(setting, plan.settings.size());
            if (inserted) {
                plan.settings.push_back(setting);
            }
            entry.terms.push_back({term.weight, it->second});
        }
        plan.entries.push_back(std::move(entry));
    }
    plan.block_begin.push_back(plan.settings.size());
    plan.reference_setting = index.at(Setting{LocalDirection::basis(shape.first, a.first),
                                              LocalDirection::basis(shape.second, a.second)});
    return plan;
}

/// Flat bipartite plan; d2 == 1 gives a single system of dimension d1.
inline MeasurementPlan build_full_plan(std::size_t d1, std::size_t d2, const BasisIndex& a) {
    const auto layout = d2 == 1 ? StateLayout::single(d1) : StateLayout::flat_bipartite(d1, d2);
    return build_full_plan(layout, a);
}

/// Index of the largest probability; lowest index on ties.
inline std::size_t choose_reference(const RVector& probabilities) {
    if (probabilities.size() == 0) {
        throw Error("empty probability table");
    }
    Eigen::Index best = 0;
    for (Eigen::Index i = 1; i < probabilities.size(); ++i) {
        if (probabilities(i) > probabilities(best)) {
            best = i;
        }
    }
    return static_cast<std::size_t>(best);
}

inline BasisIndex choose_reference(const RVector& probabilities, const Shape& shape) {
    require_same_dim(static_cast<std::size_t>(probabilities.size()), shape.dim());
    return BasisIndex::from_flat(choose_reference(probabilities), shape);
}

enum class NoiseMode { poisson, exact };

inline const char* to_string(NoiseMode mode) { return mode == NoiseMode::exact ? "exact" : "poisson"; }

inline NoiseMode noise_mode_from_string(const std::string& name) {
    if (name == "exact") {
        return NoiseMode::exact;
    }
    if (name == "poisson") {
        return NoiseMode::poisson;
    }
    throw Error("unknown noise mode '" + name + "' (expected exact or poisson)");
}

/// Detection model. `reference_rate` is the count rate of a setting with unit
/// probability; a state sitting entirely in the reference mode is counted at
/// exactly this rate.
struct ShotModel {
    double reference_rate = 900.0;
    double t_off_diagonal = 1.0;
    double t_diagonal = 20.0;
    double drift_amplitude = 0.10;
    double drift_period = 24.0 * 3600.0;
    NoiseMode noise = NoiseMode::poisson;

    void validate() const {
        if (!(reference_rate > 0.0) || !(t_off_diagonal > 0.0) || !(t_diagonal > 0.0) || !(drift_period > 0.0)) {
            throw Error("shot model rates and integration times must be positive");
        }
        if (!(drift_amplitude >= 0.0 && drift_amplitude < 1.0)) {
            throw Error("drift amplitude must lie in [0, 1)");
        }
    }

    /// Relative source brightness at simulated time t (seconds).
    [[nodiscard]] double drift(double t) const {
        return 1.0 + drift_amplitude * std::sin(2.0 * std::numbers::pi * t / drift_period);
    }

    [[nodiscard]] ShotModel scaled_times(double factor) const {
        ShotModel s = *this;
        s.t_off_diagonal *= factor;
        s.t_diagonal *= factor;
        return s;
    }
};

struct Measurement {
    double probability = 0.0;
    double integration_time = 0.0;
    double counts = 0.0;
    double timestamp = 0.0;  ///< simulated start time, seconds
};

/// Outcomes of a plan: one measurement per setting and one monitor
/// measurement of the reference projector per block.
struct CountRecord {
    ShotModel shot;
    std::uint64_t seed = 0;
    std::size_t dim = 0;
    std::vector<Measurement> settings;
    std::vector<Measurement> monitors;

    [[nodiscard]] double total_time() const {
        double t = 0.0;
        for (const auto& m : settings) t += m.integration_time;
        for (const auto& m : monitors) t += m.integration_time;
        return t;
    }
};

/// Probability <s1 s2|rho|s1 s2> for pure or mixed states.
inline double setting_probability(const Setting& s, const StateVector& psi) {
    const std::size_t d2 = s.second.dim;
    Complex overlap = 0.0;
    for (std::size_t u = 0; u < s.first.support; ++u) {
        for (std::size_t v = 0; v < s.second.support; ++v) {
            overlap += std::conj(s.first.amplitude[u] * s.second.amplitude[v]) *
                       psi[s.first.index[u] * d2 + s.second.index[v]];
        }
    }
    return std::norm(overlap);
}

inline double setting_probability(const Setting& s, const DensityMatrix& rho) {
    const std::size_t d2 = s.second.dim;
    std::array<std::size_t, 4> idx{};
    std::array<Complex, 4> amp{};
    std::size_t n = 0;
    for (std::size_t u = 0; u < s.first.support; ++u) {
        for (std::size_t v = 0; v < s.second.support; ++v) {
            idx[n] = s.first.index[u] * d2 + s.second.index[v];
            amp[n] = s.first.amplitude[u] * s.second.amplitude[v];
            ++n;
        }
    }
    Complex value = 0.0;
    for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t c = 0; c < n; ++c) {
            value += std::conj(amp[r]) * rho(idx[r], idx[c]) * amp[c];
        }
    }
    return std::max(value.real(), 0.0);
}

namespace detail {

inline double observed_counts(const ShotModel& shot, double probability, double time, double start,
                              std::uint64_t seed, std::uint64_t stream, std::uint64_t id) {
    if (shot.noise == NoiseMode::exact) {
        return probability * shot.reference_rate * time;
    }
    const double mean = probability * shot.reference_rate * time * shot.drift(start + 0.5 * time);
    if (!(mean > 0.0)) {
        return 0.0;
    }
    Rng rng = make_rng(seed, {stream, id});
    std::poisson_distribution<std::int64_t> poisson(mean);
    return static_cast<double>(poisson(rng));
}

template <typename State>
CountRecord simulate(const State& state, const MeasurementPlan& plan, const ShotModel& shot, std::uint64_t seed) {
    shot.validate();
    require_same_dim(state.dim(), plan.dim());
    CountRecord record;
    record.shot = shot;
    record.seed = seed;
    record.dim = plan.dim();
    record.settings.resize(plan.setting_count());
    record.monitors.resize(plan.block_count());

    const Setting& reference = plan.settings[plan.reference_setting];
    const double reference_probability = setting_probability(reference, state);
    const double monitor_time = plan.layout.is_diagonal(plan.reference) ? shot.t_diagonal : shot.t_off_diagonal;

    double clock = 0.0;
    for (std::size_t b = 0; b < plan.block_count(); ++b) {
        auto& monitor = record.monitors[b];
        monitor.probability = reference_probability;
        monitor.integration_time = monitor_time;
        monitor.timestamp = clock;
        monitor.counts = observed_counts(shot, reference_probability, monitor_time, clock, seed, 0, b);
        clock += monitor_time;

        const double t = plan.entries[b].diagonal ? shot.t_diagonal : shot.t_off_diagonal;
        for (std::size_t s = plan.block_begin[b]; s < plan.block_begin[b + 1]; ++s) {
            auto& m = record.settings[s];
            m.probability = setting_probability(plan.settings[s], state);
            m.integration_time = t;
            m.timestamp = clock;
            m.counts = observed_counts(shot, m.probability, t, clock, seed, 1, s);
            clock += t;
        }
    }
    return record;
}

} // namespace detail

inline CountRecord simulate_counts(const StateVector& psi, const MeasurementPlan& plan, const ShotModel& shot,
                                   std::uint64_t seed) {
    return detail::simulate(psi, plan, shot, seed);
}

inline CountRecord simulate_counts(const DensityMatrix& rho, const MeasurementPlan& plan, const ShotModel& shot,
                                   std::uint64_t seed) {
    return detail::simulate(rho, plan, shot, seed);
}

namespace detail {

inline void check_record(const CountRecord& record, const MeasurementPlan& plan) {
    if (record.dim != plan.dim() || record.settings.size() != plan.setting_count() ||
        record.monitors.size() != plan.block_count()) {
        throw Error("count record does not match the measurement plan");
    }
}

/// Block index in which each setting was measured.
inline std::vector<std::size_t> setting_blocks(const MeasurementPlan& plan) {
    std::vector<std::size_t> block(plan.setting_count());
    for (std::size_t b = 0; b < plan.block_count(); ++b) {
        for (std::size_t s = plan.block_begin[b]; s < plan.block_begin[b + 1]; ++s) {
            block[s] = b;
        }
    }
    return block;
}

inline double monitor_rate(const Measurement& monitor) {
    if (!(monitor.counts > 0.0)) {
        throw Error("reference unobserved: choose a better reference vector");
    }
    return monitor.counts / monitor.integration_time;
}

/// Weighted sums of monitor-normalised outcomes, one per coefficient.
inline CVector weighted_sums(const CountRecord& record, const MeasurementPlan& plan) {
    check_record(record, plan);
    const auto block = setting_blocks(plan);
    CVector raw(static_cast<Eigen::Index>(plan.dim()));
    for (std::size_t e = 0; e < plan.block_count(); ++e) {
        Complex sum = 0.0;
        for (const auto& term : plan.entries[e].terms) {
            const auto& m = record.settings[term.setting];
            const double rate = monitor_rate(record.monitors[block[term.setting]]);
            sum += term.weight * (m.counts / m.integration_time / rate);
        }
        raw(static_cast<Eigen::Index>(e)) = sum;
    }
    return raw;
}

} // namespace detail

/// Direct reconstruction: c_j proportional to sum_q w_jq <O_jq>, normalised
/// with the global phase anchored at the reference index.
inline StateVector reconstruct(const CountRecord& record, const MeasurementPlan& plan) {
    return normalize(detail::weighted_sums(record, plan), plan.reference, plan.layout);
}

struct CoefficientError {
    double sigma_amplitude = 0.0;
    double sigma_phase = 0.0;
};

/// Per-coefficient one-sigma errors on |c_j| and arg(c_j) of the normalised
/// reconstruction. Poisson variances (observed counts, floored at one count)
/// are propagated through the weighted sum; the block monitor adds a relative
/// error on the magnitude only. Errors are scaled by the estimated overlap
/// nu = |<Psi|a>|, so both grow as 1 / nu. Phases of vanishing coefficients
/// are reported as pi.
inline std::vector<CoefficientError> error_bounds(const CountRecord& record, const MeasurementPlan& plan) {
    std::vector<CoefficientError> errors(plan.dim());
    if (record.shot.noise == NoiseMode::exact) {
        detail::check_record(record, plan);
        return errors;
    }
    const CVector raw = detail::weighted_sums(record, plan);
    const double raw_norm = raw.norm();
    if (!(raw_norm > 0.0)) {
        throw Error("degenerate state");
    }
    const auto block = detail::setting_blocks(plan);
    for (std::size_t e = 0; e < plan.block_count(); ++e) {
        Eigen::Matrix2d cov = Eigen::Matrix2d::Zero();
        for (const auto& term : plan.entries[e].terms) {
            const auto& m = record.settings[term.setting];
            const double rate = detail::monitor_rate(record.monitors[block[term.setting]]);
            const double scale = 1.0 / (m.integration_time * rate);
            const double variance = std::max(m.counts, 1.0) * scale * scale;
            const Eigen::Vector2d w(term.weight.real(), term.weight.imag());
            cov += variance * w * w.transpose();
        }
        const Complex c = raw(static_cast<Eigen::Index>(e));
        const double magnitude = std::abs(c);
        const double monitor_counts = record.monitors[e].counts;
        auto& out = errors[e];
        if (magnitude > 0.0) {
            const Eigen::Vector2d radial(c.real() / magnitude, c.imag() / magnitude);
            const Eigen::Vector2d tangential(-radial.y(), radial.x());
            const double amplitude_var = radial.dot(cov * radial) + magnitude * magnitude / monitor_counts;
            out.sigma_amplitude = std::sqrt(amplitude_var) / raw_norm;
            out.sigma_phase = std::sqrt(tangential.dot(cov * tangential)) / magnitude;
        } else {
            Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> eig(cov);
            out.sigma_amplitude = std::sqrt(eig.eigenvalues().maxCoeff()) / raw_norm;
            out.sigma_phase = std::numbers::pi;
        }
    }
    return errors;
}

} // namespace qdirect
