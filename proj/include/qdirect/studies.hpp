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
 * Numerical studies built on the direct-measurement pipeline: random state
 * ensembles, the mixed-state robustness study, a synthetic two-photon
 * OAM x radial state, and a random-projection tomography cross-check.
 */

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <numeric>
#include <random>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "qdirect/core.hpp"
#include "qdirect/measurement.hpp"
#include "qdirect/random.hpp"

namespace qdirect {

namespace detail {

inline CVector complex_gaussian(Eigen::Index n, Rng& rng) {
    std::normal_distribution<double> normal(0.0, 1.0);
    CVector v(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double re = normal(rng);
        const double im = normal(rng);
        v(i) = Complex(re, im);
    }
    return v;
}

/// Haar-random unitary: QR of a Ginibre matrix with the phases of R's
/// diagonal moved into Q.
inline CMatrix haar_unitary(std::size_t d, Rng& rng) {
    const auto n = static_cast<Eigen::Index>(d);
    CMatrix g(n, n);
    for (Eigen::Index c = 0; c < n; ++c) {
        g.col(c) = complex_gaussian(n, rng);
    }
    Eigen::HouseholderQR<CMatrix> qr(g);
    CMatrix q = qr.householderQ() * CMatrix::Identity(n, n);
    const CMatrix r = qr.matrixQR().triangularView<Eigen::Upper>();
    for (Eigen::Index c = 0; c < n; ++c) {
        const Complex diag = r(c, c);
        if (std::abs(diag) > 0.0) {
            q.col(c) *= diag / std::abs(diag);
        }
    }
    return q;
}

} // namespace detail

/// Haar-uniform pure state (normalised complex Gaussian vector), phase
/// anchored at index 0.
inline StateVector random_pure_state(const StateLayout& layout, std::uint64_t seed) {
    Rng rng = make_rng(seed, {0x70757265ULL});
    return normalize(detail::complex_gaussian(static_cast<Eigen::Index>(layout.dim()), rng), 0, layout);
}

inline StateVector random_pure_state(std::size_t d, std::uint64_t seed) {
    if (d == 0) {
        throw Error("dimension must be positive");
    }
    return random_pure_state(StateLayout::single(d), seed);
}

/// Spectrum of a rank-limited mixture moved along the path
/// pure -> base -> uniform-over-rank, parameterised by s in [0, 2].
/// Purity decreases monotonically along the path.
inline RVector interpolate_spectrum(const RVector& base, double s) {
    const auto r = base.size();
    RVector pure = RVector::Zero(r);
    pure(0) = 1.0;
    const RVector uniform = RVector::Constant(r, 1.0 / static_cast<double>(r));
    if (s <= 1.0) {
        return (1.0 - s) * pure + s * base;
    }
    return (2.0 - s) * base + (s - 1.0) * uniform;
}

/// Random density matrix with the requested rank and purity Tr(rho^2).
/// The spectrum starts from a Ginibre mixture (eigenvalues of G^dagger G for
/// a d x rank complex Gaussian G) and is moved along interpolate_spectrum()
/// by bisection until the purity matches; the eigenbasis is Haar-random.
/// Purity 1 yields a pure state whatever the rank.
inline DensityMatrix random_density_matrix(std::size_t d, std::size_t rank, double target_purity,
                                           std::uint64_t seed) {
    if (d == 0 || rank == 0 || rank > d) {
        throw Error("rank must satisfy 1 <= rank <= d");
    }
    const double floor = 1.0 / static_cast<double>(rank);
    if (!(target_purity <= 1.0 + 1e-12) || target_purity < floor - 1e-12) {
        throw Error("purity " + std::to_string(target_purity) + " infeasible for rank " + std::to_string(rank));
    }
    Rng rng = make_rng(seed, {0x6d697865ULL});
    const auto n = static_cast<Eigen::Index>(d);
    const auto r = static_cast<Eigen::Index>(rank);

    CMatrix g(n, r);
    for (Eigen::Index c = 0; c < r; ++c) {
        g.col(c) = detail::complex_gaussian(n, rng);
    }
    Eigen::SelfAdjointEigenSolver<CMatrix> gram(g.adjoint() * g, Eigen::EigenvaluesOnly);
    RVector base = gram.eigenvalues().reverse();
    base /= base.sum();

    RVector spectrum;
    if (target_purity >= 1.0) {
        spectrum = RVector::Zero(r);
        spectrum(0) = 1.0;
    } else {
        double lo = 0.0;  // purity 1
        double hi = 2.0;  // purity 1 / rank
        for (int it = 0; it < 200 && hi - lo > 1e-15; ++it) {
            const double mid = 0.5 * (lo + hi);
            if (interpolate_spectrum(base, mid).squaredNorm() > target_purity) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        spectrum = interpolate_spectrum(base, 0.5 * (lo + hi));
    }

    const CMatrix u = detail::haar_unitary(d, rng);
    const CMatrix v = u.leftCols(r);
    CMatrix rho = v * spectrum.cast<Complex>().asDiagonal() * v.adjoint();
    rho = 0.5 * (rho + rho.adjoint());
    rho /= rho.trace().real();
    return DensityMatrix(rho);
}

struct MixedStudyConfig {
    std::vector<std::size_t> dims{16};
    std::vector<std::size_t> ranks{1, 2, 3, 4};
    std::vector<double> purities{0.85, 1.0};
    std::size_t trials = 100;
    double threshold = 0.99;
    std::uint64_t seed = 1;

    void validate() const {
        if (trials == 0) {
            throw Error("study needs at least one trial per cell");
        }
        if (dims.empty() || ranks.empty() || purities.empty()) {
            throw Error("study grid must be non-empty");
        }
    }
};

struct StudyTrial {
    std::size_t dim = 0;
    std::size_t rank = 0;
    double purity = 0.0;
    std::size_t trial = 0;
    double fidelity = 0.0;
};

struct StudyCell {
    std::size_t dim = 0;
    std::size_t rank = 0;
    double purity = 0.0;
    std::size_t trials = 0;
    std::size_t successes = 0;
    double success_fraction = 0.0;
    double mean_fidelity = 0.0;
    std::vector<std::pair<double, double>> quantiles;  ///< (level, fidelity)
};

struct SkippedCell {
    std::size_t dim = 0;
    std::size_t rank = 0;
    double purity = 0.0;
    std::string reason;
};

struct StudyResult {
    MixedStudyConfig config;
    std::vector<StudyCell> cells;
    std::vector<SkippedCell> skipped;
    std::vector<StudyTrial> trials;
};

inline constexpr std::array<double, 6> kStudyQuantiles{0.0, 0.01, 0.05, 0.25, 0.5, 1.0};

/// Empirical quantile with linear interpolation between order statistics.
inline double quantile(std::vector<double> values, double level) {
    if (values.empty()) {
        throw Error("quantile of an empty sample");
    }
    std::sort(values.begin(), values.end());
    const double pos = level * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, values.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return values[lo] + frac * (values[hi] - values[lo]);
}

/// Direct measurement of one mixed state: noiseless simulation and
/// reconstruction with the most probable basis state as reference, scored
/// against the dominant eigenvector.
inline double mixed_state_trial_fidelity(const DensityMatrix& rho) {
    const RVector diagonal = rho.entries().diagonal().real();
    const std::size_t a = choose_reference(diagonal);
    const auto plan = build_full_plan(StateLayout::single(rho.dim()), BasisIndex{a, 0});
    ShotModel shot;
    shot.noise = NoiseMode::exact;
    const auto record = simulate_counts(rho, plan, shot, 0);
    const auto psi = reconstruct(record, plan);
    const auto truth = dominant_eigenvector(rho).vector;
    return pure_overlap_fidelity(psi, truth);
}

/// Every (dim, rank, purity) cell runs `trials` independent trials; each trial
/// draws its generator from (seed, cell, trial), so results do not depend on
/// scheduling. Infeasible cells are listed in `skipped`.
inline StudyResult run_mixed_state_study(const MixedStudyConfig& cfg) {
    cfg.validate();
    StudyResult result;
    result.config = cfg;
    std::uint64_t cell_index = 0;
    for (const auto d : cfg.dims) {
        for (const auto rank : cfg.ranks) {
            for (const auto p : cfg.purities) {
                const std::uint64_t this_cell = cell_index++;
                if (d == 0 || rank > d) {
                    result.skipped.push_back({d, rank, p, "rank exceeds dimension"});
                    continue;
                }
                if (p > 1.0 || p < 1.0 / static_cast<double>(rank) - 1e-12) {
                    result.skipped.push_back({d, rank, p, "purity outside [1/rank, 1]"});
                    continue;
                }
                StudyCell cell{d, rank, p, cfg.trials, 0, 0.0, 0.0, {}};
                std::vector<double> fidelities;
                fidelities.reserve(cfg.trials);
                for (std::size_t t = 0; t < cfg.trials; ++t) {
                    const auto seed = derive_seed(cfg.seed, {this_cell, t});
                    const auto rho = random_density_matrix(d, rank, p, seed);
                    const double f = mixed_state_trial_fidelity(rho);
                    fidelities.push_back(f);
                    result.trials.push_back({d, rank, p, t, f});
                    if (f > cfg.threshold) {
                        ++cell.successes;
                    }
                }
                cell.success_fraction = static_cast<double>(cell.successes) / static_cast<double>(cfg.trials);
                cell.mean_fidelity = std::accumulate(fidelities.begin(), fidelities.end(), 0.0) /
                                     static_cast<double>(fidelities.size());
                for (const double level : kStudyQuantiles) {
                    cell.quantiles.emplace_back(level, quantile(fidelities, level));
                }
                result.cells.push_back(std::move(cell));
            }
        }
    }
    return result;
}

/// Synthetic two-photon state in the OAM x radial basis: amplitudes peaked on
/// the anti-correlated diagonal l1 = -l2, k1 = k2 with Gaussian envelopes, a
/// phase advancing linearly with the mode order |l| + 2k, and seeded
/// off-diagonal leakage.
struct DemoStateParams {
    int max_oam = 15;
    int max_radial = 10;
    double oam_width = 6.0;
    double radial_width = 3.0;
    double gouy_rate = 0.3;
    double leakage = 0.02;
    std::uint64_t seed = 1;

    void validate() const {
        if (max_oam < 0 || max_radial < 0) {
            throw Error("mode ranges must be non-negative");
        }
        if (!(oam_width > 0.0) || !(radial_width > 0.0)) {
            throw Error("spectral widths must be positive");
        }
        if (!(leakage >= 0.0)) {
            throw Error("leakage must be non-negative");
        }
    }
};

inline StateVector generate_demo_spdc_state(const DemoStateParams& p) {
    p.validate();
    const auto layout = StateLayout::oam_walsh(p.max_oam, p.max_radial);
    const auto& modes = layout.modes;
    const std::size_t d = modes.dim();

    std::vector<double> envelope(d);
    for (std::size_t i = 0; i < d; ++i) {
        const auto m = modes.mode(i);
        const double l = m.oam / p.oam_width;
        const double k = m.radial / p.radial_width;
        envelope[i] = std::exp(-0.25 * (l * l + k * k));
    }

    Rng rng = make_rng(p.seed, {0x73706463ULL});
    std::normal_distribution<double> normal(0.0, std::sqrt(0.5));
    CVector c(static_cast<Eigen::Index>(d * d));
    for (std::size_t i1 = 0; i1 < d; ++i1) {
        const auto m1 = modes.mode(i1);
        for (std::size_t i2 = 0; i2 < d; ++i2) {
            const auto m2 = modes.mode(i2);
            Complex value = 0.0;
            if (m1.oam == -m2.oam && m1.radial == m2.radial) {
                const double order = std::abs(m1.oam) + 2.0 * m1.radial;
                value = std::polar(envelope[i1], p.gouy_rate * order);
            } else if (p.leakage > 0.0) {
                const double re = normal(rng);
                const double im = normal(rng);
                value = p.leakage * envelope[i1] * envelope[i2] * Complex(re, im);
            }
            c(static_cast<Eigen::Index>(i1 * d + i2)) = value;
        }
    }
    return normalize(std::move(c), layout.fundamental(), layout);
}

/// Random two-level projector directions for tomography. The first
/// min(count, d) settings are the basis projectors; the rest project onto
/// (|m> + e^{i alpha}|n>)/sqrt(2). Pairs (m, n) are visited in freshly
/// shuffled rounds so every pair is sampled about equally often; the phases
/// are uniform.
inline std::vector<LocalDirection> random_projector_settings(std::size_t d, std::size_t count, std::uint64_t seed) {
    std::vector<LocalDirection> settings;
    settings.reserve(count);
    for (std::size_t m = 0; m < d && settings.size() < count; ++m) {
        settings.push_back(LocalDirection::basis(d, m));
    }
    if (d < 2) {
        while (settings.size() < count) {
            settings.push_back(LocalDirection::basis(d, 0));
        }
        return settings;
    }
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    for (std::size_t m = 0; m < d; ++m) {
        for (std::size_t n = m + 1; n < d; ++n) {
            pairs.emplace_back(m, n);
        }
    }
    Rng rng = make_rng(seed, {0x746f6d6fULL});
    std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
    while (settings.size() < count) {
        std::shuffle(pairs.begin(), pairs.end(), rng);
        for (const auto& [m, n] : pairs) {
            if (settings.size() == count) {
                break;
            }
            settings.push_back(LocalDirection::superposition(d, m, n, phase(rng)));
        }
    }
    return settings;
}

/// Real design matrix of rho -> <s|rho|s> on the d^2 real parameters of a
/// Hermitian matrix (diagonal, then Re/Im of each upper-triangle entry).
inline Eigen::MatrixXd design_matrix(std::size_t d, const std::vector<LocalDirection>& settings) {
    const auto n = static_cast<Eigen::Index>(d);
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(settings.size()), n * n);
    for (std::size_t row = 0; row < settings.size(); ++row) {
        const CVector s = settings[row].dense();
        if (s.size() != n) {
            throw Error("setting dimension differs from the state dimension");
        }
        const auto r = static_cast<Eigen::Index>(row);
        Eigen::Index col = n;
        for (Eigen::Index m = 0; m < n; ++m) {
            a(r, m) = std::norm(s(m));
            for (Eigen::Index k = m + 1; k < n; ++k, col += 2) {
                const Complex c = std::conj(s(m)) * s(k);
                a(r, col) = 2.0 * c.real();
                a(r, col + 1) = -2.0 * c.imag();
            }
        }
    }
    return a;
}

/// Linear-inversion density estimate: least squares on the outcome rates,
/// Hermitize, clip negative eigenvalues, rescale to unit trace. Outcomes may
/// carry any common scale (counts, rates or probabilities).
inline DensityMatrix reconstruct_density_linear(std::size_t d, const std::vector<LocalDirection>& settings,
                                                const RVector& outcomes) {
    require_same_dim(settings.size(), static_cast<std::size_t>(outcomes.size()));
    const Eigen::MatrixXd a = design_matrix(d, settings);
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
    qr.setThreshold(1e-10);
    if (qr.rank() < a.cols()) {
        throw Error("rank-deficient tomography design (rank " + std::to_string(qr.rank()) + " < " +
                    std::to_string(a.cols()) + ")");
    }
    const RVector x = qr.solve(outcomes);

    const auto n = static_cast<Eigen::Index>(d);
    CMatrix h = CMatrix::Zero(n, n);
    Eigen::Index col = n;
    for (Eigen::Index m = 0; m < n; ++m) {
        h(m, m) = x(m);
        for (Eigen::Index k = m + 1; k < n; ++k, col += 2) {
            h(m, k) = Complex(x(col), x(col + 1));
            h(k, m) = std::conj(h(m, k));
        }
    }
    Eigen::SelfAdjointEigenSolver<CMatrix> eig(h);
    RVector values = eig.eigenvalues().cwiseMax(0.0);
    const double trace = values.sum();
    if (!(trace > 0.0)) {
        throw Error("reconstructed density matrix has no positive part");
    }
    values /= trace;
    CMatrix rho = eig.eigenvectors() * values.cast<Complex>().asDiagonal() * eig.eigenvectors().adjoint();
    rho = 0.5 * (rho + rho.adjoint());
    rho /= rho.trace().real();
    return DensityMatrix(rho);
}

struct CrossValidationOptions {
    ShotModel direct_shot;                ///< noise mode applies to both measurements
    std::size_t batches = 8;
    std::size_t settings_per_batch = 1000;
    double tomography_rate = 18000.0;     ///< counts/s of the most probable basis mode
    double tomography_time = 1.0;         ///< seconds per random projection
    std::uint64_t seed = 1;
};

struct CrossValidationBatch {
    double fidelity = 0.0;
    double purity = 0.0;
    double rate_error = 0.0;
};

struct CrossValidationReport {
    double direct_fidelity = 0.0;  ///< |<psi_direct|psi_true>|
    std::vector<CrossValidationBatch> batches;
    double fidelity_mean = 0.0;
    double fidelity_std = 0.0;
    double purity_mean = 0.0;
    double purity_std = 0.0;
    double rate_error_mean = 0.0;
    StateVector direct_state;
};

inline std::pair<double, double> mean_and_std(const std::vector<double>& v) {
    if (v.empty()) {
        return {0.0, 0.0};
    }
    const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    if (v.size() < 2) {
        return {mean, 0.0};
    }
    double ss = 0.0;
    for (const double x : v) {
        ss += (x - mean) * (x - mean);
    }
    return {mean, std::sqrt(ss / static_cast<double>(v.size() - 1))};
}

/// Direct measurement followed by batched random-projection tomography of
/// the same state. Each batch yields a density estimate, its purity, the
/// fidelity sqrt(<psi|rho|psi>) with the directly measured state, and the
/// aggregate relative error sum|observed - predicted| / sum(predicted)
/// between observed counts and counts predicted by the estimate.
inline CrossValidationReport cross_validate(const StateVector& truth, const CrossValidationOptions& opt) {
    const std::size_t d = truth.dim();
    const auto reference = choose_reference(born_probabilities(truth), truth.layout().shape);
    const auto plan = build_full_plan(truth.layout(), reference);
    const auto record = simulate_counts(truth, plan, opt.direct_shot, derive_seed(opt.seed, {1}));
    CrossValidationReport report{0.0, {}, 0.0, 0.0, 0.0, 0.0, 0.0, reconstruct(record, plan)};
    report.direct_fidelity = pure_overlap_fidelity(report.direct_state, truth);

    // The tomography rate is quoted for the brightest basis mode.
    const double brightest = born_probabilities(truth).maxCoeff();
    const double scale = opt.tomography_rate / brightest * opt.tomography_time;
    std::vector<double> fidelities;
    std::vector<double> purities;
    std::vector<double> errors;
    for (std::size_t b = 0; b < opt.batches; ++b) {
        const auto settings = random_projector_settings(d, opt.settings_per_batch, derive_seed(opt.seed, {2, b}));
        RVector observed(static_cast<Eigen::Index>(settings.size()));
        for (std::size_t s = 0; s < settings.size(); ++s) {
            const double p = setting_probability(Setting{settings[s], LocalDirection::basis(1, 0)}, truth);
            double counts = p * scale;
            if (opt.direct_shot.noise == NoiseMode::poisson && counts > 0.0) {
                Rng rng = make_rng(opt.seed, {3, b, s});
                std::poisson_distribution<std::int64_t> poisson(counts);
                counts = static_cast<double>(poisson(rng));
            }
            observed(static_cast<Eigen::Index>(s)) = counts;
        }
        const auto rho = reconstruct_density_linear(d, settings, observed);

        double deviation = 0.0;
        double predicted_total = 0.0;
        for (std::size_t s = 0; s < settings.size(); ++s) {
            const double predicted = setting_probability(Setting{settings[s], LocalDirection::basis(1, 0)}, rho) * scale;
            deviation += std::abs(observed(static_cast<Eigen::Index>(s)) - predicted);
            predicted_total += predicted;
        }
        CrossValidationBatch batch{fidelity(report.direct_state, rho), purity(rho),
                                   predicted_total > 0.0 ? deviation / predicted_total : 0.0};
        fidelities.push_back(batch.fidelity);
        purities.push_back(batch.purity);
        errors.push_back(batch.rate_error);
        report.batches.push_back(batch);
    }
    std::tie(report.fidelity_mean, report.fidelity_std) = mean_and_std(fidelities);
    std::tie(report.purity_mean, report.purity_std) = mean_and_std(purities);
    report.rate_error_mean = mean_and_std(errors).first;
    return report;
}

} // namespace qdirect
