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
 * Differential-evolution search for projector decompositions of an arbitrary
 * column operator.
 *
 * Each candidate encodes Q projector directions. A direction on d levels
 * uses 2d - 1 reals in [-1, 1]: the first component is real and
 * non-negative (global-phase gauge), the rest are real/imaginary pairs; the
 * norm is divided out when the candidate is evaluated. Given the directions,
 * the best complex weights are a linear least-squares problem, so they are
 * solved exactly rather than searched. The fitness is the Frobenius residual.
 */

#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <random>
#include <vector>

#include "qdirect/decomposition.hpp"
#include "qdirect/random.hpp"

namespace qdirect {

struct DESearchConfig {
    std::size_t population = 40;
    double differential_weight = 0.7;
    double crossover_rate = 0.9;
    std::size_t max_generations = 500;
    double residual_target = 1e-8;
    std::size_t terms = 3;
    std::uint64_t seed = 1;

    void validate() const {
        if (population < 4) {
            throw Error("DE population must be at least 4");
        }
        if (!(differential_weight > 0.0 && differential_weight <= 2.0)) {
            throw Error("DE differential weight must lie in (0, 2]");
        }
        if (!(crossover_rate >= 0.0 && crossover_rate <= 1.0)) {
            throw Error("DE crossover rate must lie in [0, 1]");
        }
        if (terms == 0) {
            throw Error("DE needs at least one projector term");
        }
        if (!(residual_target >= 0.0)) {
            throw Error("DE residual target must be non-negative");
        }
    }
};

struct DESearchTrace {
    std::size_t generations = 0;
    std::size_t evaluations = 0;
};

namespace detail {

/// Decoded candidate: unit directions (columns) and least-squares weights.
struct DECandidate {
    CMatrix directions;
    CVector weights;
    double residual = std::numeric_limits<double>::infinity();
};

class DEObjective {
  public:
    DEObjective(const ColumnOperator& target, std::size_t terms)
        : dim_(target.dim()), terms_(terms), target_(target.dense().reshaped()) {}

    [[nodiscard]] std::size_t parameters_per_term() const { return 2 * dim_ - 1; }
    [[nodiscard]] std::size_t parameter_count() const { return terms_ * parameters_per_term(); }

    [[nodiscard]] DECandidate decode(const std::vector<double>& x) const {
        const auto d = static_cast<Eigen::Index>(dim_);
        DECandidate out;
        out.directions.resize(d, static_cast<Eigen::Index>(terms_));
        CMatrix design(d * d, static_cast<Eigen::Index>(terms_));
        for (std::size_t q = 0; q < terms_; ++q) {
            const double* p = x.data() + q * parameters_per_term();
            CVector v(d);
            v(0) = Complex(p[0], 0.0);
            for (Eigen::Index m = 1; m < d; ++m) {
                v(m) = Complex(p[2 * m - 1], p[2 * m]);
            }
            const double n = v.norm();
            if (n < 1e-9) {
                return out;
            }
            v /= n;
            out.directions.col(static_cast<Eigen::Index>(q)) = v;
            const CMatrix projector = v * v.adjoint();
            design.col(static_cast<Eigen::Index>(q)) = projector.reshaped();
        }
        out.weights = design.completeOrthogonalDecomposition().solve(target_);
        out.residual = (design * out.weights - target_).norm();
        return out;
    }

    [[nodiscard]] double lower_bound(std::size_t q) const {
        return (q % parameters_per_term() == 0) ? 0.0 : -1.0;
    }

  private:
    std::size_t dim_;
    std::size_t terms_;
    CVector target_;
};

} // namespace detail

/// best/1/bin differential evolution. Unconverged runs return the best
/// candidate found with `converged == false`. Deterministic given the seed.
inline ProjectorDecomposition de_search(const ColumnOperator& target, const DESearchConfig& cfg,
                                        DESearchTrace* trace = nullptr) {
    cfg.validate();
    const detail::DEObjective objective(target, cfg.terms);
    const std::size_t n = objective.parameter_count();
    const std::size_t np = cfg.population;

    Rng rng = make_rng(cfg.seed, {0x64657365ULL});
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::uniform_int_distribution<std::size_t> pick_member(0, np - 1);
    std::uniform_int_distribution<std::size_t> pick_param(0, n - 1);

    const auto clamp_param = [&](std::size_t q, double v) { return std::clamp(v, objective.lower_bound(q), 1.0); };

    std::vector<std::vector<double>> population(np, std::vector<double>(n));
    std::vector<double> fitness(np);
    std::size_t evaluations = 0;
    for (auto& member : population) {
        for (std::size_t q = 0; q < n; ++q) {
            const double lo = objective.lower_bound(q);
            member[q] = lo + (1.0 - lo) * unit(rng);
        }
    }
    for (std::size_t i = 0; i < np; ++i) {
        fitness[i] = objective.decode(population[i]).residual;
        ++evaluations;
    }

    const auto best_index = [&] {
        return static_cast<std::size_t>(std::min_element(fitness.begin(), fitness.end()) - fitness.begin());
    };

    std::size_t best = best_index();
    std::size_t generation = 0;
    std::vector<double> trial(n);
    while (generation < cfg.max_generations && fitness[best] > cfg.residual_target) {
        auto next = population;
        auto next_fitness = fitness;
        for (std::size_t i = 0; i < np; ++i) {
            std::size_t r1 = 0;
            std::size_t r2 = 0;
            do {
                r1 = pick_member(rng);
            } while (r1 == i);
            do {
                r2 = pick_member(rng);
            } while (r2 == i || r2 == r1);
            const std::size_t forced = pick_param(rng);
            for (std::size_t q = 0; q < n; ++q) {
                if (q == forced || unit(rng) < cfg.crossover_rate) {
                    const double mutant = population[best][q] +
                                          cfg.differential_weight * (population[r1][q] - population[r2][q]);
                    trial[q] = clamp_param(q, mutant);
                } else {
                    trial[q] = population[i][q];
                }
            }
            const double f = objective.decode(trial).residual;
            ++evaluations;
            if (f <= fitness[i]) {
                next[i] = trial;
                next_fitness[i] = f;
            }
        }
        population = std::move(next);
        fitness = std::move(next_fitness);
        best = best_index();
        ++generation;
    }

    if (trace != nullptr) {
        trace->generations = generation;
        trace->evaluations = evaluations;
    }

    const auto winner = objective.decode(population[best]);
    ProjectorDecomposition dec;
    dec.kind = DecompositionKind::searched;
    dec.shape = target.shape;
    dec.joint = false;
    dec.reference = target.reference;
    dec.target = target.target;
    dec.tolerance = cfg.residual_target;
    for (Eigen::Index q = 0; q < winner.directions.cols(); ++q) {
        ProjectorTerm term;
        term.weight = winner.weights(q);
        term.direction = winner.directions.col(q).sparseView(0.0, 0.0);
        dec.terms.push_back(std::move(term));
    }
    dec.residual = dec.terms.empty() ? std::numeric_limits<double>::infinity() : residual(dec, target);
    dec.converged = dec.residual <= cfg.residual_target;
    return dec;
}

} // namespace qdirect
