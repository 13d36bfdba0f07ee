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

#include <algorithm>
#include <cmath>
#include <set>

#include "qdirect/measurement.hpp"
#include "qdirect/studies.hpp"

namespace qdirect {
namespace {

ShotModel exact_shot() {
    ShotModel s;
    s.noise = NoiseMode::exact;
    return s;
}

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const auto n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

TEST(Plan, SettingCounts) {
    EXPECT_EQ(build_full_plan(2, 2, {0, 0}).setting_count(), 12u);
    EXPECT_EQ(build_full_plan(1, 1, {0, 0}).setting_count(), 1u);
    EXPECT_EQ(expected_setting_count({341, 341}), 580041u);
    for (std::size_t d1 = 1; d1 <= 6; ++d1) {
        for (std::size_t d2 = 1; d2 <= 6; ++d2) {
            const auto plan = build_full_plan(d1, d2, {d1 / 2, d2 - 1});
            EXPECT_EQ(plan.setting_count(), expected_setting_count({d1, d2})) << d1 << 'x' << d2;
        }
    }
    // One system of dimension d: three projectors per coefficient sharing
    // nothing but the reference projector.
    EXPECT_EQ(build_full_plan(StateLayout::single(7), {3, 0}).setting_count(), 3u * 6 + 1);
}

TEST(Plan, CoversEachCoefficientOnce) {
    const auto plan = build_full_plan(3, 4, {1, 2});
    ASSERT_EQ(plan.block_count(), 12u);
    for (std::size_t e = 0; e < plan.block_count(); ++e) {
        EXPECT_EQ(plan.entries[e].target.flat(plan.layout.shape), e);
        EXPECT_LE(plan.block_begin[e], plan.block_begin[e + 1]);
    }
    EXPECT_EQ(plan.block_begin.back(), plan.setting_count());
    EXPECT_EQ(plan.entries[plan.reference.flat(plan.layout.shape)].kind, DecompositionKind::reference_projector);
}

TEST(Plan, DeduplicationNeverMergesDistinctDirections) {
    const auto plan = build_full_plan(4, 4, {1, 1});
    // Every stored setting differs from every other one.
    for (std::size_t x = 0; x < plan.setting_count(); ++x) {
        for (std::size_t y = x + 1; y < plan.setting_count(); ++y) {
            ASSERT_FALSE(plan.settings[x] == plan.settings[y]) << x << ' ' << y;
        }
    }
    // Every term's setting is exactly the direction the recipe asks for.
    for (const auto& entry : plan.entries) {
        const auto terms = recipe::joint(plan.layout.shape, plan.reference, entry.target);
        ASSERT_EQ(terms.size(), entry.terms.size());
        for (std::size_t q = 0; q < terms.size(); ++q) {
            const auto& s = plan.settings[entry.terms[q].setting];
            EXPECT_TRUE(s.first == terms[q].first && s.second == terms[q].second);
            EXPECT_EQ(entry.terms[q].weight, terms[q].weight);
        }
    }
}

TEST(Plan, HashCollisionsAreHarmless) {
    // Forcing every setting into one bucket must give the same plan.
    struct Collide {
        std::size_t operator()(const Setting&) const { return 0; }
    };
    const auto plan = build_full_plan(3, 3, {0, 0});
    std::unordered_map<Setting, std::size_t, Collide> seen;
    for (const auto& entry : plan.entries) {
        for (const auto& t : recipe::joint(plan.layout.shape, plan.reference, entry.target)) {
            seen.try_emplace(Setting{t.first, t.second}, seen.size());
        }
    }
    EXPECT_EQ(seen.size(), plan.setting_count());
}

TEST(Plan, RejectsBadReference) {
    EXPECT_THROW(build_full_plan(2, 2, {2, 0}), Error);
}

TEST(ChooseReference, Examples) {
    RVector p(3);
    p << 0.1, 0.8, 0.1;
    EXPECT_EQ(choose_reference(p), 1u);
    EXPECT_EQ(choose_reference(RVector::Constant(5, 0.2)), 0u);
    const auto demo = generate_demo_spdc_state({});
    const auto ref = choose_reference(born_probabilities(demo), demo.layout().shape);
    EXPECT_EQ(ref, demo.layout().fundamental());
}

TEST(Simulate, ExactReferenceCountsAreRateTimesTime) {
    const auto plan = build_full_plan(3, 3, {1, 2});
    CVector c = CVector::Zero(9);
    c(5) = 1.0;
    const StateVector psi(c, StateLayout::flat_bipartite(3, 3));
    auto shot = exact_shot();
    shot.reference_rate = 1234.5;
    shot.t_off_diagonal = 2.5;
    const auto record = simulate_counts(psi, plan, shot, 1);
    EXPECT_EQ(record.settings[plan.reference_setting].counts, 1234.5 * 2.5);
    for (const auto& m : record.monitors) EXPECT_EQ(m.counts, 1234.5 * 2.5);
}

TEST(Simulate, PoissonIsSeedReproducible) {
    const auto psi = random_pure_state(StateLayout::flat_bipartite(3, 3), 5);
    const auto plan = build_full_plan(psi.layout(), choose_reference(born_probabilities(psi), psi.layout().shape));
    const ShotModel shot;
    const auto x = simulate_counts(psi, plan, shot, 99);
    const auto y = simulate_counts(psi, plan, shot, 99);
    const auto z = simulate_counts(psi, plan, shot, 100);
    bool differs = false;
    for (std::size_t s = 0; s < plan.setting_count(); ++s) {
        EXPECT_EQ(x.settings[s].counts, y.settings[s].counts);
        EXPECT_GE(x.settings[s].counts, 0.0);
        EXPECT_EQ(x.settings[s].counts, std::floor(x.settings[s].counts));
        differs |= x.settings[s].counts != z.settings[s].counts;
    }
    EXPECT_TRUE(differs);
}

TEST(Simulate, TimelineAndDrift) {
    const auto plan = build_full_plan(StateLayout::oam_walsh(1, 0), {1, 1});
    const auto psi = random_pure_state(plan.layout, 3);
    const ShotModel shot;
    const auto record = simulate_counts(psi, plan, shot, 1);
    // Diagonal settings use the long integration time.
    for (std::size_t b = 0; b < plan.block_count(); ++b) {
        const double t = plan.entries[b].diagonal ? shot.t_diagonal : shot.t_off_diagonal;
        for (std::size_t s = plan.block_begin[b]; s < plan.block_begin[b + 1]; ++s) {
            EXPECT_EQ(record.settings[s].integration_time, t);
        }
    }
    EXPECT_GT(record.total_time(), 0.0);
    EXPECT_NEAR(shot.drift(shot.drift_period / 4.0), 1.0 + shot.drift_amplitude, 1e-15);
}

TEST(Reconstruct, ExactRoundTripSmallShapes) {
    for (std::size_t d1 = 1; d1 <= 6; ++d1) {
        for (std::size_t d2 = 1; d2 <= 6; ++d2) {
            if (d1 * d2 < 2) continue;
            const auto layout = d2 == 1 ? StateLayout::single(d1) : StateLayout::flat_bipartite(d1, d2);
            for (std::uint64_t seed = 0; seed < 100; ++seed) {
                const auto psi = random_pure_state(layout, derive_seed(seed, {d1, d2}));
                const auto ref = choose_reference(born_probabilities(psi), layout.shape);
                const auto plan = build_full_plan(layout, ref);
                const auto out = reconstruct(simulate_counts(psi, plan, exact_shot(), seed), plan);
                ASSERT_GT(pure_overlap_fidelity(out, psi), 1.0 - 1e-10) << d1 << 'x' << d2 << " seed " << seed;
            }
        }
    }
}

TEST(Reconstruct, ReferenceStateComesBackExactly) {
    CVector c = CVector::Zero(4);
    c(2) = 1.0;
    const StateVector psi(c, StateLayout::flat_bipartite(2, 2));
    const auto plan = build_full_plan(2, 2, {1, 0});
    const auto out = reconstruct(simulate_counts(psi, plan, exact_shot(), 1), plan);
    EXPECT_LT((out.coefficients() - c).norm(), 1e-15);
}

TEST(Reconstruct, MixedStateGivesReferenceColumn) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const auto rho = random_density_matrix(9, 3, 0.8, seed);
        const std::size_t a = choose_reference(rho.entries().diagonal().real());
        const auto plan = build_full_plan(StateLayout::single(9), {a, 0});
        const auto out = reconstruct(simulate_counts(rho, plan, exact_shot(), seed), plan);
        const CVector column = rho.entries().col(static_cast<Eigen::Index>(a));
        const CVector expected = column / column.norm();
        // The column is already anchored: rho(a, a) is real and positive.
        EXPECT_LT((out.coefficients() - expected).norm(), 1e-10);
    }
}

TEST(Reconstruct, UnobservedReferenceIsReported) {
    CVector c = CVector::Zero(4);
    c(3) = 1.0;
    const StateVector psi(c, StateLayout::flat_bipartite(2, 2));
    const auto plan = build_full_plan(2, 2, {0, 0});
    const auto record = simulate_counts(psi, plan, exact_shot(), 1);
    try {
        (void)reconstruct(record, plan);
        FAIL() << "expected an error";
    } catch (const Error& e) {
        EXPECT_STREQ(e.what(), "reference unobserved: choose a better reference vector");
    }
}

TEST(Reconstruct, RejectsMismatchedRecord) {
    const auto plan = build_full_plan(2, 2, {0, 0});
    const auto other = build_full_plan(3, 3, {0, 0});
    const auto record = simulate_counts(random_pure_state(other.layout, 1), other, exact_shot(), 1);
    EXPECT_THROW((void)reconstruct(record, plan), Error);
}

TEST(Reconstruct, FidelityGrowsWithCounts) {
    // Expected counts are swept through the source rate so the timeline, and
    // with it the drift seen between monitor and settings, stays fixed.
    const auto layout = StateLayout::flat_bipartite(3, 3);
    const auto psi = random_pure_state(layout, 42);
    const auto plan = build_full_plan(layout, choose_reference(born_probabilities(psi), layout.shape));
    double previous = 0.0;
    for (const double scale : {1.0, 10.0, 100.0, 1000.0}) {
        std::vector<double> fidelities;
        for (std::uint64_t seed = 0; seed < 50; ++seed) {
            ShotModel shot;
            shot.reference_rate *= scale;
            const auto record = simulate_counts(psi, plan, shot, seed);
            fidelities.push_back(pure_overlap_fidelity(reconstruct(record, plan), psi));
        }
        const double m = median(fidelities);
        EXPECT_GE(m, previous) << "scale " << scale;
        previous = m;
    }
    EXPECT_GT(previous, 0.999);
}

TEST(ErrorBounds, ZeroInExactMode) {
    const auto psi = random_pure_state(StateLayout::flat_bipartite(3, 2), 8);
    const auto plan = build_full_plan(psi.layout(), choose_reference(born_probabilities(psi), psi.layout().shape));
    for (const auto& e : error_bounds(simulate_counts(psi, plan, exact_shot(), 1), plan)) {
        EXPECT_EQ(e.sigma_amplitude, 0.0);
        EXPECT_EQ(e.sigma_phase, 0.0);
    }
}

TEST(ErrorBounds, ShrinkWithIntegrationTime) {
    const auto psi = random_pure_state(StateLayout::flat_bipartite(3, 3), 8);
    const auto plan = build_full_plan(psi.layout(), choose_reference(born_probabilities(psi), psi.layout().shape));
    ShotModel shot;
    shot.drift_amplitude = 0.0;
    double short_sum = 0.0;
    double long_sum = 0.0;
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        for (const auto& e : error_bounds(simulate_counts(psi, plan, shot, seed), plan)) short_sum += e.sigma_amplitude;
        for (const auto& e : error_bounds(simulate_counts(psi, plan, shot.scaled_times(4.0), seed), plan))
            long_sum += e.sigma_amplitude;
    }
    EXPECT_NEAR(short_sum / long_sum, 2.0, 0.1);
}

TEST(ShotModel, Validation) {
    ShotModel s;
    s.reference_rate = 0.0;
    EXPECT_THROW(s.validate(), Error);
    s = {};
    s.drift_amplitude = 1.0;
    EXPECT_THROW(s.validate(), Error);
    EXPECT_EQ(noise_mode_from_string("exact"), NoiseMode::exact);
    EXPECT_EQ(noise_mode_from_string("poisson"), NoiseMode::poisson);
    EXPECT_THROW(noise_mode_from_string("gauss"), Error);
}

} // namespace
} // namespace qdirect
