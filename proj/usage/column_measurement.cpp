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

// Measure every coefficient of a random 3x3 two-photon state, with and
// without shot noise, and compare the reconstruction with the truth.

#include <cstdio>

#include "qdirect/qdirect.hpp"

int main() {
    using namespace qdirect;

    const auto truth = random_pure_state(StateLayout::flat_bipartite(3, 3), 7);
    const auto reference = choose_reference(born_probabilities(truth), truth.layout().shape);
    const auto plan = build_full_plan(truth.layout(), reference);
    std::printf("reference (%zu,%zu), %zu settings, %zu blocks\n", reference.first, reference.second,
                plan.setting_count(), plan.block_count());

    ShotModel shot;
    shot.noise = NoiseMode::exact;
    const auto exact = reconstruct(simulate_counts(truth, plan, shot, 1), plan);
    std::printf("exact counts:   fidelity %.12f\n", pure_overlap_fidelity(exact, truth));

    shot.noise = NoiseMode::poisson;
    for (const double factor : {1.0, 10.0, 100.0}) {
        const auto scaled = shot.scaled_times(factor);
        const auto record = simulate_counts(truth, plan, scaled, 1);
        const auto psi = reconstruct(record, plan);
        const auto errors = error_bounds(record, plan);
        std::printf("poisson x%-5g fidelity %.6f  sigma|c_ref| %.4f  (%.1f h simulated)\n", factor,
                    pure_overlap_fidelity(psi, truth), errors[reference.flat(plan.layout.shape)].sigma_amplitude,
                    record.total_time() / 3600.0);
    }
    return 0;
}
