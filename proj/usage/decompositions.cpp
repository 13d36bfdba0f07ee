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

// Projector decompositions of |a><j|: the analytic recipes, and a numerical
// search for a three-projector decomposition of |0><1| on a qubit.

#include <cstdio>

#include "qdirect/qdirect.hpp"

namespace {

void show(const qdirect::ProjectorDecomposition& dec) {
    std::printf("%s: %zu terms, residual %.2e\n", qdirect::to_string(dec.kind), dec.terms.size(), dec.residual);
    for (const auto& t : dec.terms) {
        std::printf("  w = %+.4f %+.4fi\n", t.weight.real(), t.weight.imag());
    }
}

} // namespace

int main() {
    using namespace qdirect;

    show(pauli_decomposition());
    show(three_projector_decomposition(0, 2, 5));
    show(five_projector_joint_decomposition(0, 0, 1, 2, 3, 3));
    show(special_case_decomposition(0, 0, 0, 2, 3, 3));

    DESearchConfig cfg;
    cfg.seed = 4;
    DESearchTrace trace;
    const auto found = de_search(ColumnOperator({2, 1}, {0, 0}, {1, 0}), cfg, &trace);
    std::printf("search converged=%d after %zu generations\n", found.converged ? 1 : 0, trace.generations);
    show(found);
    return 0;
}
