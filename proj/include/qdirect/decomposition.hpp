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
 * Complex-weighted projector decompositions of column operators |a><j|.
 *
 * A column operator is not Hermitian, so its expectation value cannot be read
 * off a single detector. Written as sum_q w_q |s_q><s_q|, its expectation is
 * the weighted sum of projector outcomes, each of which is a count rate.
 *
 * The analytic constructors use directions of the form
 * (|a> + e^{i theta_q} |j>) / sqrt(2) and are exact; de_search() finds
 * decompositions numerically for arbitrary targets.
 */

#pragma once

#include <array>
#include <cmath>
#include <map>
#include <numbers>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/SparseCore>

#include "qdirect/core.hpp"

namespace qdirect {

/// Column operator |a><j| on a (possibly bipartite) space.
struct ColumnOperator {
    Shape shape;
    BasisIndex reference;
    BasisIndex target;

    ColumnOperator(Shape s, BasisIndex a, BasisIndex j) : shape(s), reference(a), target(j) {
        if (!a.valid(s) || !j.valid(s)) {
            throw Error("column operator index out of range");
        }
    }

    [[nodiscard]] std::size_t dim() const { return shape.dim(); }
    [[nodiscard]] std::size_t row() const { return reference.flat(shape); }
    [[nodiscard]] std::size_t col() const { return target.flat(shape); }
    [[nodiscard]] bool hermitian() const { return reference == target; }

    [[nodiscard]] CMatrix dense() const {
        CMatrix m = CMatrix::Zero(static_cast<Eigen::Index>(dim()), static_cast<Eigen::Index>(dim()));
        m(static_cast<Eigen::Index>(row()), static_cast<Eigen::Index>(col())) = 1.0;
        return m;
    }
};

/// Direction on one subsystem supported on at most two basis states.
struct LocalDirection {
    std::size_t dim = 1;
    std::array<std::size_t, 2> index{0, 0};
    std::array<Complex, 2> amplitude{Complex(1.0), Complex(0.0)};
    std::size_t support = 1;

    static LocalDirection basis(std::size_t dim, std::size_t i) {
        return {dim, {i, i}, {Complex(1.0), Complex(0.0)}, 1};
    }

    /// (|a> + e^{i phase} |j>) / sqrt(2)
    static LocalDirection superposition(std::size_t dim, std::size_t a, std::size_t j, double phase) {
        const double h = 1.0 / std::numbers::sqrt2;
        return {dim, {a, j}, {Complex(h), std::polar(h, phase)}, 2};
    }

    [[nodiscard]] CVector dense() const {
        CVector v = CVector::Zero(static_cast<Eigen::Index>(dim));
        for (std::size_t t = 0; t < support; ++t) {
            v(static_cast<Eigen::Index>(index[t])) += amplitude[t];
        }
        return v;
    }

    friend bool operator==(const LocalDirection& x, const LocalDirection& y) {
        if (x.dim != y.dim || x.support != y.support) {
            return false;
        }
        for (std::size_t t = 0; t < x.support; ++t) {
            if (x.index[t] != y.index[t] || x.amplitude[t] != y.amplitude[t]) {
                return false;
            }
        }
        return true;
    }
};

/// One weighted product projector w |s1><s1| (x) |s2><s2|.
struct ProductTerm {
    Complex weight;
    LocalDirection first;
    LocalDirection second;
};

enum class DecompositionKind { pauli, three_projector, five_projector, special_case, reference_projector, searched };

inline const char* to_string(DecompositionKind kind) {
    switch (kind) {
    case DecompositionKind::pauli: return "pauli";
    case DecompositionKind::three_projector: return "three_projector";
    case DecompositionKind::five_projector: return "five_projector";
    case DecompositionKind::special_case: return "special_case";
    case DecompositionKind::reference_projector: return "reference_projector";
    case DecompositionKind::searched: return "searched";
    }
    return "unknown";
}

inline DecompositionKind decomposition_kind_from_string(const std::string& name) {
    for (auto kind : {DecompositionKind::pauli, DecompositionKind::three_projector, DecompositionKind::five_projector,
                      DecompositionKind::special_case, DecompositionKind::reference_projector,
                      DecompositionKind::searched}) {
        if (name == to_string(kind)) {
            return kind;
        }
    }
    throw Error("unknown decomposition kind '" + name + "'");
}

using SparseState = Eigen::SparseVector<Complex>;

struct ProjectorTerm {
    Complex weight;
    SparseState direction;
    std::optional<std::pair<SparseState, SparseState>> local_factors;

    [[nodiscard]] StateVector direction_state(const StateLayout& layout) const {
        return StateVector(CVector(direction), layout);
    }
};

struct ProjectorDecomposition {
    DecompositionKind kind = DecompositionKind::searched;
    Shape shape;
    bool joint = false;
    BasisIndex reference;
    BasisIndex target;
    std::vector<ProjectorTerm> terms;
    double tolerance = 0.0;  ///< residual bound recorded at construction
    double residual = 0.0;
    bool converged = true;

    [[nodiscard]] std::size_t dim() const { return shape.dim(); }
    [[nodiscard]] ColumnOperator target_operator() const { return {shape, reference, target}; }

    [[nodiscard]] CMatrix dense_sum() const {
        CMatrix m = CMatrix::Zero(static_cast<Eigen::Index>(dim()), static_cast<Eigen::Index>(dim()));
        for (const auto& term : terms) {
            const CVector s(term.direction);
            m += term.weight * s * s.adjoint();
        }
        return m;
    }

    [[nodiscard]] Complex weight_sum() const {
        Complex total = 0.0;
        for (const auto& term : terms) {
            total += term.weight;
        }
        return total;
    }
};

namespace detail {

inline SparseState to_sparse(const LocalDirection& d) {
    SparseState v(static_cast<Eigen::Index>(d.dim));
    for (std::size_t t = 0; t < d.support; ++t) {
        v.coeffRef(static_cast<Eigen::Index>(d.index[t])) += d.amplitude[t];
    }
    return v;
}

inline SparseState kron(const SparseState& x, const SparseState& y) {
    SparseState out(x.size() * y.size());
    for (SparseState::InnerIterator i(x); i; ++i) {
        for (SparseState::InnerIterator k(y); k; ++k) {
            out.coeffRef(i.index() * y.size() + k.index()) += i.value() * k.value();
        }
    }
    return out;
}

} // namespace detail

/// Frobenius norm || sum_q w_q |s_q><s_q| - |a><j| ||_F, accumulated over the
/// sparse support so it stays cheap for very large joint dimensions.
inline double residual(const ProjectorDecomposition& dec, const ColumnOperator& target) {
    require_same_dim(dec.dim(), target.dim());
    std::map<std::pair<Eigen::Index, Eigen::Index>, Complex> entries;
    for (const auto& term : dec.terms) {
        for (SparseState::InnerIterator r(term.direction); r; ++r) {
            for (SparseState::InnerIterator c(term.direction); c; ++c) {
                entries[{r.index(), c.index()}] += term.weight * r.value() * std::conj(c.value());
            }
        }
    }
    entries[{static_cast<Eigen::Index>(target.row()), static_cast<Eigen::Index>(target.col())}] -= 1.0;
    double sum = 0.0;
    for (const auto& [key, value] : entries) {
        sum += std::norm(value);
    }
    return std::sqrt(sum);
}

namespace recipe {

/// Weights and local directions for |a><j| on one system with three
/// projectors. The directions advance in phase by 4 pi / 3 and the weights
/// by -2 pi / 3 so the sum is |a><j| (advancing both with the same sign gives
/// the adjoint |j><a|).
inline std::vector<std::pair<Complex, LocalDirection>> three_projector(std::size_t dim, std::size_t a,
                                                                       std::size_t j) {
    std::vector<std::pair<Complex, LocalDirection>> terms;
    terms.reserve(3);
    for (int q = 0; q < 3; ++q) {
        const Complex weight = std::polar(2.0 / 3.0, -2.0 * std::numbers::pi * q / 3.0);
        terms.emplace_back(weight, LocalDirection::superposition(dim, a, j, 4.0 * std::numbers::pi * q / 3.0));
    }
    return terms;
}

/// Column operator |a1 a2><j1 j2| with j1 != a1 and j2 != a2 as five
/// weighted product projectors.
inline std::vector<ProductTerm> five_projector(const Shape& shape, const BasisIndex& a, const BasisIndex& j) {
    std::vector<ProductTerm> terms;
    terms.reserve(5);
    for (int q = 0; q < 5; ++q) {
        const double phase = 4.0 * std::numbers::pi * q / 5.0;
        terms.push_back({std::polar(4.0 / 5.0, -2.0 * std::numbers::pi * q / 5.0),
                         LocalDirection::superposition(shape.first, a.first, j.first, phase),
                         LocalDirection::superposition(shape.second, a.second, j.second, phase)});
    }
    return terms;
}

/// Exactly one subsystem sits on its reference: that side carries the
/// reference projector, the other the three-projector decomposition.
inline std::vector<ProductTerm> special_case(const Shape& shape, const BasisIndex& a, const BasisIndex& j) {
    std::vector<ProductTerm> terms;
    terms.reserve(3);
    if (j.first == a.first) {
        for (const auto& [w, d] : three_projector(shape.second, a.second, j.second)) {
            terms.push_back({w, LocalDirection::basis(shape.first, a.first), d});
        }
    } else {
        for (const auto& [w, d] : three_projector(shape.first, a.first, j.first)) {
            terms.push_back({w, d, LocalDirection::basis(shape.second, a.second)});
        }
    }
    return terms;
}

inline std::vector<ProductTerm> reference_projector(const Shape& shape, const BasisIndex& a) {
    return {{Complex(1.0), LocalDirection::basis(shape.first, a.first), LocalDirection::basis(shape.second, a.second)}};
}

/// The decomposition path for a joint column operator.
inline DecompositionKind joint_kind(const BasisIndex& a, const BasisIndex& j) {
    const bool first_matches = a.first == j.first;
    const bool second_matches = a.second == j.second;
    if (first_matches && second_matches) {
        return DecompositionKind::reference_projector;
    }
    if (first_matches || second_matches) {
        return DecompositionKind::special_case;
    }
    return DecompositionKind::five_projector;
}

/// Product terms for any joint column operator. A single system is the
/// shape d x 1, for which the five-projector path never applies.
inline std::vector<ProductTerm> joint(const Shape& shape, const BasisIndex& a, const BasisIndex& j) {
    switch (joint_kind(a, j)) {
    case DecompositionKind::reference_projector: return reference_projector(shape, a);
    case DecompositionKind::special_case: return special_case(shape, a, j);
    default: return five_projector(shape, a, j);
    }
}

} // namespace recipe

namespace detail {

inline constexpr double kAnalyticTolerance = 1e-13;

inline ProjectorDecomposition assemble(DecompositionKind kind, const Shape& shape, bool joint, const BasisIndex& a,
                                       const BasisIndex& j, const std::vector<ProductTerm>& product_terms) {
    ProjectorDecomposition dec;
    dec.kind = kind;
    dec.shape = shape;
    dec.joint = joint;
    dec.reference = a;
    dec.target = j;
    dec.tolerance = kAnalyticTolerance;
    for (const auto& t : product_terms) {
        ProjectorTerm term;
        term.weight = t.weight;
        const auto first = to_sparse(t.first);
        const auto second = to_sparse(t.second);
        term.direction = kron(first, second);
        if (joint) {
            term.local_factors = std::make_pair(first, second);
        }
        dec.terms.push_back(std::move(term));
    }
    dec.residual = residual(dec, dec.target_operator());
    if (dec.residual >= dec.tolerance) {
        throw Error("internal: analytic decomposition residual " + std::to_string(dec.residual) +
                    " exceeds tolerance");
    }
    return dec;
}

} // namespace detail

/// |0><1| = (sigma_x + i sigma_y) / 2 on a qubit, as four eigenprojectors.
inline ProjectorDecomposition pauli_decomposition() {
    const Shape shape{2, 1};
    const double h = 1.0 / std::numbers::sqrt2;
    const auto dir = [&](Complex second) {
        return LocalDirection{2, {0, 1}, {Complex(h), h * second}, 2};
    };
    const auto unit = LocalDirection::basis(1, 0);
    const std::vector<ProductTerm> terms{
        {Complex(0.5), dir(Complex(1.0)), unit},
        {Complex(-0.5), dir(Complex(-1.0)), unit},
        {Complex(0.0, 0.5), dir(Complex(0.0, 1.0)), unit},
        {Complex(0.0, -0.5), dir(Complex(0.0, -1.0)), unit},
    };
    return detail::assemble(DecompositionKind::pauli, shape, false, {0, 0}, {1, 0}, terms);
}

inline ProjectorDecomposition three_projector_decomposition(std::size_t a, std::size_t j, std::size_t d) {
    if (d < 2) {
        throw Error("three-projector decomposition needs dimension >= 2");
    }
    if (a >= d || j >= d) {
        throw Error("basis index out of range");
    }
    if (a == j) {
        throw Error("target equals the reference: |a><a| is a projector, use the single-projector path");
    }
    const Shape shape{d, 1};
    std::vector<ProductTerm> terms;
    for (const auto& [w, dir] : recipe::three_projector(d, a, j)) {
        terms.push_back({w, dir, LocalDirection::basis(1, 0)});
    }
    return detail::assemble(DecompositionKind::three_projector, shape, false, {a, 0}, {j, 0}, terms);
}

inline ProjectorDecomposition five_projector_joint_decomposition(std::size_t a1, std::size_t a2, std::size_t j1,
                                                                 std::size_t j2, std::size_t d1, std::size_t d2) {
    const Shape shape{d1, d2};
    const BasisIndex a{a1, a2};
    const BasisIndex j{j1, j2};
    if (!a.valid(shape) || !j.valid(shape)) {
        throw Error("basis index out of range");
    }
    if (j1 == a1 || j2 == a2) {
        throw Error("five-projector decomposition requires both subsystems to differ from the reference; "
                    "use special_case_decomposition");
    }
    return detail::assemble(DecompositionKind::five_projector, shape, true, a, j, recipe::five_projector(shape, a, j));
}

inline ProjectorDecomposition special_case_decomposition(std::size_t a1, std::size_t a2, std::size_t j1,
                                                         std::size_t j2, std::size_t d1, std::size_t d2) {
    const Shape shape{d1, d2};
    const BasisIndex a{a1, a2};
    const BasisIndex j{j1, j2};
    if (!a.valid(shape) || !j.valid(shape)) {
        throw Error("basis index out of range");
    }
    if (recipe::joint_kind(a, j) != DecompositionKind::special_case) {
        throw Error("special-case decomposition requires exactly one subsystem on its reference");
    }
    return detail::assemble(DecompositionKind::special_case, shape, true, a, j, recipe::special_case(shape, a, j));
}

inline ProjectorDecomposition reference_projector_decomposition(const Shape& shape, const BasisIndex& a) {
    if (!a.valid(shape)) {
        throw Error("basis index out of range");
    }
    return detail::assemble(DecompositionKind::reference_projector, shape, shape.second > 1, a, a,
                            recipe::reference_projector(shape, a));
}

inline ProjectorDecomposition reference_projector_decomposition(std::size_t a, std::size_t d) {
    return reference_projector_decomposition(Shape{d, 1}, BasisIndex{a, 0});
}

/// Whichever analytic path applies to |a><j| on the given shape.
inline ProjectorDecomposition analytic_decomposition(const Shape& shape, const BasisIndex& a, const BasisIndex& j) {
    if (!a.valid(shape) || !j.valid(shape)) {
        throw Error("basis index out of range");
    }
    const auto kind = recipe::joint_kind(a, j);
    const bool joint = shape.second > 1;
    if (!joint && kind == DecompositionKind::special_case) {
        return three_projector_decomposition(a.first, j.first, shape.first);
    }
    return detail::assemble(kind, shape, joint, a, j, recipe::joint(shape, a, j));
}

/// Weighted sum of expectations sum_q w_q <s_q|rho|s_q>; equals <a|...|j>
/// expectation of the column operator, i.e. <Psi|a> c_j for a pure state.
inline Complex weighted_expectation(const ProjectorDecomposition& dec, const StateVector& psi) {
    require_same_dim(dec.dim(), psi.dim());
    Complex total = 0.0;
    for (const auto& term : dec.terms) {
        Complex overlap = 0.0;
        for (SparseState::InnerIterator it(term.direction); it; ++it) {
            overlap += std::conj(it.value()) * psi[static_cast<std::size_t>(it.index())];
        }
        total += term.weight * std::norm(overlap);
    }
    return total;
}

inline Complex weighted_expectation(const ProjectorDecomposition& dec, const DensityMatrix& rho) {
    require_same_dim(dec.dim(), rho.dim());
    Complex total = 0.0;
    for (const auto& term : dec.terms) {
        Complex value = 0.0;
        for (SparseState::InnerIterator r(term.direction); r; ++r) {
            for (SparseState::InnerIterator c(term.direction); c; ++c) {
                value += std::conj(r.value()) * rho(static_cast<std::size_t>(r.index()),
                                                   static_cast<std::size_t>(c.index())) * c.value();
            }
        }
        total += term.weight * value.real();
    }
    return total;
}

} // namespace qdirect
