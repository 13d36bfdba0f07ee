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
 * Value types for pure and mixed states over a finite (optionally bipartite)
 * basis, together with the exact linear-algebra routines used everywhere
 * else: Born-rule expectations, fidelity, purity, dominant eigenvectors and
 * Schmidt analysis.
 */

#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace qdirect {

using Complex = std::complex<double>;
using CVector = Eigen::VectorXcd;
using CMatrix = Eigen::MatrixXcd;
using RVector = Eigen::VectorXd;

/// Raised for every contract violation in the library.
class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

namespace tolerance {
inline constexpr double construction = 1e-12;
inline constexpr double derived = 1e-10;
inline constexpr double eigen_floor = 1e-10;
} // namespace tolerance

/// Subsystem dimensions. A single system of dimension d is the shape d x 1.
struct Shape {
    std::size_t first = 1;
    std::size_t second = 1;

    [[nodiscard]] std::size_t dim() const { return first * second; }
    friend bool operator==(const Shape&, const Shape&) = default;
};

/// Joint basis label (j1, j2); for a single system j2 is always 0.
struct BasisIndex {
    std::size_t first = 0;
    std::size_t second = 0;

    static BasisIndex from_flat(std::size_t j, const Shape& shape) {
        if (j >= shape.dim()) {
            throw Error("basis index " + std::to_string(j) + " out of range for dimension " +
                        std::to_string(shape.dim()));
        }
        return {j / shape.second, j % shape.second};
    }

    [[nodiscard]] std::size_t flat(const Shape& shape) const {
        if (!valid(shape)) {
            throw Error("basis index (" + std::to_string(first) + "," + std::to_string(second) +
                        ") out of range for shape " + std::to_string(shape.first) + "x" +
                        std::to_string(shape.second));
        }
        return first * shape.second + second;
    }

    [[nodiscard]] bool valid(const Shape& shape) const {
        return first < shape.first && second < shape.second;
    }

    friend bool operator==(const BasisIndex&, const BasisIndex&) = default;
};

/// Per-photon enumeration of (l, k) modes with l in [-L, L] and k in [0, K]:
/// index = (l + L) * (K + 1) + k.
struct OamWalshBasis {
    int max_oam = 0;
    int max_radial = 0;

    struct Mode {
        int oam = 0;
        int radial = 0;
        friend bool operator==(const Mode&, const Mode&) = default;
    };

    [[nodiscard]] std::size_t dim() const {
        return static_cast<std::size_t>(2 * max_oam + 1) * static_cast<std::size_t>(max_radial + 1);
    }

    [[nodiscard]] std::size_t index(int oam, int radial) const {
        if (std::abs(oam) > max_oam || radial < 0 || radial > max_radial) {
            throw Error("mode (l=" + std::to_string(oam) + ", k=" + std::to_string(radial) +
                        ") outside the basis");
        }
        return static_cast<std::size_t>(oam + max_oam) * static_cast<std::size_t>(max_radial + 1) +
               static_cast<std::size_t>(radial);
    }

    [[nodiscard]] Mode mode(std::size_t index) const {
        if (index >= dim()) {
            throw Error("mode index out of range");
        }
        const auto per_oam = static_cast<std::size_t>(max_radial + 1);
        return {static_cast<int>(index / per_oam) - max_oam, static_cast<int>(index % per_oam)};
    }
};

enum class BasisKind { flat, oam_walsh };

/// How a coefficient vector is indexed: dimensions, whether the state is
/// bipartite, and which physical labelling the indices carry.
struct StateLayout {
    Shape shape;
    bool bipartite = false;
    BasisKind basis = BasisKind::flat;
    OamWalshBasis modes;

    static StateLayout single(std::size_t d) { return {{d, 1}, false, BasisKind::flat, {}}; }

    static StateLayout flat_bipartite(std::size_t d1, std::size_t d2) {
        return {{d1, d2}, true, BasisKind::flat, {}};
    }

    static StateLayout oam_walsh(int max_oam, int max_radial) {
        OamWalshBasis modes{max_oam, max_radial};
        return {{modes.dim(), modes.dim()}, true, BasisKind::oam_walsh, modes};
    }

    [[nodiscard]] std::size_t dim() const { return shape.dim(); }

    /// Joint modes on the correlated diagonal (l1 = -l2, k1 = k2 for OAM-Walsh,
    /// j1 = j2 for flat bipartite). Single systems have no diagonal.
    [[nodiscard]] bool is_diagonal(const BasisIndex& index) const {
        if (!bipartite) {
            return false;
        }
        if (basis == BasisKind::oam_walsh) {
            const auto m1 = modes.mode(index.first);
            const auto m2 = modes.mode(index.second);
            return m1.oam == -m2.oam && m1.radial == m2.radial;
        }
        return index.first == index.second;
    }

    /// The fundamental mode (l1 = l2 = k1 = k2 = 0) or index (0, 0).
    [[nodiscard]] BasisIndex fundamental() const {
        if (basis == BasisKind::oam_walsh) {
            const auto zero = modes.index(0, 0);
            return {zero, zero};
        }
        return {0, 0};
    }

    friend bool operator==(const StateLayout& a, const StateLayout& b) {
        return a.shape == b.shape && a.bipartite == b.bipartite && a.basis == b.basis &&
               (a.basis == BasisKind::flat ||
                (a.modes.max_oam == b.modes.max_oam && a.modes.max_radial == b.modes.max_radial));
    }
};

inline void require_same_dim(std::size_t a, std::size_t b) {
    if (a != b) {
        throw Error("dimension mismatch: " + std::to_string(a) + " vs " + std::to_string(b));
    }
}

/// Unit-norm coefficient vector. Immutable once built.
class StateVector {
  public:
    StateVector(CVector coefficients, StateLayout layout)
        : coefficients_(std::move(coefficients)), layout_(layout) {
        require_same_dim(static_cast<std::size_t>(coefficients_.size()), layout_.dim());
        if (std::abs(coefficients_.norm() - 1.0) > tolerance::construction) {
            throw Error("state vector is not unit norm");
        }
    }

    explicit StateVector(CVector coefficients)
        : StateVector(coefficients, StateLayout::single(static_cast<std::size_t>(coefficients.size()))) {}

    [[nodiscard]] std::size_t dim() const { return static_cast<std::size_t>(coefficients_.size()); }
    [[nodiscard]] const CVector& coefficients() const { return coefficients_; }
    [[nodiscard]] const StateLayout& layout() const { return layout_; }
    [[nodiscard]] Complex operator[](std::size_t j) const { return coefficients_(static_cast<Eigen::Index>(j)); }
    [[nodiscard]] Complex at(const BasisIndex& j) const { return (*this)[j.flat(layout_.shape)]; }

  private:
    CVector coefficients_;
    StateLayout layout_;
};

/// Hermitian, positive semidefinite, unit-trace matrix.
class DensityMatrix {
  public:
    explicit DensityMatrix(CMatrix entries) : entries_(std::move(entries)) {
        if (entries_.rows() != entries_.cols() || entries_.rows() == 0) {
            throw Error("density matrix must be square and non-empty");
        }
        if ((entries_ - entries_.adjoint()).norm() >= tolerance::construction) {
            throw Error("density matrix is not Hermitian");
        }
        if (std::abs(entries_.trace() - Complex(1.0)) > tolerance::construction) {
            throw Error("density matrix trace differs from 1");
        }
        Eigen::SelfAdjointEigenSolver<CMatrix> solver(entries_, Eigen::EigenvaluesOnly);
        if (solver.eigenvalues().minCoeff() < -tolerance::eigen_floor) {
            throw Error("density matrix has a negative eigenvalue");
        }
    }

    static DensityMatrix pure(const StateVector& psi) {
        const CMatrix rho = psi.coefficients() * psi.coefficients().adjoint();
        // Outer products are Hermitian only up to rounding; symmetrize exactly.
        return DensityMatrix(0.5 * (rho + rho.adjoint()));
    }

    [[nodiscard]] std::size_t dim() const { return static_cast<std::size_t>(entries_.rows()); }
    [[nodiscard]] const CMatrix& entries() const { return entries_; }
    [[nodiscard]] Complex operator()(std::size_t m, std::size_t n) const {
        return entries_(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(n));
    }

  private:
    CMatrix entries_;
};

class HermitianObservable {
  public:
    explicit HermitianObservable(CMatrix entries) : entries_(std::move(entries)) {
        if (entries_.rows() != entries_.cols()) {
            throw Error("observable must be square");
        }
        if ((entries_ - entries_.adjoint()).norm() >= tolerance::construction) {
            throw Error("observable is not Hermitian");
        }
    }

    /// |s><s| for a unit direction s.
    static HermitianObservable projector(const CVector& direction) {
        if (std::abs(direction.norm() - 1.0) > tolerance::construction) {
            throw Error("projector direction is not unit norm");
        }
        const CMatrix p = direction * direction.adjoint();
        return HermitianObservable(0.5 * (p + p.adjoint()));
    }

    static HermitianObservable projector(const StateVector& direction) {
        return projector(direction.coefficients());
    }

    [[nodiscard]] std::size_t dim() const { return static_cast<std::size_t>(entries_.rows()); }
    [[nodiscard]] const CMatrix& entries() const { return entries_; }

  private:
    CMatrix entries_;
};

namespace detail {

inline std::size_t largest_magnitude_index(const CVector& v) {
    std::size_t best = 0;
    double best_abs = -1.0;
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        const double a = std::abs(v(i));
        if (a > best_abs) {
            best_abs = a;
            best = static_cast<std::size_t>(i);
        }
    }
    return best;
}

inline double real_or_throw(Complex value, const char* what) {
    if (std::abs(value.imag()) > tolerance::derived * std::max(1.0, std::abs(value.real()))) {
        throw Error(std::string(what) + " has a non-negligible imaginary part");
    }
    return value.real();
}

} // namespace detail

/// Scale to unit norm and rotate the global phase so that the anchor
/// coefficient is real and non-negative. When the anchor coefficient is
/// exactly zero the largest-magnitude coefficient (lowest index) is used.
/// Applying it twice is the identity.
inline StateVector normalize(CVector v, std::size_t anchor, const StateLayout& layout) {
    require_same_dim(static_cast<std::size_t>(v.size()), layout.dim());
    if (anchor >= layout.dim()) {
        throw Error("anchor index out of range");
    }
    const double norm = v.norm();
    if (!(norm > 0.0) || !std::isfinite(norm)) {
        throw Error("degenerate state");
    }

    auto phase_index = static_cast<Eigen::Index>(anchor);
    if (v(phase_index) == Complex(0.0)) {
        phase_index = static_cast<Eigen::Index>(detail::largest_magnitude_index(v));
    }
    const Complex pivot = v(phase_index);
    if (pivot.imag() != 0.0 || pivot.real() < 0.0) {
        const Complex rotation = std::conj(pivot) / std::abs(pivot);
        v *= rotation;
        v(phase_index) = Complex(std::abs(pivot), 0.0);
    }

    // Iterate to a fixed point so a second call sees the same norm and stops.
    for (int pass = 0; pass < 4; ++pass) {
        const double n = v.norm();
        if (std::abs(n - 1.0) <= 1e-14) {
            break;
        }
        v /= n;
    }
    return StateVector(std::move(v), layout);
}

inline StateVector normalize(CVector v, const BasisIndex& anchor, const StateLayout& layout) {
    return normalize(std::move(v), anchor.flat(layout.shape), layout);
}

inline StateVector normalize(CVector v, std::size_t anchor = 0) {
    const auto layout = StateLayout::single(static_cast<std::size_t>(v.size()));
    return normalize(std::move(v), anchor, layout);
}

inline double expectation(const StateVector& psi, const HermitianObservable& obs) {
    require_same_dim(psi.dim(), obs.dim());
    const Complex value = psi.coefficients().dot(obs.entries() * psi.coefficients());
    return detail::real_or_throw(value, "expectation value");
}

inline double expectation(const DensityMatrix& rho, const HermitianObservable& obs) {
    require_same_dim(rho.dim(), obs.dim());
    const Complex value = (rho.entries() * obs.entries()).trace();
    return detail::real_or_throw(value, "expectation value");
}

/// <Psi|a> c_j for a pure state; <j|rho|a> for a mixed state.
inline Complex column_expectation(const StateVector& psi, const BasisIndex& j, const BasisIndex& a) {
    const auto& shape = psi.layout().shape;
    return std::conj(psi[a.flat(shape)]) * psi[j.flat(shape)];
}

inline Complex column_expectation(const StateVector& psi, std::size_t j, std::size_t a) {
    if (j >= psi.dim() || a >= psi.dim()) {
        throw Error("basis index out of range");
    }
    return std::conj(psi[a]) * psi[j];
}

inline Complex column_expectation(const DensityMatrix& rho, std::size_t j, std::size_t a) {
    if (j >= rho.dim() || a >= rho.dim()) {
        throw Error("basis index out of range");
    }
    return rho(j, a);
}

/// sqrt(<psi|rho|psi>), clamped to [0, 1].
inline double fidelity(const StateVector& psi, const DensityMatrix& rho) {
    require_same_dim(psi.dim(), rho.dim());
    const Complex value = psi.coefficients().dot(rho.entries() * psi.coefficients());
    const double overlap = detail::real_or_throw(value, "fidelity");
    return std::clamp(std::sqrt(std::max(overlap, 0.0)), 0.0, 1.0);
}

/// |<psi|phi>|, clamped to [0, 1].
inline double pure_overlap_fidelity(const StateVector& psi, const StateVector& phi) {
    require_same_dim(psi.dim(), phi.dim());
    return std::clamp(std::abs(psi.coefficients().dot(phi.coefficients())), 0.0, 1.0);
}

/// Tr(rho^2), computed as the squared Frobenius norm of a Hermitian matrix.
inline double purity(const DensityMatrix& rho) { return rho.entries().squaredNorm(); }

struct EigenResult {
    StateVector vector;
    double eigenvalue;
    bool degenerate;
};

/// Eigenvector of the largest eigenvalue. When the top eigenvalue is
/// degenerate (gap < 1e-10) the result is flagged and the vector is the
/// projection of the basis state with the largest weight in the top
/// eigenspace (lowest index on ties).
inline EigenResult dominant_eigenvector(const DensityMatrix& rho) {
    Eigen::SelfAdjointEigenSolver<CMatrix> solver(rho.entries());
    if (solver.info() != Eigen::Success) {
        throw Error("eigendecomposition failed");
    }
    const auto& values = solver.eigenvalues();
    const auto& vectors = solver.eigenvectors();
    const Eigen::Index n = values.size();
    const double top = values(n - 1);

    Eigen::Index first_in_top = n - 1;
    while (first_in_top > 0 && top - values(first_in_top - 1) < 1e-10) {
        --first_in_top;
    }
    const auto layout = StateLayout::single(rho.dim());
    if (first_in_top == n - 1) {
        return {normalize(vectors.col(n - 1), 0, layout), top, false};
    }

    const CMatrix basis = vectors.rightCols(n - first_in_top);
    const CMatrix projector = basis * basis.adjoint();
    Eigen::Index pick = 0;
    double best = -1.0;
    for (Eigen::Index m = 0; m < n; ++m) {
        const double weight = projector(m, m).real();
        if (weight > best + 1e-12) {
            best = weight;
            pick = m;
        }
    }
    return {normalize(projector.col(pick), 0, layout), top, true};
}

inline RVector born_probabilities(const StateVector& psi) { return psi.coefficients().cwiseAbs2(); }

struct SchmidtResult {
    RVector values;   ///< descending, non-negative
    CMatrix left;     ///< columns are first-subsystem modes
    CMatrix right;    ///< columns are second-subsystem modes
    double schmidt_number = 0.0;

    /// Number of Schmidt probabilities above the cutoff.
    [[nodiscard]] std::size_t thresholded_rank(double cutoff = 1e-10) const {
        return static_cast<std::size_t>((values.array().square() > cutoff).count());
    }
};

/// Coefficients reshaped to the first x second matrix M(j1, j2).
inline CMatrix coefficient_matrix(const StateVector& psi) {
    const auto& shape = psi.layout().shape;
    CMatrix m(static_cast<Eigen::Index>(shape.first), static_cast<Eigen::Index>(shape.second));
    for (std::size_t j1 = 0; j1 < shape.first; ++j1) {
        for (std::size_t j2 = 0; j2 < shape.second; ++j2) {
            m(static_cast<Eigen::Index>(j1), static_cast<Eigen::Index>(j2)) = psi[j1 * shape.second + j2];
        }
    }
    return m;
}

/// Participation ratio 1 / sum p_i^2 of the Schmidt probabilities p_i = lambda_i^2.
inline double participation_ratio(const RVector& singular_values) {
    const RVector p = singular_values.array().square();
    const double total = p.sum();
    const double sum_sq = (p / total).squaredNorm();
    return 1.0 / sum_sq;
}

inline SchmidtResult schmidt_decompose(const StateVector& psi) {
    if (!psi.layout().bipartite) {
        throw Error("Schmidt decomposition requires a bipartite state");
    }
    Eigen::BDCSVD<CMatrix> svd(coefficient_matrix(psi), Eigen::ComputeThinU | Eigen::ComputeThinV);
    SchmidtResult result;
    result.values = svd.singularValues();
    result.left = svd.matrixU();
    result.right = svd.matrixV();
    result.schmidt_number = participation_ratio(result.values);
    return result;
}

} // namespace qdirect
