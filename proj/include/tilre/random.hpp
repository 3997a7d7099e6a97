#pragma once
// Seeded random instances. Every sample index gets its own stream so that
// sweeps can be partitioned across workers without changing results.

#include <cmath>
#include <cstdint>
#include <random>

#include <Eigen/Dense>
#include <Eigen/QR>

#include "tilre/statevector.hpp"

namespace tilre {

using Rng = std::mt19937_64;

/// splitmix64 finalizer applied to (seed, stream).
inline std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline Rng make_stream(std::uint64_t seed, std::uint64_t stream) { return Rng(stream_seed(seed, stream)); }

/// Standard complex Gaussian: E|z|^2 = 1.
inline Complex complex_gaussian(Rng& rng) {
    std::normal_distribution<double> normal(0.0, std::sqrt(0.5));
    const double re = normal(rng);
    const double im = normal(rng);
    return {re, im};
}

inline Matrix gaussian_matrix(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
    Matrix m(rows, cols);
    for (Eigen::Index j = 0; j < cols; ++j)
        for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = complex_gaussian(rng);
    return m;
}

inline Vector gaussian_vector(Eigen::Index size, Rng& rng) { return gaussian_matrix(size, 1, rng).col(0); }

/// Haar unitary: QR of a Gaussian matrix with the phases of diag(R) fixed.
inline Matrix haar_unitary(Eigen::Index dim, Rng& rng) {
    Eigen::HouseholderQR<Matrix> qr(gaussian_matrix(dim, dim, rng));
    Matrix q = qr.householderQ() * Matrix::Identity(dim, dim);
    const Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
    for (Eigen::Index j = 0; j < dim; ++j) {
        const Complex d = r(j, j);
        const double a = std::abs(d);
        if (a > 0.0) q.col(j) *= d / a;
    }
    return q;
}

/// Wishart-style full-rank density operator G G^dagger / Tr.
inline DensityOperator random_density(const RingSpec& spec, Rng& rng) {
    const auto dim = static_cast<Eigen::Index>(spec.dim());
    const Matrix g = gaussian_matrix(dim, dim, rng);
    Matrix rho = g * g.adjoint();
    rho /= rho.trace().real();
    rho = 0.5 * (rho + rho.adjoint()).eval();
    return {spec, std::move(rho)};
}

/// Orthogonal projector onto a Haar-random subspace of the given rank.
inline DensityOperator random_projector(const RingSpec& spec, int rank, Rng& rng) {
    const auto dim = static_cast<Eigen::Index>(spec.dim());
    if (rank < 0 || rank > dim) throw DomainError("random_projector: rank out of range");
    const Matrix basis = haar_unitary(dim, rng).leftCols(rank);
    Matrix p = basis * basis.adjoint();
    p = 0.5 * (p + p.adjoint()).eval();
    return {spec, std::move(p)};
}

}  // namespace tilre
