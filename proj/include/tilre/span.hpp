#pragma once
// Numerical span dimension of a family of sampled states, and the small
// worker pool used for independent per-sample tasks.

#include <algorithm>
#include <cstddef>
#include <exception>
#include <functional>
#include <mutex>
#include <optional>
#include <thread>
#include <vector>

#include "tilre/combinatorics.hpp"
#include "tilre/statevector.hpp"

namespace tilre {

/// Runs task(i) for i in [0, count) on up to `workers` threads. Each index
/// is handled exactly once; results must be written to per-index slots.
inline void parallel_for(std::size_t count, unsigned workers, const std::function<void(std::size_t)>& task) {
    workers = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(count)));
    if (workers <= 1) {
        for (std::size_t i = 0; i < count; ++i) task(i);
        return;
    }
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            for (std::size_t i = w; i < count; i += workers) {
                try {
                    task(i);
                } catch (...) {
                    std::lock_guard lock(error_mutex);
                    if (!error) error = std::current_exception();
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

struct GramSpectrum {
    int rank = 0;
    Eigen::VectorXd eigenvalues;  // ascending

    int rank_at(double rel_tol) const { return numerical_rank(eigenvalues, rel_tol); }
};

/// Rank of the Gram matrix of the normalized states, counting eigenvalues at
/// least `rel_tol` times the largest. Uses the smaller of the two Gram forms
/// (samples x samples or dim x dim); both share the nonzero spectrum.
inline GramSpectrum gram_rank(const std::vector<Vector>& states, double rel_tol) {
    if (states.empty()) return {};
    const Eigen::Index dim = states.front().size();
    const auto count = static_cast<Eigen::Index>(states.size());
    Matrix v(dim, count);
    for (Eigen::Index j = 0; j < count; ++j) {
        if (states[j].size() != dim) throw DomainError("gram_rank: states have different dimensions");
        const double nrm = states[j].norm();
        v.col(j) = nrm > 0.0 ? Vector(states[j] / nrm) : states[j];
    }
    Matrix g = count <= dim ? Matrix(v.adjoint() * v) : Matrix(v * v.adjoint());
    g = 0.5 * (g + g.adjoint()).eval();
    Eigen::SelfAdjointEigenSolver<Matrix> es(g, Eigen::EigenvaluesOnly);
    GramSpectrum out;
    out.eigenvalues = es.eigenvalues();
    out.rank = numerical_rank(out.eigenvalues, rel_tol);
    return out;
}

/// Outcome of a sampled span-dimension probe.
struct SpanEstimate {
    int samples = 0;
    int gram_rank = 0;
    double tolerance = 1e-8;
    std::optional<BigCount> bound;  // counting bound, when its preconditions hold
    BigCount sector_dim;            // zero-momentum dimension
    GramSpectrum spectrum;

    bool within_bounds() const { return (!bound || BigCount(gram_rank) <= *bound) && BigCount(gram_rank) <= sector_dim; }
};

}  // namespace tilre
