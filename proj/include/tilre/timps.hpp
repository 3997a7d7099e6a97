#pragma once
// Translation-invariant matrix product states |A> = sum Tr(A^{i_1}...A^{i_n}) |i_1...i_n>
// and a sampled span-rank probe for their linear span.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "tilre/combinatorics.hpp"
#include "tilre/random.hpp"
#include "tilre/span.hpp"
#include "tilre/statevector.hpp"

namespace tilre {

/// One d_bond x d_bond matrix per physical level.
struct TimpsTensor {
    int q = 2;
    int d_bond = 1;
    std::vector<Matrix> matrices;

    TimpsTensor() = default;
    TimpsTensor(int q_, int d_bond_, std::vector<Matrix> mats) : q(q_), d_bond(d_bond_), matrices(std::move(mats)) {
        if (q < 2) throw DomainError("TimpsTensor: q must be >= 2");
        if (d_bond < 1) throw DomainError("TimpsTensor: d_bond must be >= 1");
        if (static_cast<int>(matrices.size()) != q) throw DomainError("TimpsTensor: need exactly q matrices");
        for (const auto& m : matrices) {
            if (m.rows() != d_bond || m.cols() != d_bond) throw DomainError("TimpsTensor: matrix shape mismatch");
            if (!m.allFinite()) throw DomainError("TimpsTensor: non-finite entry");
        }
    }

    /// Independent standard complex Gaussian entries.
    static TimpsTensor random(int q, int d_bond, Rng& rng) {
        std::vector<Matrix> mats;
        mats.reserve(q);
        for (int i = 0; i < q; ++i) mats.push_back(gaussian_matrix(d_bond, d_bond, rng));
        return {q, d_bond, std::move(mats)};
    }
};

/// Dense amplitudes of the ring-closed MPS. Basis strings are visited in
/// index order while prefix products are reused.
inline StateVector contract_timps(const TimpsTensor& a, int n, std::uint64_t cap = kDefaultAmplitudeCap) {
    const RingSpec spec(n, a.q);
    spec.require_within(cap, "contract_timps");
    Vector amp(static_cast<Eigen::Index>(spec.dim()));
    std::vector<Matrix> prefix(n + 1);
    prefix[0] = Matrix::Identity(a.d_bond, a.d_bond);
    std::vector<int> digits(n, 0);
    for (int s = 0; s < n; ++s) prefix[s + 1] = prefix[s] * a.matrices[0];
    for (std::uint64_t index = 0;; ++index) {
        amp(static_cast<Eigen::Index>(index)) = prefix[n].trace();
        // increment the q-ary counter, site n-1 least significant
        int s = n - 1;
        while (s >= 0 && digits[s] == a.q - 1) digits[s--] = 0;
        if (s < 0) break;
        ++digits[s];
        for (int t = s; t < n; ++t) prefix[t + 1] = prefix[t] * a.matrices[digits[t]];
    }
    return {spec, std::move(amp)};
}

/// Minimum sample count accepted by timps_span_rank.
inline BigCount timps_required_samples(const RingSpec& spec, int d_bond) {
    const BigCount bound = mps_dim_bound(spec.n, spec.q, d_bond);
    const BigCount full = spec.dim();
    return 2 * (bound <= full ? bound : full);
}

inline int timps_default_samples(const RingSpec& spec, int d_bond) {
    const BigCount bound = mps_dim_bound(spec.n, spec.q, d_bond);
    const BigCount full = spec.dim();
    return static_cast<int>(3 * (bound <= full ? bound : full) + 10);
}

/// Gram rank of `samples` seeded random TIMPS, sample i drawn from stream i.
inline SpanEstimate timps_span_rank(const RingSpec& spec, int d_bond, std::optional<int> samples, std::uint64_t seed,
                                    double tolerance = 1e-8, unsigned workers = 1,
                                    std::uint64_t cap = kDefaultAmplitudeCap) {
    spec.require_within(cap, "timps_span_rank");
    const int count = samples.value_or(timps_default_samples(spec, d_bond));
    const BigCount required = timps_required_samples(spec, d_bond);
    if (BigCount(count) < required)
        throw DomainError("timps_span_rank: need at least " + to_decimal(required) + " samples, got " +
                          std::to_string(count));
    std::vector<Vector> states(count);
    parallel_for(count, workers, [&](std::size_t i) {
        Rng rng = make_stream(seed, i);
        states[i] = contract_timps(TimpsTensor::random(spec.q, d_bond, rng), spec.n, cap).amplitudes();
    });
    SpanEstimate est;
    est.samples = count;
    est.tolerance = tolerance;
    est.spectrum = gram_rank(states, tolerance);
    est.gram_rank = est.spectrum.rank;
    est.bound = mps_dim_bound(spec.n, spec.q, d_bond);
    est.sector_dim = necklace_count(spec.n, spec.q);
    return est;
}

}  // namespace tilre
