#pragma once
// Shifted traces Tr(O T^r) of local operators, the cycle-decomposition bound
// on them, and momentum-sector expectation values built from them.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include <Eigen/SVD>

#include "tilre/statevector.hpp"

namespace tilre {

inline constexpr int kDefaultLocalityCap = 3;

/// Operator on the sorted site set `support`; the first support site is the
/// most significant digit of the local matrix index.
class LocalOperator {
  public:
    LocalOperator(std::vector<int> support, Matrix matrix, int q, int locality_cap = kDefaultLocalityCap)
        : support_(std::move(support)), m_(std::move(matrix)), q_(q) {
        if (q_ < 2) throw DomainError("LocalOperator: q must be >= 2");
        std::sort(support_.begin(), support_.end());
        if (std::adjacent_find(support_.begin(), support_.end()) != support_.end())
            throw DomainError("LocalOperator: repeated support site");
        if (static_cast<int>(support_.size()) > locality_cap)
            throw DomainError("LocalOperator: support size " + std::to_string(support_.size()) + " exceeds locality cap " +
                              std::to_string(locality_cap));
        const auto local = static_cast<Eigen::Index>(ipow(q_, support_.size()));
        if (m_.rows() != local || m_.cols() != local) throw DomainError("LocalOperator: matrix must be q^|A| square");
        op_norm_ = m_.size() ? Eigen::JacobiSVD<Matrix>(m_).singularValues()(0) : 0.0;
    }

    const std::vector<int>& support() const { return support_; }
    const Matrix& matrix() const { return m_; }
    int q() const { return q_; }
    double op_norm() const { return op_norm_; }

    void require_on(const RingSpec& spec) const {
        if (spec.q != q_) throw DomainError("LocalOperator: local dimension differs from ring");
        if (!support_.empty() && (support_.front() < 0 || support_.back() >= spec.n))
            throw DomainError("LocalOperator: support outside ring");
    }

  private:
    std::vector<int> support_;
    Matrix m_;
    int q_ = 2;
    double op_norm_ = 0.0;
};

inline LocalOperator identity_operator(int q) { return {{}, Matrix::Identity(1, 1), q}; }

/// Tensor product of operators on disjoint supports.
inline LocalOperator tensor_product(const LocalOperator& a, const LocalOperator& b, int locality_cap) {
    if (a.q() != b.q()) throw DomainError("tensor_product: local dimensions differ");
    const int q = a.q();
    std::vector<int> sup = a.support();
    for (int s : b.support()) {
        if (std::find(sup.begin(), sup.end(), s) != sup.end())
            throw DomainError("tensor_product: supports overlap at site " + std::to_string(s));
        sup.push_back(s);
    }
    std::sort(sup.begin(), sup.end());
    const auto dim = static_cast<Eigen::Index>(ipow(q, sup.size()));
    const auto local_index = [&](std::uint64_t full, const std::vector<int>& part) {
        std::uint64_t idx = 0;
        for (int s : part) {
            const auto pos = std::find(sup.begin(), sup.end(), s) - sup.begin();
            const auto digit = (full / ipow(q, sup.size() - 1 - pos)) % q;
            idx = idx * q + digit;
        }
        return static_cast<Eigen::Index>(idx);
    };
    Matrix m(dim, dim);
    for (Eigen::Index r = 0; r < dim; ++r)
        for (Eigen::Index c = 0; c < dim; ++c)
            m(r, c) = a.matrix()(local_index(r, a.support()), local_index(c, a.support())) *
                      b.matrix()(local_index(r, b.support()), local_index(c, b.support()));
    return {std::move(sup), std::move(m), q, locality_cap};
}

struct CycleBound {
    int free_qudits = 0;  // d = sum over cycles of max(1, |A ∩ c|)
    double log_value = 0.0;
    double value() const { return std::exp(log_value); }
};

/// Bound q^{d-n} on |Tr(O T^r)| / q^n for ||O|| <= 1 supported on `support`.
inline CycleBound cycle_bound(const std::vector<int>& support, int r, const RingSpec& spec) {
    const int n = spec.n;
    const int g = std::gcd(n, ((r % n) + n) % n);  // gcd(n, 0) = n
    std::vector<int> hits(g, 0);
    for (int s : support) {
        if (s < 0 || s >= n) throw DomainError("cycle_bound: support outside ring");
        ++hits[s % g];
    }
    CycleBound b;
    for (int a : hits) b.free_qudits += std::max(1, a);
    b.log_value = static_cast<double>(b.free_qudits - n) * std::log(static_cast<double>(spec.q));
    return b;
}

/// Tr(O T^r) / q^n by constraint propagation along the cycles of i -> i + r.
/// Off-support sites copy the value of the nearest support site behind them
/// on their cycle, so only q^{|A|} configurations contribute.
inline Complex shifted_trace(const LocalOperator& op, int r, const RingSpec& spec) {
    op.require_on(spec);
    const int n = spec.n, q = spec.q;
    r = ((r % n) + n) % n;
    const int g = std::gcd(n, r);
    const auto& sup = op.support();
    std::vector<bool> in_support(n, false);
    for (int s : sup) in_support[s] = true;

    int empty_cycles = 0;
    for (int c = 0; c < g; ++c) {
        bool any = false;
        for (int s = c; s < n; s += g) any = any || in_support[s];
        if (!any) ++empty_cycles;
    }
    // pred[k]: position in `sup` of the nearest support site at or behind
    // sup[k] - r, walking backwards along the cycle.
    std::vector<std::size_t> pred(sup.size());
    for (std::size_t k = 0; k < sup.size(); ++k) {
        int s = ((sup[k] - r) % n + n) % n;
        while (!in_support[s]) s = ((s - r) % n + n) % n;
        pred[k] = static_cast<std::size_t>(std::find(sup.begin(), sup.end(), s) - sup.begin());
    }
    const std::size_t a = sup.size();
    const std::uint64_t configs = ipow(q, a);
    std::vector<int> z(a);
    Complex acc = 0.0;
    for (std::uint64_t row = 0; row < configs; ++row) {
        std::uint64_t t = row;
        for (std::size_t k = a; k-- > 0;) {
            z[k] = static_cast<int>(t % q);
            t /= q;
        }
        std::uint64_t col = 0;
        for (std::size_t k = 0; k < a; ++k) col = col * q + z[pred[k]];
        acc += op.matrix()(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(col));
    }
    const int exponent = n - empty_cycles;
    if (static_cast<double>(exponent) * std::log2(static_cast<double>(q)) < 53.0)
        return acc / static_cast<double>(ipow(q, static_cast<std::uint64_t>(exponent)));
    return acc * std::exp(-static_cast<double>(exponent) * std::log(static_cast<double>(q)));
}

/// Tr((O ⊗ 1) T^r) / q^n summed over every basis state of the ring.
inline Complex shifted_trace_dense(const LocalOperator& op, int r, const RingSpec& spec,
                                   std::uint64_t cap = kDefaultAmplitudeCap) {
    op.require_on(spec);
    spec.require_within(cap, "shifted_trace_dense");
    const auto& sup = op.support();
    std::vector<bool> in_support(spec.n, false);
    for (int s : sup) in_support[s] = true;
    Complex acc = 0.0;
    for (std::uint64_t i = 0; i < spec.dim(); ++i) {
        const std::uint64_t j = translated_index(spec, i, r);  // T^r |i> = |j>
        bool diagonal_off_support = true;
        for (int s = 0; s < spec.n && diagonal_off_support; ++s)
            if (!in_support[s] && spec.digit(i, s) != spec.digit(j, s)) diagonal_off_support = false;
        if (!diagonal_off_support) continue;
        std::uint64_t a = 0, b = 0;
        for (int s : sup) {
            a = a * spec.q + spec.digit(i, s);
            b = b * spec.q + spec.digit(j, s);
        }
        acc += op.matrix()(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b));
    }
    return acc / static_cast<double>(spec.dim());
}

inline Complex momentum_phase(int k_index, int r, int n) {
    const double two_pi = 2.0 * std::acos(-1.0);
    return std::polar(1.0, -two_pi * static_cast<double>((static_cast<long long>(k_index) * r) % n) / n);
}

/// sum_r w^{-kr} q^{gcd(n,r)-n} = n Tr(P_k) / q^n.
inline double sector_weight(int k_index, const RingSpec& spec) {
    Complex acc = 0.0;
    for (int r = 0; r < spec.n; ++r)
        acc += momentum_phase(k_index, r, spec.n) *
               std::exp(static_cast<double>(std::gcd(spec.n, r) - spec.n) * std::log(static_cast<double>(spec.q)));
    return acc.real();
}

/// <O> on rho_k = P_k / Tr P_k, expanded term by term in shifted traces.
inline Complex sector_expectation(int k_index, const LocalOperator& op, const RingSpec& spec) {
    if (k_index < 0 || k_index >= spec.n) throw DomainError("sector_expectation: k_index must lie in [0, n)");
    const double weight = sector_weight(k_index, spec);
    if (!(weight > 0.0)) throw DomainError("sector_expectation: momentum sector is empty");
    Complex acc = 0.0;
    for (int r = 0; r < spec.n; ++r) acc += momentum_phase(k_index, r, spec.n) * shifted_trace(op, r, spec);
    return acc / weight;
}

/// <O_i O_j> - <O_i><O_j> on rho_k.
inline Complex connected_correlation(int k_index, const LocalOperator& op_i, const LocalOperator& op_j,
                                     const RingSpec& spec) {
    const int joint_cap = static_cast<int>(op_i.support().size() + op_j.support().size());
    const LocalOperator both = tensor_product(op_i, op_j, joint_cap);
    return sector_expectation(k_index, both, spec) -
           sector_expectation(k_index, op_i, spec) * sector_expectation(k_index, op_j, spec);
}

/// Upper bound on |<O>| over rho_k for traceless O, summing cycle bounds over
/// r != 0 and scaling by ||O||.
inline double expectation_envelope(int k_index, const std::vector<int>& support, double op_norm, const RingSpec& spec) {
    double acc = 0.0;
    for (int r = 1; r < spec.n; ++r) acc += cycle_bound(support, r, spec).value();
    return op_norm * acc / sector_weight(k_index, spec);
}

/// The operator moving the content of site k+1 to site k for 1 <= k < n-1
/// and of site 1 to site n-1, leaving site 0 alone. (O T) swaps sites 0 and
/// n-1, so Tr(O T) / q^n = 1/q.
inline LocalOperator near_global_shift_operator(const RingSpec& spec) {
    if (spec.n < 3) throw DomainError("near_global_shift_operator: need n >= 3");
    const int len = spec.n - 1;
    std::vector<int> sup(len);
    std::iota(sup.begin(), sup.end(), 1);
    const auto dim = static_cast<Eigen::Index>(ipow(spec.q, len));
    Matrix m = Matrix::Zero(dim, dim);
    for (std::uint64_t in = 0; in < static_cast<std::uint64_t>(dim); ++in) {
        // local digits z_1..z_{n-1}; output string is z_2..z_{n-1} z_1
        const std::uint64_t top = ipow(spec.q, len - 1);
        const std::uint64_t out = (in % top) * spec.q + in / top;
        m(static_cast<Eigen::Index>(out), static_cast<Eigen::Index>(in)) = 1.0;
    }
    return {std::move(sup), std::move(m), spec.q, spec.n};
}

}  // namespace tilre
