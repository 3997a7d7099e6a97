#pragma once
// Exact dimension counts for translation-invariant subspaces and the bound
// chain that compares them, plus solvers that invert the chain into depth
// and time lower bounds.
//
// Integer paths are exact (arbitrary precision). Real-valued bounds that
// overflow double at large n are carried as natural logarithms.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "tilre/errors.hpp"

namespace tilre {

using BigCount = boost::multiprecision::cpp_int;

/// Natural log of a positive big integer, accurate to double precision even
/// when the value does not fit in a double.
inline double log_big(const BigCount& x) {
    if (x <= 0) throw DomainError("log_big: argument must be positive");
    const unsigned bits = boost::multiprecision::msb(x) + 1;
    if (bits <= 960) return std::log(x.convert_to<double>());
    const unsigned shift = bits - 900;
    const BigCount top = x >> shift;
    return std::log(top.convert_to<double>()) + static_cast<double>(shift) * std::log(2.0);
}

inline std::string to_decimal(const BigCount& x) { return x.str(); }

inline BigCount big_pow(std::uint64_t base, std::uint64_t exp) {
    return boost::multiprecision::pow(BigCount(base), static_cast<unsigned>(exp));
}

/// Exact binomial coefficient C(n, k). Every intermediate quotient is exact.
inline BigCount binomial(std::uint64_t n, std::uint64_t k) {
    if (k > n) return 0;
    k = std::min(k, n - k);
    BigCount result = 1;
    for (std::uint64_t i = 1; i <= k; ++i) {
        result *= (n - k + i);
        result /= i;
    }
    return result;
}

/// log C(n, k) by summation, for arguments too large for an exact product.
inline double log_binomial(std::uint64_t n, std::uint64_t k) {
    if (k > n) throw DomainError("log_binomial: k > n");
    k = std::min(k, n - k);
    double acc = 0.0;
    for (std::uint64_t i = 1; i <= k; ++i) {
        acc += std::log(static_cast<double>(n - k + i)) - std::log(static_cast<double>(i));
    }
    return acc;
}

/// A bound carried in the log domain. `exact_flag` is set when an exact
/// integer twin was computed alongside it.
struct LogBound {
    double log_value = 0.0;
    bool exact_flag = false;
    std::optional<BigCount> exact;
};

// ---------------------------------------------------------------------------
// Number theory

inline std::vector<std::pair<std::uint64_t, unsigned>> factorize(std::uint64_t k) {
    std::vector<std::pair<std::uint64_t, unsigned>> factors;
    for (std::uint64_t p = 2; p * p <= k; ++p) {
        if (k % p != 0) continue;
        unsigned e = 0;
        while (k % p == 0) {
            k /= p;
            ++e;
        }
        factors.emplace_back(p, e);
    }
    if (k > 1) factors.emplace_back(k, 1);
    return factors;
}

inline std::vector<std::uint64_t> divisors(std::uint64_t n) {
    std::vector<std::uint64_t> lo, hi;
    for (std::uint64_t i = 1; i * i <= n; ++i) {
        if (n % i != 0) continue;
        lo.push_back(i);
        if (i != n / i) hi.push_back(n / i);
    }
    lo.insert(lo.end(), hi.rbegin(), hi.rend());
    return lo;
}

/// Euler's totient via prime factorization.
inline BigCount totient(std::uint64_t k) {
    if (k == 0) throw DomainError("totient: k must be >= 1");
    std::uint64_t phi = k;
    for (auto [p, e] : factorize(k)) {
        (void)e;
        phi = phi / p * (p - 1);
    }
    return phi;
}

// ---------------------------------------------------------------------------
// Dimension formulas

/// Number of q-ary necklaces of length n, i.e. the dimension of the
/// zero-momentum sector of an n-site ring with local dimension q.
inline BigCount necklace_count(std::uint64_t n, std::uint64_t q) {
    if (n < 1) throw DomainError("necklace_count: n must be >= 1");
    if (q < 2) throw DomainError("necklace_count: q must be >= 2");
    BigCount sum = 0;
    for (std::uint64_t k : divisors(n)) sum += totient(k) * big_pow(q, n / k);
    if (sum % n != 0) throw std::logic_error("necklace_count: orbit sum not divisible by n");
    return sum / n;
}

/// Dimension of degree-n homogeneous polynomials in v variables.
inline BigCount hpoly_dim(std::uint64_t n, std::uint64_t v) {
    if (v < 1) throw DomainError("hpoly_dim: v must be >= 1");
    return binomial(v - 1 + n, n);
}

/// Span bound for translation-invariant MPS with bond dimension d_bond.
inline BigCount mps_dim_bound(std::uint64_t n, std::uint64_t q, std::uint64_t d_bond) {
    if (n < 1) throw DomainError("mps_dim_bound: n must be >= 1");
    if (q < 2) throw DomainError("mps_dim_bound: q must be >= 2");
    if (d_bond < 1) throw DomainError("mps_dim_bound: d_bond must be >= 1");
    return hpoly_dim(n, q * d_bond * d_bond);
}

/// n = m (2d+1) + r with 1 <= r <= 2d+1.
struct BlockSplit {
    std::uint64_t block = 0;  // 2d+1
    std::uint64_t m = 0;
    std::uint64_t r = 0;
};

inline BlockSplit block_split(std::uint64_t n, std::uint64_t d) {
    const std::uint64_t block = 2 * d + 1;
    if (n < block + 1) {
        throw DomainError("block_split: need n >= 2d+2 = " + std::to_string(block + 1) +
                          " for one full block, got n = " + std::to_string(n));
    }
    BlockSplit s{block, n / block, n % block};
    if (s.r == 0) {
        s.r = block;
        s.m -= 1;
    }
    return s;
}

/// Number of variables 2d(2d+1)q^4 carried by one block tensor.
inline std::uint64_t block_variables(std::uint64_t d, std::uint64_t q) {
    return 2 * d * (2 * d + 1) * q * q * q * q;
}

/// Span bound for translation-invariant depth-d states.
inline BigCount sre_dim_bound(std::uint64_t n, std::uint64_t d, std::uint64_t q) {
    if (d < 1) throw DomainError("sre_dim_bound: d must be >= 1");
    if (q < 2) throw DomainError("sre_dim_bound: q must be >= 2");
    const BlockSplit s = block_split(n, d);
    const std::uint64_t v = block_variables(d, q);
    return BigCount(v) * hpoly_dim(s.m, v);
}

/// log of sre_dim_bound. Exact twin included for n <= 512.
inline LogBound sre_dim_bound_log(std::uint64_t n, std::uint64_t d, std::uint64_t q) {
    constexpr std::uint64_t kExactLimit = 512;
    if (n <= kExactLimit) {
        BigCount exact = sre_dim_bound(n, d, q);
        return {log_big(exact), true, std::move(exact)};
    }
    if (d < 1) throw DomainError("sre_dim_bound_log: d must be >= 1");
    const BlockSplit s = block_split(n, d);
    const std::uint64_t v = block_variables(d, q);
    return {std::log(static_cast<double>(v)) + log_binomial(v - 1 + s.m, s.m), false, std::nullopt};
}

/// Exact upper bound on Tr(P_d rho_TI) as a ratio of two exact counts.
struct OverlapRatio {
    BigCount numerator;
    BigCount denominator;

    double log_value() const { return log_big(numerator) - log_big(denominator); }
    /// Reported probability, clamped to 1.
    double clamped() const { return numerator >= denominator ? 1.0 : std::exp(log_value()); }
};

inline OverlapRatio overlap_bound_exact(std::uint64_t n, std::uint64_t d, std::uint64_t q) {
    return {sre_dim_bound(n, d, q), necklace_count(n, q)};
}

/// log of n * sre_dim_bound / q^n: the ratio after relaxing D_TI >= q^n / n.
inline double relaxed_overlap_log(std::uint64_t n, std::uint64_t d, std::uint64_t q) {
    return std::log(static_cast<double>(n)) + sre_dim_bound_log(n, d, q).log_value -
           static_cast<double>(n) * std::log(static_cast<double>(q));
}

/// Closed-form log-domain bound on Tr(P_d rho_TI):
///   2d(2d+1) n q^(3-n) e^a (1 + n / a^gamma)^a,   a = 2d(2d+1)q^4 - 1.
inline LogBound overlap_bound_log(std::uint64_t n, std::uint64_t d, std::uint64_t q, double gamma) {
    if (!(gamma > 1.0 && gamma < 2.0)) throw DomainError("overlap_bound_log: gamma must lie in (1, 2)");
    if (d < 1) throw DomainError("overlap_bound_log: d must be >= 1");
    if (q < 2) throw DomainError("overlap_bound_log: q must be >= 2");
    block_split(n, d);  // same domain as sre_dim_bound
    const double a = static_cast<double>(block_variables(d, q)) - 1.0;
    const double nn = static_cast<double>(n);
    const double value = std::log(2.0 * static_cast<double>(d) * (2.0 * d + 1.0)) + std::log(nn) +
                         (3.0 - nn) * std::log(static_cast<double>(q)) + a +
                         a * std::log1p(nn / std::pow(a, gamma));
    return {value, false, std::nullopt};
}

// ---------------------------------------------------------------------------
// gamma exponent

/// Checks (2d+1) a >= a^gamma for every 1 <= d <= d_max. The left side is
/// formed exactly; the comparison is done in logs.
inline bool gamma_inequality_holds(std::uint64_t q, std::uint64_t d_max, double gamma) {
    for (std::uint64_t d = 1; d <= d_max; ++d) {
        const BigCount a = BigCount(block_variables(d, q)) - 1;
        const BigCount left = BigCount(2 * d + 1) * a;
        if (log_big(left) < gamma * log_big(a)) return false;
    }
    return true;
}

/// Largest gamma in (1, 2) (bisection to 1e-9) with
/// (2d+1)(2d(2d+1)q^4 - 1) >= (2d(2d+1)q^4 - 1)^gamma for all d <= d_max.
inline double gamma_exponent(std::uint64_t q, std::uint64_t d_max) {
    if (q < 2) throw DomainError("gamma_exponent: q must be >= 2");
    if (d_max < 1) throw DomainError("gamma_exponent: d_max must be >= 1");
    double lo = 1.0, hi = 2.0;
    while (hi - lo > 1e-9) {
        const double mid = 0.5 * (lo + hi);
        (gamma_inequality_holds(q, d_max, mid) ? lo : hi) = mid;
    }
    return lo;
}

// ---------------------------------------------------------------------------
// Depth and time solvers

/// log of the right-hand side of  eta q^n < 2 a n e^a (1 + n/a^gamma)^a.
inline double implicit_bound_log(std::uint64_t n, std::uint64_t d, std::uint64_t q, double gamma) {
    const double a = static_cast<double>(block_variables(d, q)) - 1.0;
    const double nn = static_cast<double>(n);
    return std::log(2.0 * a * nn) + a + a * std::log1p(nn / std::pow(a, gamma));
}

inline std::uint64_t default_depth_ceiling(std::uint64_t n) {
    return std::max<std::uint64_t>(1, static_cast<std::uint64_t>(std::floor(10.0 * std::sqrt(static_cast<double>(n)))));
}

/// Smallest depth d at which the counting bound no longer forces
/// Tr(P_d rho_TI) < eta / 2.
inline std::uint64_t min_depth_for_overlap(std::uint64_t n, std::uint64_t q, double eta,
                                           std::optional<std::uint64_t> ceiling = std::nullopt) {
    if (n < 1) throw DomainError("min_depth_for_overlap: n must be >= 1");
    if (q < 2) throw DomainError("min_depth_for_overlap: q must be >= 2");
    if (!(eta > 0.0 && eta <= 1.0)) throw DomainError("min_depth_for_overlap: eta must lie in (0, 1]");
    const std::uint64_t limit = ceiling.value_or(default_depth_ceiling(n));
    const double gamma = gamma_exponent(q, limit);
    const double lhs = std::log(eta) + static_cast<double>(n) * std::log(static_cast<double>(q));
    for (std::uint64_t d = 1; d <= limit; ++d) {
        if (lhs < implicit_bound_log(n, d, q, gamma)) return d;
    }
    throw CeilingReached("min_depth_for_overlap: ceiling reached at d = " + std::to_string(limit) +
                         " for n = " + std::to_string(n));
}

/// Parametric circuit-depth model for time-tau evolution,
///   d(tau, n, eps) = ceil(c tau log(n tau / eps)^p).
/// The constants are configuration; they are not known in closed form.
struct DepthModel {
    double c = 1.0;
    double p = 1.0;
    std::optional<double> epsilon;  // unset: sqrt(eta)
    int range = 2;

    void validate() const {
        if (!(c > 0.0)) throw DomainError("DepthModel: c must be > 0");
        if (!(p >= 1.0)) throw DomainError("DepthModel: p must be >= 1");
        if (epsilon && !(*epsilon > 0.0 && *epsilon <= 1.0)) throw DomainError("DepthModel: epsilon must lie in (0, 1]");
        if (range < 1) throw DomainError("DepthModel: range must be >= 1");
    }

    double resolved_epsilon(double eta) const { return epsilon.value_or(std::sqrt(eta)); }

    double raw_depth(double tau, std::uint64_t n, double eps) const {
        const double l = std::max(0.0, std::log(static_cast<double>(n) * tau / eps));
        return c * tau * std::pow(l, p);
    }

    std::uint64_t depth(double tau, std::uint64_t n, double eps) const {
        return static_cast<std::uint64_t>(std::ceil(raw_depth(tau, n, eps)));
    }
};

struct TimeEstimate {
    double tau = 0.0;
    std::uint64_t target_depth = 0;
    double epsilon = 0.0;
    DepthModel model;
};

/// Smallest tau whose model depth reaches min_depth_for_overlap(n, q, eta).
inline TimeEstimate min_time_estimate(std::uint64_t n, std::uint64_t q, double eta, const DepthModel& model,
                                      std::optional<std::uint64_t> ceiling = std::nullopt) {
    model.validate();
    const std::uint64_t target = min_depth_for_overlap(n, q, eta, ceiling);
    const double eps = model.resolved_epsilon(eta);
    double lo = eps / static_cast<double>(n);
    double hi = std::max(1.0, 2.0 * lo);
    while (model.depth(hi, n, eps) < target) hi *= 2.0;
    while (hi - lo > 1e-12 * hi) {
        const double mid = 0.5 * (lo + hi);
        (model.depth(mid, n, eps) >= target ? hi : lo) = mid;
    }
    return {hi, target, eps, model};
}

}  // namespace tilre
