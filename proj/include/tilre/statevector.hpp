#pragma once
// Dense q-ary ring Hilbert spaces: states, density operators, translation,
// momentum projectors and trace distance.
//
// Site ordering: site 0 is the most significant q-ary digit of an amplitude
// index. The translation T moves the content of site x to site x+1 (mod n).

#include <cmath>
#include <complex>
#include <cstdint>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "tilre/errors.hpp"

namespace tilre {

using Complex = std::complex<double>;
using Vector = Eigen::VectorXcd;
using Matrix = Eigen::MatrixXcd;

inline constexpr std::uint64_t kDefaultAmplitudeCap = std::uint64_t{1} << 20;
inline constexpr std::uint64_t kDefaultOperatorCap = std::uint64_t{1} << 12;

inline std::uint64_t ipow(std::uint64_t base, std::uint64_t exp) {
    std::uint64_t r = 1;
    while (exp--) r *= base;
    return r;
}

struct RingSpec {
    int n = 1;
    int q = 2;

    RingSpec() = default;
    RingSpec(int n_, int q_) : n(n_), q(q_) {
        if (n < 1) throw DomainError("RingSpec: n must be >= 1");
        if (q < 2) throw DomainError("RingSpec: q must be >= 2");
        if (static_cast<double>(n) * std::log2(static_cast<double>(q)) > 62.0)
            throw ResourceError("RingSpec: q^n does not fit in 64 bits");
    }

    std::uint64_t dim() const { return ipow(static_cast<std::uint64_t>(q), static_cast<std::uint64_t>(n)); }

    /// Stride of the digit belonging to `site`.
    std::uint64_t stride(int site) const { return ipow(q, static_cast<std::uint64_t>(n - 1 - site)); }

    int digit(std::uint64_t index, int site) const { return static_cast<int>((index / stride(site)) % q); }

    void require_within(std::uint64_t cap, const char* what) const {
        if (dim() > cap) {
            throw ResourceError(std::string(what) + ": q^n = " + std::to_string(dim()) + " exceeds dense cap " +
                                std::to_string(cap));
        }
    }

    friend bool operator==(const RingSpec&, const RingSpec&) = default;
};

class StateVector {
  public:
    StateVector(RingSpec spec, Vector amplitudes) : spec_(spec), amp_(std::move(amplitudes)) {
        if (static_cast<std::uint64_t>(amp_.size()) != spec_.dim())
            throw DomainError("StateVector: amplitude count does not match q^n");
        if (!amp_.allFinite()) throw DomainError("StateVector: non-finite amplitude");
    }

    static StateVector zero(RingSpec spec, std::uint64_t cap = kDefaultAmplitudeCap) {
        spec.require_within(cap, "StateVector");
        return {spec, Vector::Zero(static_cast<Eigen::Index>(spec.dim()))};
    }

    static StateVector basis(RingSpec spec, const std::vector<int>& digits) {
        if (static_cast<int>(digits.size()) != spec.n) throw DomainError("StateVector::basis: wrong digit count");
        std::uint64_t index = 0;
        for (int d : digits) {
            if (d < 0 || d >= spec.q) throw DomainError("StateVector::basis: digit out of range");
            index = index * spec.q + static_cast<std::uint64_t>(d);
        }
        StateVector s = zero(spec);
        s.amp_(static_cast<Eigen::Index>(index)) = 1.0;
        return s;
    }

    /// v ⊗ v ⊗ ... ⊗ v.
    static StateVector product(RingSpec spec, const Vector& site_state, std::uint64_t cap = kDefaultAmplitudeCap) {
        if (site_state.size() != spec.q) throw DomainError("StateVector::product: site state must have q entries");
        spec.require_within(cap, "StateVector::product");
        Vector amp = Vector::Ones(1);
        for (int s = 0; s < spec.n; ++s) {
            Vector next(amp.size() * spec.q);
            for (Eigen::Index i = 0; i < amp.size(); ++i)
                for (int a = 0; a < spec.q; ++a) next(i * spec.q + a) = amp(i) * site_state(a);
            amp = std::move(next);
        }
        return {spec, std::move(amp)};
    }

    const RingSpec& spec() const { return spec_; }
    const Vector& amplitudes() const { return amp_; }
    Vector& amplitudes() { return amp_; }
    double norm() const { return amp_.norm(); }

    StateVector normalized() const {
        const double nrm = norm();
        if (nrm == 0.0) throw DomainError("StateVector::normalized: zero state");
        return {spec_, amp_ / nrm};
    }

  private:
    RingSpec spec_;
    Vector amp_;
};

/// Index of T^x applied to the basis string `index`.
inline std::uint64_t translated_index(const RingSpec& spec, std::uint64_t index, int x) {
    x = ((x % spec.n) + spec.n) % spec.n;
    if (x == 0) return index;
    const std::uint64_t low = ipow(spec.q, static_cast<std::uint64_t>(x));
    return (index % low) * ipow(spec.q, static_cast<std::uint64_t>(spec.n - x)) + index / low;
}

inline StateVector translate(const StateVector& state, int x) {
    const RingSpec& spec = state.spec();
    Vector out(state.amplitudes().size());
    for (std::uint64_t i = 0; i < spec.dim(); ++i)
        out(static_cast<Eigen::Index>(translated_index(spec, i, x))) = state.amplitudes()(static_cast<Eigen::Index>(i));
    return {spec, std::move(out)};
}

/// Hermitian operator on the ring. Projectors are stored unnormalized.
class DensityOperator {
  public:
    DensityOperator(RingSpec spec, Matrix matrix) : spec_(spec), m_(std::move(matrix)) {
        const auto dim = static_cast<Eigen::Index>(spec_.dim());
        if (m_.rows() != dim || m_.cols() != dim) throw DomainError("DensityOperator: shape does not match q^n");
        const double scale = std::max(1.0, m_.cwiseAbs().maxCoeff());
        if ((m_ - m_.adjoint()).cwiseAbs().maxCoeff() > 1e-12 * scale)
            throw DomainError("DensityOperator: matrix is not Hermitian");
        m_ = 0.5 * (m_ + m_.adjoint()).eval();
        trace_ = m_.trace().real();
    }

    const RingSpec& spec() const { return spec_; }
    const Matrix& matrix() const { return m_; }
    double trace() const { return trace_; }

    Eigen::VectorXd eigenvalues() const {
        Eigen::SelfAdjointEigenSolver<Matrix> es(m_, Eigen::EigenvaluesOnly);
        return es.eigenvalues();
    }

    bool is_positive(double tol = 1e-10) const { return eigenvalues().minCoeff() >= -tol; }

    DensityOperator normalized() const {
        if (trace_ == 0.0) throw DomainError("DensityOperator::normalized: zero trace");
        return {spec_, m_ / trace_};
    }

  private:
    RingSpec spec_;
    Matrix m_;
    double trace_ = 0.0;
};

/// Number of eigenvalues at least rel_tol times the largest.
inline int numerical_rank(const Eigen::VectorXd& eigenvalues, double rel_tol = 1e-8) {
    if (eigenvalues.size() == 0) return 0;
    const double top = eigenvalues.maxCoeff();
    if (top <= 0.0) return 0;
    int rank = 0;
    for (double v : eigenvalues)
        if (v >= rel_tol * top) ++rank;
    return rank;
}

inline int rank(const DensityOperator& op, double rel_tol = 1e-8) { return numerical_rank(op.eigenvalues(), rel_tol); }

/// Dense permutation matrix of T^x.
inline Matrix translation_matrix(const RingSpec& spec, int x, std::uint64_t cap = kDefaultOperatorCap) {
    spec.require_within(cap, "translation_matrix");
    const auto dim = static_cast<Eigen::Index>(spec.dim());
    Matrix t = Matrix::Zero(dim, dim);
    for (std::uint64_t i = 0; i < spec.dim(); ++i)
        t(static_cast<Eigen::Index>(translated_index(spec, i, x)), static_cast<Eigen::Index>(i)) = 1.0;
    return t;
}

/// P_k = (1/n) sum_x w^{-k x} T^x with w = exp(2 pi i / n), projecting onto
/// T = exp(2 pi i k / n).
inline DensityOperator momentum_projector(const RingSpec& spec, int k_index, std::uint64_t cap = kDefaultOperatorCap) {
    if (k_index < 0 || k_index >= spec.n) throw DomainError("momentum_projector: k_index must lie in [0, n)");
    spec.require_within(cap, "momentum_projector");
    const auto dim = static_cast<Eigen::Index>(spec.dim());
    Matrix p = Matrix::Zero(dim, dim);
    const double two_pi = 2.0 * std::acos(-1.0);
    for (int x = 0; x < spec.n; ++x) {
        const double phase = -two_pi * static_cast<double>((static_cast<long long>(k_index) * x) % spec.n) / spec.n;
        const Complex w = std::polar(1.0 / spec.n, phase);
        for (std::uint64_t i = 0; i < spec.dim(); ++i)
            p(static_cast<Eigen::Index>(translated_index(spec, i, x)), static_cast<Eigen::Index>(i)) += w;
    }
    return {spec, std::move(p)};
}

/// Maximally mixed state on the zero-momentum sector.
inline DensityOperator rho_ti(const RingSpec& spec, std::uint64_t cap = kDefaultOperatorCap) {
    return momentum_projector(spec, 0, cap).normalized();
}

/// Tr P_k from the cycle structure of T^x: (1/n) sum_x w^{-kx} q^{gcd(n,x)}.
inline double sector_trace_formula(int n, int q, int k_index) {
    const double two_pi = 2.0 * std::acos(-1.0);
    Complex acc = 0.0;
    for (int x = 0; x < n; ++x) {
        const int g = std::gcd(n, x);  // gcd(n, 0) = n
        const double phase = -two_pi * static_cast<double>((static_cast<long long>(k_index) * x) % n) / n;
        acc += std::polar(std::pow(static_cast<double>(q), g), phase);
    }
    return acc.real() / n;
}

inline double trace_distance(const DensityOperator& a, const DensityOperator& b) {
    if (!(a.spec() == b.spec())) throw DomainError("trace_distance: ring specs differ");
    Eigen::SelfAdjointEigenSolver<Matrix> es(a.matrix() - b.matrix(), Eigen::EigenvaluesOnly);
    return 0.5 * es.eigenvalues().cwiseAbs().sum();
}

struct TailsCheck {
    double lhs = 0.0;  // D(rho, sigma)
    double rhs = 0.0;  // Tr(P sigma) - Tr(P rho)
    bool holds = false;
    double margin() const { return lhs - rhs; }
};

/// D(rho, sigma) >= Tr(P sigma) - Tr(P rho) for an orthogonal projector P.
inline TailsCheck tails_inequality_check(const DensityOperator& rho, const DensityOperator& sigma,
                                         const DensityOperator& projector) {
    if (!(rho.spec() == sigma.spec()) || !(rho.spec() == projector.spec()))
        throw DomainError("tails_inequality_check: ring specs differ");
    const Matrix& p = projector.matrix();
    if ((p * p - p).cwiseAbs().maxCoeff() > 1e-10) throw DomainError("tails_inequality_check: P is not idempotent");
    TailsCheck c;
    c.lhs = trace_distance(rho, sigma);
    c.rhs = (p * sigma.matrix()).trace().real() - (p * rho.matrix()).trace().real();
    c.holds = c.lhs >= c.rhs - 1e-12;
    return c;
}

// ---------------------------------------------------------------------------
// Subsystem helpers

/// Amplitudes reshaped as a (sites) x (complement) matrix. The first listed
/// site is the most significant local digit; the complement keeps ring order.
inline Matrix bipartition_matrix(const StateVector& state, const std::vector<int>& sites) {
    const RingSpec& spec = state.spec();
    std::vector<bool> kept(spec.n, false);
    for (int s : sites) {
        if (s < 0 || s >= spec.n || kept[s]) throw DomainError("bipartition_matrix: bad site list");
        kept[s] = true;
    }
    std::vector<int> env;
    for (int s = 0; s < spec.n; ++s)
        if (!kept[s]) env.push_back(s);
    const auto sub_dim = static_cast<Eigen::Index>(ipow(spec.q, sites.size()));
    const auto env_dim = static_cast<Eigen::Index>(ipow(spec.q, env.size()));
    Matrix psi(sub_dim, env_dim);
    for (std::uint64_t i = 0; i < spec.dim(); ++i) {
        std::uint64_t a = 0, e = 0;
        for (int s : sites) a = a * spec.q + spec.digit(i, s);
        for (int s : env) e = e * spec.q + spec.digit(i, s);
        psi(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(e)) = state.amplitudes()(static_cast<Eigen::Index>(i));
    }
    return psi;
}

/// Normalized reduced density matrix of `state` on `sites`.
inline Matrix reduced_density_matrix(const StateVector& state, const std::vector<int>& sites) {
    const Matrix psi = bipartition_matrix(state, sites);
    Matrix rho = psi * psi.adjoint();
    const double tr = rho.trace().real();
    if (tr > 0.0) rho /= tr;
    return rho;
}

struct SubsystemFactor {
    Vector state;          // normalized dominant local state
    double purity = 0.0;   // Tr(rho_sites^2)
};

/// Purity of the reduced state on `sites` and its dominant eigenvector,
/// computed through whichever side of the bipartition is smaller.
inline SubsystemFactor dominant_factor(const StateVector& state, const std::vector<int>& sites) {
    const Matrix psi = bipartition_matrix(state, sites);
    const double nrm2 = psi.squaredNorm();
    if (nrm2 == 0.0) throw DomainError("dominant_factor: zero state");
    SubsystemFactor out;
    if (psi.rows() <= psi.cols()) {
        const Matrix rho = psi * psi.adjoint() / nrm2;
        Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (rho + rho.adjoint()));
        out.purity = es.eigenvalues().squaredNorm();
        out.state = es.eigenvectors().col(es.eigenvalues().size() - 1);
    } else {
        const Matrix sigma = psi.adjoint() * psi / nrm2;
        Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (sigma + sigma.adjoint()));
        out.purity = es.eigenvalues().squaredNorm();
        out.state = psi * es.eigenvectors().col(es.eigenvalues().size() - 1);
        out.state.normalize();
    }
    return out;
}

inline double purity(const Matrix& rho) { return (rho * rho).trace().real(); }

/// Tensor product of local states placed on disjoint site lists that together
/// cover the ring. Each local state uses its listed site order.
inline StateVector assemble_product(const RingSpec& spec, const std::vector<std::pair<std::vector<int>, Vector>>& parts,
                                    std::uint64_t cap = kDefaultAmplitudeCap) {
    spec.require_within(cap, "assemble_product");
    std::vector<int> owner(spec.n, -1);
    for (std::size_t p = 0; p < parts.size(); ++p) {
        const auto& [sites, local] = parts[p];
        if (static_cast<std::uint64_t>(local.size()) != ipow(spec.q, sites.size()))
            throw DomainError("assemble_product: local state size mismatch");
        for (int s : sites) {
            if (s < 0 || s >= spec.n || owner[s] != -1) throw DomainError("assemble_product: overlapping or bad sites");
            owner[s] = static_cast<int>(p);
        }
    }
    for (int o : owner)
        if (o == -1) throw DomainError("assemble_product: parts do not cover the ring");
    Vector out(static_cast<Eigen::Index>(spec.dim()));
    for (std::uint64_t i = 0; i < spec.dim(); ++i) {
        Complex amp = 1.0;
        for (const auto& [sites, local] : parts) {
            std::uint64_t a = 0;
            for (int s : sites) a = a * spec.q + spec.digit(i, s);
            amp *= local(static_cast<Eigen::Index>(a));
        }
        out(static_cast<Eigen::Index>(i)) = amp;
    }
    return {spec, std::move(out)};
}

}  // namespace tilre
