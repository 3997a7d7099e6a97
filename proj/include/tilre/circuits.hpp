#pragma once
// Two-site gate circuits on a ring, light-cone cutting of translation
// invariant circuit states, and a sampled span probe for such states.
//
// Layers are applied in increasing order. A gate with left_site s acts on
// (s, s+1 mod n), with s the more significant factor of its q^2 x q^2 matrix.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/SVD>
#include <unsupported/Eigen/KroneckerProduct>

#include "tilre/combinatorics.hpp"
#include "tilre/random.hpp"
#include "tilre/span.hpp"
#include "tilre/statevector.hpp"

namespace tilre {

struct TwoSiteGate {
    int left_site = 0;
    int layer = 0;
    Matrix matrix;
};

inline std::pair<int, int> gate_sites(const TwoSiteGate& g, int n) { return {g.left_site, (g.left_site + 1) % n}; }

class BrickworkCircuit {
  public:
    BrickworkCircuit(RingSpec spec, int depth, std::vector<TwoSiteGate> gates)
        : spec_(spec), depth_(depth), gates_(std::move(gates)) {
        if (depth_ < 0) throw DomainError("BrickworkCircuit: depth must be >= 0");
        if (spec_.n < 2 && !gates_.empty()) throw StructuralError("BrickworkCircuit: two-site gates need n >= 2");
        const auto local = static_cast<Eigen::Index>(spec_.q) * spec_.q;
        for (const auto& g : gates_) {
            if (g.layer < 0 || g.layer >= depth_)
                throw StructuralError("BrickworkCircuit: gate layer " + std::to_string(g.layer) + " outside [0, depth)");
            if (g.left_site < 0 || g.left_site >= spec_.n)
                throw StructuralError("BrickworkCircuit: gate site " + std::to_string(g.left_site) + " outside ring");
            if (g.matrix.rows() != local || g.matrix.cols() != local)
                throw StructuralError("BrickworkCircuit: gate matrix must be q^2 x q^2");
            const double err = (g.matrix.adjoint() * g.matrix - Matrix::Identity(local, local)).cwiseAbs().maxCoeff();
            if (err > 1e-12) throw StructuralError("BrickworkCircuit: gate is not unitary (error " + std::to_string(err) + ")");
        }
        std::stable_sort(gates_.begin(), gates_.end(), [](const auto& a, const auto& b) { return a.layer < b.layer; });
        std::vector<int> owner(spec_.n, -1);
        int current = -1;
        for (const auto& g : gates_) {
            if (g.layer != current) {
                std::fill(owner.begin(), owner.end(), -1);
                current = g.layer;
            }
            const auto [a, b] = gate_sites(g, spec_.n);
            if (owner[a] != -1 || owner[b] != -1)
                throw StructuralError("BrickworkCircuit: overlapping gates in layer " + std::to_string(g.layer));
            owner[a] = owner[b] = 1;
        }
    }

    const RingSpec& spec() const { return spec_; }
    int depth() const { return depth_; }
    const std::vector<TwoSiteGate>& gates() const { return gates_; }

    std::vector<int> support() const {
        std::set<int> sites;
        for (const auto& g : gates_) {
            const auto [a, b] = gate_sites(g, spec_.n);
            sites.insert(a);
            sites.insert(b);
        }
        return {sites.begin(), sites.end()};
    }

    /// T^x C T^{-x}: every gate moved x sites along the ring.
    BrickworkCircuit shifted(int x) const {
        std::vector<TwoSiteGate> moved = gates_;
        for (auto& g : moved) g.left_site = (((g.left_site + x) % spec_.n) + spec_.n) % spec_.n;
        return {spec_, depth_, std::move(moved)};
    }

    BrickworkCircuit inverse() const {
        std::vector<TwoSiteGate> inv;
        inv.reserve(gates_.size());
        for (auto it = gates_.rbegin(); it != gates_.rend(); ++it)
            inv.push_back({it->left_site, depth_ - 1 - it->layer, it->matrix.adjoint()});
        return {spec_, depth_, std::move(inv)};
    }

  private:
    RingSpec spec_;
    int depth_ = 0;
    std::vector<TwoSiteGate> gates_;
};

inline void apply_gate(Vector& amp, const RingSpec& spec, const TwoSiteGate& gate) {
    const auto [sa, sb] = gate_sites(gate, spec.n);
    const std::uint64_t pa = spec.stride(sa), pb = spec.stride(sb);
    const int q = spec.q;
    Vector local(q * q);
    for (std::uint64_t i = 0; i < spec.dim(); ++i) {
        if (spec.digit(i, sa) != 0 || spec.digit(i, sb) != 0) continue;
        for (int a = 0; a < q; ++a)
            for (int b = 0; b < q; ++b) local(a * q + b) = amp(static_cast<Eigen::Index>(i + a * pa + b * pb));
        const Vector out = gate.matrix * local;
        for (int a = 0; a < q; ++a)
            for (int b = 0; b < q; ++b) amp(static_cast<Eigen::Index>(i + a * pa + b * pb)) = out(a * q + b);
    }
}

inline StateVector apply_circuit(const BrickworkCircuit& circuit, const StateVector& input) {
    if (!(circuit.spec() == input.spec())) throw DomainError("apply_circuit: ring specs differ");
    Vector amp = input.amplitudes();
    for (const auto& g : circuit.gates()) apply_gate(amp, input.spec(), g);
    return {input.spec(), std::move(amp)};
}

struct InvarianceCheck {
    bool invariant = false;
    double deviation = 0.0;  // ||psi - T psi||
};

inline InvarianceCheck is_translation_invariant(const StateVector& state, double tol) {
    const double dev = (state.amplitudes() - translate(state, 1).amplitudes()).norm();
    return {dev <= tol, dev};
}

// ---------------------------------------------------------------------------
// Light cones and cutting

/// Indices (into circuit.gates()) of the gates causally downstream of input
/// site `site`: a gate joins when it touches a site already influenced.
inline std::vector<std::size_t> future_cone(const BrickworkCircuit& circuit, int site) {
    const int n = circuit.spec().n;
    std::vector<bool> influenced(n, false);
    influenced[site] = true;
    std::vector<std::size_t> cone;
    const auto& gates = circuit.gates();
    std::size_t i = 0;
    while (i < gates.size()) {
        const int layer = gates[i].layer;
        std::vector<int> grown;
        for (; i < gates.size() && gates[i].layer == layer; ++i) {
            const auto [a, b] = gate_sites(gates[i], n);
            if (influenced[a] || influenced[b]) {
                cone.push_back(i);
                grown.push_back(a);
                grown.push_back(b);
            }
        }
        for (int s : grown) influenced[s] = true;
    }
    return cone;
}

/// C_x = T^x C_0 T^{-x}, where C_0 keeps the gates lying in both future light
/// cones of input sites 0 and 1. In a brickwork the cone starts from the
/// lowest gate on bond (0,1) and widens by one site per side per layer, so
/// it holds at most d^2 gates and spans at most 2d sites.
inline BrickworkCircuit lightcone_subcircuit(const BrickworkCircuit& circuit, int x) {
    const int n = circuit.spec().n;
    const int d = circuit.depth();
    if (x < 0 || x >= n) throw DomainError("lightcone_subcircuit: x must lie in [0, n)");
    if (n <= 2 * d + 1)
        throw DomainError("lightcone_subcircuit: ring too small for disjoint light cones, need n > 2d+1 = " +
                          std::to_string(2 * d + 1));
    const auto left = future_cone(circuit, 0);
    const auto right = future_cone(circuit, 1);
    std::vector<std::size_t> both;
    std::set_intersection(left.begin(), left.end(), right.begin(), right.end(), std::back_inserter(both));

    std::vector<TwoSiteGate> kept;
    for (std::size_t idx : both) kept.push_back(circuit.gates()[idx]);
    if (kept.size() > static_cast<std::size_t>(d) * d)
        throw StructuralError("lightcone_subcircuit: cone holds more than d^2 gates");
    if (!kept.empty()) {
        const int base = kept.front().layer;
        std::vector<int> per_layer(d, 0);
        for (const auto& g : kept) ++per_layer[g.layer];
        for (int l = base; l < d; ++l)
            if (per_layer[l] > l - base + 1)
                throw StructuralError("lightcone_subcircuit: cone wider than one gate per layer step at layer " +
                                      std::to_string(l));
    }
    return BrickworkCircuit(circuit.spec(), d, std::move(kept)).shifted(x);
}

/// Cut positions x_j = (2d+1) j for j < m, with n = m(2d+1) + r and
/// 1 <= r <= 2d+1. A further cut at x_m = (2d+1) m is added when r >= 2d,
/// which is exactly when its light cone misses the one at x_0.
inline std::vector<int> cut_positions(int n, int depth) {
    const BlockSplit split = block_split(static_cast<std::uint64_t>(n), static_cast<std::uint64_t>(depth));
    std::vector<int> xs;
    for (std::uint64_t j = 0; j < split.m; ++j) xs.push_back(static_cast<int>(j * split.block));
    if (split.r >= 2 * static_cast<std::uint64_t>(depth)) xs.push_back(static_cast<int>(split.m * split.block));
    return xs;
}

/// |psi_cut> = prod_j C_{(2d+1)j}^{-1} |psi>.
inline StateVector cut_state(const BrickworkCircuit& circuit, const StateVector& ti_state, double ti_tol = 1e-8) {
    if (!(circuit.spec() == ti_state.spec())) throw DomainError("cut_state: ring specs differ");
    const InvarianceCheck ti = is_translation_invariant(ti_state.normalized(), ti_tol);
    if (!ti.invariant)
        throw PreconditionError("cut_state: input is not translation invariant (deviation " +
                                std::to_string(ti.deviation) + ")");
    const int n = circuit.spec().n;
    std::vector<int> used(n, -1);
    Vector amp = ti_state.amplitudes();
    for (int x : cut_positions(n, circuit.depth())) {
        const BrickworkCircuit cone = lightcone_subcircuit(circuit, x);
        for (int s : cone.support()) {
            if (used[s] != -1)
                throw StructuralError("cut_state: light cones at " + std::to_string(used[s]) + " and " +
                                      std::to_string(x) + " overlap");
            used[s] = x;
        }
        const BrickworkCircuit undo = cone.inverse();
        for (const auto& g : undo.gates()) apply_gate(amp, circuit.spec(), g);
    }
    return {circuit.spec(), std::move(amp)};
}

/// A maximal run of sites between consecutive cuts.
struct CutSegment {
    std::vector<int> sites;  // in ring order
    bool is_block = false;
};

/// Consecutive cuts bound blocks [x_j+1, x_j+2d+1] of 2d+1 sites; the last
/// cut and x_0 bound the closing segment, which runs around to site 0.
inline std::vector<CutSegment> cut_segments(int n, int depth) {
    const auto xs = cut_positions(n, depth);
    const int block = 2 * depth + 1;
    std::vector<CutSegment> segs;
    for (std::size_t j = 0; j + 1 < xs.size(); ++j) {
        CutSegment s{{}, true};
        for (int k = 1; k <= block; ++k) s.sites.push_back(xs[j] + k);
        segs.push_back(std::move(s));
    }
    CutSegment last{{}, false};
    for (int s = xs.back() + 1; s < n; ++s) last.sites.push_back(s);
    last.sites.push_back(0);
    segs.push_back(std::move(last));
    return segs;
}

struct BlockFactorization {
    std::vector<StateVector> blocks;
    std::optional<StateVector> remainder;
    std::vector<CutSegment> segments;
    std::vector<double> purities;    // per segment
    double min_purity = 1.0;
    double max_overlap_error = 0.0;  // 1 - |<product of factors | psi_cut>|
    double min_block_overlap = 1.0;  // min_j |<block_j | block_0>|
    std::optional<double> remainder_overlap;  // |<remainder | block_0>| when sizes agree
};

/// Splits |psi_cut> into identical blocks and the closing segment, then
/// checks the tensor product of the factors against |psi_cut>.
inline BlockFactorization block_factorization(const BrickworkCircuit& circuit, const StateVector& ti_state,
                                              double purity_tol = 1e-9) {
    const StateVector cut = cut_state(circuit, ti_state).normalized();
    const RingSpec& spec = circuit.spec();
    BlockFactorization out;
    out.segments = cut_segments(spec.n, circuit.depth());
    std::vector<std::pair<std::vector<int>, Vector>> parts;
    for (const auto& seg : out.segments) {
        const SubsystemFactor f = dominant_factor(cut, seg.sites);
        if (f.purity < 1.0 - purity_tol)
            throw StructuralError("block_factorization: segment starting at site " + std::to_string(seg.sites.front()) +
                                  " is not pure (purity " + std::to_string(f.purity) + ")");
        out.purities.push_back(f.purity);
        out.min_purity = std::min(out.min_purity, f.purity);
        parts.emplace_back(seg.sites, f.state);
        StateVector local(RingSpec(static_cast<int>(seg.sites.size()), spec.q), f.state);
        if (seg.is_block)
            out.blocks.push_back(std::move(local));
        else
            out.remainder = std::move(local);
    }
    const StateVector recon = assemble_product(spec, parts);
    out.max_overlap_error = std::max(0.0, 1.0 - std::abs(recon.amplitudes().dot(cut.amplitudes())));
    for (std::size_t j = 1; j < out.blocks.size(); ++j)
        out.min_block_overlap =
            std::min(out.min_block_overlap, std::abs(out.blocks[0].amplitudes().dot(out.blocks[j].amplitudes())));
    if (!out.blocks.empty() && out.remainder && out.remainder->spec() == out.blocks[0].spec())
        out.remainder_overlap = std::abs(out.blocks[0].amplitudes().dot(out.remainder->amplitudes()));
    return out;
}

// ---------------------------------------------------------------------------
// Operator-Schmidt decomposition of a gate

/// Gate written as sum_k left[k] ⊗ right[k] with bond dimension q^2.
struct GateMpoPair {
    int q = 2;
    std::vector<Matrix> left;
    std::vector<Matrix> right;
    Eigen::VectorXd singular_values;

    int bond_dimension() const { return static_cast<int>(left.size()); }

    int schmidt_rank(double rel_tol = 1e-10) const {
        const double top = singular_values.size() ? singular_values.maxCoeff() : 0.0;
        int r = 0;
        for (double s : singular_values)
            if (s > rel_tol * top) ++r;
        return r;
    }

    Matrix recontract() const {
        const int qq = q * q;
        Matrix m = Matrix::Zero(qq, qq);
        for (std::size_t k = 0; k < left.size(); ++k) m += Eigen::kroneckerProduct(left[k], right[k]).eval();
        return m;
    }
};

inline GateMpoPair gate_mpo_decompose(const Matrix& gate, int q) {
    const int qq = q * q;
    if (gate.rows() != qq || gate.cols() != qq) throw DomainError("gate_mpo_decompose: gate must be q^2 x q^2");
    // R[(a' a), (b' b)] = G[(a' b'), (a b)]
    Matrix r(qq, qq);
    for (int ap = 0; ap < q; ++ap)
        for (int bp = 0; bp < q; ++bp)
            for (int a = 0; a < q; ++a)
                for (int b = 0; b < q; ++b) r(ap * q + a, bp * q + b) = gate(ap * q + bp, a * q + b);
    Eigen::JacobiSVD<Matrix> svd(r, Eigen::ComputeFullU | Eigen::ComputeFullV);
    GateMpoPair out;
    out.q = q;
    out.singular_values = svd.singularValues();
    for (int k = 0; k < qq; ++k) {
        const double w = std::sqrt(out.singular_values(k));
        Matrix lk(q, q), rk(q, q);
        for (int x = 0; x < q; ++x)
            for (int y = 0; y < q; ++y) {
                lk(x, y) = w * svd.matrixU()(x * q + y, k);
                rk(x, y) = w * std::conj(svd.matrixV()(x * q + y, k));
            }
        out.left.push_back(std::move(lk));
        out.right.push_back(std::move(rk));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Translation-invariant circuit sampling

/// Random brickwork circuit whose full unitary commutes with T (n even).
/// Layers come in pairs sharing a random diagonal two-site phase gate D:
/// the even-bond layer applies D (u ⊗ u) and the odd-bond layer (w ⊗ w) D,
/// so the pair equals w^{⊗n} (prod over all bonds of D) u^{⊗n}. An unpaired
/// final layer applies u ⊗ u. u and w are Haar single-site unitaries.
inline BrickworkCircuit random_ti_circuit(const RingSpec& spec, int depth, Rng& rng) {
    if (depth < 0) throw DomainError("random_ti_circuit: depth must be >= 0");
    if (depth > 0 && (spec.n % 2 != 0 || spec.n < 2))
        throw DomainError("random_ti_circuit: brickwork layers need an even ring");
    const int q = spec.q;
    const double two_pi = 2.0 * std::acos(-1.0);
    std::uniform_real_distribution<double> angle(0.0, two_pi);
    std::vector<TwoSiteGate> gates;
    for (int round = 0; 2 * round < depth; ++round) {
        const int even = 2 * round;
        const Matrix u = haar_unitary(q, rng);
        const Matrix uu = Eigen::kroneckerProduct(u, u).eval();
        if (even + 1 == depth) {
            for (int s = 0; s < spec.n; s += 2) gates.push_back({s, even, uu});
            break;
        }
        Matrix diag = Matrix::Zero(q * q, q * q);
        for (int i = 0; i < q * q; ++i) diag(i, i) = std::polar(1.0, angle(rng));
        const Matrix w = haar_unitary(q, rng);
        const Matrix ww = Eigen::kroneckerProduct(w, w).eval();
        const Matrix lower = diag * uu;
        const Matrix upper = ww * diag;
        for (int s = 0; s < spec.n; s += 2) gates.push_back({s, even, lower});
        for (int s = 1; s < spec.n; s += 2) gates.push_back({s, even + 1, upper});
    }
    return {spec, depth, std::move(gates)};
}

struct TiCircuitSample {
    BrickworkCircuit circuit;
    StateVector state;
};

/// Circuit from random_ti_circuit applied to a random product state v^{⊗n}.
inline TiCircuitSample sample_ti_state(const RingSpec& spec, int depth, Rng& rng,
                                       std::uint64_t cap = kDefaultAmplitudeCap) {
    Vector v = gaussian_vector(spec.q, rng);
    v.normalize();
    BrickworkCircuit circuit = random_ti_circuit(spec, depth, rng);
    StateVector state = apply_circuit(circuit, StateVector::product(spec, v, cap));
    return {std::move(circuit), std::move(state)};
}

inline std::optional<BigCount> circuit_span_bound(const RingSpec& spec, int depth) {
    if (depth < 1 || spec.n < 2 * depth + 2) return std::nullopt;
    return sre_dim_bound(spec.n, depth, spec.q);
}

inline BigCount circuit_required_samples(const RingSpec& spec, int depth) {
    const BigCount sector = necklace_count(spec.n, spec.q);
    const auto bound = circuit_span_bound(spec, depth);
    return 2 * (bound && *bound < sector ? *bound : sector);
}

inline int circuit_default_samples(const RingSpec& spec, int depth) {
    return static_cast<int>(circuit_required_samples(spec, depth) * 3 / 2 + 10);
}

/// Gram rank of seeded translation-invariant circuit states. This is a lower
/// bound on the span of all TI depth-d states, so it must sit below both the
/// counting bound and the zero-momentum dimension.
inline SpanEstimate ti_circuit_span_rank(const RingSpec& spec, int depth, std::optional<int> samples,
                                         std::uint64_t seed, double tolerance = 1e-8, unsigned workers = 1,
                                         std::uint64_t cap = kDefaultAmplitudeCap) {
    spec.require_within(cap, "ti_circuit_span_rank");
    const int count = samples.value_or(circuit_default_samples(spec, depth));
    const BigCount required = circuit_required_samples(spec, depth);
    if (BigCount(count) < required)
        throw DomainError("ti_circuit_span_rank: need at least " + to_decimal(required) + " samples, got " +
                          std::to_string(count));
    std::vector<Vector> states(count);
    parallel_for(count, workers, [&](std::size_t i) {
        Rng rng = make_stream(seed, i);
        states[i] = sample_ti_state(spec, depth, rng, cap).state.amplitudes();
    });
    SpanEstimate est;
    est.samples = count;
    est.tolerance = tolerance;
    est.spectrum = gram_rank(states, tolerance);
    est.gram_rank = est.spectrum.rank;
    est.bound = circuit_span_bound(spec, depth);
    est.sector_dim = necklace_count(spec.n, spec.q);
    return est;
}

}  // namespace tilre
