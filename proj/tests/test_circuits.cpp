#include <algorithm>
#include <cmath>
#include <set>
#include <vector>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "tilre/circuit_io.hpp"
#include "tilre/circuits.hpp"

using namespace tilre;

namespace {

Matrix swap_gate() {
    Matrix s = Matrix::Zero(4, 4);
    s(0, 0) = s(3, 3) = 1.0;
    s(1, 2) = s(2, 1) = 1.0;
    return s;
}

StateVector random_state(const RingSpec& spec, Rng& rng) { return StateVector(spec, gaussian_vector(spec.dim(), rng)).normalized(); }

std::set<int> support_set(const BrickworkCircuit& c) {
    const auto s = c.support();
    return {s.begin(), s.end()};
}

TiCircuitSample sample(int n, int d, std::uint64_t stream) {
    Rng rng = make_stream(77, stream);
    return sample_ti_state(RingSpec(n, 2), d, rng);
}

}  // namespace

TEST(BrickworkCircuit, Validation) {
    const RingSpec spec(4, 2);
    const Matrix id = Matrix::Identity(4, 4);
    EXPECT_THROW(BrickworkCircuit(spec, 1, {{0, 0, id}, {1, 0, id}}), StructuralError);
    EXPECT_THROW(BrickworkCircuit(spec, 1, {{3, 0, id}, {0, 0, id}}), StructuralError);  // wraps onto site 0
    EXPECT_THROW(BrickworkCircuit(spec, 1, {{0, 1, id}}), StructuralError);
    EXPECT_THROW(BrickworkCircuit(spec, 1, {{4, 0, id}}), StructuralError);
    EXPECT_THROW(BrickworkCircuit(spec, 1, {{0, 0, 2.0 * id}}), StructuralError);
    EXPECT_THROW(BrickworkCircuit(spec, 1, {{0, 0, Matrix::Identity(2, 2)}}), StructuralError);
    EXPECT_NO_THROW(BrickworkCircuit(spec, 2, {{0, 0, id}, {2, 0, id}, {1, 1, id}, {3, 1, id}}));
}

TEST(ApplyCircuit, EmptyIsIdentity) {
    Rng rng(1);
    const RingSpec spec(5, 3);
    const StateVector s = random_state(spec, rng);
    EXPECT_EQ(apply_circuit(BrickworkCircuit(spec, 0, {}), s).amplitudes(), s.amplitudes());
}

TEST(ApplyCircuit, SwapMovesExcitation) {
    const RingSpec spec(4, 2);
    const BrickworkCircuit c(spec, 1, {{0, 0, swap_gate()}});
    EXPECT_EQ(apply_circuit(c, StateVector::basis(spec, {0, 1, 0, 0})).amplitudes(),
              StateVector::basis(spec, {1, 0, 0, 0}).amplitudes());
    const BrickworkCircuit wrap(spec, 1, {{3, 0, swap_gate()}});
    EXPECT_EQ(apply_circuit(wrap, StateVector::basis(spec, {0, 0, 0, 1})).amplitudes(),
              StateVector::basis(spec, {1, 0, 0, 0}).amplitudes());
}

TEST(ApplyCircuit, MatchesEmbeddedGateProduct) {
    for (int q : {2, 3}) {
        const int n = q == 2 ? 5 : 4;
        const RingSpec spec(n, q);
        Rng rng(2 + q);
        std::vector<TwoSiteGate> gates;
        for (int layer = 0; layer < 3; ++layer)
            for (int s = layer % 2; s + 1 < n + (layer == 1 ? 1 : 0); s += 2)
                gates.push_back({s % n, layer, haar_unitary(q * q, rng)});
        const BrickworkCircuit c(spec, 3, gates);
        Matrix u = Matrix::Identity(spec.dim(), spec.dim());
        for (const auto& g : c.gates()) {
            const auto [a, b] = gate_sites(g, n);
            u = oracle::embed(g.matrix, {a, b}, n, q) * u;
        }
        const StateVector s = random_state(spec, rng);
        const StateVector out = apply_circuit(c, s);
        EXPECT_LT((out.amplitudes() - u * s.amplitudes()).norm(), 1e-12);
        EXPECT_NEAR(out.norm(), 1.0, 1e-12);
        EXPECT_LT((apply_circuit(c.inverse(), out).amplitudes() - s.amplitudes()).norm(), 1e-10);
    }
}

TEST(HaarGates, UnitaryWithinTolerance) {
    for (int i = 0; i < 100; ++i) {
        Rng rng = make_stream(3, i);
        const Matrix u = haar_unitary(4, rng);
        EXPECT_LT((u.adjoint() * u - Matrix::Identity(4, 4)).cwiseAbs().maxCoeff(), 1e-12);
    }
}

TEST(Invariance, Examples) {
    const RingSpec spec(4, 2);
    Vector v(2);
    v << 0.6, Complex(0.0, 0.8);
    EXPECT_LE(is_translation_invariant(StateVector::product(spec, v), 0.0).deviation, 1e-15);
    const InvarianceCheck basis = is_translation_invariant(StateVector::basis(spec, {1, 0, 0, 0}), 1e-10);
    EXPECT_FALSE(basis.invariant);
    EXPECT_NEAR(basis.deviation, std::sqrt(2.0), 1e-15);
}

TEST(TiFamily, StatesAndCircuitsCommuteWithShift) {
    for (int n : {4, 6, 8})
        for (int d = 0; d <= 4; ++d) {
            const TiCircuitSample s = sample(n, d, n * 10 + d);
            EXPECT_LE(is_translation_invariant(s.state, 1e-10).deviation, 1e-10);
            // the whole unitary commutes with T on a non-invariant input too
            Rng rng(n + d);
            const StateVector x = random_state(RingSpec(n, 2), rng);
            const auto lhs = apply_circuit(s.circuit, translate(x, 1)).amplitudes();
            const auto rhs = translate(apply_circuit(s.circuit, x), 1).amplitudes();
            EXPECT_LT((lhs - rhs).norm(), 1e-12);
        }
    Rng rng(5);
    EXPECT_THROW(random_ti_circuit(RingSpec(5, 2), 1, rng), DomainError);
}

TEST(LightCone, DepthOneIsTheStraddlingGate) {
    const TiCircuitSample s = sample(8, 1, 1);
    for (int x = 0; x < 8; ++x) {
        const BrickworkCircuit c = lightcone_subcircuit(s.circuit, x);
        ASSERT_EQ(c.gates().size(), 1u);
        EXPECT_EQ(c.gates()[0].left_site, x);
        EXPECT_EQ(c.gates()[0].layer, 0);
    }
}

TEST(LightCone, SizeShapeAndShift) {
    for (int d = 1; d <= 3; ++d) {
        const int n = 2 * d + 4;
        const TiCircuitSample s = sample(n, d, 100 + d);
        const BrickworkCircuit c0 = lightcone_subcircuit(s.circuit, 0);
        EXPECT_LE(c0.gates().size(), static_cast<std::size_t>(d * d));
        EXPECT_LE(c0.support().size(), static_cast<std::size_t>(2 * d));
        for (int x = 1; x < n; ++x) {
            const BrickworkCircuit cx = lightcone_subcircuit(s.circuit, x);
            ASSERT_EQ(cx.gates().size(), c0.gates().size());
            for (std::size_t i = 0; i < cx.gates().size(); ++i) {
                EXPECT_EQ(cx.gates()[i].left_site, (c0.gates()[i].left_site + x) % n);
                EXPECT_EQ(cx.gates()[i].layer, c0.gates()[i].layer);
                EXPECT_EQ(cx.gates()[i].matrix, c0.gates()[i].matrix);
            }
        }
    }
}

TEST(LightCone, DisjointWhenFarApart) {
    for (int d = 1; d <= 2; ++d) {
        const int n = 12;
        const TiCircuitSample s = sample(n, d, 200 + d);
        for (int x = 0; x < n; ++x)
            for (int y = 0; y < n; ++y) {
                const int gap = std::min((x - y + n) % n, (y - x + n) % n);
                if (gap < 2 * d + 1) continue;
                const auto a = support_set(lightcone_subcircuit(s.circuit, x));
                const auto b = support_set(lightcone_subcircuit(s.circuit, y));
                std::vector<int> both;
                std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(both));
                EXPECT_TRUE(both.empty()) << d << " " << x << " " << y;
            }
    }
}

TEST(LightCone, RingTooSmall) {
    const TiCircuitSample s = sample(4, 2, 3);
    EXPECT_THROW(lightcone_subcircuit(s.circuit, 0), DomainError);
    EXPECT_THROW(lightcone_subcircuit(sample(6, 1, 3).circuit, 6), DomainError);
}

TEST(CutPositions, Layout) {
    EXPECT_EQ(cut_positions(6, 1), (std::vector<int>{0, 3}));
    EXPECT_EQ(cut_positions(8, 1), (std::vector<int>{0, 3, 6}));
    EXPECT_EQ(cut_positions(10, 1), (std::vector<int>{0, 3, 6}));
    EXPECT_EQ(cut_positions(12, 1), (std::vector<int>{0, 3, 6, 9}));
    EXPECT_EQ(cut_positions(8, 2), (std::vector<int>{0}));
    EXPECT_EQ(cut_positions(10, 2), (std::vector<int>{0, 5}));
    EXPECT_EQ(cut_positions(5, 0), (std::vector<int>{0, 1, 2, 3, 4}));
}

TEST(CutState, EveryCutFactorizes) {
    for (int n : {6, 8, 10, 12})
        for (int d : {1, 2}) {
            const TiCircuitSample s = sample(n, d, 300 + n * 3 + d);
            const StateVector cut = cut_state(s.circuit, s.state);
            for (const auto& seg : cut_segments(n, d)) {
                const Matrix rho = reduced_density_matrix(cut, seg.sites);
                EXPECT_GE(purity(rho), 1.0 - 1e-9) << n << " " << d;
            }
        }
}

TEST(CutState, SingleCutAndRestore) {
    const TiCircuitSample s = sample(8, 2, 7);
    ASSERT_EQ(cut_positions(8, 2).size(), 1u);
    const StateVector cut = cut_state(s.circuit, s.state);
    const StateVector back = apply_circuit(lightcone_subcircuit(s.circuit, 0), cut);
    EXPECT_LT((back.amplitudes() - s.state.amplitudes()).norm(), 1e-10);
}

TEST(CutState, RestoreWithManyCuts) {
    const TiCircuitSample s = sample(12, 1, 8);
    Vector amp = cut_state(s.circuit, s.state).amplitudes();
    for (int x : cut_positions(12, 1)) {
        const BrickworkCircuit cone = lightcone_subcircuit(s.circuit, x);
        for (const auto& g : cone.gates()) apply_gate(amp, RingSpec(12, 2), g);
    }
    EXPECT_LT((amp - s.state.amplitudes()).norm(), 1e-10);
}

TEST(CutState, RejectsNonInvariantInput) {
    const TiCircuitSample s = sample(8, 1, 9);
    Rng rng(10);
    try {
        cut_state(s.circuit, random_state(RingSpec(8, 2), rng));
        FAIL() << "expected PreconditionError";
    } catch (const PreconditionError& e) {
        EXPECT_NE(std::string(e.what()).find("deviation"), std::string::npos);
    }
}

TEST(BlockFactorization, EightSitesDepthOne) {
    const TiCircuitSample s = sample(8, 1, 11);
    const BlockFactorization f = block_factorization(s.circuit, s.state);
    EXPECT_LE(f.max_overlap_error, 1e-9);
    EXPECT_EQ(f.blocks.size(), 2u);
    EXPECT_GE(f.min_block_overlap, 1.0 - 1e-8);
    ASSERT_TRUE(f.remainder);
    EXPECT_EQ(f.remainder->spec().n, 2);
}

TEST(BlockFactorization, DepthZeroBlocksAreSiteStates) {
    Rng rng(12);
    const TiCircuitSample s = sample_ti_state(RingSpec(5, 2), 0, rng);
    const BlockFactorization f = block_factorization(s.circuit, s.state);
    EXPECT_EQ(f.blocks.size(), 4u);
    EXPECT_GE(f.min_block_overlap, 1.0 - 1e-12);
    EXPECT_LE(f.max_overlap_error, 1e-12);
}

TEST(BlockFactorization, DivisibleRingRemainderEqualsBlock) {
    for (int n : {6, 12}) {
        const TiCircuitSample s = sample(n, 1, 13 + n);
        const BlockFactorization f = block_factorization(s.circuit, s.state);
        ASSERT_TRUE(f.remainder_overlap) << n;
        EXPECT_GE(*f.remainder_overlap, 1.0 - 1e-8);
        EXPECT_EQ(f.remainder->spec().n, 3);
    }
    const TiCircuitSample s = sample(10, 2, 14);
    const BlockFactorization f = block_factorization(s.circuit, s.state);
    ASSERT_TRUE(f.remainder_overlap);
    EXPECT_GE(*f.remainder_overlap, 1.0 - 1e-8);
}

TEST(BlockFactorization, AcceptanceGridSweep) {
    int count = 0;
    for (int i = 0; i < 48; ++i) {
        const int n = 6 + 2 * (i % 4);
        const int d = 1 + (i / 4) % 2;
        const TiCircuitSample s = sample(n, d, 1000 + i);
        const BlockFactorization f = block_factorization(s.circuit, s.state);
        EXPECT_GE(f.min_purity, 1.0 - 1e-9);
        EXPECT_LE(f.max_overlap_error, 1e-8);
        EXPECT_GE(f.min_block_overlap, 1.0 - 1e-8);
        ++count;
    }
    EXPECT_EQ(count, 48);
}

TEST(GateMpo, IdentityAndSwap) {
    const GateMpoPair id = gate_mpo_decompose(Matrix::Identity(4, 4), 2);
    EXPECT_EQ(id.bond_dimension(), 4);
    EXPECT_EQ(id.schmidt_rank(), 1);
    const GateMpoPair sw = gate_mpo_decompose(swap_gate(), 2);
    EXPECT_EQ(sw.schmidt_rank(), 4);
    EXPECT_LT((sw.recontract() - swap_gate()).cwiseAbs().maxCoeff(), 1e-12);
    const GateMpoPair id3 = gate_mpo_decompose(Matrix::Identity(9, 9), 3);
    EXPECT_EQ(id3.bond_dimension(), 9);
    EXPECT_EQ(id3.schmidt_rank(), 1);
}

TEST(GateMpo, RandomRecontraction) {
    for (int i = 0; i < 100; ++i) {
        Rng rng = make_stream(15, i);
        const int q = 2 + i % 2;
        const Matrix g = haar_unitary(q * q, rng);
        const GateMpoPair p = gate_mpo_decompose(g, q);
        EXPECT_EQ(p.bond_dimension(), q * q);
        EXPECT_LE((p.recontract() - g).cwiseAbs().maxCoeff(), 1e-10);
    }
}

TEST(CircuitSpan, DepthZeroIsSymmetricSubspace) {
    for (int n : {4, 6, 8}) EXPECT_EQ(ti_circuit_span_rank(RingSpec(n, 2), 0, std::nullopt, 3).gram_rank, n + 1);
}

TEST(CircuitSpan, WithinBoundsAndMonotoneInDepth) {
    const RingSpec spec(8, 2);
    const int samples = static_cast<int>(circuit_required_samples(spec, 0)) * 3;
    int prev = 0;
    for (int d = 0; d <= 3; ++d) {
        const SpanEstimate e = ti_circuit_span_rank(spec, d, samples, 4);
        EXPECT_TRUE(e.within_bounds());
        EXPECT_LE(BigCount(e.gram_rank), necklace_count(8, 2));
        EXPECT_GE(e.gram_rank, prev) << d;
        prev = e.gram_rank;
    }
}

TEST(CircuitSpan, InsufficientSamples) {
    EXPECT_THROW(ti_circuit_span_rank(RingSpec(6, 2), 1, 3, 0), DomainError);
}

TEST(CircuitIo, RoundTrip) {
    const TiCircuitSample s = sample(6, 3, 16);
    const auto j = circuit_to_json(s.circuit);
    const BrickworkCircuit back = circuit_from_json(nlohmann::json::parse(j.dump()));
    ASSERT_EQ(back.gates().size(), s.circuit.gates().size());
    for (std::size_t i = 0; i < back.gates().size(); ++i) {
        EXPECT_EQ(back.gates()[i].left_site, s.circuit.gates()[i].left_site);
        EXPECT_EQ(back.gates()[i].layer, s.circuit.gates()[i].layer);
        EXPECT_EQ(back.gates()[i].matrix, s.circuit.gates()[i].matrix);
    }
    EXPECT_EQ(circuit_to_json(back).dump(), j.dump());
}

TEST(CircuitIo, KnownEncodingAndErrors) {
    Matrix one = Matrix::Zero(1, 1);
    one(0, 0) = Complex(1.0, 0.0);
    // 1.0 little-endian = 00 00 00 00 00 00 f0 3f, then eight zero bytes
    EXPECT_EQ(encode_matrix(one), "AAAAAAAA8D8AAAAAAAAAAA==");
    EXPECT_EQ(decode_matrix("AAAAAAAA8D8AAAAAAAAAAA==", 1, 1), one);
    EXPECT_THROW(decode_matrix("AAAA", 1, 1), DomainError);
    EXPECT_THROW(circuit_from_json(nlohmann::json::parse(R"({"n": 4})")), DomainError);
}
