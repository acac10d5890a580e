import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import graph_state_bruteforce, ket, random_density, random_pure
from wgverify.errors import CapabilityError, InputError, StateError
from wgverify.graph import WeightedGraph
from wgverify.state import (
    MINUS,
    PLUS,
    TDG,
    DensityMatrix,
    H,
    PlaneBasis,
    StateVector,
    T,
    alpha_expected,
    apply_gate,
    apply_local_phase_frame,
    basis_state,
    build_weighted_graph_state,
    dagger_frame,
    dump_state,
    fidelity,
    measure_plane,
    measure_z,
    plane_state,
    plus_state,
    reduce_angle,
)


def sv(v):
    return StateVector(np.asarray(v, dtype=complex))


def random_graph(rng, n, p=0.6):
    edges = {}
    for j in range(1, n + 1):
        for k in range(j + 1, n + 1):
            if rng.random() < p:
                edges[(j, k)] = float(rng.uniform(-math.pi, math.pi)) or 0.1
    return WeightedGraph(n, edges)


class TestConstruction:
    def test_plus(self):
        assert np.allclose(plus_state(2).amps, 0.5)

    def test_basis_bit_convention(self):
        # vertex 1 is the least significant bit
        s = basis_state(3, 0b001)
        z, _ = measure_z(s, 1, 0)
        assert z == 1
        z3, _ = measure_z(s, 3, 0)
        assert z3 == 0

    def test_unnormalized_rejected(self):
        with pytest.raises(InputError):
            StateVector([1, 1])

    def test_bad_length(self):
        with pytest.raises(InputError):
            StateVector([1, 0, 0], normalize=True)

    def test_dense_limit(self):
        with pytest.raises(CapabilityError):
            plus_state(25)

    def test_immutable(self):
        s = plus_state(1)
        with pytest.raises(ValueError):
            s.amps[0] = 0

    def test_single_edge_pi(self):
        # theta = pi is CZ: amplitudes (1,1,1,-1)/2
        g = WeightedGraph(2, {(1, 2): math.pi})
        assert np.allclose(build_weighted_graph_state(g).amps, [0.5, 0.5, 0.5, -0.5], atol=1e-15)

    def test_matches_bruteforce(self, rng):
        for n in range(1, 7):
            for _ in range(5):
                g = random_graph(rng, n)
                a = build_weighted_graph_state(g).amps
                assert np.max(np.abs(a - graph_state_bruteforce(g))) < 1e-12

    def test_lambda_symmetric(self):
        from oracles import lambda_gate
        u1 = lambda_gate(3, 1, 3, 0.7)
        u2 = lambda_gate(3, 3, 1, 0.7)
        assert np.allclose(u1, u2)

    def test_density_checks(self):
        with pytest.raises(InputError):
            DensityMatrix(np.diag([0.5, 0.6]))
        with pytest.raises(InputError):
            DensityMatrix(np.diag([1.5, -0.5]))
        with pytest.raises(InputError):
            DensityMatrix(np.array([[0.5, 0.1], [0.2, 0.5]]))


class TestAlpha:
    def test_sum(self):
        g = WeightedGraph(3, {(1, 2): 0.5, (2, 3): 1.0})
        assert alpha_expected(g, 2, {1: 1, 3: 1}) == pytest.approx(1.5)
        assert alpha_expected(g, 2, {1: 0, 3: 1}) == pytest.approx(1.0)

    def test_isolated(self):
        assert alpha_expected(WeightedGraph(1), 1, {}) == 0.0

    def test_reduced(self):
        g = WeightedGraph(3, {(1, 2): 3 * math.pi / 2, (2, 3): 3 * math.pi / 2})
        assert alpha_expected(g, 2, {1: 1, 3: 1}) == pytest.approx(math.pi)

    def test_missing(self):
        g = WeightedGraph(2, {(1, 2): 1.0})
        with pytest.raises(InputError):
            alpha_expected(g, 2, {})

    def test_reduce_angle(self):
        assert reduce_angle(-0.5) == pytest.approx(2 * math.pi - 0.5)
        assert reduce_angle(2 * math.pi) == 0.0


class TestMeasureZ:
    def test_zero(self, rng):
        for _ in range(20):
            assert measure_z(basis_state(1, 0), 1, rng)[0] == 0

    def test_plus_half(self, rng):
        zs = [measure_z(plus_state(1), 1, rng)[0] for _ in range(4000)]
        assert abs(np.mean(zs) - 0.5) < 3 * 0.5 / math.sqrt(4000)

    def test_collapse_keeps_register(self, rng):
        z, s = measure_z(plus_state(3), 2, rng)
        assert s.n == 3 and s.measured == {2}
        assert math.isclose(np.vdot(s.amps, s.amps).real, 1.0, abs_tol=1e-10)
        bits = (np.arange(8) >> 1) & 1
        assert np.all(np.abs(s.amps[bits != z]) == 0)

    def test_remeasure(self, rng):
        _, s = measure_z(plus_state(2), 1, rng)
        with pytest.raises(StateError):
            measure_z(s, 1, rng)

    def test_out_of_range(self, rng):
        with pytest.raises(InputError):
            measure_z(plus_state(2), 3, rng)

    def test_conditional_plane_state(self, rng):
        # theta = pi/2 edge: after Z on vertex 1 with outcome z, vertex 2 is |z pi/2>
        g = WeightedGraph(2, {(1, 2): math.pi / 2})
        for _ in range(20):
            z, s = measure_z(build_weighted_graph_state(g), 1, rng)
            expect = np.kron(ket(z * math.pi / 2), [1, 0] if z == 0 else [0, 1])
            assert abs(np.vdot(expect, s.amps)) ** 2 == pytest.approx(1.0, abs=1e-12)


class TestMeasurePlane:
    def test_plus_alpha0(self, rng):
        assert all(measure_plane(plus_state(1), 1, 0.0, rng)[0] == PLUS for _ in range(50))

    def test_plus_alpha_pi(self, rng):
        assert all(measure_plane(plus_state(1), 1, PlaneBasis(math.pi), rng)[0] == MINUS for _ in range(50))

    def test_cos2(self, rng):
        s = sv(plane_state(math.pi / 4))
        hits = sum(measure_plane(s, 1, 0.0, rng)[0] == PLUS for _ in range(20000))
        p = math.cos(math.pi / 8) ** 2
        assert abs(hits / 20000 - p) < 3 * math.sqrt(p * (1 - p) / 20000)

    def test_collapse(self, rng):
        o, s = measure_plane(sv(random_pure(rng, 4)), 2, 0.9, rng)
        angle = 0.9 if o == PLUS else 0.9 + math.pi
        # qubit 2 factors out as |angle>
        t = s.amps.reshape(2, 2)  # axis 0 is qubit 2
        assert np.allclose(t[1], np.exp(1j * angle) * t[0])
        assert math.isclose(np.vdot(s.amps, s.amps).real, 1.0, abs_tol=1e-10)

    def test_adaptive_correctness(self, rng):
        # Z-measure neighbors, then measure k at alpha_expected: always +.
        for _ in range(10000):
            n = int(rng.integers(2, 9))
            g = random_graph(rng, n)
            k = int(rng.integers(1, n + 1))
            s = build_weighted_graph_state(g)
            z = {}
            for j in sorted(g.neighbors(k)):
                z[j], s = measure_z(s, j, rng)
            o, s = measure_plane(s, k, alpha_expected(g, k, z), rng)
            assert o == PLUS


class TestFidelity:
    def test_self(self):
        s = build_weighted_graph_state(WeightedGraph(3, {(1, 2): 0.4}))
        assert fidelity(s, s) == pytest.approx(1.0)

    def test_orthogonal(self):
        assert fidelity(sv(plane_state(math.pi)), plus_state(1)) == pytest.approx(0.0, abs=1e-15)

    def test_depolarized(self):
        g = build_weighted_graph_state(WeightedGraph(2, {(1, 2): 1.0}))
        p = 0.3
        rho = (1 - p) * np.outer(g.amps, g.amps.conj()) + p * np.eye(4) / 4
        assert fidelity(DensityMatrix(rho), g) == pytest.approx(1 - p + p / 4)

    def test_dim_mismatch(self):
        with pytest.raises(InputError):
            fidelity(plus_state(1), plus_state(2))


class TestFrames:
    def test_identity(self, rng):
        s = sv(random_pure(rng, 8))
        assert np.allclose(apply_local_phase_frame(s, [np.eye(2)] * 3).amps, s.amps)

    def test_hadamard(self):
        assert np.allclose(apply_local_phase_frame(basis_state(1, 0), [H]).amps, plus_state(1).amps)

    def test_tdag(self):
        out = apply_local_phase_frame(sv(plane_state(0.3)), [TDG])
        assert np.allclose(out.amps, plane_state(0.3 - math.pi / 4))

    def test_non_unitary(self):
        with pytest.raises(InputError):
            apply_local_phase_frame(plus_state(1), [np.diag([1.0, 2.0])])

    def test_map_form_and_kron(self, rng):
        s = sv(random_pure(rng, 8))
        out = apply_local_phase_frame(s, {2: T})
        ref = np.kron(np.kron(np.eye(2), T), np.eye(2)) @ s.amps
        assert np.allclose(out.amps, ref)

    def test_dagger_inverts(self, rng):
        s = sv(random_pure(rng, 4))
        fr = [H @ T, T @ H]
        back = apply_local_phase_frame(apply_local_phase_frame(s, fr), dagger_frame(fr))
        assert np.allclose(back.amps, s.amps)

    def test_apply_gate_order(self):
        # CNOT with control qubit 1 (first listed) and target 2
        cnot = np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]])
        s = apply_gate(basis_state(2, 0b01), cnot, [1, 2])
        assert np.allclose(s.amps, basis_state(2, 0b11).amps)


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 4), st.integers(0, 2**32 - 1))
def test_mixture_fidelity_linear(n, seed):
    r = np.random.default_rng(seed)
    a, b = sv(random_pure(r, 1 << n)), sv(random_pure(r, 1 << n))
    t = sv(random_pure(r, 1 << n))
    w = float(r.random())
    mix = DensityMatrix.mixture([a, b], [w, 1 - w])
    assert fidelity(mix, t) == pytest.approx(w * fidelity(a, t) + (1 - w) * fidelity(b, t), abs=1e-12)


def test_random_density_valid(rng):
    DensityMatrix(random_density(rng, 8))


def test_dump_state():
    lines = dump_state(plus_state(1)).splitlines()
    assert lines == [f"0 {2 ** -0.5!r} 0.0", f"1 {2 ** -0.5!r} 0.0"]
