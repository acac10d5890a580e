import math

import numpy as np
import pytest

from oracles import random_density
from wgverify.errors import CapabilityError, InputError
from wgverify.iqp import (
    IqpInstance,
    MsInstance,
    build_iqp_state,
    build_ms_state,
    compute_Z_R,
    fidelity_to_l1_bound,
    format_distribution,
    framed_state,
    iqp_state_direct,
    l1_distance,
    ms_state_direct,
    output_distribution,
    parse_iqp,
    verification_params_iqp,
    z_distribution,
)
from wgverify.protocols import derive_candidates
from wgverify.state import H, T, StateVector, basis_state, fidelity, plus_state


def random_iqp(rng, n):
    w = {(j, k): int(rng.integers(0, 8)) for j in range(1, n + 1) for k in range(j + 1, n + 1)
         if rng.random() < 0.6}
    v = {l: int(rng.integers(0, 8)) for l in range(1, n + 1)}
    return IqpInstance(n, w, v)


def random_ms(rng, n):
    th = {(j, k): float(rng.choice([math.pi / 8, math.pi / 4])) for j in range(1, n + 1)
          for k in range(j + 1, n + 1) if rng.random() < 0.6}
    return MsInstance(n, th)


class TestMs:
    def test_two_qubits(self):
        g, frame = build_ms_state(MsInstance(2, {(1, 2): math.pi / 4}))
        s = framed_state(g, frame)
        phase = np.exp(-1j * math.pi / 4 * np.array([1, -1, -1, 1])) / 2
        # equal up to a global phase
        ratio = s.amps / phase
        assert np.allclose(ratio, ratio[0])
        assert fidelity(s, StateVector(phase)) == pytest.approx(1.0)

    def test_single(self):
        g, frame = build_ms_state(MsInstance(1))
        assert np.allclose(frame[0], np.eye(2))
        assert np.allclose(framed_state(g, frame).amps, plus_state(1).amps)

    def test_bad_angle(self):
        with pytest.raises(InputError):
            MsInstance(2, {(1, 2): 0.3})

    def test_random(self, rng):
        for _ in range(50):
            inst = random_ms(rng, int(rng.integers(1, 6)))
            g, frame = build_ms_state(inst)
            assert fidelity(framed_state(g, frame), ms_state_direct(inst)) >= 1 - 1e-10

    def test_ms_candidates_at_most_8(self, rng):
        for _ in range(20):
            g, _ = build_ms_state(random_ms(rng, 5))
            assert max(len(c) for c in derive_candidates(g).values()) <= 8


class TestIqp:
    def test_all_zero(self):
        inst = IqpInstance(3)
        g, frame = build_iqp_state(inst)
        s = framed_state(g, frame)
        assert fidelity(s, basis_state(3, 0)) == pytest.approx(1.0)
        p = output_distribution(s)
        assert p[0] == pytest.approx(1.0)

    def test_single_v1(self):
        inst = IqpInstance(1, {}, {1: 1})
        g, frame = build_iqp_state(inst)
        expect = H @ T @ np.array([1, 1]) / math.sqrt(2)
        assert fidelity(framed_state(g, frame), StateVector(expect)) == pytest.approx(1.0)

    def test_random(self, rng):
        for _ in range(50):
            inst = random_iqp(rng, int(rng.integers(1, 6)))
            g, frame = build_iqp_state(inst)
            assert fidelity(framed_state(g, frame), iqp_state_direct(inst)) >= 1 - 1e-10

    def test_candidates_at_most_2(self, rng):
        for _ in range(20):
            g, _ = build_iqp_state(random_iqp(rng, 5))
            assert max(len(c) for c in derive_candidates(g).values()) <= 2

    @pytest.mark.parametrize("w, v", [({(1, 1): 1}, {}), ({(1, 2): 8}, {}), ({}, {1: -1}), ({}, {3: 1})])
    def test_invalid(self, w, v):
        with pytest.raises(InputError):
            IqpInstance(2, w, v)

    def test_parse(self):
        inst = parse_iqp("n 3\nw 2 1 5  # edge\nv 3 7\n")
        assert inst.w == {(1, 2): 5} and inst.v == {3: 7}
        for bad in ("w 1 2 3\n", "n 2\nw 1 2 3\nw 2 1 1\n", "n 2\nq 1\n", "n 2\nv 1 x\n"):
            with pytest.raises(InputError):
                parse_iqp(bad)


class TestParams:
    def test_iqp(self):
        assert verification_params_iqp(10, 0.1, 0.05)["N"] == 3800

    def test_ms(self):
        p = verification_params_iqp(10, 0.1, 0.05, variant="ms")
        assert p["N"] == 15200 and p["e_max"] == 8

    def test_beta_one(self):
        assert verification_params_iqp(10, 0.1, 1.0)["N"] == 1

    def test_bad_variant(self):
        with pytest.raises(InputError):
            verification_params_iqp(10, 0.1, 0.05, variant="x")


class TestDistributions:
    def test_plus_uniform(self):
        assert np.allclose(output_distribution(plus_state(3)), 1 / 8)

    def test_l1(self):
        assert l1_distance([0.5, 0.5], [0.5, 0.5]) == 0
        assert l1_distance([1, 0], [0, 1]) == 2
        assert l1_distance([0.5, 0.5], [1, 0]) == pytest.approx(1)
        with pytest.raises(InputError):
            l1_distance([1], [0.5, 0.5])
        with pytest.raises(InputError):
            l1_distance([0.5, 0.4], [0.5, 0.5])

    def test_fidelity_bound(self):
        assert fidelity_to_l1_bound(1.0) == 0.0
        assert fidelity_to_l1_bound(0.99) == pytest.approx(0.2)
        with pytest.raises(InputError):
            fidelity_to_l1_bound(1.2)

    def test_bound_holds(self, rng):
        for _ in range(50):
            n = int(rng.integers(1, 5))
            g, frame = build_iqp_state(random_iqp(rng, n))
            s = framed_state(g, frame)
            rho = random_density(rng, 1 << n, rank=int(rng.integers(1, 3)))
            from wgverify.state import DensityMatrix
            F = fidelity(DensityMatrix(rho), s)
            assert l1_distance(output_distribution(s), z_distribution(rho)) <= fidelity_to_l1_bound(F) + 1e-12

    def test_format(self):
        text = format_distribution(output_distribution(basis_state(2, 0b01)), 2)
        assert text.splitlines() == ["00 0.0", "01 0.0", "10 1.0", "11 0.0"]


class TestZR:
    def test_examples(self):
        assert compute_Z_R(IqpInstance(1)) == 2
        assert compute_Z_R(IqpInstance(1, {}, {1: 4})) == 0
        assert compute_Z_R(IqpInstance(2, {(1, 2): 4})) == 0

    def test_triangle(self, rng):
        for _ in range(30):
            inst = random_iqp(rng, int(rng.integers(1, 8)))
            assert abs(compute_Z_R(inst)) ** 2 <= 4**inst.n + 1e-9

    def test_direct_sum(self, rng):
        import itertools
        inst = random_iqp(rng, 4)
        total = 0
        for z in itertools.product((1, -1), repeat=4):
            e = sum(val * z[j - 1] * z[k - 1] for (j, k), val in inst.w.items())
            e += sum(val * z[l - 1] for l, val in inst.v.items())
            total += np.exp(1j * math.pi / 8 * e)
        assert compute_Z_R(inst) == pytest.approx(total, abs=1e-12)

    def test_limit(self):
        with pytest.raises(CapabilityError):
            compute_Z_R(IqpInstance(21))
