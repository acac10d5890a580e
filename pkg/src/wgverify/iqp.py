"""MS graph states and IQP circuits as weighted graph states in a local frame.

``exp(-i t Z(x)Z)`` equals, up to the global phase ``exp(-i t)``,
``Lambda(-4t)`` followed by ``diag(1, exp(2it))`` on both qubits, because
``Z(x)Z`` has eigenvalue ``1 - 2(a XOR b)`` and ``a XOR b = a + b - 2ab``.

IQP instance file format::

    n <int>
    w <j> <k> <value>     # 0..7, j != k
    v <l> <value>         # 0..7

Distribution dumps list ``<bitstring> <probability>`` sorted by bitstring;
character ``i`` of the bitstring is the Z outcome of vertex ``i + 1``.
"""

from __future__ import annotations

import math
from collections.abc import Mapping
from dataclasses import dataclass, field

import numpy as np

from .errors import CapabilityError, InputError
from .graph import WeightedGraph
from .protocols import copies_required
from .state import (
    DENSE_LIMIT,
    TDG,
    H,
    StateVector,
    T,
    apply_gate,
    apply_local_phase_frame,
    build_weighted_graph_state,
    phase_gate,
    plus_state,
)

ZR_LIMIT = 20
MS_ANGLES = (math.pi / 8, math.pi / 4)

_ROOTS16 = np.exp(1j * np.pi / 8 * np.arange(16))
_ROOTS16.real[np.abs(_ROOTS16.real) < 1e-15] = 0.0
_ROOTS16.imag[np.abs(_ROOTS16.imag) < 1e-15] = 0.0


@dataclass(frozen=True)
class IqpInstance:
    n: int
    w: Mapping[tuple[int, int], int] = field(default_factory=dict)
    v: Mapping[int, int] = field(default_factory=dict)

    def __post_init__(self):
        if self.n < 1:
            raise InputError("IQP instance needs n >= 1")
        w = {}
        for (j, k), val in self.w.items():
            if j == k or not (1 <= j <= self.n and 1 <= k <= self.n):
                raise InputError(f"bad w index ({j},{k})")
            if int(val) != val or not 0 <= val <= 7:
                raise InputError(f"w_{j}{k} must be an integer in 0..7, got {val!r}")
            key = (min(j, k), max(j, k))
            if key in w:
                raise InputError(f"duplicate w entry {key}")
            w[key] = int(val)
        v = {}
        for l, val in self.v.items():
            if not 1 <= l <= self.n:
                raise InputError(f"bad v index {l}")
            if int(val) != val or not 0 <= val <= 7:
                raise InputError(f"v_{l} must be an integer in 0..7, got {val!r}")
            v[int(l)] = int(val)
        object.__setattr__(self, "w", w)
        object.__setattr__(self, "v", v)

    def wjk(self, j: int, k: int) -> int:
        return self.w.get((min(j, k), max(j, k)), 0)


@dataclass(frozen=True)
class MsInstance:
    n: int
    theta: Mapping[tuple[int, int], float] = field(default_factory=dict)

    def __post_init__(self):
        th = {}
        for (i, j), t in self.theta.items():
            if i == j or not (1 <= i <= self.n and 1 <= j <= self.n):
                raise InputError(f"bad MS edge ({i},{j})")
            if not any(abs(t - a) < 1e-12 for a in MS_ANGLES):
                raise InputError(f"MS edge weight must be pi/8 or pi/4, got {t!r}")
            th[(min(i, j), max(i, j))] = float(t)
        object.__setattr__(self, "theta", th)


def _check_dense(n: int) -> None:
    if n > DENSE_LIMIT:
        raise CapabilityError(f"dense construction limited to n <= {DENSE_LIMIT}")


def build_ms_state(inst: MsInstance) -> tuple[WeightedGraph, list[np.ndarray]]:
    """Weighted graph and frame with ``prod U_i |G> = |G_MS>`` up to global phase."""
    _check_dense(inst.n)
    g = WeightedGraph(inst.n, {e: -4 * t for e, t in inst.theta.items()})
    phase = [0.0] * (inst.n + 1)
    for (i, j), t in inst.theta.items():
        phase[i] += 2 * t
        phase[j] += 2 * t
    return g, [phase_gate(phase[i]) for i in range(1, inst.n + 1)]


def ms_state_direct(inst: MsInstance) -> StateVector:
    """``prod exp(-i theta Z(x)Z) |+>^n`` by gate application."""
    s = plus_state(inst.n)
    for (i, j), t in inst.theta.items():
        gate = np.diag(np.exp(-1j * t * np.array([1, -1, -1, 1])))
        s = apply_gate(s, gate, [i, j])
    return s


def build_iqp_state(inst: IqpInstance) -> tuple[WeightedGraph, list[np.ndarray]]:
    """Weighted graph (``theta_jk = w_jk pi/2``) and frame reproducing ``|G_IQP>``.

    The frame on vertex ``l`` is ``H T^{v_l} (T^dagger)^{sum_k w_lk}``; every
    ``T^dagger`` factor commutes with the controlled phases.
    """
    _check_dense(inst.n)
    g = WeightedGraph(inst.n, {e: val * math.pi / 2 for e, val in inst.w.items() if val})
    wsum = [0] * (inst.n + 1)
    for (j, k), val in inst.w.items():
        wsum[j] += val
        wsum[k] += val
    frame = []
    for l in range(1, inst.n + 1):
        u = H @ np.linalg.matrix_power(T, inst.v.get(l, 0)) @ np.linalg.matrix_power(TDG, wsum[l])
        frame.append(u)
    return g, frame


def iqp_state_direct(inst: IqpInstance) -> StateVector:
    """``|G_IQP>`` by literal gate application to ``|+>^n``."""
    s = plus_state(inst.n)
    for (j, k), val in sorted(inst.w.items()):
        for _ in range(val):
            s = apply_gate(s, TDG, [j])
            s = apply_gate(s, TDG, [k])
        lam = np.diag([1, 1, 1, np.exp(1j * val * math.pi / 2)])
        s = apply_gate(s, lam, [j, k])
    for l in range(1, inst.n + 1):
        s = apply_gate(s, np.linalg.matrix_power(T, inst.v.get(l, 0)), [l])
        s = apply_gate(s, H, [l])
    return s


def framed_state(g: WeightedGraph, frame) -> StateVector:
    return apply_local_phase_frame(build_weighted_graph_state(g), frame)


def verification_params_iqp(n: int, epsilon: float, beta: float, *, variant: str = "iqp") -> dict:
    """Copy count and candidate-basis count for IQP (``e=2``) or MS (``e=8``) targets."""
    e = {"iqp": 2, "ms": 8}.get(variant)
    if e is None:
        raise InputError(f"variant must be 'iqp' or 'ms', got {variant!r}")
    N = copies_required("nonadaptive_e", n, epsilon, beta, m=n, e_max=e)
    return {"variant": variant, "n": n, "epsilon": epsilon, "beta": beta, "m_max": n, "e_max": e, "N": N}


def output_distribution(state: StateVector) -> np.ndarray:
    """Z-basis outcome probabilities indexed like the amplitudes."""
    p = np.abs(state.amps) ** 2
    return p / p.sum()


def z_distribution(rho: np.ndarray) -> np.ndarray:
    """Diagonal of a density matrix, i.e. ``<z|rho|z>``."""
    return np.clip(np.real(np.diag(np.asarray(rho))), 0.0, None)


def l1_distance(p, q) -> float:
    p, q = np.asarray(p, dtype=float), np.asarray(q, dtype=float)
    if p.shape != q.shape:
        raise InputError("distributions have different lengths")
    for name, d in (("p", p), ("q", q)):
        if abs(d.sum() - 1) > 1e-9:
            raise InputError(f"{name} does not sum to 1")
    return float(np.abs(p - q).sum())


def fidelity_to_l1_bound(F: float) -> float:
    """Upper bound ``2 sqrt(1 - F)`` on the l1 distance of Z-outcome distributions."""
    if not 0.0 <= F <= 1.0:
        raise InputError(f"fidelity must lie in [0, 1], got {F}")
    return 2.0 * math.sqrt(1.0 - F)


def compute_Z_R(inst: IqpInstance) -> complex:
    """Brute-force ``sum_{z in {+-1}^n} exp(i pi/8 (sum w_jk z_j z_k + sum v_l z_l))``."""
    n = inst.n
    if n > ZR_LIMIT:
        raise CapabilityError(f"Z_R brute force limited to n <= {ZR_LIMIT}")
    idx = np.arange(1 << n, dtype=np.int64)
    spins = [1 - 2 * ((idx >> (l - 1)) & 1) for l in range(1, n + 1)]
    expo = np.zeros(1 << n, dtype=np.int64)
    for (j, k), val in inst.w.items():
        expo += val * spins[j - 1] * spins[k - 1]
    for l, val in inst.v.items():
        expo += val * spins[l - 1]
    # Exponents are integers: count residues mod 16, then weight each 16th root of unity once.
    counts = np.bincount(np.mod(expo, 16), minlength=16)
    return complex(np.dot(counts, _ROOTS16))


def parse_iqp(text: str) -> IqpInstance:
    n = None
    w: dict[tuple[int, int], int] = {}
    v: dict[int, int] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tok = line.split()
        try:
            if tok[0] == "n" and len(tok) == 2:
                n = int(tok[1])
            elif tok[0] == "w" and len(tok) == 4:
                j, k = int(tok[1]), int(tok[2])
                key = (min(j, k), max(j, k))
                if key in w:
                    raise InputError(f"duplicate w entry {key}")
                w[key] = int(tok[3])
            elif tok[0] == "v" and len(tok) == 3:
                l = int(tok[1])
                if l in v:
                    raise InputError(f"duplicate v entry {l}")
                v[l] = int(tok[2])
            else:
                raise InputError(f"unrecognized statement {line!r}")
        except ValueError as exc:
            raise InputError(f"line {lineno}: {exc}") from None
    if n is None:
        raise InputError("IQP file is missing the 'n' statement")
    return IqpInstance(n, w, v)


def format_distribution(p: np.ndarray, n: int) -> str:
    rows = []
    for i, prob in enumerate(p.tolist()):
        bitstring = "".join(str((i >> (k - 1)) & 1) for k in range(1, n + 1))
        rows.append((bitstring, prob))
    return "".join(f"{b} {prob!r}\n" for b, prob in sorted(rows))
