"""Dense statevectors for weighted graph states and single-qubit measurements.

Bit convention: vertex ``k`` (1-based) is bit ``k-1`` of the amplitude index,
i.e. little-endian.  A Z outcome of ``|1>`` is reported as ``z = 1``.
Measured qubits stay in the register, pinned to the post-measurement state,
so vertex labels never shift during a protocol round.
"""

from __future__ import annotations

import math
from collections.abc import Mapping, Sequence
from functools import lru_cache

import numpy as np

from .errors import CapabilityError, InputError, StateError
from .graph import WeightedGraph

DENSE_LIMIT = 24
NORM_TOL = 1e-10
UNITARY_TOL = 1e-10
TWO_PI = 2.0 * math.pi

PLUS = +1
MINUS = -1

H = np.array([[1, 1], [1, -1]], dtype=complex) / math.sqrt(2)
T = np.diag([1, np.exp(1j * math.pi / 4)]).astype(complex)
TDG = T.conj().T


def reduce_angle(alpha: float) -> float:
    """Representative of ``alpha`` in [0, 2*pi)."""
    a = math.fmod(alpha, TWO_PI)
    if a < 0:
        a += TWO_PI
    return 0.0 if a >= TWO_PI else a


def phase_gate(phi: float) -> np.ndarray:
    return np.diag([1.0, np.exp(1j * phi)]).astype(complex)


def plane_state(alpha: float) -> np.ndarray:
    """Single-qubit ``|alpha> = (|0> + e^{i alpha}|1>)/sqrt(2)``."""
    return np.array([1.0, np.exp(1j * alpha)], dtype=complex) / math.sqrt(2)


class PlaneBasis:
    """Equatorial basis ``{|alpha>, |alpha+pi>}``; outcome ``+`` is ``|alpha>``."""

    __slots__ = ("alpha",)

    def __init__(self, alpha: float):
        self.alpha = reduce_angle(float(alpha))

    def __repr__(self) -> str:
        return f"PlaneBasis({self.alpha!r})"


@lru_cache(maxsize=32)
def basis_bits(n: int) -> np.ndarray:
    """Read-only ``(2**n, n)`` uint8 table; column ``k-1`` holds vertex ``k``'s bit."""
    idx = np.arange(1 << n, dtype=np.int64)
    bits = ((idx[:, None] >> np.arange(n, dtype=np.int64)[None, :]) & 1).astype(np.uint8)
    bits.setflags(write=False)
    return bits


def _check_dense(n: int) -> None:
    if n > DENSE_LIMIT:
        raise CapabilityError(f"dense statevectors are limited to n <= {DENSE_LIMIT} qubits, got {n}")


class StateVector:
    """Immutable pure state on ``n`` qubits."""

    __slots__ = ("n", "amps", "measured")

    def __init__(self, amps, measured: frozenset[int] = frozenset(), *, normalize: bool = False):
        a = np.array(amps, dtype=complex).reshape(-1)
        n = int(a.size).bit_length() - 1
        if a.size < 2 or (1 << n) != a.size:
            raise InputError(f"amplitude count {a.size} is not a power of two")
        _check_dense(n)
        norm = float(np.vdot(a, a).real)
        if normalize:
            if norm == 0:
                raise InputError("cannot normalize the zero vector")
            a /= math.sqrt(norm)
        elif abs(norm - 1.0) > NORM_TOL:
            raise InputError(f"state is not normalized (norm^2 = {norm})")
        a.setflags(write=False)
        self.n = n
        self.amps = a
        self.measured = frozenset(measured)

    def _view(self, k: int) -> np.ndarray:
        if not 1 <= k <= self.n:
            raise InputError(f"qubit {k} out of range 1..{self.n}")
        return self.amps.reshape(1 << (self.n - k), 2, 1 << (k - 1))

    def __repr__(self) -> str:
        return f"StateVector(n={self.n})"


class DensityMatrix:
    """Mixed state; checked Hermitian, unit trace and PSD on construction."""

    __slots__ = ("n", "rho")

    def __init__(self, rho, *, tol: float = 1e-10):
        r = np.array(rho, dtype=complex)
        if r.ndim != 2 or r.shape[0] != r.shape[1]:
            raise InputError("density matrix must be square")
        n = int(r.shape[0]).bit_length() - 1
        if (1 << n) != r.shape[0] or n < 1:
            raise InputError("density matrix dimension is not a power of two")
        if np.max(np.abs(r - r.conj().T)) > tol:
            raise InputError("density matrix is not Hermitian")
        if abs(np.trace(r).real - 1.0) > tol:
            raise InputError("density matrix does not have unit trace")
        if np.linalg.eigvalsh(r).min() < -tol:
            raise InputError("density matrix is not positive semidefinite")
        r.setflags(write=False)
        self.n = n
        self.rho = r

    @classmethod
    def from_pure(cls, s: StateVector) -> DensityMatrix:
        return cls(np.outer(s.amps, s.amps.conj()))

    @classmethod
    def mixture(cls, states: Sequence[StateVector], weights: Sequence[float]) -> DensityMatrix:
        w = np.asarray(weights, dtype=float)
        rho = sum(wi * np.outer(s.amps, s.amps.conj()) for wi, s in zip(w, states))
        return cls(rho)


def plus_state(n: int) -> StateVector:
    _check_dense(n)
    return StateVector(np.full(1 << n, 2.0 ** (-n / 2), dtype=complex))


def basis_state(n: int, index: int) -> StateVector:
    _check_dense(n)
    a = np.zeros(1 << n, dtype=complex)
    a[index] = 1.0
    return StateVector(a)


def weighted_graph_phases(g: WeightedGraph) -> np.ndarray:
    """``sum_{(j,k)} theta_jk z_j z_k`` for every basis index."""
    idx = np.arange(1 << g.n, dtype=np.int64)
    phase = np.zeros(1 << g.n, dtype=float)
    for (j, k), theta in g.weights.items():
        both = (idx >> (j - 1)) & (idx >> (k - 1)) & 1
        phase += theta * both
    return phase


def build_weighted_graph_state(g: WeightedGraph) -> StateVector:
    """Amplitude of ``z`` is ``2^{-n/2} exp(i sum theta_jk z_j z_k)``."""
    _check_dense(g.n)
    amps = np.exp(1j * weighted_graph_phases(g)) * 2.0 ** (-g.n / 2)
    return StateVector(amps)


def alpha_expected(g: WeightedGraph, k: int, z: Mapping[int, int]) -> float:
    """Adaptive angle ``sum_{j in C_k} theta_jk z_j`` reduced to [0, 2*pi)."""
    total = 0.0
    for j in sorted(g.neighbors(k)):
        if j not in z:
            raise InputError(f"missing Z outcome for neighbor {j} of vertex {k}")
        if z[j] not in (0, 1):
            raise InputError(f"Z outcome for vertex {j} must be 0 or 1, got {z[j]!r}")
        total += g.weight(j, k) * z[j]
    return reduce_angle(total)


def _rng(rng) -> np.random.Generator:
    return rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)


def measure_z(s: StateVector, k: int, rng) -> tuple[int, StateVector]:
    """Z-basis measurement of qubit ``k``; returns ``(z, collapsed state)``."""
    if k in s.measured:
        raise StateError(f"qubit {k} has already been measured")
    t = s._view(k)
    p1 = float(np.vdot(t[:, 1, :], t[:, 1, :]).real)
    z = int(_rng(rng).random() < p1)
    out = np.zeros_like(t)
    out[:, z, :] = t[:, z, :] / math.sqrt(p1 if z else 1.0 - p1)
    return z, StateVector(out.reshape(-1), s.measured | {k}, normalize=True)


def measure_plane(s: StateVector, k: int, basis: PlaneBasis | float, rng) -> tuple[int, StateVector]:
    """Measure qubit ``k`` in ``{|alpha>, |alpha+pi>}``.

    Returns ``(PLUS, ...)`` for a projection onto ``|alpha>`` and
    ``(MINUS, ...)`` for ``|alpha+pi>``.
    """
    if k in s.measured:
        raise StateError(f"qubit {k} has already been measured")
    alpha = basis.alpha if isinstance(basis, PlaneBasis) else reduce_angle(basis)
    t = s._view(k)
    ph = np.exp(-1j * alpha)
    plus = (t[:, 0, :] + ph * t[:, 1, :]) / math.sqrt(2)
    p_plus = float(np.vdot(plus, plus).real)
    outcome = PLUS if _rng(rng).random() < p_plus else MINUS
    if outcome == PLUS:
        rest, norm, phi = plus, p_plus, alpha
    else:
        rest = (t[:, 0, :] - ph * t[:, 1, :]) / math.sqrt(2)
        norm, phi = 1.0 - p_plus, alpha + math.pi
    out = np.empty_like(t)
    out[:, 0, :] = rest
    out[:, 1, :] = np.exp(1j * phi) * rest
    out /= math.sqrt(2 * norm) if norm > 0 else 1.0
    return outcome, StateVector(out.reshape(-1), s.measured | {k}, normalize=True)


def fidelity(a: StateVector | DensityMatrix, b: StateVector) -> float:
    """``|<b|a>|^2`` for pure ``a``; ``<b|a|b>`` for mixed ``a``."""
    if a.n != b.n:
        raise InputError(f"dimension mismatch: {a.n} vs {b.n} qubits")
    if isinstance(a, DensityMatrix):
        f = float(np.vdot(b.amps, a.rho @ b.amps).real)
    else:
        f = abs(np.vdot(b.amps, a.amps)) ** 2
    return min(1.0, max(0.0, f))


def _check_unitary(u: np.ndarray) -> np.ndarray:
    u = np.asarray(u, dtype=complex)
    if u.shape[0] != u.shape[1] or np.max(np.abs(u.conj().T @ u - np.eye(u.shape[0]))) > UNITARY_TOL:
        raise InputError("frame entry is not unitary")
    return u


def apply_gate(s: StateVector, u: np.ndarray, qubits: Sequence[int]) -> StateVector:
    """Apply a ``2^q x 2^q`` unitary to ``qubits``; ``qubits[0]`` is the most significant gate bit."""
    u = _check_unitary(u)
    q = len(qubits)
    if u.shape != (1 << q, 1 << q):
        raise InputError("gate dimension does not match qubit count")
    n = s.n
    axes = [n - k for k in qubits]
    t = s.amps.reshape([2] * n)
    t = np.moveaxis(t, axes, range(q))
    shape = t.shape
    t = (u @ t.reshape(1 << q, -1)).reshape(shape)
    t = np.moveaxis(t, range(q), axes)
    return StateVector(t.reshape(-1), s.measured)


def apply_local_phase_frame(s: StateVector, frame: Sequence[np.ndarray] | Mapping[int, np.ndarray]) -> StateVector:
    """Apply ``U_1 (x) ... (x) U_n``; ``frame`` is a list (index ``k-1``) or a vertex map."""
    items = frame.items() if isinstance(frame, Mapping) else enumerate(frame, start=1)
    items = list(items)
    if not isinstance(frame, Mapping) and len(items) != s.n:
        raise InputError(f"frame has {len(items)} entries for {s.n} qubits")
    t = s.amps.reshape([2] * s.n)
    for k, u in items:
        u = _check_unitary(u)
        if u.shape != (2, 2):
            raise InputError("frame entries must be 2x2")
        if not 1 <= k <= s.n:
            raise InputError(f"frame vertex {k} out of range")
        t = np.moveaxis(np.tensordot(u, t, axes=([1], [s.n - k])), 0, s.n - k)
    return StateVector(t.reshape(-1), s.measured)


def dagger_frame(frame: Sequence[np.ndarray]) -> list[np.ndarray]:
    return [np.asarray(u, dtype=complex).conj().T for u in frame]


def dump_state(s: StateVector) -> str:
    """Text dump, one ``index re im`` line per amplitude in index order."""
    return "".join(f"{i} {a.real!r} {a.imag!r}\n" for i, a in enumerate(s.amps.tolist()))
