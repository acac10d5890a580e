"""Honest and adversarial producers of n-qubit copies.

A source is a single-consumer stream: :meth:`StateSource.next_copy` hands
out one copy per call, and at most ``total`` copies per run.  Mixed copies
are emitted as pure states drawn from an ensemble realizing the density
matrix; :meth:`StateSource.iid_density` exposes that matrix for oracle
comparisons when the copies are i.i.d.
"""

from __future__ import annotations

import math
from collections.abc import Sequence
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, SourceError
from .graph import WeightedGraph
from .state import (
    DensityMatrix,
    StateVector,
    apply_local_phase_frame,
    basis_state,
    build_weighted_graph_state,
)

SOURCE_KINDS = ("honest", "depolarized", "rotated", "wrong_weight", "planted_bad", "permuted_iid", "mixture")

_PAULI = {
    "x": np.array([[0, 1], [1, 0]], dtype=complex),
    "y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "z": np.array([[1, 0], [0, -1]], dtype=complex),
}


class StateSource:
    """Base class; subclasses implement :meth:`_emit`."""

    def __init__(self, n: int, total: int | None = None):
        self.n = n
        self.total = total
        self.emitted = 0

    def next_copy(self) -> StateVector:
        if self.total is not None and self.emitted >= self.total:
            raise SourceError(f"source exhausted after {self.total} copies")
        s = self._emit(self.emitted)
        self.emitted += 1
        return s

    def _emit(self, index: int) -> StateVector:
        raise NotImplementedError

    def iid_density(self) -> np.ndarray | None:
        """Per-copy density matrix when copies are i.i.d., else ``None``."""
        return None


class PureSource(StateSource):
    """Emits the same pure state every time."""

    def __init__(self, state: StateVector, total: int | None = None):
        super().__init__(state.n, total)
        self.state = state

    def _emit(self, index):
        return self.state

    def iid_density(self):
        return np.outer(self.state.amps, self.state.amps.conj())


class MixtureSource(StateSource):
    """i.i.d. copies of ``sum_i w_i |psi_i><psi_i|`` by ensemble sampling."""

    def __init__(self, states: Sequence[StateVector], weights: Sequence[float], rng, total: int | None = None):
        w = np.asarray(weights, dtype=float)
        if len(states) != len(w) or len(w) == 0 or np.any(w < 0) or abs(w.sum() - 1) > 1e-9:
            raise ConfigError("mixture needs one non-negative weight per state, summing to 1")
        super().__init__(states[0].n, total)
        self.states = list(states)
        self.cdf = np.cumsum(w / w.sum())
        self.weights = w
        self.rng = rng

    def _emit(self, index):
        i = int(np.searchsorted(self.cdf, self.rng.random() * self.cdf[-1], side="right"))
        return self.states[min(i, len(self.states) - 1)]

    def iid_density(self):
        return DensityMatrix.mixture(self.states, self.weights).rho


class DepolarizedSource(StateSource):
    """``(1-p)|G><G| + p I/2^n``: the target with prob ``1-p``, else a uniform basis state."""

    def __init__(self, target: StateVector, p: float, rng, total: int | None = None):
        if not 0.0 <= p <= 1.0:
            raise ConfigError(f"depolarizing probability must lie in [0,1], got {p}")
        super().__init__(target.n, total)
        self.target, self.p, self.rng = target, p, rng
        self._basis: dict[int, StateVector] = {}

    def _emit(self, index):
        if self.rng.random() >= self.p:
            return self.target
        x = int(self.rng.integers(1 << self.n))
        if x not in self._basis:
            self._basis[x] = basis_state(self.n, x)
        return self._basis[x]

    def iid_density(self):
        g = np.outer(self.target.amps, self.target.amps.conj())
        return (1 - self.p) * g + self.p * np.eye(1 << self.n) / (1 << self.n)


class SequenceSource(StateSource):
    """Emits a fixed list of states in order (not i.i.d.)."""

    def __init__(self, states: Sequence[StateVector]):
        super().__init__(states[0].n, len(states))
        self.states = list(states)

    def _emit(self, index):
        return self.states[index]


class FramedSource(StateSource):
    """Applies a fixed local frame ``prod U_k`` to every copy of an inner source."""

    def __init__(self, inner: StateSource, frame: Sequence[np.ndarray]):
        super().__init__(inner.n, inner.total)
        self.inner = inner
        self.frame = list(frame)
        self._memo: dict[int, tuple[StateVector, StateVector]] = {}

    def _emit(self, index):
        s = self.inner.next_copy()
        hit = self._memo.get(id(s))
        if hit is None or hit[0] is not s:
            hit = self._memo[id(s)] = (s, apply_local_phase_frame(s, self.frame))
        return hit[1]

    def iid_density(self):
        rho = self.inner.iid_density()
        if rho is None:
            return None
        u = self.frame[-1]
        for f in reversed(self.frame[:-1]):
            u = np.kron(u, f)
        return u @ rho @ u.conj().T


def antipodal_state(g: WeightedGraph) -> StateVector:
    """``Z^{(x)n}|G>``: orthogonal to ``|G>`` and fails the exact adaptive test with certainty."""
    s = build_weighted_graph_state(g)
    return apply_local_phase_frame(s, [_PAULI["z"]] * g.n)


def rotated_state(g: WeightedGraph, axis: str, delta: float) -> StateVector:
    """``|G>`` with ``exp(-i delta/2 sigma_axis)`` applied to every qubit."""
    try:
        pauli = _PAULI[axis.lower()]
    except KeyError:
        raise ConfigError(f"rotation axis must be x, y or z, got {axis!r}") from None
    u = math.cos(delta / 2) * np.eye(2) - 1j * math.sin(delta / 2) * pauli
    return apply_local_phase_frame(build_weighted_graph_state(g), [u] * g.n)


@dataclass
class SourceSpec:
    """Serializable description of a source; ``params`` depends on ``kind``.

    ``depolarized``: ``p``.  ``rotated``: ``axis``, ``delta``.
    ``wrong_weight``: ``edge`` ([j, k]), ``delta_theta``.
    ``planted_bad``: ``position`` (1-based, omitted for uniformly random),
    optional ``bad`` ("antipodal" or amplitudes).  ``permuted_iid`` and
    ``mixture``: ``states`` (list of amplitude lists or "target"/"antipodal"),
    plus ``weights`` for ``mixture``.
    """

    kind: str = "honest"
    params: dict = field(default_factory=dict)

    @classmethod
    def from_dict(cls, d: dict) -> SourceSpec:
        if not isinstance(d, dict) or "kind" not in d:
            raise ConfigError("source spec must be an object with a 'kind' field")
        params = {k: v for k, v in d.items() if k != "kind"}
        return cls(str(d["kind"]), params)

    def to_dict(self) -> dict:
        return {"kind": self.kind, **self.params}


def _named_state(g: WeightedGraph, item) -> StateVector:
    if item == "target":
        return build_weighted_graph_state(g)
    if item == "antipodal":
        return antipodal_state(g)
    if isinstance(item, StateVector):
        return item
    amps = np.asarray([complex(*a) if isinstance(a, (list, tuple)) else complex(a) for a in item])
    return StateVector(amps, normalize=True)


def make_source(spec: SourceSpec, g: WeightedGraph, N: int, rng,
                frame: Sequence[np.ndarray] | None = None) -> StateSource:
    """Build a fresh source that will emit ``N + 1`` copies.

    With a ``frame``, every copy (honest or not) is emitted in the physical
    frame ``prod U_k`` rather than the weighted-graph frame.
    """
    src = _make_source(spec, g, N, rng)
    return FramedSource(src, frame) if frame is not None else src


def _make_source(spec: SourceSpec, g: WeightedGraph, N: int, rng) -> StateSource:
    total = N + 1
    target = build_weighted_graph_state(g)
    p = spec.params
    try:
        if spec.kind == "honest":
            return PureSource(target, total)
        if spec.kind == "depolarized":
            return DepolarizedSource(target, float(p["p"]), rng, total)
        if spec.kind == "rotated":
            return PureSource(rotated_state(g, p.get("axis", "z"), float(p["delta"])), total)
        if spec.kind == "wrong_weight":
            j, k = p["edge"]
            g2 = g.with_weight(j, k, g.weight(j, k) + float(p["delta_theta"]))
            return PureSource(build_weighted_graph_state(g2), total)
        if spec.kind == "planted_bad":
            pos = p.get("position")
            pos = int(rng.integers(1, total + 1)) if pos is None else int(pos)
            if not 1 <= pos <= total:
                raise ConfigError(f"planted position {pos} outside 1..{total}")
            bad = _named_state(g, p.get("bad", "antipodal"))
            states = [target] * total
            states[pos - 1] = bad
            return SequenceSource(states)
        if spec.kind == "permuted_iid":
            states = [_named_state(g, s) for s in p["states"]]
            if len(states) != total:
                raise ConfigError(f"permuted_iid needs exactly N+1 = {total} states, got {len(states)}")
            return SequenceSource([states[i] for i in rng.permutation(total)])
        if spec.kind == "mixture":
            states = [_named_state(g, s) for s in p["states"]]
            return MixtureSource(states, p["weights"], rng, total)
    except KeyError as exc:
        raise ConfigError(f"source kind {spec.kind!r} is missing parameter {exc.args[0]!r}") from None
    raise ConfigError(f"unknown source kind {spec.kind!r}")
