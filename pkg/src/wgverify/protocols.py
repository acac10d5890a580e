"""Measurement-only verification protocols and the N-random sampling test.

Four per-copy tests are supported:

``adaptive_exact``
    Z-measure every vertex outside a random color class ``A_l``, then measure
    each ``k`` in ``A_l`` in ``{|alpha_k>, |alpha_k + pi>}``.
``adaptive_h``
    Same, with ``alpha_k`` rounded to the nearest multiple of ``pi/h``.
``nonadaptive_e``
    Each ``k`` in ``A_l`` is measured in one of its candidate bases, drawn
    uniformly before any outcome is known; only vertices whose drawn basis
    turns out correct are checked.
``nonadaptive_h``
    Same with the ``h`` grid bases; ``shared_f=True`` uses one draw for the
    whole color class instead of one per vertex.

Two engines produce identical statistics.  ``sequential`` walks through
single-qubit collapses one by one.  ``fast`` computes the joint Born
distribution of one measurement setting at once and caches it per distinct
copy, which is what makes 10^4-run Monte Carlo studies cheap.
"""

from __future__ import annotations

import itertools
import math
from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field

import numpy as np

from .errors import CapabilityError, ConfigError
from .graph import IndependenceCover, WeightedGraph, validate_cover
from .operators import (
    TestOperator,
    alpha_table,
    build_omega_adaptive,
    build_omega_adaptive_h,
    build_omega_nonadaptive,
    build_omega_nonadaptive_h,
    build_omega_nonadaptive_h_shared,
    discretize_angle,
    discretize_angles,
    grid_basis,
)
from .state import (
    MINUS,
    PLUS,
    TWO_PI,
    StateVector,
    alpha_expected,
    apply_local_phase_frame,
    basis_bits,
    dagger_frame,
    measure_plane,
    measure_z,
)

PROTOCOLS = ("adaptive_exact", "adaptive_h", "nonadaptive_e", "nonadaptive_h")
ANGLE_TOL = 1e-9
CANDIDATE_DEGREE_LIMIT = 20
_CACHE_LIMIT = 20000


@dataclass(frozen=True)
class ProtocolConfig:
    protocol: str
    N: int
    beta: float
    cover: IndependenceCover
    h: int | None = None
    candidates: Mapping[int, tuple[float, ...]] | None = None
    seed: int | None = None
    shared_f: bool = False


@dataclass
class CopyRecord:
    index: int
    color: int
    bases: dict[int, str | float]
    outcomes: dict[int, int]
    passed: bool


@dataclass
class ProtocolReport:
    accepted: bool
    withheld: int
    n_failed: int
    certificate: float | None
    vacuous: bool
    completeness_bound: float
    beta: float
    remaining_copy: StateVector | None = None
    transcript: list[CopyRecord] | None = field(default=None, repr=False)


# Angle bookkeeping ----------------------------------------------------------


def _same_angle(a: float, b: float, period: float) -> bool:
    d = math.fmod(a - b, period)
    d = d + period if d < 0 else d
    return d < ANGLE_TOL or d > period - ANGLE_TOL


def derive_candidates(g: WeightedGraph) -> dict[int, tuple[float, ...]]:
    """Achievable ``alpha_k mod pi`` for every vertex, over all neighbor outcomes."""
    out = {}
    for k in g.vertices:
        nb = sorted(g.neighbors(k))
        if len(nb) > CANDIDATE_DEGREE_LIMIT:
            raise CapabilityError(f"vertex {k} has degree {len(nb)} > {CANDIDATE_DEGREE_LIMIT}")
        theta = [g.weight(j, k) for j in nb]
        vals: list[float] = []
        for z in itertools.product((0, 1), repeat=len(nb)):
            a = math.fmod(sum(t * b for t, b in zip(theta, z)), math.pi)
            a = a + math.pi if a < 0 else a
            a = 0.0 if a > math.pi - ANGLE_TOL else a
            if not any(_same_angle(a, v, math.pi) for v in vals):
                vals.append(a)
        out[k] = tuple(sorted(vals))
    return out


def resolve_candidates(g: WeightedGraph, given: Mapping[int, Sequence[float]] | None) -> dict[int, tuple[float, ...]]:
    """Derived candidate lists, or ``given`` after checking it covers every achievable angle."""
    derived = derive_candidates(g)
    if given is None:
        return derived
    out = {}
    for k in g.vertices:
        lst = tuple(float(a) for a in given.get(k, ()))
        if any(not 0 <= a < math.pi for a in lst):
            raise ConfigError(f"candidate angles for vertex {k} must lie in [0, pi)")
        for a in derived[k]:
            if not any(_same_angle(a, c, math.pi) for c in lst):
                raise ConfigError(f"achievable angle {a!r} of vertex {k} is missing from its candidate list")
        out[k] = lst
    return out


# Configuration, certificates and copy counts --------------------------------


def exact_gap(cfg: ProtocolConfig, g: WeightedGraph) -> float:
    """Spectral gap of the protocol's test operator (perfect-match kinds only)."""
    if cfg.protocol == "adaptive_exact":
        return 1.0 / cfg.cover.m
    if cfg.protocol == "nonadaptive_e":
        cands = resolve_candidates(g, cfg.candidates)
        return 1.0 / (cfg.cover.m * max(len(c) for c in cands.values()))
    raise ConfigError(f"{cfg.protocol} has no exact spectral gap")


def check_config(cfg: ProtocolConfig, g: WeightedGraph) -> None:
    if cfg.protocol not in PROTOCOLS:
        raise ConfigError(f"unknown protocol {cfg.protocol!r}")
    if int(cfg.N) != cfg.N or cfg.N < 1:
        raise ConfigError(f"N must be a positive integer, got {cfg.N!r}")
    if not 0 < cfg.beta <= 1:
        raise ConfigError(f"beta must lie in (0, 1], got {cfg.beta!r}")
    problems = validate_cover(g, cfg.cover)
    if problems:
        raise ConfigError("invalid independence cover: " + "; ".join(problems))
    if cfg.protocol in ("adaptive_h", "nonadaptive_h"):
        if cfg.h is None or int(cfg.h) != cfg.h or cfg.h < 1:
            raise ConfigError(f"{cfg.protocol} needs a positive integer h")
        floor = 1.0 / (cfg.N + 1)
    else:
        floor = 1.0 / (cfg.N * exact_gap(cfg, g) + 1)
    if cfg.beta < floor * (1 - 1e-12):
        raise ConfigError(f"beta = {cfg.beta} is below the admissible minimum {floor:.6g}")


def certificate_bound(cfg: ProtocolConfig, g: WeightedGraph) -> float:
    """Fidelity lower bound attached to an accepted run."""
    check_config(cfg, g)
    m, N, b = cfg.cover.m, cfg.N, cfg.beta
    if cfg.protocol == "adaptive_exact":
        return 1 - m * (1 - b) / (N * b)
    if cfg.protocol == "nonadaptive_e":
        emax = max(len(c) for c in resolve_candidates(g, cfg.candidates).values())
        return 1 - m * (1 - b) * emax / (N * b)
    s = g.n * math.sin(math.pi / (4 * cfg.h))
    if cfg.protocol == "adaptive_h":
        return 1 - (m * (1 - b) / (b * N) + s)
    return 1 - (m * cfg.h * (1 - b) / (b * N) + s)


def completeness_bound(cfg: ProtocolConfig) -> float:
    """Guaranteed acceptance probability of an honest i.i.d. source."""
    if cfg.protocol in ("adaptive_exact", "nonadaptive_e"):
        return 1.0
    s2 = math.sin(math.pi / (4 * cfg.h)) ** 2
    per = 1 - s2 if cfg.protocol == "adaptive_h" else 1 - s2 / cfg.h
    return per ** (cfg.N * cfg.cover.max_size)


def _ceil(x: float) -> int:
    return max(1, math.ceil(round(x, 9)))


def nonadaptive_h_optimum(n: int, epsilon: float, beta: float) -> tuple[float, int, int]:
    """``(b, h, N)`` minimizing copies for the non-adaptive grid protocol with singleton colors."""
    _check_eps_beta(epsilon, beta)
    b = math.pi / (2 * epsilon)
    N = _ceil(math.pi * (1 - beta) * n * n / (beta * epsilon**2))
    return b, math.ceil(b) * n, N


def _check_eps_beta(epsilon: float, beta: float) -> None:
    if not 0 < epsilon < 1:
        raise ConfigError(f"epsilon must lie in (0, 1), got {epsilon}")
    if not 0 < beta <= 1:
        raise ConfigError(f"beta must lie in (0, 1], got {beta}")


def copies_required(kind: str, n: int, epsilon: float, beta: float, *, m: int | None = None,
                    e_max: int | None = None, b: float | None = None) -> int:
    """Sufficient ``N`` for fidelity ``>= 1 - epsilon`` at significance ``beta``.

    ``m`` defaults to ``n`` (one vertex per color).  ``adaptive_h`` needs the
    resolution ratio ``b = h/n``; ``nonadaptive_h`` uses ``h = b n`` with
    ``N = a n^2`` and defaults to the optimal ``b = pi/(2 epsilon)``.
    """
    _check_eps_beta(epsilon, beta)
    m = n if m is None else m
    odds = (1 - beta) / beta
    if kind == "adaptive_exact":
        return _ceil(m * odds / epsilon)
    if kind == "nonadaptive_e":
        if e_max is None:
            raise ConfigError("nonadaptive_e needs e_max")
        return _ceil(m * e_max * odds / epsilon)
    if kind == "adaptive_h":
        if b is None:
            raise ConfigError("adaptive_h needs b = h/n")
        if epsilon <= math.pi / (4 * b):
            raise ConfigError(f"epsilon must exceed pi/(4b) = {math.pi / (4 * b):.6g}")
        return _ceil(odds / (epsilon - math.pi / (4 * b)) * n)
    if kind == "nonadaptive_h":
        if b is None:
            return nonadaptive_h_optimum(n, epsilon, beta)[2]
        denom = epsilon / b - math.pi / (4 * b * b)
        if denom <= 0:
            raise ConfigError(f"epsilon must exceed pi/(4b) = {math.pi / (4 * b):.6g}")
        return _ceil(odds / denom * n * n)
    raise ConfigError(f"unknown protocol {kind!r}")


def sampling_tail_bound(N: int, beta: float) -> float:
    """Bound ``(1-beta)/(beta N)`` on Pr{withheld bit = 1} after N sampled zeros."""
    if N < 1 or not 1.0 / (N + 1) <= beta <= 1:
        raise ConfigError(f"need 1/(N+1) <= beta <= 1, got N={N}, beta={beta}")
    return (1 - beta) / (beta * N)


def protocol_operator(cfg: ProtocolConfig, g: WeightedGraph) -> TestOperator:
    """Dense POVM element realized by the per-copy test of ``cfg``."""
    if cfg.protocol == "adaptive_exact":
        return build_omega_adaptive(g, cfg.cover)
    if cfg.protocol == "adaptive_h":
        return build_omega_adaptive_h(g, cfg.cover, cfg.h)
    if cfg.protocol == "nonadaptive_e":
        cands = resolve_candidates(g, cfg.candidates)
        return build_omega_nonadaptive(g, cfg.cover, {k: len(c) for k, c in cands.items()})
    if cfg.shared_f:
        return build_omega_nonadaptive_h_shared(g, cfg.cover, cfg.h)
    return build_omega_nonadaptive_h(g, cfg.cover, cfg.h)


# Verifier -------------------------------------------------------------------


class Verifier:
    """Per-copy test for one graph, cover and protocol.

    ``frame`` holds per-vertex unitaries ``U_k`` with the target equal to
    ``prod U_k |G>``; copies are then measured in bases rotated by ``U_k``,
    which is simulated by applying ``U_k^dagger`` to the copy.
    """

    def __init__(self, g: WeightedGraph, cfg: ProtocolConfig, frame: Sequence[np.ndarray] | None = None):
        check_config(cfg, g)
        self.g, self.cfg = g, cfg
        self.parts = [sorted(p) for p in cfg.cover.parts]
        self.frame_dag = dagger_frame(frame) if frame is not None else None
        self.candidates = resolve_candidates(g, cfg.candidates) if cfg.protocol == "nonadaptive_e" else None
        self._cache: dict = {}
        self._alpha: dict[int, np.ndarray] = {}
        self._rules: dict = {}

    # -- setting draws

    def draw_settings(self, rng: np.random.Generator, count: int) -> tuple[np.ndarray, np.ndarray | None]:
        """Colors (0-based) and per-vertex basis choices for ``count`` copies."""
        ls = rng.integers(self.cfg.cover.m, size=count)
        n, p = self.g.n, self.cfg.protocol
        if p == "nonadaptive_e":
            e = np.array([len(self.candidates[k]) for k in self.g.vertices])
            choices = np.floor(rng.random((count, n)) * e).astype(np.int64)
        elif p == "nonadaptive_h":
            if self.cfg.shared_f:
                choices = np.repeat(rng.integers(1, self.cfg.h + 1, size=(count, 1)), n, axis=1)
            else:
                choices = rng.integers(1, self.cfg.h + 1, size=(count, n))
        else:
            choices = None
        return ls, choices

    # -- scalar rule, used by the sequential engine

    def rule(self, k: int, alpha: float, choice: int | None) -> tuple[float, bool, bool]:
        """``(basis angle, matched, plus required)`` for vertex ``k`` given its ideal angle."""
        p, h = self.cfg.protocol, self.cfg.h
        if p == "adaptive_exact":
            return alpha, True, True
        if p == "adaptive_h":
            f, sign = grid_basis(discretize_angle(alpha, h), h)
            return f * math.pi / h, True, sign > 0
        if p == "nonadaptive_e":
            phi, target = self.candidates[k][choice], alpha
        else:
            phi, target = choice * math.pi / h, discretize_angle(alpha, h)
        if not _same_angle(target, phi, math.pi):
            return phi, False, True
        return phi, True, _same_angle(target, phi, TWO_PI)

    # -- vectorized rule, used by the fast engine

    def _alpha_mod(self, k: int) -> np.ndarray:
        if k not in self._alpha:
            self._alpha[k] = np.mod(alpha_table(self.g, k), TWO_PI)
        return self._alpha[k]

    def _vec_rule(self, k: int, choice: int | None):
        key = (k, choice)
        if key in self._rules:
            return self._rules[key]
        p, h = self.cfg.protocol, self.cfg.h
        alpha = self._alpha_mod(k)
        true = np.ones(alpha.shape, dtype=bool)
        if p == "adaptive_exact":
            out = (alpha, true, true)
        elif p == "adaptive_h":
            grid = np.round(discretize_angles(alpha, h) * h / math.pi).astype(np.int64) % (2 * h)
            f = grid % h
            f = np.where(f == 0, h, f)
            out = (f * math.pi / h, true, grid == f)
        else:
            if p == "nonadaptive_e":
                phi, target = self.candidates[k][choice], alpha
            else:
                phi, target = choice * math.pi / h, discretize_angles(alpha, h)
            d2 = np.mod(target - phi, TWO_PI)
            plus = (d2 < ANGLE_TOL) | (d2 > TWO_PI - ANGLE_TOL)
            minus = np.abs(d2 - math.pi) < ANGLE_TOL
            out = (np.full(alpha.shape, phi), plus | minus, plus)
        self._rules[key] = out
        return out

    # -- engines

    def _prepare(self, copy: StateVector) -> StateVector:
        if copy.n != self.g.n:
            raise ConfigError(f"copy has {copy.n} qubits, graph has {self.g.n}")
        return apply_local_phase_frame(copy, self.frame_dag) if self.frame_dag is not None else copy

    def _table(self, copy: StateVector, content_key: bytes, l: int, choice: tuple):
        key = (content_key, l, choice)
        hit = self._cache.get(key)
        if hit is not None:
            return hit
        if len(self._cache) > _CACHE_LIMIT:
            self._cache.clear()
        n = self.g.n
        t = self._prepare(copy).amps.copy()
        bits = basis_bits(n)
        passmask = np.ones(t.size, dtype=bool)
        for k, c in zip(self.parts[l], choice):
            phi, matched, plus = self._vec_rule(k, c)
            v = t.reshape(1 << (n - k), 2, 1 << (k - 1))
            ph = np.exp(-1j * phi).reshape(v.shape)[:, 0, :]
            a0, a1 = v[:, 0, :].copy(), v[:, 1, :] * ph
            v[:, 0, :] = (a0 + a1) / math.sqrt(2)
            v[:, 1, :] = (a0 - a1) / math.sqrt(2)
            passmask &= ~matched | (bits[:, k - 1] == (~plus).astype(np.uint8))
        cdf = np.cumsum(np.abs(t) ** 2)
        entry = (cdf / cdf[-1], passmask)
        self._cache[key] = entry
        return entry

    def _choice_tuple(self, l: int, row: np.ndarray | None) -> tuple:
        if row is None:
            return (None,) * len(self.parts[l])
        return tuple(int(row[k - 1]) for k in self.parts[l])

    def test_copies_fast(self, copies: Sequence[StateVector], rng: np.random.Generator,
                         keep_transcript: bool = False, indices: Sequence[int] | None = None):
        """Per-copy pass flags (and optional records) via cached joint Born sampling."""
        count = len(copies)
        ls, choices = self.draw_settings(rng, count)
        us = rng.random(count)
        keys: dict[int, bytes] = {}
        groups: dict[tuple, list[int]] = {}
        for i, (s, l) in enumerate(zip(copies, ls.tolist())):
            ck = keys.get(id(s))
            if ck is None:
                ck = keys[id(s)] = s.amps.tobytes()
            row = None if choices is None else choices[i]
            groups.setdefault((ck, l, self._choice_tuple(l, row)), []).append(i)
        passed = np.empty(count, dtype=bool)
        outcome_idx = np.empty(count, dtype=np.int64)
        for (ck, l, ch), members in groups.items():
            cdf, passmask = self._table(copies[members[0]], ck, l, ch)
            idx = np.searchsorted(cdf, us[members], side="right")
            idx = np.minimum(idx, cdf.size - 1)
            outcome_idx[members] = idx
            passed[members] = passmask[idx]
        records = None
        if keep_transcript:
            records = []
            idx_labels = range(1, count + 1) if indices is None else indices
            for i, label in enumerate(idx_labels):
                l = int(ls[i])
                row = None if choices is None else choices[i]
                records.append(self._decode(label, l, self._choice_tuple(l, row), int(outcome_idx[i]), bool(passed[i])))
        return passed, records

    def _decode(self, label: int, l: int, choice: tuple, index: int, passed: bool) -> CopyRecord:
        part = self.parts[l]
        bases: dict[int, str | float] = {}
        outcomes: dict[int, int] = {}
        z = {}
        for v in self.g.vertices:
            bit = (index >> (v - 1)) & 1
            if v not in part:
                bases[v], outcomes[v] = "Z", bit
                z[v] = bit
        for k, c in zip(part, choice):
            bases[k] = self.rule(k, alpha_expected(self.g, k, z), c)[0]
            outcomes[k] = PLUS if ((index >> (k - 1)) & 1) == 0 else MINUS
        return CopyRecord(label, l + 1, dict(sorted(bases.items())), dict(sorted(outcomes.items())), passed)

    def test_copy_sequential(self, copy: StateVector, rng: np.random.Generator, label: int = 1) -> CopyRecord:
        """One copy measured qubit by qubit with explicit collapses."""
        ls, choices = self.draw_settings(rng, 1)
        l = int(ls[0])
        choice = self._choice_tuple(l, None if choices is None else choices[0])
        state = self._prepare(copy)
        part = self.parts[l]
        bases: dict[int, str | float] = {}
        outcomes: dict[int, int] = {}
        z: dict[int, int] = {}
        for j in self.g.vertices:
            if j not in part:
                z[j], state = measure_z(state, j, rng)
                bases[j], outcomes[j] = "Z", z[j]
        passed = True
        for k, c in zip(part, choice):
            phi, matched, want_plus = self.rule(k, alpha_expected(self.g, k, z), c)
            o, state = measure_plane(state, k, phi, rng)
            bases[k], outcomes[k] = phi, o
            if matched and (o == PLUS) != want_plus:
                passed = False
        return CopyRecord(label, l + 1, dict(sorted(bases.items())), dict(sorted(outcomes.items())), passed)


# Public per-copy tests ------------------------------------------------------


def _single(protocol, copy, g, cover, rng, **kw) -> bool:
    cfg = ProtocolConfig(protocol, N=1, beta=1.0, cover=cover, **kw)
    return Verifier(g, cfg).test_copy_sequential(copy, rng).passed


def test_copy_adaptive_exact(copy: StateVector, g: WeightedGraph, cover: IndependenceCover, rng) -> bool:
    return _single("adaptive_exact", copy, g, cover, rng)


def test_copy_adaptive_h(copy: StateVector, g: WeightedGraph, cover: IndependenceCover, h: int, rng) -> bool:
    return _single("adaptive_h", copy, g, cover, rng, h=h)


def test_copy_nonadaptive_e(copy: StateVector, g: WeightedGraph, cover: IndependenceCover,
                            candidates: Mapping[int, Sequence[float]] | None, rng) -> bool:
    return _single("nonadaptive_e", copy, g, cover, rng, candidates=candidates)


def test_copy_nonadaptive_h(copy: StateVector, g: WeightedGraph, cover: IndependenceCover, h: int, rng,
                            shared_f: bool = False) -> bool:
    return _single("nonadaptive_h", copy, g, cover, rng, h=h, shared_f=shared_f)


for _f in (test_copy_adaptive_exact, test_copy_adaptive_h, test_copy_nonadaptive_e, test_copy_nonadaptive_h):
    _f.__test__ = False


# N-random sampling test -----------------------------------------------------


def run_random_sampling_test(source, cfg: ProtocolConfig, g: WeightedGraph, rng: np.random.Generator, *,
                             frame: Sequence[np.ndarray] | None = None, engine: str = "fast",
                             keep_transcript: bool = False, verifier: Verifier | None = None) -> ProtocolReport:
    """Draw N+1 copies, withhold one uniformly at random, test the other N.

    Pass a ``verifier`` to reuse its distribution cache across many runs.
    """
    verifier = verifier or Verifier(g, cfg, frame)
    bound = certificate_bound(cfg, g)
    N = cfg.N
    copies = [source.next_copy() for _ in range(N + 1)]
    withheld = int(rng.integers(N + 1))
    tested = [i for i in range(N + 1) if i != withheld]
    if engine == "fast":
        passed, records = verifier.test_copies_fast(
            [copies[i] for i in tested], rng, keep_transcript, indices=[i + 1 for i in tested]
        )
        n_failed = int(np.count_nonzero(~passed))
    elif engine == "sequential":
        records = [verifier.test_copy_sequential(copies[i], rng, label=i + 1) for i in tested]
        n_failed = sum(not r.passed for r in records)
        if not keep_transcript:
            records = None
    else:
        raise ConfigError(f"unknown engine {engine!r}")
    accepted = n_failed == 0
    return ProtocolReport(
        accepted=accepted,
        withheld=withheld + 1,
        n_failed=n_failed,
        certificate=bound if accepted else None,
        vacuous=accepted and bound <= 0,
        completeness_bound=completeness_bound(cfg),
        beta=cfg.beta,
        remaining_copy=copies[withheld],
        transcript=records,
    )
