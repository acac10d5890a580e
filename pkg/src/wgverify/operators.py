"""Dense test operators, spectral gaps and bound certificates (n <= 10).

Every operator here is the per-copy acceptance POVM element of one of the
four verification protocols, built directly from its algebraic definition
rather than from the measurement procedure.  The Monte Carlo protocols in
:mod:`wgverify.protocols` are checked against these matrices.
"""

from __future__ import annotations

import math
from collections.abc import Mapping
from dataclasses import dataclass, field

import numpy as np

from .errors import CapabilityError, InputError
from .graph import IndependenceCover, WeightedGraph, require_valid_cover
from .state import TWO_PI, StateVector, basis_bits, build_weighted_graph_state, reduce_angle

ORACLE_LIMIT = 10
EIG_TOL = 1e-10
BOUND_SLACK = 1e-9

KINDS = ("adaptive_exact", "adaptive_h", "nonadaptive_hvec", "nonadaptive_h")


def discretize_angle(alpha: float, h: int) -> float:
    """Nearest grid angle ``k*pi/h`` to ``alpha``, returned in [0, 2*pi).

    Windows are half-open, ``k*pi/h - pi/(2h) <= alpha < k*pi/h + pi/(2h)``.
    The result keeps the full 2*pi information: ``k`` and ``k + h`` give the
    same measurement basis but opposite outcome labels.
    """
    if int(h) != h or h < 1:
        raise InputError(f"h must be a positive integer, got {h!r}")
    x = reduce_angle(alpha) * h / math.pi + 0.5
    r = round(x)
    k = r if abs(x - r) < 1e-9 else math.floor(x)
    return (k % (2 * h)) * math.pi / h


def discretize_angles(alpha: np.ndarray, h: int) -> np.ndarray:
    """Vectorized :func:`discretize_angle`."""
    x = np.mod(alpha, TWO_PI) * h / math.pi + 0.5
    r = np.round(x)
    k = np.where(np.abs(x - r) < 1e-9, r, np.floor(x))
    return np.mod(k, 2 * h) * math.pi / h


def grid_basis(alpha_h: float, h: int) -> tuple[int, int]:
    """Hardware basis index ``F`` in ``1..h`` and outcome sign for grid angle ``alpha_h``.

    The basis ``{|F*pi/h>, |F*pi/h + pi>}`` contains ``|alpha_h>``; the sign
    is ``+1`` if ``|alpha_h> = |F*pi/h>`` and ``-1`` otherwise.
    """
    k = int(round(reduce_angle(alpha_h) * h / math.pi)) % (2 * h)
    f = k % h or h
    return f, (+1 if k == f % (2 * h) else -1)


def alpha_table(g: WeightedGraph, k: int) -> np.ndarray:
    """Raw ``alpha_k`` (not reduced) for every basis index of the n-qubit register."""
    bits = basis_bits(g.n)
    nb = sorted(g.neighbors(k))
    if not nb:
        return np.zeros(1 << g.n)
    theta = np.array([g.weight(j, k) for j in nb])
    return bits[:, [j - 1 for j in nb]].astype(float) @ theta


def _check_oracle(g: WeightedGraph) -> None:
    if g.n > ORACLE_LIMIT:
        raise CapabilityError(f"dense test operators are limited to n <= {ORACLE_LIMIT}, got {g.n}")


def _projector(n: int, k: int, angles: np.ndarray, active: np.ndarray | None = None) -> np.ndarray:
    """Block-diagonal ``|angle(z)><angle(z)|`` on qubit ``k``, identity elsewhere.

    ``angles`` is indexed by the full basis index but must not depend on
    bit ``k``.  Where ``active`` is False the block is the identity instead.
    """
    dim = 1 << n
    mask = 1 << (k - 1)
    rows = np.arange(dim)
    bit = (rows & mask) != 0
    off = np.where(bit, np.exp(1j * angles), np.exp(-1j * angles)) / 2
    diag = np.full(dim, 0.5, dtype=complex)
    if active is not None:
        off = np.where(active, off, 0)
        diag = np.where(active, diag, 1.0)
    q = np.zeros((dim, dim), dtype=complex)
    q[rows, rows] = diag
    q[rows, rows ^ mask] = off
    return q


@dataclass
class TestOperator:
    """A dense test operator together with how it was built."""

    n: int
    matrix: np.ndarray
    kind: str
    params: dict = field(default_factory=dict)

    __test__ = False  # not a pytest class

    def expectation(self, rho: np.ndarray | StateVector) -> float:
        """``Tr(rho Omega)`` for a density matrix or ``<psi|Omega|psi>``."""
        if isinstance(rho, StateVector):
            return float(np.vdot(rho.amps, self.matrix @ rho.amps).real)
        rho = getattr(rho, "rho", rho)
        return float(np.einsum("ij,ji->", rho, self.matrix).real)


def build_projector_Q(g: WeightedGraph, cover: IndependenceCover, l: int, k: int, h: int | None = None) -> TestOperator:
    """``Q_k`` for vertex ``k`` in part ``A_l`` (``l`` is 1-based); discretized when ``h`` is given."""
    _check_oracle(g)
    if not 1 <= l <= cover.m or k not in cover.parts[l - 1]:
        raise InputError(f"vertex {k} is not in part A_{l}")
    angles = alpha_table(g, k)
    if h is not None:
        angles = discretize_angles(angles, h)
    return TestOperator(g.n, _projector(g.n, k, angles), "Q", {"l": l, "k": k, "h": h})


def _part_product(g: WeightedGraph, part, factor) -> np.ndarray:
    out = np.eye(1 << g.n, dtype=complex)
    for k in sorted(part):
        out = out @ factor(k)
    return out


def _mixture(g: WeightedGraph, cover: IndependenceCover, factor) -> np.ndarray:
    _check_oracle(g)
    require_valid_cover(g, cover)
    total = sum(_part_product(g, part, factor) for part in cover.parts)
    omega = total / cover.m
    return (omega + omega.conj().T) / 2


def build_omega_adaptive(g: WeightedGraph, cover: IndependenceCover) -> TestOperator:
    mat = _mixture(g, cover, lambda k: _projector(g.n, k, alpha_table(g, k)))
    return TestOperator(g.n, mat, "adaptive_exact", {"cover": cover})


def build_omega_adaptive_h(g: WeightedGraph, cover: IndependenceCover, h: int) -> TestOperator:
    mat = _mixture(g, cover, lambda k: _projector(g.n, k, discretize_angles(alpha_table(g, k), h)))
    return TestOperator(g.n, mat, "adaptive_h", {"cover": cover, "h": h})


def _hvec(g: WeightedGraph, hvec: int | Mapping[int, int]) -> dict[int, int]:
    if isinstance(hvec, Mapping):
        out = {v: hvec.get(v) for v in g.vertices}
    else:
        out = {v: hvec for v in g.vertices}
    for v, h in out.items():
        if h is None or int(h) != h or h < 1:
            raise InputError(f"h({v}) must be a positive integer, got {h!r}")
    return {v: int(h) for v, h in out.items()}


def _diluted(q: np.ndarray, h: int) -> np.ndarray:
    return q / h + (h - 1) / h * np.eye(q.shape[0])


def build_omega_nonadaptive(g: WeightedGraph, cover: IndependenceCover, hvec: int | Mapping[int, int]) -> TestOperator:
    """``sum_l prod_{k in A_l} (Q_k/h(k) + (h(k)-1)/h(k) I) / m``."""
    hv = _hvec(g, hvec)
    mat = _mixture(g, cover, lambda k: _diluted(_projector(g.n, k, alpha_table(g, k)), hv[k]))
    return TestOperator(g.n, mat, "nonadaptive_hvec", {"cover": cover, "hvec": hv})


def build_omega_nonadaptive_h(g: WeightedGraph, cover: IndependenceCover, h: int) -> TestOperator:
    hv = _hvec(g, h)
    mat = _mixture(
        g, cover, lambda k: _diluted(_projector(g.n, k, discretize_angles(alpha_table(g, k), h)), hv[k])
    )
    return TestOperator(g.n, mat, "nonadaptive_h", {"cover": cover, "h": h})


def build_omega_nonadaptive_h_shared(g: WeightedGraph, cover: IndependenceCover, h: int) -> TestOperator:
    """POVM element realized when one basis index ``F`` is shared by all of ``A_l``.

    Vertices whose discretized angle is not on the chosen basis are
    unconstrained, so the element is an average over ``F`` of products
    of partially-active projectors.  It differs from the per-vertex
    product form whenever vertices of one part have correlated angles.
    """
    _check_oracle(g)
    require_valid_cover(g, cover)
    dim = 1 << g.n
    total = np.zeros((dim, dim), dtype=complex)
    tables = {k: discretize_angles(alpha_table(g, k), h) for k in g.vertices}
    for part in cover.parts:
        for f in range(1, h + 1):
            phi = f * math.pi / h

            def factor(k, phi=phi):
                ang = tables[k]
                d = np.mod(ang - phi, math.pi)
                active = (d < 1e-9) | (d > math.pi - 1e-9)
                return _projector(g.n, k, ang, active)

            total += _part_product(g, part, factor) / h
    mat = total / cover.m
    return TestOperator(g.n, (mat + mat.conj().T) / 2, "nonadaptive_h_shared", {"cover": cover, "h": h})


def operator_norm(a: np.ndarray) -> float:
    """Largest singular value; for Hermitian input the largest ``|eigenvalue|``."""
    a = np.asarray(a)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise InputError("operator_norm needs a square matrix")
    if a.size == 0:
        return 0.0
    if np.allclose(a, a.conj().T, atol=1e-12):
        return float(np.max(np.abs(np.linalg.eigvalsh((a + a.conj().T) / 2))))
    return float(np.linalg.norm(a, 2))


def _gproj(gstate: StateVector) -> np.ndarray:
    return np.outer(gstate.amps, gstate.amps.conj())


def spectral_gap(t: TestOperator | np.ndarray, gstate: StateVector) -> float:
    """``1 - ||Omega - |G><G| ||`` by full eigendecomposition."""
    mat = t.matrix if isinstance(t, TestOperator) else np.asarray(t)
    if mat.shape != (1 << gstate.n, 1 << gstate.n):
        raise InputError("operator and state dimensions differ")
    return 1.0 - operator_norm(mat - _gproj(gstate))


def dominates(t: TestOperator | np.ndarray, gstate: StateVector, tol: float = EIG_TOL) -> bool:
    """Whether ``Omega >= |G><G|`` up to ``tol``."""
    mat = t.matrix if isinstance(t, TestOperator) else np.asarray(t)
    return bool(np.linalg.eigvalsh(mat - _gproj(gstate)).min() >= -tol)


def in_unit_interval(t: TestOperator, tol: float = EIG_TOL) -> bool:
    ev = np.linalg.eigvalsh(t.matrix)
    return bool(ev.min() >= -tol and ev.max() <= 1 + tol)


# Closed-form predictions ---------------------------------------------------


def predicted_gap_adaptive(cover: IndependenceCover) -> float:
    return 1.0 / cover.m


def predicted_gap_nonadaptive(cover: IndependenceCover, hvec: Mapping[int, int] | int) -> float:
    hmax = max(hvec.values()) if isinstance(hvec, Mapping) else hvec
    return 1.0 / (cover.m * hmax)


def overlap_bound_adaptive_h(cover: IndependenceCover, h: int) -> float:
    return (1 - math.sin(math.pi / (4 * h)) ** 2) ** cover.max_size


def overlap_bound_nonadaptive_h(cover: IndependenceCover, h: int) -> float:
    return (1 - math.sin(math.pi / (4 * h)) ** 2 / h) ** cover.max_size


def perturbation_bound_adaptive_h(cover: IndependenceCover, h: int) -> float:
    return sum(cover.sizes) / cover.m * math.sin(math.pi / (4 * h))


def perturbation_bound_nonadaptive_h(cover: IndependenceCover, h: int) -> float:
    return sum(cover.sizes) / (cover.m * h) * math.sin(math.pi / (4 * h))


@dataclass
class Check:
    name: str
    computed: float
    predicted: float
    relation: str  # "==", ">=", "<="
    passed: bool


def certify(g: WeightedGraph, cover: IndependenceCover, kind: str, *, h: int | None = None,
            hvec: Mapping[int, int] | int | None = None, gstate: StateVector | None = None) -> list[Check]:
    """Compute every closed-form identity and bound that applies to ``kind``.

    ``kind`` is ``adaptive``, ``adaptive_h``, ``nonadaptive`` or ``nonadaptive_h``.
    """
    _check_oracle(g)
    require_valid_cover(g, cover)
    gstate = gstate or build_weighted_graph_state(g)
    checks: list[Check] = []

    def eq(name, computed, predicted, tol=EIG_TOL):
        checks.append(Check(name, computed, predicted, "==", abs(computed - predicted) <= tol))

    def ge(name, computed, bound):
        checks.append(Check(name, computed, bound, ">=", computed >= bound - BOUND_SLACK))

    def le(name, computed, bound):
        checks.append(Check(name, computed, bound, "<=", computed <= bound + BOUND_SLACK))

    if kind == "adaptive":
        om = build_omega_adaptive(g, cover)
        eq("spectral_gap", spectral_gap(om, gstate), predicted_gap_adaptive(cover))
        ge("domination_min_eig", float(np.linalg.eigvalsh(om.matrix - _gproj(gstate)).min()), 0.0)
    elif kind == "nonadaptive":
        hv = _hvec(g, 1 if hvec is None else hvec)
        om = build_omega_nonadaptive(g, cover, hv)
        eq("spectral_gap", spectral_gap(om, gstate), predicted_gap_nonadaptive(cover, hv))
        ge("domination_min_eig", float(np.linalg.eigvalsh(om.matrix - _gproj(gstate)).min()), 0.0)
    elif kind in ("adaptive_h", "nonadaptive_h"):
        if h is None:
            raise InputError(f"kind {kind} needs h")
        if kind == "adaptive_h":
            om_h, om = build_omega_adaptive_h(g, cover, h), build_omega_adaptive(g, cover)
            ob, pb = overlap_bound_adaptive_h(cover, h), perturbation_bound_adaptive_h(cover, h)
            eq("reference_gap", spectral_gap(om, gstate), predicted_gap_adaptive(cover))
        else:
            om_h, om = build_omega_nonadaptive_h(g, cover, h), build_omega_nonadaptive(g, cover, h)
            ob, pb = overlap_bound_nonadaptive_h(cover, h), perturbation_bound_nonadaptive_h(cover, h)
            eq("reference_gap", spectral_gap(om, gstate), predicted_gap_nonadaptive(cover, h))
        ge("overlap", om_h.expectation(gstate), ob)
        le("perturbation_norm", operator_norm(om_h.matrix - om.matrix), pb)
    else:
        raise InputError(f"unknown operator kind {kind!r}")
    return checks


def format_certificate(g: WeightedGraph, cover: IndependenceCover, kind: str, checks: list[Check], **params) -> str:
    lines = [
        f"n: {g.n}",
        f"edges: {len(g.edges)}",
        f"cover: {';'.join(','.join(map(str, p)) for p in cover.as_lists())}",
        f"m: {cover.m}",
        f"kind: {kind}",
    ]
    lines += [f"{k}: {v}" for k, v in params.items() if v is not None]
    for c in checks:
        verdict = "pass" if c.passed else "FAIL"
        lines.append(f"{c.name}: computed={c.computed:.12g} {c.relation} predicted={c.predicted:.12g} {verdict}")
    lines.append(f"result: {'pass' if all(c.passed for c in checks) else 'FAIL'}")
    return "\n".join(lines) + "\n"
