"""Weighted graphs, independence covers and colorings.

Vertices are 1-indexed. Edge keys are normalized to ``(j, k)`` with ``j < k``.
Weights are stored as raw radians; callers reduce modulo 2*pi where needed.

Graph file grammar (one statement per line, ``#`` starts a comment)::

    n <int>
    edge <j> <k> <angle>

``<angle>`` is either a real literal (``0.785``) or a rational multiple of pi
written as ``[sign][coef][*]pi[/denom]``, e.g. ``pi/8``, ``-3pi/4``,
``0.5*pi``, ``2*pi/3``.  ``e`` is accepted as a short alias for ``edge``.
Duplicate edges (in either orientation) are rejected.
"""

from __future__ import annotations

import itertools
import math
import re
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass

from .errors import CapabilityError, InputError

CHROMATIC_SEARCH_LIMIT = 12

_PI_ANGLE = re.compile(
    r"""^(?P<sign>[+-])?\s*
        (?P<coef>\d+(?:\.\d*)?|\.\d+)?\s*\*?\s*
        pi
        (?:\s*/\s*(?P<den>\d+(?:\.\d*)?))?$""",
    re.VERBOSE | re.IGNORECASE,
)


def parse_angle(text: str) -> float:
    """Parse a real literal or a rational multiple of pi."""
    s = text.strip()
    m = _PI_ANGLE.match(s)
    if m:
        coef = float(m.group("coef")) if m.group("coef") else 1.0
        den = float(m.group("den")) if m.group("den") else 1.0
        if den == 0:
            raise InputError(f"zero denominator in angle {text!r}")
        value = coef * math.pi / den
        return -value if m.group("sign") == "-" else value
    try:
        return float(s)
    except ValueError:
        raise InputError(f"cannot parse angle {text!r}") from None


class WeightedGraph:
    """Immutable weighted graph on vertices ``1..n``."""

    __slots__ = ("_n", "_weights", "_adj")

    def __init__(self, n: int, edges: Mapping[tuple[int, int], float] | Iterable[tuple[int, int, float]] = ()):
        if not isinstance(n, (int,)) or isinstance(n, bool) or n < 1:
            raise InputError(f"vertex count must be a positive integer, got {n!r}")
        items = edges.items() if isinstance(edges, Mapping) else (((j, k), t) for j, k, t in edges)
        weights: dict[tuple[int, int], float] = {}
        for (j, k), theta in items:
            j, k = int(j), int(k)
            if j == k:
                raise InputError(f"self-loop at vertex {j}")
            if not (1 <= j <= n and 1 <= k <= n):
                raise InputError(f"edge ({j},{k}) out of range 1..{n}")
            key = (min(j, k), max(j, k))
            if key in weights:
                raise InputError(f"duplicate edge {key}")
            theta = float(theta)
            if theta == 0.0:
                raise InputError(f"edge {key} has zero weight; omit it instead")
            weights[key] = theta
        adj: list[frozenset[int]] = [frozenset()] * (n + 1)
        nbrs: dict[int, set[int]] = {v: set() for v in range(1, n + 1)}
        for j, k in weights:
            nbrs[j].add(k)
            nbrs[k].add(j)
        for v, s in nbrs.items():
            adj[v] = frozenset(s)
        self._n = n
        self._weights = dict(sorted(weights.items()))
        self._adj = tuple(adj)

    @property
    def n(self) -> int:
        return self._n

    @property
    def vertices(self) -> range:
        return range(1, self._n + 1)

    @property
    def edges(self) -> list[tuple[int, int]]:
        return list(self._weights)

    @property
    def weights(self) -> dict[tuple[int, int], float]:
        return dict(self._weights)

    def weight(self, j: int, k: int) -> float:
        """Return theta_jk; zero for non-edges."""
        return self._weights.get((min(j, k), max(j, k)), 0.0)

    def neighbors(self, k: int) -> frozenset[int]:
        self._check_vertex(k)
        return self._adj[k]

    def degree(self, k: int) -> int:
        return len(self.neighbors(k))

    def max_degree(self) -> int:
        return max((len(self._adj[v]) for v in self.vertices), default=0)

    def with_weight(self, j: int, k: int, theta: float) -> WeightedGraph:
        """Copy of this graph with edge (j,k) set to ``theta`` (removed if zero)."""
        w = self.weights
        key = (min(j, k), max(j, k))
        if theta == 0.0:
            w.pop(key, None)
        else:
            w[key] = theta
        return WeightedGraph(self._n, w)

    def _check_vertex(self, k: int) -> None:
        if not isinstance(k, (int,)) or not 1 <= k <= self._n:
            raise InputError(f"vertex {k!r} out of range 1..{self._n}")

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, WeightedGraph):
            return NotImplemented
        return self._n == other._n and self._weights == other._weights

    def __hash__(self) -> int:
        return hash((self._n, tuple(self._weights.items())))

    def __repr__(self) -> str:
        return f"WeightedGraph(n={self._n}, edges={self._weights!r})"


def neighbors(g: WeightedGraph, k: int) -> frozenset[int]:
    return g.neighbors(k)


@dataclass(frozen=True)
class IndependenceCover:
    """Ordered partition ``A_1..A_m`` of the vertex set.

    Construction does not check the independence/partition invariants; use
    :func:`validate_cover` or :func:`require_valid_cover` for that.
    """

    parts: tuple[frozenset[int], ...]

    def __init__(self, parts: Iterable[Iterable[int]]):
        object.__setattr__(self, "parts", tuple(frozenset(int(v) for v in p) for p in parts))

    @property
    def m(self) -> int:
        return len(self.parts)

    @property
    def sizes(self) -> list[int]:
        return [len(p) for p in self.parts]

    @property
    def max_size(self) -> int:
        return max(self.sizes, default=0)

    def color_of(self, v: int) -> int:
        """0-based index of the part containing ``v``."""
        for i, p in enumerate(self.parts):
            if v in p:
                return i
        raise InputError(f"vertex {v} not covered")

    def as_lists(self) -> list[list[int]]:
        return [sorted(p) for p in self.parts]

    def __len__(self) -> int:
        return len(self.parts)


def validate_cover(g: WeightedGraph, cover: IndependenceCover) -> list[str]:
    """Return a list of violations; an empty list means the cover is valid."""
    violations = []
    seen: dict[int, int] = {}
    for l, part in enumerate(cover.parts, start=1):
        if not part:
            violations.append(f"part A_{l} is empty")
        for v in sorted(part):
            if not 1 <= v <= g.n:
                violations.append(f"vertex {v} in A_{l} is out of range 1..{g.n}")
                continue
            if v in seen:
                violations.append(f"vertex {v} appears in A_{seen[v]} and A_{l}")
            else:
                seen[v] = l
        for j, k in itertools.combinations(sorted(part), 2):
            if g.weight(j, k) != 0.0:
                violations.append(f"edge ({j},{k}) inside A_{l}")
    for v in g.vertices:
        if v not in seen:
            violations.append(f"vertex {v} uncovered")
    return violations


def require_valid_cover(g: WeightedGraph, cover: IndependenceCover) -> None:
    problems = validate_cover(g, cover)
    if problems:
        raise InputError("invalid independence cover: " + "; ".join(problems))


def greedy_cover(g: WeightedGraph, order: Sequence[int] | None = None) -> IndependenceCover:
    """Greedy coloring along ``order`` (natural order by default).

    Each vertex receives the smallest color not used by an already colored
    neighbor, so at most ``max_degree + 1`` colors are used.
    """
    order = list(g.vertices) if order is None else [int(v) for v in order]
    if sorted(order) != list(g.vertices):
        raise InputError("order must be a permutation of the vertices")
    color: dict[int, int] = {}
    for v in order:
        taken = {color[u] for u in g.neighbors(v) if u in color}
        c = 0
        while c in taken:
            c += 1
        color[v] = c
    m = max(color.values()) + 1
    parts: list[list[int]] = [[] for _ in range(m)]
    for v in g.vertices:
        parts[color[v]].append(v)
    return IndependenceCover(parts)


def singleton_cover(g: WeightedGraph) -> IndependenceCover:
    return IndependenceCover([v] for v in g.vertices)


def chromatic_number_exact(g: WeightedGraph) -> int:
    """Exact chromatic number by iterative deepening over the color count."""
    if g.n > CHROMATIC_SEARCH_LIMIT:
        raise CapabilityError(f"exhaustive chromatic search is limited to n <= {CHROMATIC_SEARCH_LIMIT}")
    # Highest degree first prunes the backtracking early.
    order = sorted(g.vertices, key=lambda v: -g.degree(v))
    for k in range(1, g.n + 1):
        if _colorable(g, order, k):
            return k
    return g.n


def _colorable(g: WeightedGraph, order: list[int], k: int) -> bool:
    color: dict[int, int] = {}

    def assign(i: int) -> bool:
        if i == len(order):
            return True
        v = order[i]
        taken = {color[u] for u in g.neighbors(v) if u in color}
        # Symmetry breaking: never open more than one fresh color.
        limit = min(k, max(color.values(), default=-1) + 2)
        for c in range(limit):
            if c not in taken:
                color[v] = c
                if assign(i + 1):
                    return True
                del color[v]
        return False

    return assign(0)


def parse_graph(text: str) -> WeightedGraph:
    """Parse the graph file format described in the module docstring."""
    n = None
    edges: list[tuple[int, int, float]] = []
    seen: set[tuple[int, int]] = set()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tok = line.split(None, 3)
        head = tok[0].lower()
        try:
            if head == "n" and len(tok) == 2:
                if n is not None:
                    raise InputError("n declared twice")
                n = int(tok[1])
            elif head in ("edge", "e") and len(tok) == 4:
                j, k = int(tok[1]), int(tok[2])
                key = (min(j, k), max(j, k))
                if key in seen:
                    raise InputError(f"duplicate edge {key}")
                seen.add(key)
                edges.append((j, k, parse_angle(tok[3])))
            else:
                raise InputError(f"unrecognized statement {line!r}")
        except (InputError, ValueError) as exc:
            raise InputError(f"line {lineno}: {exc}") from None
    if n is None:
        raise InputError("graph file is missing the 'n' statement")
    return WeightedGraph(n, edges)


def format_graph(g: WeightedGraph) -> str:
    lines = [f"n {g.n}"]
    lines += [f"edge {j} {k} {theta!r}" for (j, k), theta in g.weights.items()]
    return "\n".join(lines) + "\n"


def parse_cover(text: str) -> IndependenceCover:
    """Parse ``"1,3;2"`` style cover strings (parts separated by ``;``)."""
    parts = []
    for chunk in text.split(";"):
        chunk = chunk.strip()
        if not chunk:
            continue
        try:
            parts.append([int(v) for v in chunk.replace(" ", ",").split(",") if v])
        except ValueError:
            raise InputError(f"cannot parse cover {text!r}") from None
    return IndependenceCover(parts)
