"""Hypergraphs, tree decompositions and width measures.

Widths use the bag-size convention: a decomposition's width is the largest
bag cost, with no "-1" offset, so a single edge has treewidth 2.
"""
from __future__ import annotations

import itertools
from collections.abc import Callable, Iterable
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

from .errors import PreconditionError, ThresholdExceeded
from .relstruct import Structure

TW_THRESHOLD = 14
F_THRESHOLD = 10


@dataclass(frozen=True)
class Hypergraph:
    vertices: frozenset
    edges: frozenset

    def __init__(self, vertices: Iterable = (), edges: Iterable = ()):
        edges = frozenset(frozenset(e) for e in edges)
        if any(not e for e in edges):
            raise PreconditionError("hypergraph edges must be nonempty")
        vertices = frozenset(vertices) | frozenset().union(*edges)
        object.__setattr__(self, "vertices", vertices)
        object.__setattr__(self, "edges", edges)

    def __repr__(self):
        es = sorted(sorted(e) for e in self.edges)
        return f"Hypergraph(V={sorted(self.vertices)}, E={es})"

    def without_edge(self, edge) -> Hypergraph:
        return Hypergraph(self.vertices, self.edges - {frozenset(edge)})

    def primal_neighbours(self) -> dict:
        nb = {v: set() for v in self.vertices}
        for e in self.edges:
            for v in e:
                nb[v] |= e
        for v in nb:
            nb[v].discard(v)
        return nb


def hypergraph_of(x):
    """Hypergraph of a structure or CQ; a tuple of them for a UCQ or OMQ."""
    from .chase import OMQ
    from .query import CQ, UCQ

    if isinstance(x, OMQ):
        x = x.query
    if isinstance(x, UCQ):
        return tuple(hypergraph_of(d) for d in x)
    if isinstance(x, CQ):
        x = x.canonical_db()
    if isinstance(x, Structure):
        return Hypergraph(x.domain, (f.terms for f in x.facts))
    raise TypeError(f"no hypergraph for {type(x).__name__}")


@dataclass
class TreeDecomposition:
    bags: dict  # node -> frozenset
    parent: dict  # node -> node or None
    root: object

    @property
    def nodes(self):
        return list(self.bags)

    def children(self, node):
        return [n for n, p in self.parent.items() if p == node]

    def edges(self):
        return [(p, n) for n, p in self.parent.items() if p is not None]

    def width(self, cost=len):
        return max((cost(b) for b in self.bags.values()), default=0)

    def __repr__(self):
        return f"TreeDecomposition(root={self.root!r}, bags={len(self.bags)})"


@dataclass
class TDValidation:
    valid: bool
    violations: list = field(default_factory=list)

    def __bool__(self):
        return self.valid


def validate_tree_decomposition(h: Hypergraph, td: TreeDecomposition) -> TDValidation:
    """Check the tree shape and the three decomposition conditions, with witnesses."""
    violations = []
    nodes = set(td.bags)
    roots = [n for n in nodes if td.parent.get(n) is None]
    if td.root not in nodes or roots != [td.root]:
        violations.append(("not-a-tree", f"roots {sorted(map(str, roots))}"))
    for n in sorted(nodes, key=str):
        seen = set()
        cur = n
        while cur is not None:
            if cur in seen or cur not in nodes:
                violations.append(("not-a-tree", f"node {n} does not reach the root"))
                break
            seen.add(cur)
            cur = td.parent.get(cur)
    if violations:
        return TDValidation(False, violations)
    covered = frozenset().union(*td.bags.values()) if td.bags else frozenset()
    for v in sorted(h.vertices - covered, key=str):
        violations.append(("missing-vertex", v))
    for e in sorted(h.edges, key=lambda e: sorted(e)):
        if not any(e <= b for b in td.bags.values()):
            violations.append(("uncovered-edge", tuple(sorted(e))))
    for v in sorted(h.vertices & covered, key=str):
        holding = {n for n, b in td.bags.items() if v in b}
        # connected iff exactly one holding node has its parent outside the set
        tops = [n for n in holding if td.parent.get(n) not in holding]
        if len(tops) > 1:
            violations.append(("disconnected-vertex", v))
    return TDValidation(not violations, violations)


# ---------------------------------------------------------------------------
# exact search over elimination orderings


def _eliminate(vertices, nb, order):
    """Bags of the decomposition induced by an elimination ordering."""
    adj = {v: set(nb[v]) for v in vertices}
    bags = []
    for v in order:
        later = adj[v]
        bags.append(frozenset(later | {v}))
        for a in later:
            adj[a] |= later - {a}
            adj[a].discard(v)
        del adj[v]
    return bags


def decomposition_from_ordering(h: Hypergraph, order: list) -> TreeDecomposition:
    if set(order) != set(h.vertices) or len(order) != len(h.vertices):
        raise PreconditionError("ordering must list every vertex once")
    if not order:
        return TreeDecomposition({0: frozenset()}, {0: None}, 0)
    bags = _eliminate(h.vertices, h.primal_neighbours(), order)
    pos = {v: i for i, v in enumerate(order)}
    parent = {}
    tops = []
    for i, bag in enumerate(bags):
        rest = [pos[u] for u in bag if pos[u] != i]
        if rest:
            parent[i] = min(rest)
        else:
            tops.append(i)
    # join the components into one tree; their bags are disjoint
    root = tops[-1]
    for t in tops:
        parent[t] = None if t == root else root
    return TreeDecomposition(dict(enumerate(bags)), parent, root)


def _best_ordering(h: Hypergraph, cost: Callable, threshold: int):
    verts = sorted(h.vertices, key=str)
    n = len(verts)
    if n > threshold:
        raise ThresholdExceeded(f"{n} vertices exceeds the exact-search threshold {threshold}")
    nbmask = [0] * n
    idx = {v: i for i, v in enumerate(verts)}
    nb = h.primal_neighbours()
    for v in verts:
        for u in nb[v]:
            nbmask[idx[v]] |= 1 << idx[u]

    def q(s, v):
        # vertices outside s+v reachable from v through s
        seen = 1 << v
        stack = [v]
        out = 0
        while stack:
            x = stack.pop()
            m = nbmask[x] & ~seen
            seen |= m
            while m:
                low = m & -m
                y = low.bit_length() - 1
                m ^= low
                if s >> y & 1:
                    stack.append(y)
                else:
                    out |= low
        return out

    cost_cache = {}

    def bag_cost(mask):
        c = cost_cache.get(mask)
        if c is None:
            c = cost(frozenset(verts[i] for i in range(n) if mask >> i & 1))
            cost_cache[mask] = c
        return c

    best = {0: 0}
    choice = {}
    for size in range(1, n + 1):
        for combo in itertools.combinations(range(n), size):
            s = 0
            for i in combo:
                s |= 1 << i
            b, c = None, None
            for v in combo:
                rest = s & ~(1 << v)
                val = max(best[rest], bag_cost(q(rest, v) | 1 << v))
                if b is None or val < b:
                    b, c = val, v
            best[s] = b
            choice[s] = c
    order = []
    s = (1 << n) - 1
    while s:
        v = choice[s]
        order.append(verts[v])
        s &= ~(1 << v)
    order.reverse()
    return best[(1 << n) - 1] if n else 0, order


def min_width(h: Hypergraph, cost: Callable, threshold: int = TW_THRESHOLD):
    """Minimum over decompositions of the largest bag cost, for a monotone cost."""
    value, order = _best_ordering(h, cost, threshold)
    td = decomposition_from_ordering(h, order)
    return value, td


def treewidth_exact(h: Hypergraph, threshold: int = TW_THRESHOLD) -> tuple[int, TreeDecomposition]:
    return min_width(h, len, threshold)


# ---------------------------------------------------------------------------
# bag cost functions


class CostFunction:
    """A set function on a finite ground set with rational values."""

    def __init__(self, ground: Iterable, evaluator: Callable, tag: str):
        self.ground = frozenset(ground)
        self._eval = evaluator
        self.tag = tag
        self._cache = {}

    def __call__(self, xs) -> Fraction:
        xs = frozenset(xs)
        v = self._cache.get(xs)
        if v is None:
            if not xs <= self.ground:
                raise PreconditionError(f"{sorted(xs - self.ground)} outside the ground set")
            v = Fraction(self._eval(xs))
            self._cache[xs] = v
        return v

    def __repr__(self):
        return f"CostFunction({self.tag})"

    def restricted(self, ground) -> CostFunction:
        return CostFunction(ground, self._eval, self.tag)

    @classmethod
    def half_cardinality(cls, ground):
        return cls(ground, lambda xs: Fraction(len(xs), 2), "half-cardinality")

    @classmethod
    def cardinality(cls, ground):
        return cls(ground, len, "cardinality")

    @classmethod
    def zero(cls, ground):
        return cls(ground, lambda xs: 0, "zero")

    @classmethod
    def table(cls, ground, values: dict, tag="table"):
        values = {frozenset(k): Fraction(v) for k, v in values.items()}
        ground = frozenset(ground)
        if len(ground) > F_THRESHOLD:
            raise ThresholdExceeded(f"explicit tables are limited to {F_THRESHOLD} elements")

        def ev(xs):
            if xs not in values:
                raise PreconditionError(f"table has no entry for {sorted(xs)}")
            return values[xs]

        return cls(ground, ev, tag)


@dataclass(frozen=True)
class CostReport:
    monotone: bool
    submodular: bool
    edge_dominated: bool
    zero_at_empty: bool

    @property
    def valid(self) -> bool:
        return self.monotone and self.submodular and self.zero_at_empty


def _subsets(ground):
    items = sorted(ground, key=str)
    for k in range(len(items) + 1):
        for c in itertools.combinations(items, k):
            yield frozenset(c)


def validate_cost_function(f: CostFunction, h: Hypergraph) -> CostReport:
    """Exhaustive check of monotonicity, submodularity and edge domination.

    Submodularity is checked in its local form f(X+a) + f(X+b) >= f(X) + f(X+a+b),
    which is equivalent to the pairwise inequality on a finite lattice.
    """
    if f.ground != h.vertices:
        raise PreconditionError("cost function ground set differs from the hypergraph vertices")
    if len(f.ground) > F_THRESHOLD:
        raise ThresholdExceeded(f"ground set larger than {F_THRESHOLD}")
    zero = f(frozenset()) == 0
    monotone = True
    submodular = True
    nonneg = True
    for xs in _subsets(f.ground):
        fx = f(xs)
        if fx < 0:
            nonneg = False
        outside = sorted(f.ground - xs, key=str)
        for a in outside:
            if f(xs | {a}) < fx:
                monotone = False
        for a, b in itertools.combinations(outside, 2):
            if f(xs | {a}) + f(xs | {b}) < fx + f(xs | {a, b}):
                submodular = False
    edge_dom = all(f(e) <= 1 for e in h.edges)
    return CostReport(monotone and nonneg, submodular, edge_dom, zero)


def f_width(h: Hypergraph, f: CostFunction, validate: bool = True, threshold: int = F_THRESHOLD):
    if len(h.vertices) > threshold:
        raise ThresholdExceeded(f"{len(h.vertices)} vertices exceeds the f-width threshold {threshold}")
    if validate:
        rep = validate_cost_function(f, h)
        if not rep.valid:
            raise PreconditionError(f"cost function {f.tag} is not a valid monotone submodular function: {rep}")
    return min_width(h, f, threshold)


def edge_cover_number(h: Hypergraph) -> Callable:
    """The integral edge-cover number of vertex sets, as a memoized function."""
    edges = sorted((tuple(sorted(e, key=str)) for e in h.edges))
    edges = [frozenset(e) for e in edges]

    @lru_cache(maxsize=None)
    def rho(xs: frozenset) -> int:
        if not xs:
            return 0
        useful = [e for e in edges if e & xs]
        if not useful or not frozenset().union(*useful) >= xs:
            raise PreconditionError(f"vertices {sorted(xs)} are not covered by edges")
        for k in range(1, len(useful) + 1):
            for combo in itertools.combinations(useful, k):
                if frozenset().union(*combo) >= xs:
                    return k
        raise AssertionError("unreachable")

    return rho


@dataclass
class WidthBracket:
    lower: Fraction
    lower_witness: str
    lower_decomposition: TreeDecomposition | None
    upper: Fraction
    upper_decomposition: TreeDecomposition
    method: str = "integral-edge-cover"
    rejected: list = field(default_factory=list)


def smw_bracket(h: Hypergraph, candidates: Iterable[CostFunction] = (), threshold: int = F_THRESHOLD) -> WidthBracket:
    """Lower bound from validated edge-dominated candidates, upper bound from edge covers."""
    rho = edge_cover_number(h)
    upper, upper_td = min_width(h, rho, max(threshold, TW_THRESHOLD))
    lower, witness, lower_td = Fraction(0), "none", None
    rejected = []
    for f in candidates:
        rep = validate_cost_function(f, h)
        if not (rep.valid and rep.edge_dominated):
            rejected.append((f.tag, rep))
            continue
        w, td = f_width(h, f, validate=False, threshold=threshold)
        if witness == "none" or w > lower:
            lower, witness, lower_td = w, f.tag, td
    if lower > upper:
        raise AssertionError("bracket inverted: lower bound exceeds upper bound")
    return WidthBracket(Fraction(lower), witness, lower_td, Fraction(upper), upper_td, rejected=rejected)


def max_over(hs, fn):
    """Apply ``fn`` to one hypergraph or to each of a tuple, returning the max value."""
    if isinstance(hs, Hypergraph):
        return fn(hs)[0]
    return max(fn(h)[0] for h in hs)
