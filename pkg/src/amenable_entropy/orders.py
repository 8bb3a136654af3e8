"""Invariant random orders restricted to finite windows.

Convention: ``R[i, j]`` is true iff element i precedes element j, and the past
of g is ``{h : h ≺ g}``.

The i.i.d.-uniform order is realised by a keyed pseudo-random function. For
master seed ``s``, sample index ``t`` and element ``g`` the label is::

    blake2b(digest_size=8, key=s.to_bytes(8, "little"),
            data=t.to_bytes(8, "little") + canonical_key(g))

read as an unsigned little-endian 64-bit integer (divide by 2**64 for a real in
[0, 1)). Elements are ranked by ``(label, canonical_key)``, so ties are broken
deterministically and the order is always total. One ``(s, t)`` pair labels the
whole group, so restrictions to different windows are consistent.
"""
from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import stats

from .groups import (
    LATTICE,
    GroupElement,
    GroupSpec,
    Window,
    canonical_key,
    decode_key,
    inverse,
    multiply,
    translate_right,
)

MAX_EXACT_EXTENSION = 12
_MASK64 = (1 << 64) - 1


class OrderError(ValueError):
    pass


def prf64(seed: int, index: int, key: bytes) -> int:
    h = hashlib.blake2b(
        index.to_bytes(8, "little") + key,
        digest_size=8,
        key=(seed & _MASK64).to_bytes(8, "little"),
    )
    return int.from_bytes(h.digest(), "little")


def prf_unit(seed: int, index: int, key: bytes) -> float:
    return prf64(seed, index, key) / 2.0**64


def derive_seed(seed: int, *words: int) -> int:
    data = b"".join((w & _MASK64).to_bytes(8, "little") for w in words)
    return prf64(seed, 0xD5EED, data)


@dataclass
class WindowOrder:
    window: Window
    relation: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.relation = np.asarray(self.relation, dtype=bool)
        n = len(self.window)
        if self.relation.shape != (n, n):
            raise OrderError(f"relation shape {self.relation.shape} does not match window size {n}")

    def precedes(self, g: GroupElement, h: GroupElement) -> bool:
        return bool(self.relation[self.window.position(g), self.window.position(h)])

    def pairs(self):
        i, j = np.nonzero(self.relation)
        return list(zip(i.tolist(), j.tolist()))

    @classmethod
    def from_sequence(cls, window: Window, sequence: Sequence[int], meta=None) -> "WindowOrder":
        """Total order listing window positions from smallest to largest."""
        pos = np.empty(len(window), dtype=np.int64)
        pos[np.asarray(sequence)] = np.arange(len(window))
        return cls(window, pos[:, None] < pos[None, :], dict(meta or {}))

    def sequence(self) -> list[int]:
        """Positions sorted by number of predecessors (the order itself when total)."""
        return list(np.argsort(self.relation.sum(axis=0), kind="stable"))


def validate(order: WindowOrder) -> tuple[bool, bool]:
    r = order.relation
    n = r.shape[0]
    irreflexive = not r.diagonal().any()
    antisymmetric = not (r & r.T).any()
    ri = r.astype(np.int64)
    transitive = not ((ri @ ri > 0) & ~r).any()
    is_partial = bool(irreflexive and antisymmetric and transitive)
    comparable = r | r.T | np.eye(n, dtype=bool)
    return is_partial, bool(is_partial and comparable.all())


def past_of(order: WindowOrder, g: GroupElement) -> frozenset:
    if g not in order.window:
        raise OrderError(f"{g!r} is not in the window")
    col = order.relation[:, order.window.position(g)]
    return frozenset(order.window.elements[i] for i in np.flatnonzero(col))


# ---------------------------------------------------------------------------
# order models


@dataclass(frozen=True)
class LexicographicZd:
    """Deterministic lexicographic order on Z^d."""

    deterministic = True

    def sample(self, window: Window, sample_index: int = 0) -> WindowOrder:
        if window.spec.family != LATTICE:
            raise OrderError("lexicographic order needs a lattice window")
        seq = sorted(range(len(window)), key=lambda i: window.elements[i].data)
        return WindowOrder.from_sequence(window, seq, {"model": "lexicographic"})

    def to_dict(self) -> dict:
        return {"kind": "lexicographic"}


@dataclass(frozen=True)
class SemigroupPast:
    """Order ``g ≺ h  ⇔  g h^{-1} ∈ S`` for a semigroup S.

    Two ways to give S: a nonzero linear functional on Z^d (``cone``),
    ``S = {v : φ(v) < 0}`` with lexicographic tie-break on the hyperplane
    ``φ = 0``; or explicit ``generators`` with membership decided by searching
    words of length at most ``radius``. Pairs whose membership is not found
    within the radius are left unrelated and counted in ``meta["unknown"]``.
    """

    cone: tuple[int, ...] | None = None
    generators: tuple[GroupElement, ...] | None = None
    radius: int = 6

    deterministic = True

    def __post_init__(self):
        if (self.cone is None) == (self.generators is None):
            raise OrderError("give exactly one of cone or generators")
        if self.cone is not None and not any(self.cone):
            raise OrderError("degenerate cone: zero functional")

    def _words(self) -> set:
        gens = list(self.generators)
        words = set(gens)
        frontier = set(gens)
        for _ in range(self.radius - 1):
            frontier = {multiply(w, s) for w in frontier for s in gens} - words
            words |= frontier
        return words

    def sample(self, window: Window, sample_index: int = 0) -> WindowOrder:
        n = len(window)
        rel = np.zeros((n, n), dtype=bool)
        meta = {"model": "semigroup"}
        if self.cone is not None:
            if window.spec.family != LATTICE or window.spec.dim != len(self.cone):
                raise OrderError("cone dimension does not match window")
            keys = [
                (sum(c * x for c, x in zip(self.cone, g.data)), g.data) for g in window.elements
            ]
            seq = sorted(range(n), key=lambda i: keys[i])
            return WindowOrder.from_sequence(window, seq, meta)
        words = self._words()
        unknown = 0
        for i, g in enumerate(window.elements):
            for j, h in enumerate(window.elements):
                if i == j:
                    continue
                if multiply(g, inverse(h)) in words:
                    rel[i, j] = True
                elif multiply(h, inverse(g)) not in words:
                    unknown += 1
        meta["unknown"] = unknown // 2
        return WindowOrder(window, rel, meta)

    def to_dict(self) -> dict:
        if self.cone is not None:
            return {"kind": "semigroup", "cone": list(self.cone)}
        return {
            "kind": "semigroup",
            "generators": [canonical_key(g).hex() for g in self.generators],
            "radius": self.radius,
        }


@dataclass(frozen=True)
class IidUniform:
    """Order induced by i.i.d. uniform labels on the whole group."""

    master_seed: int = 0

    deterministic = False

    def labels(self, window: Window, sample_index: int) -> list:
        out = []
        for g in window.elements:
            key = canonical_key(g)
            out.append((prf64(self.master_seed, sample_index, key), key))
        return out

    def sample(self, window: Window, sample_index: int = 0) -> WindowOrder:
        labels = self.labels(window, sample_index)
        seq = sorted(range(len(window)), key=labels.__getitem__)
        return WindowOrder.from_sequence(
            window, seq, {"model": "iid-uniform", "sample_index": sample_index}
        )

    def to_dict(self) -> dict:
        return {"kind": "iid-uniform", "seed": self.master_seed}


@dataclass(frozen=True)
class IntersectionOfUniform:
    """``g ≺ h`` iff ``g`` precedes ``h`` in each of k independent uniform orders."""

    k: int = 2
    master_seed: int = 0

    deterministic = False

    def sample(self, window: Window, sample_index: int = 0) -> WindowOrder:
        n = len(window)
        rel = np.ones((n, n), dtype=bool)
        for j in range(self.k):
            sub = IidUniform(derive_seed(self.master_seed, j))
            rel &= sub.sample(window, sample_index).relation
        return WindowOrder(window, rel, {"model": "intersection", "sample_index": sample_index})

    def to_dict(self) -> dict:
        return {"kind": "intersection", "k": self.k, "seed": self.master_seed}


def model_from_dict(d: dict, spec: GroupSpec | None = None):
    kind = d.get("kind")
    if kind == "lexicographic":
        return LexicographicZd()
    if kind == "iid-uniform":
        return IidUniform(int(d.get("seed", 0)))
    if kind == "intersection":
        return IntersectionOfUniform(int(d.get("k", 2)), int(d.get("seed", 0)))
    if kind == "semigroup":
        if "cone" in d:
            return SemigroupPast(cone=tuple(int(x) for x in d["cone"]))
        gens = tuple(decode_key(bytes.fromhex(x)) for x in d["generators"])
        return SemigroupPast(generators=gens, radius=int(d.get("radius", 6)))
    raise OrderError(f"unknown order model {kind!r}")


def sample_order(model, window: Window, sample_index: int = 0) -> WindowOrder:
    if len(window) == 0:
        raise OrderError("empty window")
    return model.sample(window, sample_index)


# ---------------------------------------------------------------------------
# linear extensions


def _pred_masks(order: WindowOrder) -> list[int]:
    r = order.relation
    return [sum(1 << i for i in np.flatnonzero(r[:, j]).tolist()) for j in range(r.shape[0])]


class LinearExtensionSampler:
    """Counts and uniformly samples linear extensions of a small partial order.

    ``ways[mask]`` is the number of ways to finish a linear extension once the
    downset ``mask`` has been placed.
    """

    def __init__(self, order: WindowOrder):
        is_partial, _ = validate(order)
        if not is_partial:
            raise OrderError("input relation is not a partial order")
        n = len(order.window)
        if n > MAX_EXACT_EXTENSION:
            raise OrderError(f"window of {n} elements too large for exact extension counting")
        self.order = order
        self.n = n
        self.pred = _pred_masks(order)
        self.ways = self._count()

    def _count(self) -> dict[int, int]:
        full = (1 << self.n) - 1
        ways = {full: 1}

        def f(mask: int) -> int:
            if mask in ways:
                return ways[mask]
            total = 0
            for j in range(self.n):
                if not mask >> j & 1 and self.pred[j] & ~mask == 0:
                    total += f(mask | 1 << j)
            ways[mask] = total
            return total

        f(0)
        return ways

    @property
    def count(self) -> int:
        return self.ways[0]

    def sample(self, rng: np.random.Generator) -> list[int]:
        mask, seq = 0, []
        for _ in range(self.n):
            choices, weights = [], []
            for j in range(self.n):
                if not mask >> j & 1 and self.pred[j] & ~mask == 0:
                    choices.append(j)
                    weights.append(self.ways[mask | 1 << j])
            r = int(rng.integers(self.ways[mask]))
            for j, w in zip(choices, weights):
                if r < w:
                    break
                r -= w
            seq.append(j)
            mask |= 1 << j
        return seq


def linear_extensions_count(order: WindowOrder) -> int:
    return LinearExtensionSampler(order).count


def _rng(seed: int, sample_index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed & _MASK64, sample_index]))


def extend_uniform(order: WindowOrder, sample_index: int = 0, seed: int = 0) -> WindowOrder:
    """Random linear extension of ``order``.

    Exactly uniform for windows up to ``MAX_EXACT_EXTENSION`` elements.
    Larger windows use a randomized topological sort (uniform choice among the
    current minimal elements), which is not uniform over extensions; the result
    then carries ``meta["uniform"] = False``.
    """
    rng = _rng(seed, sample_index)
    if len(order.window) <= MAX_EXACT_EXTENSION:
        seq = LinearExtensionSampler(order).sample(rng)
        return WindowOrder.from_sequence(order.window, seq, {"uniform": True})
    is_partial, _ = validate(order)
    if not is_partial:
        raise OrderError("input relation is not a partial order")
    r = order.relation
    indeg = r.sum(axis=0).astype(np.int64)
    placed = np.zeros(len(indeg), dtype=bool)
    seq = []
    for _ in range(len(indeg)):
        minimal = np.flatnonzero((indeg == 0) & ~placed)
        j = int(minimal[rng.integers(len(minimal))])
        seq.append(j)
        placed[j] = True
        indeg -= r[j].astype(np.int64)
    return WindowOrder.from_sequence(order.window, seq, {"uniform": False})


# ---------------------------------------------------------------------------
# invariance diagnostics


@dataclass
class InvarianceStatistic:
    freq_base: np.ndarray
    freq_shifted: np.ndarray
    max_divergence: float
    chi2: float
    dof: int
    p_value: float
    method: str


def invariance_statistic(
    model, window: Window, g: GroupElement, n_samples: int, pattern_limit: int = 5
) -> InvarianceStatistic:
    """Compare the law of the order on F with the law on F·g, pulled back to F.

    Base samples use indices ``0..n-1`` and translated samples ``n..2n-1`` so
    the two groups are independent. For windows of at most ``pattern_limit``
    elements the test is a chi-square homogeneity test on whole relation
    patterns; larger windows use per-pair tests combined by Bonferroni.
    """
    shifted = translate_right(window, g)
    n = len(window)
    base_idx = range(n_samples)
    shift_idx = range(n_samples, 2 * n_samples)
    rels_a, rels_b = [], []
    for t in base_idx:
        rels_a.append(model.sample(window, t).relation)
    for t in shift_idx:
        rels_b.append(model.sample(shifted, t).relation)
    freq_a = np.mean(rels_a, axis=0)
    freq_b = np.mean(rels_b, axis=0)
    div = float(np.abs(freq_a - freq_b).max()) if n > 1 else 0.0

    if n <= pattern_limit:
        ca: dict[bytes, int] = {}
        cb: dict[bytes, int] = {}
        for r in rels_a:
            k = np.packbits(r).tobytes()
            ca[k] = ca.get(k, 0) + 1
        for r in rels_b:
            k = np.packbits(r).tobytes()
            cb[k] = cb.get(k, 0) + 1
        keys = sorted(set(ca) | set(cb))
        if len(keys) < 2:
            return InvarianceStatistic(freq_a, freq_b, div, 0.0, 0, 1.0, "pattern")
        table = np.array([[ca.get(k, 0) for k in keys], [cb.get(k, 0) for k in keys]])
        chi2, p, dof, _ = stats.chi2_contingency(table, correction=False)
        return InvarianceStatistic(freq_a, freq_b, div, float(chi2), int(dof), float(p), "pattern")

    worst_p, worst_chi2, tests = 1.0, 0.0, 0
    ra, rb = np.array(rels_a), np.array(rels_b)
    for i in range(n):
        for j in range(i + 1, n):
            cats_a = [ra[:, i, j].sum(), ra[:, j, i].sum()]
            cats_b = [rb[:, i, j].sum(), rb[:, j, i].sum()]
            cats_a.append(n_samples - sum(cats_a))
            cats_b.append(n_samples - sum(cats_b))
            table = np.array([cats_a, cats_b])
            table = table[:, table.sum(axis=0) > 0]
            tests += 1
            if table.shape[1] < 2:
                continue
            chi2, p, _, _ = stats.chi2_contingency(table, correction=False)
            if p < worst_p:
                worst_p, worst_chi2 = p, chi2
    p_adj = min(1.0, worst_p * max(tests, 1))
    return InvarianceStatistic(freq_a, freq_b, div, float(worst_chi2), tests, p_adj, "pairwise-bonferroni")


# ---------------------------------------------------------------------------
# edge-list export

EDGE_LIST_HEADER = "# amenable-entropy window order v1"


def to_edge_list(order: WindowOrder) -> str:
    """Text dump: header, one ``element <pos> <key hex>`` line per element,
    then one ``edge <i> <j>`` line per related pair (i precedes j)."""
    lines = [EDGE_LIST_HEADER]
    for i, g in enumerate(order.window.elements):
        lines.append(f"element {i} {canonical_key(g).hex()}")
    for i, j in order.pairs():
        lines.append(f"edge {i} {j}")
    return "\n".join(lines) + "\n"


def from_edge_list(text: str) -> WindowOrder:
    lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
    if not lines or lines[0] != EDGE_LIST_HEADER:
        raise OrderError("missing edge-list header")
    elems, edges = [], []
    for ln in lines[1:]:
        kind, *rest = ln.split()
        if kind == "element":
            elems.append(decode_key(bytes.fromhex(rest[1])))
        elif kind == "edge":
            edges.append((int(rest[0]), int(rest[1])))
        else:
            raise OrderError(f"bad edge-list line: {ln!r}")
    window = Window(elems[0].spec, tuple(elems))
    rel = np.zeros((len(elems), len(elems)), dtype=bool)
    for i, j in edges:
        rel[i, j] = True
    return WindowOrder(window, rel)
