"""Symbolic processes with exact finite-coordinate marginals.

The partition being measured is "symbol at a site", so the law of the pattern
on a finite set of sites is a finite table. Sites on Z are plain ints; sites on
other groups are :class:`GroupElement`. Every table coordinate carries a layer
tag: ``"X"`` for the process itself and ``"Y"`` for a factor image.
"""
from __future__ import annotations

import hashlib
import itertools
import json
import math
import struct
import threading
from dataclasses import dataclass, field
from functools import cached_property, lru_cache
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
from scipy.sparse.csgraph import connected_components

from .groups import (
    BudgetExceeded,
    GroupElement,
    GroupSpec,
    Window,
    canonical_key,
    decode_key,
)

DEFAULT_PATTERN_BUDGET = 10**6
PROB_TOL = 1e-12

X, Y = "X", "Y"


class ProcessError(ValueError):
    """Invalid process or factor description; ``field`` names the culprit."""

    def __init__(self, message: str, field: str = ""):
        super().__init__(f"{field}: {message}" if field else message)
        self.field = field


def _check_prob(p: np.ndarray, field: str):
    if (p < 0).any():
        raise ProcessError("negative probability", field)
    if abs(p.sum() - 1.0) > PROB_TOL:
        raise ProcessError(f"probabilities sum to {p.sum():.12g}, not 1", field)


def _xlogx_sum(p: np.ndarray) -> float:
    p = p[p > 0]
    return float(-(p * np.log(p)).sum())


def stationary_distribution(P) -> np.ndarray:
    P = np.asarray(P, dtype=float)
    m = P.shape[0]
    if P.ndim != 2 or P.shape != (m, m):
        raise ProcessError("transition matrix must be square", "P")
    for i, row in enumerate(P):
        _check_prob(row, f"P[{i}]")
    n_comp, _ = connected_components(P > 0, directed=True, connection="strong")
    if n_comp != 1:
        raise ProcessError("transition matrix is reducible", "P")
    A = P.T - np.eye(m)
    A[-1, :] = 1.0
    b = np.zeros(m)
    b[-1] = 1.0
    pi = np.linalg.solve(A, b)
    # one step of iterative refinement
    r = b - A @ pi
    pi += np.linalg.solve(A, r)
    pi = np.clip(pi, 0.0, None)
    return pi / pi.sum()


# ---------------------------------------------------------------------------
# factors


@dataclass(frozen=True)
class SiteMap:
    """Symbol-by-symbol recoding ``y_g = table[x_g]``."""

    table: tuple[int, ...]

    radius = 0

    def __post_init__(self):
        object.__setattr__(self, "table", tuple(int(v) for v in self.table))
        if any(v < 0 for v in self.table):
            raise ProcessError("negative output symbol", "factor.table")

    @property
    def out_size(self) -> int:
        return max(self.table) + 1

    def to_dict(self) -> dict:
        return {"kind": "site-map", "table": list(self.table)}


@dataclass(frozen=True)
class BlockCodeZ:
    """Sliding block code on Z: ``y_c = table[code(x_{c-r}, ..., x_{c+r})]``.

    ``code`` reads the neighbourhood as a base-``m`` number, leftmost site most
    significant.
    """

    radius: int
    alphabet: int
    table: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "table", tuple(int(v) for v in self.table))
        if len(self.table) != self.alphabet ** (2 * self.radius + 1):
            raise ProcessError(
                f"block table needs {self.alphabet ** (2 * self.radius + 1)} entries",
                "factor.table",
            )

    @classmethod
    def from_rule(cls, radius: int, alphabet: int, rule) -> "BlockCodeZ":
        table = [rule(w) for w in itertools.product(range(alphabet), repeat=2 * radius + 1)]
        return cls(radius, alphabet, tuple(table))

    @classmethod
    def majority(cls, radius: int = 1) -> "BlockCodeZ":
        return cls.from_rule(radius, 2, lambda w: int(2 * sum(w) > len(w)))

    @property
    def out_size(self) -> int:
        return max(self.table) + 1

    def to_dict(self) -> dict:
        return {
            "kind": "block-code",
            "radius": self.radius,
            "alphabet": self.alphabet,
            "table": list(self.table),
        }


def factor_from_dict(d: dict):
    kind = d.get("kind")
    if kind == "site-map":
        return SiteMap(tuple(d["table"]))
    if kind == "block-code":
        if d.get("rule") == "majority":
            return BlockCodeZ.majority(int(d.get("radius", 1)))
        return BlockCodeZ(int(d["radius"]), int(d["alphabet"]), tuple(d["table"]))
    raise ProcessError(f"unknown factor kind {kind!r}", "factor.kind")


# ---------------------------------------------------------------------------
# processes


def _as_tuple(x) -> tuple:
    return tuple(float(v) for v in x)


@dataclass(frozen=True)
class Bernoulli:
    p: tuple[float, ...]
    group: GroupSpec = field(default_factory=GroupSpec.lattice)

    def __post_init__(self):
        object.__setattr__(self, "p", _as_tuple(self.p))
        _check_prob(np.array(self.p), "process.p")

    @property
    def alphabet(self) -> int:
        return len(self.p)

    @property
    def on_z(self) -> bool:
        return self.group == GroupSpec.lattice(1)

    def to_dict(self) -> dict:
        return {"kind": "bernoulli", "p": list(self.p), "group": self.group.to_dict()}


@dataclass(frozen=True)
class MarkovZ:
    """Markov chain on Z; stationary unless ``initial`` (law at site 0) is given."""

    P: tuple[tuple[float, ...], ...]
    initial: tuple[float, ...] | None = None

    group = GroupSpec.lattice(1)
    on_z = True

    def __post_init__(self):
        object.__setattr__(self, "P", tuple(_as_tuple(r) for r in self.P))
        if self.initial is not None:
            object.__setattr__(self, "initial", _as_tuple(self.initial))
            _check_prob(np.array(self.initial), "process.initial")
        try:
            self.stationary
        except ProcessError as e:
            raise ProcessError(str(e).split(": ", 1)[-1], "process." + e.field) from None

    @cached_property
    def matrix(self) -> np.ndarray:
        return np.array(self.P)

    @cached_property
    def stationary(self) -> np.ndarray:
        return stationary_distribution(self.matrix)

    @property
    def alphabet(self) -> int:
        return len(self.P)

    def power(self, k: int) -> np.ndarray:
        return _matrix_power(self.P, k)

    def law_at(self, c: int) -> np.ndarray:
        if self.initial is None:
            return self.stationary
        if c < 0:
            raise ProcessError("non-stationary chain is only defined on sites >= 0", "coords")
        return np.array(self.initial) @ self.power(c)

    def to_dict(self) -> dict:
        return {
            "kind": "markov",
            "P": [list(r) for r in self.P],
            "initial": None if self.initial is None else list(self.initial),
        }


@lru_cache(maxsize=4096)
def _matrix_power(P: tuple, k: int) -> np.ndarray:
    return np.linalg.matrix_power(np.array(P), k)


@dataclass(frozen=True)
class PeriodicZ:
    """``x_n = word[(n + phase) mod len(word)]`` with a uniform random phase."""

    word: str

    group = GroupSpec.lattice(1)
    on_z = True

    def __post_init__(self):
        if not self.word:
            raise ProcessError("empty word", "process.word")

    @cached_property
    def symbols(self) -> tuple[str, ...]:
        return tuple(sorted(set(self.word)))

    @cached_property
    def codes(self) -> tuple[int, ...]:
        return tuple(self.symbols.index(ch) for ch in self.word)

    @property
    def alphabet(self) -> int:
        return len(self.symbols)

    def to_dict(self) -> dict:
        return {"kind": "periodic", "word": self.word}


@dataclass(frozen=True)
class Factored:
    """A process together with a factor map; the Y layer is the factor image."""

    base: object
    factor: object

    def __post_init__(self):
        if isinstance(self.base, Factored):
            raise ProcessError("nested factors are not supported", "process.base")
        if isinstance(self.factor, SiteMap) and len(self.factor.table) != self.base.alphabet:
            raise ProcessError(
                f"site map covers {len(self.factor.table)} symbols, base has {self.base.alphabet}",
                "factor.table",
            )
        if isinstance(self.factor, BlockCodeZ):
            if not self.base.on_z:
                raise ProcessError("block codes need a process on Z", "factor")
            if self.factor.alphabet != self.base.alphabet:
                raise ProcessError("block code alphabet does not match base", "factor.alphabet")

    @property
    def group(self) -> GroupSpec:
        return self.base.group

    @property
    def on_z(self) -> bool:
        return self.base.on_z

    @property
    def alphabet(self) -> int:
        return self.base.alphabet

    def to_dict(self) -> dict:
        return {"kind": "factored", "base": self.base.to_dict(), "factor": self.factor.to_dict()}


def process_from_dict(d: dict):
    kind = d.get("kind")
    try:
        if kind == "bernoulli":
            group = GroupSpec.from_dict(d["group"]) if "group" in d else GroupSpec.lattice(1)
            return Bernoulli(tuple(d["p"]), group)
        if kind == "markov":
            return MarkovZ(tuple(tuple(r) for r in d["P"]), d.get("initial"))
        if kind == "periodic":
            return PeriodicZ(str(d["word"]))
        if kind == "factored":
            return Factored(process_from_dict(d["base"]), factor_from_dict(d["factor"]))
    except KeyError as e:
        raise ProcessError(f"missing key {e.args[0]!r}", "process") from None
    raise ProcessError(f"unknown process kind {kind!r}", "process.kind")


def process_digest(process) -> str:
    blob = json.dumps(process.to_dict(), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()


def base_of(process):
    return process.base if isinstance(process, Factored) else process


def site(process, c):
    """Normalise a site: ints on Z, group elements elsewhere."""
    if process.on_z:
        if isinstance(c, GroupElement):
            if c.spec != GroupSpec.lattice(1):
                raise ProcessError(f"site {c!r} is not in Z", "coords")
            return c.data[0]
        return int(c)
    if not isinstance(c, GroupElement) or c.spec != process.group:
        raise ProcessError(f"site {c!r} is not an element of {process.group}", "coords")
    return c


def window_sites(process, window: Window) -> list:
    return [site(process, g) for g in window]


# ---------------------------------------------------------------------------
# joint distributions


@dataclass
class JointDistribution:
    """Sparse law of a finite pattern.

    ``coords[i]`` is ``(site, layer)`` for column i of ``patterns``; rows of
    ``patterns`` are distinct and ``probs`` holds their masses.
    """

    coords: tuple
    patterns: np.ndarray
    probs: np.ndarray

    def __post_init__(self):
        self.coords = tuple(self.coords)
        self.patterns = np.asarray(self.patterns, dtype=np.int64).reshape(len(self.probs), len(self.coords))
        self.probs = np.asarray(self.probs, dtype=float)

    def validate(self, tol: float = 1e-10):
        if (self.probs < 0).any():
            raise ProcessError("negative mass in joint table")
        if abs(self.probs.sum() - 1.0) > tol:
            raise ProcessError(f"joint table sums to {self.probs.sum()}")
        if len(set(self.coords)) != len(self.coords):
            raise ProcessError("duplicate coordinates in joint table")

    def columns(self, coords: Iterable) -> list[int]:
        lookup = {c: i for i, c in enumerate(self.coords)}
        try:
            return [lookup[c] for c in coords]
        except KeyError as e:
            raise ProcessError(f"coordinate {e.args[0]!r} not in joint table", "coords") from None

    def marginal(self, coords: Sequence) -> "JointDistribution":
        cols = self.columns(coords)
        if not cols:
            return JointDistribution((), np.zeros((1, 0), dtype=np.int64), np.array([self.probs.sum()]))
        uniq, inv = _unique_rows(self.patterns[:, cols])
        return JointDistribution(tuple(coords), uniq, np.bincount(inv, weights=self.probs))

    def entropy(self, coords: Sequence | None = None) -> float:
        if coords is None:
            probs = self._merged_probs()
        else:
            probs = self.marginal(coords).probs
        return _xlogx_sum(probs)

    def _merged_probs(self) -> np.ndarray:
        if len(self.probs) <= 1:
            return self.probs
        _, inv = _unique_rows(self.patterns)
        return np.bincount(inv, weights=self.probs)

    def as_dict(self) -> dict:
        return {tuple(int(v) for v in row): float(p) for row, p in zip(self.patterns, self.probs)}


def _unique_rows(rows: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Sorted distinct rows and the inverse index; same result as np.unique(axis=0)."""
    if rows.shape[0] == 0 or rows.shape[1] == 0 or rows.min() < 0:
        uniq, inv = np.unique(rows, axis=0, return_inverse=True)
        return uniq, inv.ravel()
    radix = int(rows.max()) + 1
    if rows.shape[1] * math.log2(radix) >= 62:
        uniq, inv = np.unique(rows, axis=0, return_inverse=True)
        return uniq, inv.ravel()
    # mixed-radix code preserves lexicographic row order
    code = np.zeros(rows.shape[0], dtype=np.int64)
    for j in range(rows.shape[1]):
        code = code * radix + rows[:, j]
    _, first, inv = np.unique(code, return_index=True, return_inverse=True)
    return rows[first], inv.ravel()


def _dedupe(patterns: np.ndarray, probs: np.ndarray, coords) -> JointDistribution:
    uniq, inv = _unique_rows(np.asarray(patterns, dtype=np.int64))
    return JointDistribution(coords, uniq, np.bincount(inv, weights=probs))


def _product_patterns(m: int, k: int) -> np.ndarray:
    if k == 0:
        return np.zeros((1, 0), dtype=np.int64)
    grids = np.indices((m,) * k).reshape(k, -1).T
    return grids.astype(np.int64)


def _base_joint(process, sites: list, budget: int) -> JointDistribution:
    """Exact law of the X pattern on distinct ``sites`` (in the given order)."""
    m, k = process.alphabet, len(sites)
    if m**k > budget:
        raise BudgetExceeded(f"pattern table {m}^{k} exceeds budget {budget}")
    coords = tuple((s, X) for s in sites)
    if isinstance(process, Bernoulli):
        pats = _product_patterns(m, k)
        p = np.array(process.p)
        probs = np.prod(p[pats], axis=1) if k else np.ones(1)
        return JointDistribution(coords, pats, probs)
    if isinstance(process, PeriodicZ):
        per = len(process.codes)
        codes = np.array(process.codes)
        pats = np.array([[codes[(s + ph) % per] for s in sites] for ph in range(per)]).reshape(per, k)
        return _dedupe(pats, np.full(per, 1.0 / per), coords)
    if isinstance(process, MarkovZ):
        order = sorted(range(k), key=lambda i: sites[i])
        ordered = [sites[i] for i in order]
        if k == 0:
            return JointDistribution((), np.zeros((1, 0)), np.ones(1))
        pats = np.arange(m).reshape(m, 1)
        probs = process.law_at(ordered[0]).copy()
        for prev, cur in zip(ordered, ordered[1:]):
            T = process.power(cur - prev)
            last = pats[:, -1]
            probs = (probs[:, None] * T[last, :]).ravel()
            pats = np.hstack([np.repeat(pats, m, axis=0), np.tile(np.arange(m), len(last))[:, None]])
        keep = probs > 0
        pats, probs = pats[keep], probs[keep]
        inv = np.argsort(order)
        return JointDistribution(coords, pats[:, inv], probs)
    raise ProcessError(f"no exact marginals for {type(process).__name__}")


def push_forward_factor(
    joint: JointDistribution, factor, y_sites: Sequence, keep_x: Sequence | None = None
) -> JointDistribution:
    """Add factor-image columns for ``y_sites`` and keep the X columns ``keep_x``.

    Masses of X patterns mapping to the same mixed pattern are summed.
    """
    x_lookup = {c[0]: i for i, c in enumerate(joint.coords) if c[1] == X}
    table = np.array(factor.table)
    y_cols = []
    for s in y_sites:
        if isinstance(factor, SiteMap):
            if s not in x_lookup:
                raise ProcessError(f"site {s!r} missing for site map", "coords")
            y_cols.append(table[joint.patterns[:, x_lookup[s]]])
        else:
            r, m = factor.radius, factor.alphabet
            code = np.zeros(len(joint.probs), dtype=np.int64)
            for off in range(-r, r + 1):
                if s + off not in x_lookup:
                    raise ProcessError(f"block code needs site {s + off} for output at {s}", "coords")
                code = code * m + joint.patterns[:, x_lookup[s + off]]
            y_cols.append(table[code])
    keep_x = list(x_lookup) if keep_x is None else list(keep_x)
    x_part = joint.patterns[:, [x_lookup[s] for s in keep_x]]
    pats = np.hstack([x_part] + [c[:, None] for c in y_cols]) if y_cols else x_part
    coords = tuple((s, X) for s in keep_x) + tuple((s, Y) for s in y_sites)
    return _dedupe(pats.reshape(len(joint.probs), len(coords)), joint.probs, coords)


def _normalise_coords(process, coords) -> list[tuple]:
    out = []
    for c in coords:
        if isinstance(c, tuple) and len(c) == 2 and c[1] in (X, Y):
            out.append((site(process, c[0]), c[1]))
        else:
            out.append((site(process, c), X))
    if len(set(out)) != len(out):
        raise ProcessError("duplicate coordinates", "coords")
    return out


def exact_joint(
    process,
    coords: Sequence,
    *,
    budget: int = DEFAULT_PATTERN_BUDGET,
    cache: "MarginalCache | None" = None,
) -> JointDistribution:
    """Exact law of the pattern on ``coords``.

    ``coords`` items are sites (X layer) or ``(site, "X"|"Y")`` pairs. Y
    coordinates require a :class:`Factored` process.
    """
    coords = _normalise_coords(process, coords)
    cache = cache if cache is not None else _default_cache
    if cache is not None:
        hit = cache.get(process, coords)
        if hit is not None:
            return hit
    base = base_of(process)
    if not isinstance(base, Bernoulli) and not base.on_z:
        raise ProcessError("unsupported process/group pair", "process")
    x_sites = [s for s, layer in coords if layer == X]
    y_sites = [s for s, layer in coords if layer == Y]
    if y_sites and not isinstance(process, Factored):
        raise ProcessError("Y coordinates need a factored process", "coords")
    if not y_sites:
        joint = _base_joint(base, x_sites, budget)
    else:
        needed = list(dict.fromkeys(x_sites))
        r = process.factor.radius
        for s in y_sites:
            for off in range(-r, r + 1):
                t = s + off if r else s
                if t not in needed:
                    needed.append(t)
        full = _base_joint(base, needed, budget)
        joint = push_forward_factor(full, process.factor, y_sites, keep_x=x_sites)
        joint = joint.marginal(coords)
    joint = JointDistribution(tuple(coords), joint.patterns, joint.probs)
    if cache is not None:
        cache.put(process, coords, joint)
    return joint


# ---------------------------------------------------------------------------
# pattern entropies with structural shortcuts


def _bernoulli_site_entropies(process) -> tuple[float, float]:
    base = base_of(process)
    p = np.array(base.p)
    hx = _xlogx_sum(p)
    if isinstance(process, Factored):
        q = np.bincount(np.array(process.factor.table), weights=p)
        return hx, _xlogx_sum(q)
    return hx, 0.0


def _markov_path_entropy(chain: MarkovZ, sites: Sequence[int]) -> float:
    ordered = sorted(set(sites))
    if not ordered:
        return 0.0
    law = chain.law_at(ordered[0])
    h = _xlogx_sum(law)
    for prev, cur in zip(ordered, ordered[1:]):
        T = chain.power(cur - prev)
        h += float(sum(law[a] * _xlogx_sum(T[a]) for a in range(chain.alphabet) if law[a] > 0))
        law = law @ T
    return h


def pattern_entropy(
    process,
    x_sites: Iterable = (),
    y_sites: Iterable = (),
    *,
    budget: int = DEFAULT_PATTERN_BUDGET,
    cache: "MarginalCache | None" = None,
) -> float:
    """Shannon entropy (nats) of the joint pattern on X sites and Y sites.

    Product measures (optionally with a site map) and unfactored Markov chains
    use closed forms; everything else goes through :func:`exact_joint`.
    """
    xs = list(dict.fromkeys(site(process, s) for s in x_sites))
    ys = list(dict.fromkeys(site(process, s) for s in y_sites))
    base = base_of(process)
    if isinstance(base, Bernoulli) and not isinstance(getattr(process, "factor", None), BlockCodeZ):
        hx, hy = _bernoulli_site_entropies(process)
        xset = set(xs)
        return hx * len(xset) + hy * sum(1 for s in ys if s not in xset)
    if isinstance(process, MarkovZ) and not ys:
        return _markov_path_entropy(process, xs)
    coords = [(s, X) for s in xs] + [(s, Y) for s in ys]
    return exact_joint(process, coords, budget=budget, cache=cache).entropy()


# ---------------------------------------------------------------------------
# sampling


def sample_windows(process, window: Window | Sequence, n: int, seed) -> np.ndarray:
    """``n`` independent configurations on ``window``, shape ``(n, |window|)``.

    For a factored process the returned symbols are the factor image (Y layer).
    """
    sites = window_sites(process, window) if isinstance(window, Window) else [site(process, s) for s in window]
    rng = np.random.default_rng(seed)
    base = base_of(process)
    if isinstance(process, Factored):
        r = process.factor.radius
        if isinstance(process.factor, BlockCodeZ):
            ext = sorted({s + off for s in sites for off in range(-r, r + 1)})
        else:
            ext = list(dict.fromkeys(sites))
        xs = _sample_base(base, ext, n, rng)
        pos = {s: i for i, s in enumerate(ext)}
        table = np.array(process.factor.table)
        out = np.empty((n, len(sites)), dtype=np.int64)
        for j, s in enumerate(sites):
            if isinstance(process.factor, SiteMap):
                out[:, j] = table[xs[:, pos[s]]]
            else:
                code = np.zeros(n, dtype=np.int64)
                for off in range(-r, r + 1):
                    code = code * process.factor.alphabet + xs[:, pos[s + off]]
                out[:, j] = table[code]
        return out
    return _sample_base(base, sites, n, rng)


def _sample_base(process, sites: list, n: int, rng: np.random.Generator) -> np.ndarray:
    k = len(sites)
    if isinstance(process, Bernoulli):
        return rng.choice(process.alphabet, size=(n, k), p=np.array(process.p))
    if not process.on_z:
        raise ProcessError("unsupported process for sampling")
    if k == 0:
        return np.zeros((n, 0), dtype=np.int64)
    lo, hi = min(sites), max(sites)
    if isinstance(process, PeriodicZ):
        codes = np.array(process.codes)
        phase = rng.integers(len(codes), size=n)
        idx = (np.array(sites)[None, :] + phase[:, None]) % len(codes)
        return codes[idx]
    if isinstance(process, MarkovZ):
        span = hi - lo + 1
        if span * n > 10**8:
            raise BudgetExceeded("Markov sample path too long")
        cum = np.cumsum(process.matrix, axis=1)
        path = np.empty((n, span), dtype=np.int64)
        path[:, 0] = rng.choice(process.alphabet, size=n, p=process.law_at(lo))
        u = rng.random((n, span))
        for t in range(1, span):
            rows = cum[path[:, t - 1]]
            path[:, t] = np.minimum((u[:, t, None] > rows).sum(axis=1), process.alphabet - 1)
        return path[:, [s - lo for s in sites]]
    raise ProcessError(f"cannot sample {type(process).__name__}")


def sample_window(process, window: Window | Sequence, seed) -> np.ndarray:
    """One configuration on ``window``, deterministic given ``seed``."""
    return sample_windows(process, window, 1, seed)[0]


# ---------------------------------------------------------------------------
# persistent marginal cache

CACHE_MAGIC = b"AEMC"
CACHE_VERSION = 1


def _coord_descriptor(coords) -> str:
    def enc(s):
        return canonical_key(s).hex() if isinstance(s, GroupElement) else int(s)

    return json.dumps([[enc(s), layer] for s, layer in coords], separators=(",", ":"))


class MarginalCache:
    """Content-addressed store of exact joint tables.

    File ``<sha256>.bin`` (little-endian)::

        4s   magic "AEMC"
        H    format version (1)
        H    reserved (0)
        I    k, number of columns
        Q    N, number of rows
        I    length L of the coordinate descriptor
        L    UTF-8 JSON coordinate descriptor [[site, layer], ...]
        N*k  int32 pattern entries, row-major
        N    float64 probabilities

    The digest is ``sha256(process digest + ":" + descriptor)``. Lattice
    Z^1 sites are stored as ints, other sites as canonical-key hex.
    """

    def __init__(self, directory: str | Path | None = None):
        self.directory = Path(directory) if directory else None
        if self.directory:
            self.directory.mkdir(parents=True, exist_ok=True)
        self._mem: dict[str, JointDistribution] = {}
        self._lock = threading.Lock()

    @staticmethod
    def key(process, coords) -> str:
        blob = process_digest(process) + ":" + _coord_descriptor(coords)
        return hashlib.sha256(blob.encode()).hexdigest()

    def get(self, process, coords) -> JointDistribution | None:
        k = self.key(process, coords)
        with self._lock:
            hit = self._mem.get(k)
        if hit is not None or self.directory is None:
            return hit
        path = self.directory / f"{k}.bin"
        if not path.exists():
            return None
        joint = read_cache_file(path, coords)
        with self._lock:
            self._mem.setdefault(k, joint)
        return joint

    def put(self, process, coords, joint: JointDistribution):
        k = self.key(process, coords)
        with self._lock:
            self._mem.setdefault(k, joint)
        if self.directory is not None:
            path = self.directory / f"{k}.bin"
            if not path.exists():
                tmp = path.with_suffix(f".{threading.get_ident()}.tmp")
                tmp.write_bytes(encode_cache_blob(coords, joint))
                tmp.replace(path)


_default_cache: MarginalCache | None = None


def set_default_cache(cache: MarginalCache | None):
    """Cache used by :func:`exact_joint` when none is passed explicitly."""
    global _default_cache
    _default_cache = cache


def encode_cache_blob(coords, joint: JointDistribution) -> bytes:
    desc = _coord_descriptor(coords).encode()
    n, k = joint.patterns.shape
    head = struct.pack("<4sHHIQI", CACHE_MAGIC, CACHE_VERSION, 0, k, n, len(desc))
    return (
        head
        + desc
        + joint.patterns.astype("<i4").tobytes()
        + joint.probs.astype("<f8").tobytes()
    )


def read_cache_file(path: Path, coords=None) -> JointDistribution:
    blob = Path(path).read_bytes()
    size = struct.calcsize("<4sHHIQI")
    magic, version, _, k, n, dlen = struct.unpack_from("<4sHHIQI", blob)
    if magic != CACHE_MAGIC or version != CACHE_VERSION:
        raise ProcessError(f"bad cache file header in {path}")
    desc = json.loads(blob[size : size + dlen])
    off = size + dlen
    pats = np.frombuffer(blob, dtype="<i4", count=n * k, offset=off).reshape(n, k).astype(np.int64)
    probs = np.frombuffer(blob, dtype="<f8", count=n, offset=off + 4 * n * k).copy()
    if coords is None:
        coords = [
            (decode_key(bytes.fromhex(s)) if isinstance(s, str) else s, layer) for s, layer in desc
        ]
    return JointDistribution(tuple(coords), pats, probs)
