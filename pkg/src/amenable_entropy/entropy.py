"""Entropy functionals: Shannon and conditional entropy, Følner rates,
chain-rule decompositions, random-past (Kieffer-Pinsker) estimators, Rokhlin
distance, Abramov-Rokhlin residuals and predictability profiles.

All values are in nats.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Sequence

import numpy as np

from .groups import LATTICE, GroupSpec, Window, folner_window, interval
from .orders import WindowOrder, validate
from .systems import (
    DEFAULT_PATTERN_BUDGET,
    X,
    Y,
    BlockCodeZ,
    Factored,
    JointDistribution,
    MarkovZ,
    SiteMap,
    _dedupe,
    pattern_entropy,
    sample_windows,
    site,
    window_sites,
)

EXACT, MONTE_CARLO, EMPIRICAL = "exact", "monte-carlo", "empirical"
_NEG_TOL = 1e-12


class EntropyError(ValueError):
    pass


def _clip(v: float) -> float:
    # differences of equal entropies can land a few ulps below zero
    return 0.0 if -_NEG_TOL < v < 0.0 else v


@dataclass(frozen=True)
class EntropyEstimate:
    value: float
    stderr: float = 0.0
    n_orders: int = 1
    mode: str = EXACT

    def __post_init__(self):
        if self.value < 0 or self.stderr < 0:
            raise EntropyError(f"negative entropy estimate {self.value} ± {self.stderr}")


@dataclass
class ConvergenceTable:
    rows: list[tuple[int, EntropyEstimate]] = field(default_factory=list)
    meta: dict = field(default_factory=dict)

    def add(self, key: int, est: EntropyEstimate):
        if self.rows and key <= self.rows[-1][0]:
            raise EntropyError("convergence table keys must be strictly increasing")
        self.rows.append((key, est))

    @property
    def keys(self) -> list[int]:
        return [k for k, _ in self.rows]

    @property
    def values(self) -> list[float]:
        return [e.value for _, e in self.rows]

    @property
    def nonincreasing(self) -> bool:
        v = self.values
        return all(b <= a + 1e-12 for a, b in zip(v, v[1:]))

    @property
    def strictly_decreasing(self) -> bool:
        v = self.values
        return all(b < a for a, b in zip(v, v[1:]))

    def records(self) -> list[dict]:
        return [
            {
                "key": k,
                "value_nats": e.value,
                "stderr": e.stderr,
                "n_orders": e.n_orders,
                "mode": e.mode,
            }
            for k, e in self.rows
        ]

    def to_csv(self) -> str:
        lines = ["key,value_nats,stderr,n_orders,mode"]
        for r in self.records():
            lines.append(f"{r['key']},{r['value_nats']!r},{r['stderr']!r},{r['n_orders']},{r['mode']}")
        return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Shannon entropy


def shannon(dist) -> float:
    p = np.asarray(dist, dtype=float)
    if (p < 0).any():
        raise EntropyError("negative probability mass")
    if abs(p.sum() - 1.0) > 1e-10:
        raise EntropyError(f"distribution sums to {p.sum()}")
    p = p[p > 0]
    return float(-(p * np.log(p)).sum())


def cond_entropy(joint: JointDistribution, targets: Sequence, givens: Sequence = ()) -> float:
    """H(targets | givens) = H(targets ∪ givens) - H(givens)."""
    targets, givens = list(targets), list(givens)
    if set(targets) & set(givens):
        raise EntropyError("targets and givens overlap")
    joint.columns(targets + givens)
    return _clip(joint.entropy(targets + givens) - joint.entropy(givens))


@lru_cache(maxsize=1 << 16)
def _cond_cached(process, targets: tuple, givens_x: tuple, givens_y: tuple, budget: int) -> float:
    both = pattern_entropy(process, targets + givens_x, givens_y, budget=budget)
    given = pattern_entropy(process, givens_x, givens_y, budget=budget)
    return _clip(both - given)


def process_cond_entropy(
    process, targets, givens_x=(), givens_y=(), *, budget: int = DEFAULT_PATTERN_BUDGET
) -> float:
    """H(X_targets | X_givens_x, Y_givens_y) for a process, exactly."""
    norm = lambda xs: tuple(sorted(dict.fromkeys(site(process, s) for s in xs), key=_site_key))
    return _cond_cached(process, norm(targets), norm(givens_x), norm(givens_y), budget)


def _site_key(s):
    return (0, s, b"") if isinstance(s, int) else (1, 0, repr(s.data))


# ---------------------------------------------------------------------------
# windows


@lru_cache(maxsize=256)
def standard_window(group: GroupSpec, n: int, *, centered: bool = False) -> Window:
    """F_n for the group: [0,n) (or [-n,n]) on Z^d, the standard boxes elsewhere."""
    if group.family == LATTICE and group.dim == 1:
        return interval(-n, n) if centered else interval(0, n - 1)
    return folner_window(group, n, centered=centered)


@lru_cache(maxsize=256)
def past_window(group: GroupSpec, D: int) -> Window:
    """Centered window W_D ∪ {identity}; identity is the last element."""
    ident = group.identity()
    if D == 0:
        return Window(group, (ident,))
    w = standard_window(group, D, centered=True)
    return Window(group, tuple(g for g in w if g != ident) + (ident,))


def _with_factor(process, factor):
    if factor is None:
        return process
    if isinstance(process, Factored):
        raise EntropyError("process already carries a factor")
    return Factored(process, factor)


# ---------------------------------------------------------------------------
# Følner entropy rates


def _plugin_entropy(samples: np.ndarray, bias_correction: str = "none") -> tuple[float, float, int]:
    _, counts = np.unique(samples, axis=0, return_counts=True)
    n = counts.sum()
    p = counts / n
    h = float(-(p * np.log(p)).sum())
    var = max(float((p * np.log(p) ** 2).sum()) - h * h, 0.0) / n
    if bias_correction == "miller-madow":
        h += (len(counts) - 1) / (2 * n)
    elif bias_correction != "none":
        raise EntropyError(f"unknown bias correction {bias_correction!r}")
    return h, math.sqrt(var), len(counts)


def folner_entropy_rate(
    process,
    n_list: Sequence[int],
    factor=None,
    *,
    centered: bool = False,
    mode: str = EXACT,
    n_samples: int = 10**5,
    seed: int = 0,
    budget: int = DEFAULT_PATTERN_BUDGET,
) -> ConvergenceTable:
    """Rows ``H(X^{F_n} | Y^{F_n}) / |F_n|`` (unconditional without a factor)."""
    proc = _with_factor(process, factor)
    table = ConvergenceTable(meta={"centered": centered})
    for n in n_list:
        window = standard_window(proc.group, n, centered=centered)
        sites = window_sites(proc, window)
        if mode == EXACT:
            if isinstance(proc, Factored):
                h = pattern_entropy(proc, sites, sites, budget=budget) - pattern_entropy(
                    proc, (), sites, budget=budget
                )
            else:
                h = pattern_entropy(proc, sites, budget=budget)
            table.add(n, EntropyEstimate(_clip(h) / len(window), 0.0, 1, EXACT))
        elif mode == EMPIRICAL:
            if isinstance(proc, Factored):
                raise EntropyError("empirical mode does not support factors")
            samples = sample_windows(proc, window, n_samples, [seed, n])
            h, se, _ = _plugin_entropy(samples)
            table.add(n, EntropyEstimate(h / len(window), se / len(window), n_samples, EMPIRICAL))
        else:
            raise EntropyError(f"unknown mode {mode!r}")
    return table


# ---------------------------------------------------------------------------
# chain rule


@dataclass
class ChainRuleResult:
    elements: list
    terms: list[float]
    total: float
    joint_value: float

    @property
    def gap(self) -> float:
        return abs(self.total - self.joint_value)


def chain_rule_decomposition(
    process, window: Window, order: WindowOrder, factor=None, *, budget: int = DEFAULT_PATTERN_BUDGET
) -> ChainRuleResult:
    """Terms ``H(X_g | X_{F ∩ Past(g)}, Y^F)`` listed along the order.

    ``joint_value`` is ``H(X^F | Y^F)`` computed directly, for comparison with
    ``total``.
    """
    proc = _with_factor(process, factor)
    if order.window != window:
        raise EntropyError("order is defined on a different window")
    if not validate(order)[1]:
        raise EntropyError("chain rule needs a total order")
    sites = window_sites(proc, window)
    ys = sites if isinstance(proc, Factored) else []
    seq = order.sequence()
    terms, past = [], []
    for i in seq:
        terms.append(process_cond_entropy(proc, [sites[i]], past, ys, budget=budget))
        past.append(sites[i])
    joint_value = _clip(
        pattern_entropy(proc, sites, ys, budget=budget) - pattern_entropy(proc, (), ys, budget=budget)
    )
    return ChainRuleResult([window.elements[i] for i in seq], terms, math.fsum(terms), joint_value)


# ---------------------------------------------------------------------------
# random-past estimators


def conditional_on_past(process, model, D: int, sample_index: int = 0, *, budget=DEFAULT_PATTERN_BUDGET) -> float:
    """``H(X_1 | X_{Past(1) ∩ W_D}, Y_{W_D ∪ {1}})`` for one sampled order."""
    window = past_window(process.group, D)
    ident = window.elements[-1]
    order = model.sample(window, sample_index)
    col = order.relation[:, len(window) - 1]
    past = [window.elements[i] for i in np.flatnonzero(col)]
    ys = list(window) if isinstance(process, Factored) else []
    return process_cond_entropy(process, [ident], past, ys, budget=budget)


def kieffer_pinsker_estimate(
    process,
    model,
    D: int,
    n_orders: int = 1,
    factor=None,
    *,
    threads: int = 1,
    budget: int = DEFAULT_PATTERN_BUDGET,
) -> EntropyEstimate:
    """Mean over sampled orders of the identity symbol's entropy given its
    truncated past (and the factor on the window).

    Sample ``t`` uses order sample index ``t``; results are combined in index
    order, so the estimate does not depend on ``threads``.
    """
    proc = _with_factor(process, factor)
    if getattr(model, "deterministic", False):
        return EntropyEstimate(conditional_on_past(proc, model, D, 0, budget=budget), 0.0, 1, EXACT)
    if n_orders < 1:
        raise EntropyError("need at least one order sample")

    def one(t: int) -> float:
        return conditional_on_past(proc, model, D, t, budget=budget)

    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            vals = list(pool.map(one, range(n_orders)))
    else:
        vals = [one(t) for t in range(n_orders)]
    arr = np.array(vals)
    mean = math.fsum(vals) / n_orders
    se = float(arr.std(ddof=1) / math.sqrt(n_orders)) if n_orders > 1 else 0.0
    return EntropyEstimate(_clip(mean), se, n_orders, MONTE_CARLO)


def _markov_neighbour_entropy(chain: MarkovZ, left: int | None, right: int | None) -> float:
    """H(X_0 | X_{-left}, X_{right}); ``None`` means that side is unrevealed."""
    pi = chain.stationary
    if left is None and right is None:
        return shannon(pi)
    L = chain.power(left) if left is not None else None
    R = chain.power(right) if right is not None else None
    if right is None:
        # joint (a, x) = pi_a L[a, x]
        pj = pi[:, None] * L
        return _clip(_h(pj) - _h(pj.sum(axis=1)))
    if left is None:
        pj = pi[:, None] * R
        return _clip(_h(pj) - _h(pj.sum(axis=0)))
    pj = pi[:, None, None] * L[:, :, None] * R[None, :, :]
    return _clip(_h(pj) - _h(pj.sum(axis=1)))


def _h(p: np.ndarray) -> float:
    p = p[p > 0]
    return float(-(p * np.log(p)).sum())


def markov_kp_uniform_exact(chain: MarkovZ, D: int, nodes: int = 64, self_check: bool = True) -> float:
    """Exact expectation, over the i.i.d.-uniform order, of
    ``H(X_0 | X_{Past(0) ∩ [-D, D]})`` for a stationary first-order chain.

    Given the identity's label ``t`` every other site is in the past
    independently with probability ``t``. For a first-order chain only the
    nearest revealed site on each side matters; the nearest one on the left is
    at distance ``i`` with probability ``(1-t)^(i-1) t`` (``i <= D``), and absent
    with probability ``(1-t)^D``. The ``t``-integral is done by Gauss-Legendre
    quadrature; ``self_check`` reruns it with twice the nodes and requires
    agreement to 1e-10.
    """
    if isinstance(chain, Factored) or not isinstance(chain, MarkovZ):
        raise EntropyError("markov_kp_uniform_exact needs an unfactored MarkovZ chain")
    if chain.initial is not None:
        raise EntropyError("markov_kp_uniform_exact needs a stationary chain")
    sides = [None] + list(range(1, D + 1))
    H = np.array([[_markov_neighbour_entropy(chain, l, r) for r in sides] for l in sides])

    def integrate(k: int) -> float:
        x, w = np.polynomial.legendre.leggauss(k)
        t = 0.5 * (x + 1.0)
        w = 0.5 * w
        # weight of "nearest revealed at distance i" for each node
        wt = np.empty((len(sides), k))
        wt[0] = (1 - t) ** D
        for i in range(1, D + 1):
            wt[i] = (1 - t) ** (i - 1) * t
        return float(np.einsum("k,lk,rk,lr->", w, wt, wt, H))

    val = integrate(nodes)
    if self_check:
        check = integrate(2 * nodes)
        if abs(check - val) > 1e-10:
            raise EntropyError(f"quadrature not converged: {val} vs {check}")
    return val


# ---------------------------------------------------------------------------
# Rokhlin distance and Abramov-Rokhlin


def rokhlin_distance(joint: JointDistribution, alpha: Sequence, beta: Sequence) -> float:
    """d(α, β) = H(α|β) + H(β|α) for two coordinate groups of one joint table."""
    joint.validate()
    alpha, beta = list(alpha), list(beta)
    if set(alpha) == set(beta):
        return 0.0
    h_ab = joint.entropy(list(dict.fromkeys(alpha + beta)))
    return _clip(2 * h_ab - joint.entropy(alpha) - joint.entropy(beta))


def abramov_rokhlin_residual(
    process, factor, n_list: Sequence[int], *, diagnostic: bool = False, budget=DEFAULT_PATTERN_BUDGET
) -> ConvergenceTable:
    """Rows ``[H(X^F) - H(Y^F) - H(X^F | Y^F)] / |F|`` on F_n = [0, n) (or the group's box).

    Values are reported as ``|R_n|`` in ``value_nats``; the signed residuals are
    in ``meta["signed"]``. Block codes give boundary terms, so they are only
    accepted with ``diagnostic=True`` (flagged in ``meta``).
    """
    if isinstance(factor, BlockCodeZ) and not diagnostic:
        raise EntropyError("block-code factors are only accepted in diagnostic mode")
    if not isinstance(factor, (SiteMap, BlockCodeZ)):
        raise EntropyError("unsupported factor")
    proc = Factored(process, factor)
    table = ConvergenceTable(meta={"diagnostic": diagnostic, "signed": []})
    for n in n_list:
        sites = window_sites(proc, standard_window(proc.group, n))
        hx = pattern_entropy(proc, sites, budget=budget)
        hy = pattern_entropy(proc, (), sites, budget=budget)
        hxy = pattern_entropy(proc, sites, sites, budget=budget)
        r = (hx - hy - (hxy - hy)) / len(sites)
        table.meta["signed"].append(r)
        table.add(n, EntropyEstimate(abs(r), 0.0, 1, EXACT))
    return table


def predictability_profile(
    process,
    model,
    factor,
    D_list: Sequence[int],
    *,
    n_orders: int = 1,
    eps: float = 1e-6,
    threads: int = 1,
    budget=DEFAULT_PATTERN_BUDGET,
) -> tuple[ConvergenceTable, str]:
    """Rows ``H(X_1 | X_{Past ∩ W_D}, Y_{W_D ∪ {1}})`` per D, and a verdict.

    The verdict is ``"predictable"`` when the last row is below ``eps``.
    """
    table = ConvergenceTable(meta={"eps": eps})
    for D in D_list:
        table.add(D, kieffer_pinsker_estimate(process, model, D, n_orders, factor, threads=threads, budget=budget))
    verdict = "predictable" if table.rows and table.values[-1] < eps else "not predictable"
    return table, verdict


# ---------------------------------------------------------------------------
# empirical mode


def empirical_joint(
    process, window, n_samples: int, seed, bias_correction: str = "none"
) -> tuple[JointDistribution, float]:
    """Plug-in pattern law from ``n_samples`` independent window draws, and its entropy.

    ``"miller-madow"`` adds ``(k - 1) / (2N)`` with k the observed support size.
    """
    if n_samples <= 0:
        raise EntropyError("n_samples must be positive")
    sites = window_sites(process, window) if isinstance(window, Window) else [site(process, s) for s in window]
    samples = sample_windows(process, sites, n_samples, seed)
    layer = Y if isinstance(process, Factored) else X
    joint = _dedupe(samples, np.full(n_samples, 1.0 / n_samples), tuple((s, layer) for s in sites))
    h, _, _ = _plugin_entropy(samples, bias_correction)
    return joint, h
