"""Exact arithmetic and Følner windows for three amenable groups.

Supported families:

* ``IntegerLattice(d)``: Z^d under vector addition.
* ``Heisenberg``: integer triples with ``(a,b,c)(a',b',c') = (a+a', b+b', c+c'+ab')``,
  i.e. upper unitriangular 3x3 integer matrices.
* ``Lamplighter``: pairs ``(lamps, cursor)`` with a finite set of lit lamps.
  The product is ``(L,k)(M,j) = ((L+j) Δ M, k+j)``, where ``L+j`` shifts every
  lamp by ``j``. Under this convention left multiplication by the cursor
  generator only moves the cursor and left multiplication by the toggle flips
  the lamp under the cursor, so the boxes ``{L ⊆ [-n,n], k ∈ [-n,n]}`` form a
  left Følner sequence.

Canonical keys
--------------
``canonical_key`` encodes an element as bytes::

    tag byte            0x01 lattice, 0x02 Heisenberg, 0x03 lamplighter
    fields              each integer as <len:1 byte><big-endian two's complement,
                        minimal length>

Field order: lattice ``d, x_1..x_d``; Heisenberg ``a, b, c``; lamplighter
``cursor, #lamps, lamps ascending``. ``decode_key`` inverts the encoding.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterable, Sequence

LATTICE = "lattice"
HEISENBERG = "heisenberg"
LAMPLIGHTER = "lamplighter"

_TAGS = {LATTICE: 0x01, HEISENBERG: 0x02, LAMPLIGHTER: 0x03}
_FAMILIES = {v: k for k, v in _TAGS.items()}

DEFAULT_ELEMENT_BUDGET = 10**6


class GroupError(ValueError):
    pass


class BudgetExceeded(RuntimeError):
    """Raised when a requested object would exceed a configured size budget."""


@dataclass(frozen=True)
class GroupSpec:
    family: str
    dim: int = 1

    def __post_init__(self):
        if self.family not in _TAGS:
            raise GroupError(f"unknown group family {self.family!r}")
        if self.family == LATTICE and self.dim < 1:
            raise GroupError("IntegerLattice needs d >= 1")
        if self.family != LATTICE and self.dim != 1:
            object.__setattr__(self, "dim", 1)

    @classmethod
    def lattice(cls, d: int = 1) -> "GroupSpec":
        return cls(LATTICE, d)

    @classmethod
    def heisenberg(cls) -> "GroupSpec":
        return cls(HEISENBERG)

    @classmethod
    def lamplighter(cls) -> "GroupSpec":
        return cls(LAMPLIGHTER)

    def identity(self) -> "GroupElement":
        if self.family == LATTICE:
            return GroupElement(self, (0,) * self.dim)
        if self.family == HEISENBERG:
            return GroupElement(self, (0, 0, 0))
        return GroupElement(self, ((), 0))

    def element(self, *args) -> "GroupElement":
        """Build an element from family-specific coordinates.

        Lattice: ``element(x1, ..., xd)``; Heisenberg: ``element(a, b, c)``;
        lamplighter: ``element(lamps, cursor)`` with ``lamps`` any iterable.
        """
        if self.family == LATTICE:
            if len(args) == 1 and isinstance(args[0], (tuple, list)):
                args = tuple(args[0])
            if len(args) != self.dim:
                raise GroupError(f"expected {self.dim} coordinates, got {len(args)}")
            return GroupElement(self, tuple(int(x) for x in args))
        if self.family == HEISENBERG:
            if len(args) != 3:
                raise GroupError("Heisenberg elements are triples (a, b, c)")
            return GroupElement(self, tuple(int(x) for x in args))
        lamps, cursor = args
        return GroupElement(self, (tuple(sorted(set(int(x) for x in lamps))), int(cursor)))

    def generators(self) -> list["GroupElement"]:
        """A symmetric-free generating set (inverses not included)."""
        if self.family == LATTICE:
            return [
                self.element(*(1 if i == j else 0 for j in range(self.dim)))
                for i in range(self.dim)
            ]
        if self.family == HEISENBERG:
            return [self.element(1, 0, 0), self.element(0, 1, 0), self.element(0, 0, 1)]
        return [self.element((0,), 0), self.element((), 1)]

    def to_dict(self) -> dict:
        if self.family == LATTICE:
            return {"family": self.family, "dim": self.dim}
        return {"family": self.family}

    @classmethod
    def from_dict(cls, d: dict) -> "GroupSpec":
        return cls(d["family"], int(d.get("dim", 1)))


@dataclass(frozen=True)
class GroupElement:
    spec: GroupSpec
    data: tuple

    def __mul__(self, other: "GroupElement") -> "GroupElement":
        return multiply(self, other)

    def __repr__(self) -> str:
        if self.spec.family == LAMPLIGHTER:
            lamps, k = self.data
            return f"({set(lamps) or '{}'}, {k})"
        return repr(self.data if len(self.data) > 1 else self.data[0])


def _check_same(g: GroupElement, h: GroupElement):
    if g.spec != h.spec:
        raise GroupError(f"mixed group families: {g.spec} vs {h.spec}")


def multiply(g: GroupElement, h: GroupElement) -> GroupElement:
    _check_same(g, h)
    fam = g.spec.family
    if fam == LATTICE:
        return GroupElement(g.spec, tuple(x + y for x, y in zip(g.data, h.data)))
    if fam == HEISENBERG:
        a, b, c = g.data
        a2, b2, c2 = h.data
        return GroupElement(g.spec, (a + a2, b + b2, c + c2 + a * b2))
    (lamps, k), (lamps2, j) = g.data, h.data
    shifted = {x + j for x in lamps}
    return GroupElement(g.spec, (tuple(sorted(shifted.symmetric_difference(lamps2))), k + j))


def inverse(g: GroupElement) -> GroupElement:
    fam = g.spec.family
    if fam == LATTICE:
        return GroupElement(g.spec, tuple(-x for x in g.data))
    if fam == HEISENBERG:
        a, b, c = g.data
        return GroupElement(g.spec, (-a, -b, a * b - c))
    lamps, k = g.data
    return GroupElement(g.spec, (tuple(x - k for x in lamps), -k))


def _encode_int(x: int) -> bytes:
    n = max(1, (x.bit_length() + 8) // 8)
    body = x.to_bytes(n, "big", signed=True)
    # strip redundant sign bytes to keep the encoding minimal
    while len(body) > 1 and (
        (body[0] == 0x00 and body[1] < 0x80) or (body[0] == 0xFF and body[1] >= 0x80)
    ):
        body = body[1:]
    return bytes([len(body)]) + body


def _decode_ints(buf: bytes) -> list[int]:
    out, i = [], 0
    while i < len(buf):
        n = buf[i]
        out.append(int.from_bytes(buf[i + 1 : i + 1 + n], "big", signed=True))
        i += 1 + n
    return out


def canonical_key(g: GroupElement) -> bytes:
    fam = g.spec.family
    if fam == LATTICE:
        fields = [g.spec.dim, *g.data]
    elif fam == HEISENBERG:
        fields = list(g.data)
    else:
        lamps, k = g.data
        fields = [k, len(lamps), *lamps]
    return bytes([_TAGS[fam]]) + b"".join(_encode_int(x) for x in fields)


def decode_key(key: bytes) -> GroupElement:
    fam = _FAMILIES.get(key[0])
    if fam is None:
        raise GroupError(f"unknown family tag {key[0]:#x}")
    ints = _decode_ints(key[1:])
    if fam == LATTICE:
        d, *xs = ints
        return GroupElement(GroupSpec(LATTICE, d), tuple(xs))
    if fam == HEISENBERG:
        return GroupElement(GroupSpec(HEISENBERG), tuple(ints))
    k, count, *lamps = ints
    if count != len(lamps):
        raise GroupError("corrupt lamplighter key")
    return GroupElement(GroupSpec(LAMPLIGHTER), (tuple(lamps), k))


@dataclass(frozen=True)
class Window:
    """A finite subset of a group with a fixed enumeration."""

    spec: GroupSpec
    elements: tuple[GroupElement, ...]
    index: dict = field(compare=False, repr=False, hash=False, default=None)

    def __post_init__(self):
        idx = {}
        for i, g in enumerate(self.elements):
            if g.spec != self.spec:
                raise GroupError("window element from a different group")
            if g in idx:
                raise GroupError(f"duplicate window element {g!r}")
            idx[g] = i
        object.__setattr__(self, "index", idx)

    @classmethod
    def of(cls, spec: GroupSpec, elements: Iterable[GroupElement]) -> "Window":
        return cls(spec, tuple(elements))

    def __len__(self) -> int:
        return len(self.elements)

    def __iter__(self):
        return iter(self.elements)

    def __contains__(self, g) -> bool:
        return g in self.index

    def position(self, g: GroupElement) -> int:
        return self.index[g]

    def element_set(self) -> frozenset:
        return frozenset(self.elements)


def interval(lo: int, hi: int) -> Window:
    """The Z^1 window {lo, ..., hi} in increasing order."""
    spec = GroupSpec.lattice(1)
    return Window(spec, tuple(GroupElement(spec, (x,)) for x in range(lo, hi + 1)))


def folner_window(
    spec: GroupSpec,
    n: int,
    *,
    centered: bool = False,
    budget: int = DEFAULT_ELEMENT_BUDGET,
) -> Window:
    """The n-th member of the standard Følner sequence of ``spec``.

    Lattice windows are the box ``[0,n)^d``, or ``[-n,n]^d`` with
    ``centered=True``. Heisenberg: ``|a|,|b| <= n, |c| <= n**2``.
    Lamplighter: lamps inside ``[-n,n]`` and cursor in ``[-n,n]``.
    """
    if n < 1:
        raise GroupError("Følner index must be >= 1")
    fam = spec.family
    if fam == LATTICE:
        side = 2 * n + 1 if centered else n
        size = side**spec.dim
    elif fam == HEISENBERG:
        size = (2 * n + 1) ** 2 * (2 * n * n + 1)
    else:
        size = 2 ** (2 * n + 1) * (2 * n + 1)
    if size > budget:
        raise BudgetExceeded(f"window of {size} elements exceeds budget {budget}")

    if fam == LATTICE:
        rng = range(-n, n + 1) if centered else range(n)
        elems = [GroupElement(spec, p) for p in itertools.product(rng, repeat=spec.dim)]
    elif fam == HEISENBERG:
        r, rc = range(-n, n + 1), range(-n * n, n * n + 1)
        elems = [GroupElement(spec, p) for p in itertools.product(r, r, rc)]
    else:
        sites = range(-n, n + 1)
        elems = []
        for k in sites:
            for mask in range(2 ** len(sites)):
                lamps = tuple(s for i, s in enumerate(sites) if mask >> i & 1)
                elems.append(GroupElement(spec, (lamps, k)))
    return Window(spec, tuple(elems))


def left_translate(window: Window, g: GroupElement) -> frozenset:
    return frozenset(multiply(g, f) for f in window)


def boundary_ratio(window: Window, g: GroupElement) -> float:
    """Symmetric-difference ratio ``|gF Δ F| / |F|``.

    The one-sided ratio ``|gF \\ F|/|F|`` is half of this for finite F, so both
    tend to zero together.
    """
    gf = left_translate(window, g)
    return len(gf.symmetric_difference(window.element_set())) / len(window)


def d_interior(window: Window, d_set: Sequence[GroupElement]) -> tuple[frozenset, frozenset]:
    """Split F into (interior, boundary) with boundary ``{g in F : D ⊄ F g^-1}``.

    ``d ∈ F g^{-1}`` iff ``d g ∈ F``.
    """
    members = window.element_set()
    boundary = frozenset(g for g in window if any(multiply(d, g) not in members for d in d_set))
    return members - boundary, boundary


def translate_right(window: Window, g: GroupElement) -> Window:
    return Window(window.spec, tuple(multiply(f, g) for f in window))


def ball(spec: GroupSpec, radius: int, gens: Sequence[GroupElement] | None = None) -> set:
    """Word-metric ball of the given radius (generators and their inverses)."""
    gens = list(gens) if gens is not None else spec.generators()
    steps = gens + [inverse(s) for s in gens]
    seen = {spec.identity()}
    frontier = set(seen)
    for _ in range(radius):
        frontier = {multiply(g, s) for g in frontier for s in steps} - seen
        seen |= frontier
    return seen


def folner_boundary_ratio(spec: GroupSpec, n: int, g: GroupElement, *, centered: bool = False) -> float:
    """``boundary_ratio(folner_window(spec, n), g)`` without materialising large boxes.

    For the lamplighter box, ``(M,j)·(L,k) = ((M+k) Δ L, j+k)`` lies in the box
    iff ``M+k ⊆ [-n,n]`` and ``j+k ∈ [-n,n]``; the lamp configuration L plays
    no role, so counting cursors is exact. Other families are enumerated.
    """
    if spec.family != LAMPLIGHTER:
        return boundary_ratio(folner_window(spec, n, centered=centered), g)
    lamps, j = g.data
    cursors = range(-n, n + 1)
    leaving = sum(
        1
        for k in cursors
        if not (-n <= j + k <= n and all(-n <= x + k <= n for x in lamps))
    )
    # |gF \ F| = |F \ gF| for finite F, and each cursor carries 2^(2n+1) lamp sets
    return 2 * leaving / len(cursors)
