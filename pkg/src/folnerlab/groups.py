"""Discrete group backends with exact arithmetic and declared enumerations.

Three infinite amenable unimodular backends are provided:

* ``z1`` .. ``z4`` -- the free abelian groups Z^d, elements are integer
  d-tuples under componentwise addition.
* ``heisenberg``  -- the integer Heisenberg group H3(Z): triples (x, y, z)
  with (x,y,z)*(x',y',z') = (x+x', y+y', z+z'+x*y').  This is the group of
  upper unitriangular 3x3 integer matrices in coordinates.
* ``lamplighter`` -- the wreath product Z2 wr Z: pairs (cursor, lamps) where
  lamps is the finite set of lit positions, stored as a sorted tuple so the
  encoding is canonical.  (t,L)*(t',L') = (t+t', L xor (t+L')).

Enumeration orders are part of the public contract; constructions pick
elements in stream order, so changing an order changes golden outputs.

* Z^d ("spiral"): increasing L1 norm; within a shell, fewer negative
  coordinates first, then earlier first-nonzero index, then lexicographic.
  For Z^1 this reads 0, 1, -1, 2, -2, ...; for Z^2 it starts
  (0,0),(1,0),(0,1),(-1,0),(0,-1).
* Heisenberg ("word-ball"): breadth-first balls over the generating set
  {(1,0,0)^+-1, (0,1,0)^+-1}, each ball sorted lexicographically; the prefix
  is stable as the stream is extended.
* Lamplighter ("radius"): increasing radius r = max(|cursor|, |lit position|),
  each shell sorted by (cursor, lamps).

Elements serialize as {"backend": name, "coords": [...]}; lamplighter coords
are [cursor, [sorted lamps]].
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterator

from .errors import BackendMismatchError, ConfigError, FolnerlabError

# A group element is a canonical tuple:
#   Z^d          -> (x_1, ..., x_d)
#   heisenberg   -> (x, y, z)
#   lamplighter  -> (cursor, (sorted lit positions))
Element = tuple

_BOX_CAP = 4_000_000  # refuse to materialize absurdly large boxes


class Group:
    """Interface of a discrete group backend.  Instances are stateless."""

    name: str
    enumeration_order: str

    def mul(self, g: Element, h: Element) -> Element:
        raise NotImplementedError

    def inv(self, g: Element) -> Element:
        raise NotImplementedError

    @property
    def identity(self) -> Element:
        raise NotImplementedError

    def enumerate(self, order: str | None = None) -> Iterator[Element]:
        """Deterministic injective stream exhausting the group."""
        raise NotImplementedError

    def box(self, n: int) -> "FinSet":
        """The standard Folner candidate of parameter n (see subclasses)."""
        raise NotImplementedError

    def sort_key(self, g: Element):
        """Total order on elements; used for deterministic scans and output."""
        raise NotImplementedError

    # `box_coverage_bound` declares up to which n box(n) is contained in the
    # first 100_000 stream outputs (tested, not trusted).
    box_coverage_bound: int = 1

    def validate_element(self, g) -> Element:
        raise NotImplementedError

    def element_to_json(self, g: Element) -> dict:
        return {"backend": self.name, "coords": self._coords(g)}

    def _coords(self, g: Element):
        return list(g)

    def element_from_coords(self, coords) -> Element:
        raise NotImplementedError

    def _check_order(self, order: str | None):
        if order is not None and order != self.enumeration_order:
            raise ConfigError(
                f"backend {self.name} supports only enumeration order "
                f"{self.enumeration_order!r}, got {order!r}"
            )

    def __repr__(self):
        return f"<group {self.name}>"


class ZdGroup(Group):
    """Z^d under addition, d between 1 and 4."""

    enumeration_order = "spiral"

    def __init__(self, d: int):
        if not 1 <= d <= 4:
            raise ConfigError(f"Z^d backend supports d in 1..4, got {d}")
        self.d = d
        self.name = f"z{d}"
        self.box_coverage_bound = {1: 5000, 2: 100, 3: 12, 4: 4}[d]

    @property
    def identity(self) -> Element:
        return (0,) * self.d

    def mul(self, g, h):
        return tuple(a + b for a, b in zip(g, h))

    def inv(self, g):
        return tuple(-a for a in g)

    def sort_key(self, g):
        # Same key the spiral stream uses, so scan order == stream order.
        neg = sum(1 for a in g if a < 0)
        first = next((i for i, a in enumerate(g) if a != 0), self.d)
        return (sum(abs(a) for a in g), neg, first, g)

    def _shell(self, radius: int):
        if radius == 0:
            return [self.identity]
        out = []
        # all v with ||v||_1 == radius: split radius over d coordinates, signs
        # on nonzero parts
        for cuts in itertools.combinations(range(radius + self.d - 1), self.d - 1):
            parts = []
            prev = -1
            for c in (*cuts, radius + self.d - 1):
                parts.append(c - prev - 1)
                prev = c
            nz = [i for i, p in enumerate(parts) if p > 0]
            for signs in itertools.product((1, -1), repeat=len(nz)):
                v = list(parts)
                for i, s in zip(nz, signs):
                    v[i] = s * v[i]
                out.append(tuple(v))
        out.sort(key=self.sort_key)
        return out

    def enumerate(self, order=None):
        self._check_order(order)
        for radius in itertools.count():
            yield from self._shell(radius)

    def box(self, n: int) -> "FinSet":
        if n < 1:
            raise ConfigError(f"box side must be >= 1, got {n}")
        if n**self.d > _BOX_CAP:
            raise ConfigError(f"box({n}) on {self.name} is too large")
        elems = itertools.product(range(n), repeat=self.d)
        return FinSet(self, frozenset(elems))

    def validate_element(self, g):
        g = tuple(g)
        if len(g) != self.d or not all(isinstance(a, int) for a in g):
            raise ConfigError(f"bad {self.name} element: {g!r}")
        return g

    def element_from_coords(self, coords):
        return self.validate_element(coords)


class HeisenbergGroup(Group):
    """Integer Heisenberg group H3(Z)."""

    name = "heisenberg"
    enumeration_order = "word-ball"
    box_coverage_bound = 4

    @property
    def identity(self) -> Element:
        return (0, 0, 0)

    def mul(self, g, h):
        x, y, z = g
        a, b, c = h
        return (x + a, y + b, z + c + x * b)

    def inv(self, g):
        x, y, z = g
        return (-x, -y, -z + x * y)

    def sort_key(self, g):
        # Plain coordinate order; word length is not cheaply computable for
        # arbitrary elements, so deterministic scans use this key instead.
        return g

    def generators(self):
        a, b = (1, 0, 0), (0, 1, 0)
        return [a, self.inv(a), b, self.inv(b)]

    def enumerate(self, order=None):
        self._check_order(order)
        gens = self.generators()
        seen = {self.identity}
        frontier = [self.identity]
        yield self.identity
        while frontier:
            nxt = set()
            for g in frontier:
                for s in gens:
                    h = self.mul(g, s)
                    if h not in seen:
                        nxt.add(h)
            frontier = sorted(nxt)
            seen.update(nxt)
            yield from frontier

    def box(self, n: int) -> "FinSet":
        if n < 1:
            raise ConfigError(f"box side must be >= 1, got {n}")
        if n**4 > _BOX_CAP:
            raise ConfigError(f"box({n}) on heisenberg is too large")
        elems = {
            (x, y, z)
            for x in range(n)
            for y in range(n)
            for z in range(n * n)
        }
        return FinSet(self, frozenset(elems))

    def validate_element(self, g):
        g = tuple(g)
        if len(g) != 3 or not all(isinstance(a, int) for a in g):
            raise ConfigError(f"bad heisenberg element: {g!r}")
        return g

    def element_from_coords(self, coords):
        return self.validate_element(coords)


class LamplighterGroup(Group):
    """Wreath product Z2 wr Z: a cursor on Z plus a finite set of lit lamps."""

    name = "lamplighter"
    enumeration_order = "radius"
    box_coverage_bound = 6

    @property
    def identity(self) -> Element:
        return (0, ())

    def mul(self, g, h):
        t, lamps = g
        s, lamps2 = h
        lit = set(lamps)
        for p in lamps2:
            lit ^= {p + t}
        return (t + s, tuple(sorted(lit)))

    def inv(self, g):
        t, lamps = g
        return (-t, tuple(sorted(p - t for p in lamps)))

    def sort_key(self, g):
        t, lamps = g
        r = max((abs(t), *(abs(p) for p in lamps)), default=abs(t))
        return (r, t, lamps)

    def enumerate(self, order=None):
        self._check_order(order)
        for r in itertools.count(0):
            window = range(-r, r + 1)
            shell = []
            for t in window:
                for k in range(len(window) + 1):
                    for lamps in itertools.combinations(window, k):
                        radius = max([abs(t)] + [abs(p) for p in lamps])
                        if radius == r:
                            shell.append((t, lamps))
            shell.sort(key=lambda g: (g[0], g[1]))
            yield from shell

    def box(self, n: int) -> "FinSet":
        if n < 1:
            raise ConfigError(f"box side must be >= 1, got {n}")
        if n * 2**n > _BOX_CAP:
            raise ConfigError(f"box({n}) on lamplighter is too large")
        elems = set()
        for t in range(n):
            for k in range(n + 1):
                for lamps in itertools.combinations(range(n), k):
                    elems.add((t, lamps))
        return FinSet(self, frozenset(elems))

    def validate_element(self, g):
        if len(g) != 2:
            raise ConfigError(f"bad lamplighter element: {g!r}")
        t, lamps = g
        lamps = tuple(lamps)
        if not isinstance(t, int) or not all(isinstance(p, int) for p in lamps):
            raise ConfigError(f"bad lamplighter element: {g!r}")
        if list(lamps) != sorted(set(lamps)):
            raise ConfigError(f"lamp set not sorted/duplicate-free: {lamps!r}")
        return (t, lamps)

    def _coords(self, g):
        t, lamps = g
        return [t, list(lamps)]

    def element_from_coords(self, coords):
        if len(coords) != 2:
            raise ConfigError(f"bad lamplighter coords: {coords!r}")
        return self.validate_element((coords[0], tuple(coords[1])))


_GROUPS: dict[str, Group] = {}
for _d in range(1, 5):
    _g = ZdGroup(_d)
    _GROUPS[_g.name] = _g
_GROUPS["heisenberg"] = HeisenbergGroup()
_GROUPS["lamplighter"] = LamplighterGroup()


def get_group(name: str) -> Group:
    try:
        return _GROUPS[name]
    except KeyError:
        raise ConfigError(
            f"unknown backend {name!r}; available: {sorted(_GROUPS)}"
        ) from None


def backends() -> list[str]:
    return sorted(_GROUPS)


@dataclass(frozen=True)
class FinSet:
    """A finite subset of a discrete group; counting measure is ``len``.

    Immutable; all set calculus lives in :mod:`folnerlab.setcalc`.
    """

    group: Group
    elems: frozenset = field(default_factory=frozenset)

    def __post_init__(self):
        if not isinstance(self.elems, frozenset):
            object.__setattr__(self, "elems", frozenset(self.elems))

    def __len__(self):
        return len(self.elems)

    def __contains__(self, g):
        return g in self.elems

    def __iter__(self):
        return iter(self.elems)

    def sorted_elements(self) -> list[Element]:
        return sorted(self.elems, key=self.group.sort_key)

    def to_json(self) -> dict:
        return {
            "backend": self.group.name,
            "elements": [self.group._coords(g) for g in self.sorted_elements()],
        }

    @staticmethod
    def from_elements(group: Group, elements) -> "FinSet":
        return FinSet(group, frozenset(group.validate_element(g) for g in elements))


def finset_summary_json(A: FinSet, inline_limit: int = 2000) -> dict:
    """Size plus either sorted elements (small sets) or a sha256 digest."""
    import hashlib

    out = {"backend": A.group.name, "size": len(A)}
    if len(A) <= inline_limit:
        out["elements"] = [A.group._coords(g) for g in A.sorted_elements()]
    else:
        h = hashlib.sha256()
        for g in A.sorted_elements():
            h.update(repr(g).encode())
        out["digest"] = h.hexdigest()[:16]
    return out


def same_backend(*objects):
    """Raise unless all FinSets/groups passed share one backend."""
    names = set()
    for obj in objects:
        if isinstance(obj, FinSet):
            names.add(obj.group.name)
        elif isinstance(obj, Group):
            names.add(obj.name)
        else:
            raise FolnerlabError(f"not a group-carrying object: {obj!r}")
    if len(names) > 1:
        raise BackendMismatchError(f"mixed backends: {sorted(names)}")
