"""Translation surfaces: square-tiled origamis and polygon gluings.

Origamis are stored 0-indexed internally; files and the public constructor use
1-indexed permutations.  ``h[i]`` is the square to the right of square ``i``
and ``v[i]`` the square on top of it.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from math import gcd
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

from .errors import (
    InvalidGluing,
    NotAPermutation,
    NotCoprime,
    NotInSL2Z,
    NotTransitive,
    SurfaceError,
)
from .planar import LinearMap2, PlanarVector

Perm = Tuple[int, ...]

# corner indices of a unit square
LL, LR, UL, UR = 0, 1, 2, 3


def _inverse(p: Sequence[int]) -> Perm:
    inv = [0] * len(p)
    for i, j in enumerate(p):
        inv[j] = i
    return tuple(inv)


def _cycles(p: Sequence[int]) -> List[List[int]]:
    seen = [False] * len(p)
    out = []
    for start in range(len(p)):
        if seen[start]:
            continue
        cyc = []
        i = start
        while not seen[i]:
            seen[i] = True
            cyc.append(i)
            i = p[i]
        out.append(cyc)
    return out


class _UnionFind:
    def __init__(self, n: int):
        self.parent = list(range(n))

    def find(self, a: int) -> int:
        while self.parent[a] != a:
            self.parent[a] = self.parent[self.parent[a]]
            a = self.parent[a]
        return a

    def union(self, a: int, b: int) -> None:
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.parent[max(ra, rb)] = min(ra, rb)


@dataclass(frozen=True)
class Origami:
    """Square-tiled surface given by a pair of permutations (0-indexed)."""

    h: Perm
    v: Perm
    name: str = field(default="", compare=False)

    @property
    def n(self) -> int:
        return len(self.h)

    @cached_property
    def h_inv(self) -> Perm:
        return _inverse(self.h)

    @cached_property
    def v_inv(self) -> Perm:
        return _inverse(self.v)

    def area(self) -> int:
        return self.n

    @cached_property
    def corner_vertex(self) -> Tuple[Tuple[int, int, int, int], ...]:
        """``corner_vertex[square][corner]`` = vertex id (cone point) of that corner."""
        n = self.n
        uf = _UnionFind(4 * n)
        for i in range(n):
            r, u = self.h[i], self.v[i]
            uf.union(4 * i + LR, 4 * r + LL)
            uf.union(4 * i + UR, 4 * r + UL)
            uf.union(4 * i + UL, 4 * u + LL)
            uf.union(4 * i + UR, 4 * u + LR)
        roots: Dict[int, int] = {}
        table = []
        for i in range(n):
            row = []
            for c in range(4):
                root = uf.find(4 * i + c)
                row.append(roots.setdefault(root, len(roots)))
            table.append(tuple(row))
        return tuple(table)

    @cached_property
    def vertex_angles(self) -> Tuple[int, ...]:
        """Cone angle of each vertex in units of pi/2."""
        counts = [0] * (1 + max(max(row) for row in self.corner_vertex))
        for row in self.corner_vertex:
            for vid in row:
                counts[vid] += 1
        return tuple(counts)

    @cached_property
    def commutator(self) -> Perm:
        """``h v h^-1 v^-1`` composed right to left (``v^-1`` applied first)."""
        return tuple(self.h[self.v[self.h_inv[self.v_inv[i]]]] for i in range(self.n))

    @cached_property
    def zero_orders(self) -> Tuple[int, ...]:
        """Orders of the cone points (0 for marked points), one per vertex, sorted descending."""
        return tuple(sorted((len(c) - 1 for c in _cycles(self.commutator)), reverse=True))

    @property
    def genus(self) -> int:
        # Euler characteristic of the square complex: V - 2n + n
        chi = len(self.vertex_angles) - self.n
        return (2 - chi) // 2

    @property
    def singularities(self) -> int:
        return len(self.vertex_angles)

    def one_indexed(self) -> Tuple[List[int], List[int]]:
        return [i + 1 for i in self.h], [i + 1 for i in self.v]

    def to_json(self) -> dict:
        h, v = self.one_indexed()
        return {"n": self.n, "h": h, "v": v, "name": self.name}

    @cached_property
    def homology_tree(self) -> Tuple[Tuple[int, int, str], ...]:
        """Spanning tree of the square adjacency graph, as (new, parent, edge) steps.

        ``edge`` names the edge crossed from ``parent``: 'T', 'B', 'R' or 'L'.
        Used to reduce edge chains to a canonical relative homology class.
        """
        seen = {0}
        order = [0]
        steps = []
        for a in order:
            for nb, kind in ((self.v[a], "T"), (self.v_inv[a], "B"),
                             (self.h[a], "R"), (self.h_inv[a], "L")):
                if nb not in seen:
                    seen.add(nb)
                    order.append(nb)
                    steps.append((nb, a, kind))
        return tuple(steps)

    def reduce_chain(self, chain: Sequence[int]) -> Tuple[int, ...]:
        """Canonical representative of an edge chain in ``C_1 / im(boundary)``.

        Chains index horizontal edges ``H_i`` (top of square i) at ``i`` and
        vertical edges ``V_i`` (right of square i) at ``n + i``.  The boundary
        of square ``i`` is ``H[v^-1 i] + V[i] - H[i] - V[h^-1 i]``; subtracting
        boundaries along a spanning tree zeroes every tree edge.
        """
        n = self.n
        d = list(chain)
        c = [0] * n
        for b, a, kind in self.homology_tree:
            if kind == "T":
                c[b] = d[a] + c[a]
            elif kind == "B":
                c[b] = c[a] - d[b]
            elif kind == "R":
                c[b] = c[a] - d[n + a]
            else:
                c[b] = d[n + b] + c[a]
        out = [0] * (2 * n)
        for i in range(n):
            out[i] = d[i] + c[i] - c[self.v[i]]
            out[n + i] = d[n + i] - c[i] + c[self.h[i]]
        return tuple(out)


def origami_new(n: int, h: Sequence[int], v: Sequence[int], name: str = "") -> Origami:
    """Validate 1-indexed permutations and build an :class:`Origami`."""
    if not isinstance(n, int) or n < 1:
        raise NotAPermutation(f"n must be a positive integer, got {n!r}")
    perms = []
    for label, p in (("h", h), ("v", v)):
        p = list(p)
        if len(p) != n:
            raise NotAPermutation(f"{label} has length {len(p)}, expected {n}")
        seen = set()
        for idx, val in enumerate(p, start=1):
            if not isinstance(val, int) or isinstance(val, bool) or not 1 <= val <= n:
                raise NotAPermutation(f"{label}[{idx}] = {val!r} is not in 1..{n}")
            if val in seen:
                raise NotAPermutation(f"{label}[{idx}] = {val} repeats an earlier image")
            seen.add(val)
        perms.append(tuple(x - 1 for x in p))
    hp, vp = perms
    reached = {0}
    stack = [0]
    while stack:
        i = stack.pop()
        for j in (hp[i], vp[i]):
            if j not in reached:
                reached.add(j)
                stack.append(j)
    if len(reached) != n:
        missing = min(set(range(n)) - reached) + 1
        raise NotTransitive(f"square {missing} is not reachable from square 1")
    return Origami(hp, vp, name)


def _from_zero_indexed(h: Sequence[int], v: Sequence[int], name: str = "") -> Origami:
    return origami_new(len(h), [i + 1 for i in h], [i + 1 for i in v], name)


def torus() -> Origami:
    return origami_new(1, [1], [1], "torus")


def l_origami() -> Origami:
    """Three-square L: squares 1,2 in a row, square 3 on top of square 1."""
    return origami_new(3, [2, 1, 3], [3, 2, 1], "l3")


def two_square_torus() -> Origami:
    return origami_new(2, [2, 1], [1, 2], "cyl2")


BUILTINS = {"torus": torus, "l3": l_origami, "cyl2": two_square_torus}


# --------------------------------------------------------------------------
# SL(2, Z) action


S_MATRIX = LinearMap2(0, -1, 1, 0)
T_MATRIX = LinearMap2(1, 1, 0, 1)

# generator name -> matrix; inverse generators carry a trailing "'"
GENERATORS = {
    "S": S_MATRIX,
    "S'": LinearMap2(0, 1, -1, 0),
    "T": T_MATRIX,
    "T'": LinearMap2(1, -1, 0, 1),
}


def _act_generator(g: str, s: Origami) -> Origami:
    h, v, hi, vi = s.h, s.v, s.h_inv, s.v_inv
    n = s.n
    if g == "T":
        # shear: new top neighbour of i is h^-1(v(i))
        return Origami(h, tuple(hi[v[i]] for i in range(n)), s.name)
    if g == "T'":
        return Origami(h, tuple(h[v[i]] for i in range(n)), s.name)
    if g == "S":
        # quarter turn: right neighbour becomes the old bottom neighbour
        return Origami(vi, h, s.name)
    if g == "S'":
        return Origami(v, hi, s.name)
    raise ValueError(f"unknown generator {g!r}")


def word_matrix(word: Sequence[str]) -> LinearMap2:
    m = LinearMap2(1, 0, 0, 1)
    for g in word:
        m = m @ GENERATORS[g]
    return m


def sl2z_word(m: LinearMap2) -> List[str]:
    """Write an integer determinant-one matrix as a word in S, T and their inverses.

    The word multiplies left to right: ``word_matrix(word) == m``.
    """
    a, b, c, d = m.entries()
    if not all(isinstance(e, int) for e in (a, b, c, d)) or a * d - b * c != 1:
        raise NotInSL2Z(f"matrix {m.entries()} is not in SL(2, Z)")
    word: List[str] = []
    while c != 0:
        k = a // c
        if k:
            word.extend(["T"] * k if k > 0 else ["T'"] * (-k))
            a, b = a - k * c, b - k * d
        # M = S @ M' with M' = S^-1 M = [[c, d], [-a, -b]]
        word.append("S")
        a, b, c, d = c, d, -a, -b
    if a == -1:
        word.extend(["S", "S"])
        a, b, d = 1, -b, 1
    if b:
        word.extend(["T"] * b if b > 0 else ["T'"] * (-b))
    return word


def sl2z_act(m: Union[LinearMap2, Sequence[str]], s: Origami) -> Origami:
    """Origami of ``m . s`` for ``m`` in SL(2, Z) (matrix or generator word)."""
    word = list(m) if not isinstance(m, LinearMap2) else sl2z_word(m)
    for g in word:
        if g not in GENERATORS:
            raise NotInSL2Z(f"unknown generator {g!r}")
    out = s
    for g in reversed(word):
        out = _act_generator(g, out)
    return out


def direction_to_horizontal(p: int, q: int) -> LinearMap2:
    """An SL(2, Z) matrix sending the primitive vector ``(p, q)`` to ``(1, 0)``."""
    if gcd(p, q) != 1:
        raise NotCoprime(f"direction ({p}, {q}) is not primitive")
    # extended Euclid: a p + b q = 1
    old_r, r = p, q
    old_s, s_ = 1, 0
    old_t, t_ = 0, 1
    while r:
        k = old_r // r
        old_r, r = r, old_r - k * r
        old_s, s_ = s_, old_s - k * s_
        old_t, t_ = t_, old_t - k * t_
    if old_r < 0:
        old_s, old_t = -old_s, -old_t
    return LinearMap2(old_s, old_t, -q, p)


# --------------------------------------------------------------------------
# cylinders


@dataclass(frozen=True)
class Cylinder:
    direction: PlanarVector
    circumference: float
    width: float
    boundary_sc_count: int
    squares: Tuple[int, ...]

    @property
    def area(self) -> int:
        """Area in square units (exact)."""
        return len(self.squares)


def cylinder_decomposition(s: Origami, direction: Tuple[int, int]) -> List[Cylinder]:
    """Maximal cylinders of ``s`` in the rational direction ``(p, q)``.

    Every square corner is a cone point or a marked point, so each row of the
    transformed origami is bounded by saddle connections on both sides and is
    its own cylinder.
    """
    p, q = direction
    m = direction_to_horizontal(p, q)
    ts = sl2z_act(m, s)
    length = math.hypot(p, q)
    out = []
    for cyc in _cycles(ts.h):
        edges = {i for i in cyc} | {ts.v_inv[i] for i in cyc}
        out.append(Cylinder(
            direction=PlanarVector(p, q),
            circumference=len(cyc) * length,
            width=1.0 / length,
            boundary_sc_count=len(edges),
            squares=tuple(sorted(cyc)),
        ))
    return out


def direction_monodromy(s: Origami, p: int, q: int) -> Perm:
    """Permutation of squares induced by flowing ``(p, q)`` from a generic interior point.

    Independent of the SL(2, Z) machinery: traces the segment through the
    square complex with exact rational crossing times.
    """
    if gcd(p, q) != 1:
        raise NotCoprime(f"direction ({p}, {q}) is not primitive")
    # base point whose orbit line misses every lattice point
    x0, y0 = Fraction(1, 2), Fraction(1, 3)
    k = 2
    while (q * x0 - p * y0).denominator == 1:
        y0 = Fraction(1, 2 * k + 1)
        k += 1
    sx = 1 if p >= 0 else -1
    sy = 1 if q >= 0 else -1
    hmove = s.h if sx > 0 else s.h_inv
    vmove = s.v if sy > 0 else s.v_inv
    P, Q = abs(p), abs(q)
    # reflect so motion is up-right; start offsets inside the unit square
    fx = x0 if sx > 0 else 1 - x0
    fy = y0 if sy > 0 else 1 - y0
    events = []
    for kx in range(1, P + 1):
        events.append(((kx - fx) / P if P else None, 0))
    for ky in range(1, Q + 1):
        events.append(((ky - fy) / Q if Q else None, 1))
    events = sorted(e for e in events if e[0] is not None and e[0] <= 1)
    out = []
    for start in range(s.n):
        sq = start
        for _, kind in events:
            sq = vmove[sq] if kind else hmove[sq]
        out.append(sq)
    return tuple(out)


# --------------------------------------------------------------------------
# polygon surfaces


@dataclass(frozen=True)
class PolygonSurface:
    """Convex polygons (counterclockwise) glued edge-to-edge by translations.

    Edge ``e`` of polygon ``p`` runs from vertex ``e`` to vertex ``e + 1``.
    ``gluing[(p, e)] = (q, f)`` is an involution on directed edges.
    """

    polygons: Tuple[Tuple[PlanarVector, ...], ...]
    gluing: Dict[Tuple[int, int], Tuple[int, int]] = field(hash=False)
    name: str = field(default="", compare=False)

    def edge_vector(self, p: int, e: int) -> PlanarVector:
        poly = self.polygons[p]
        return poly[(e + 1) % len(poly)] - poly[e]

    def area(self) -> float:
        total = 0.0
        for poly in self.polygons:
            k = len(poly)
            total += 0.5 * sum(float(poly[i].x * poly[(i + 1) % k].y - poly[(i + 1) % k].x * poly[i].y)
                               for i in range(k))
        return total

    @cached_property
    def corner_vertex(self) -> Tuple[Tuple[int, ...], ...]:
        offsets = []
        total = 0
        for poly in self.polygons:
            offsets.append(total)
            total += len(poly)
        uf = _UnionFind(total)
        for (p, e), (q, f) in self.gluing.items():
            kq = len(self.polygons[q])
            kp = len(self.polygons[p])
            uf.union(offsets[p] + e, offsets[q] + (f + 1) % kq)
            uf.union(offsets[p] + (e + 1) % kp, offsets[q] + f)
        roots: Dict[int, int] = {}
        out = []
        for p, poly in enumerate(self.polygons):
            out.append(tuple(roots.setdefault(uf.find(offsets[p] + j), len(roots))
                             for j in range(len(poly))))
        return tuple(out)

    def interior_angle(self, p: int, j: int) -> float:
        poly = self.polygons[p]
        k = len(poly)
        a = poly[(j - 1) % k] - poly[j]
        b = poly[(j + 1) % k] - poly[j]
        ang = math.atan2(float(b.x * a.y - b.y * a.x), float(b.x * a.x + b.y * a.y))
        return ang % (2 * math.pi)

    @cached_property
    def vertex_angles(self) -> Tuple[float, ...]:
        """Total cone angle of each vertex class, in radians."""
        count = 1 + max(max(row) for row in self.corner_vertex)
        angles = [0.0] * count
        for p, row in enumerate(self.corner_vertex):
            for j, vid in enumerate(row):
                angles[vid] += self.interior_angle(p, j)
        return tuple(angles)

    @property
    def zero_orders(self) -> Tuple[int, ...]:
        return tuple(sorted((round(a / (2 * math.pi)) - 1 for a in self.vertex_angles), reverse=True))

    @property
    def singularities(self) -> int:
        return len(self.vertex_angles)

    def to_json(self) -> dict:
        seen = set()
        glue = []
        for (p, e), (q, f) in sorted(self.gluing.items()):
            if (q, f) in seen:
                continue
            seen.add((p, e))
            glue.append([p, e, q, f])
        return {
            "name": self.name,
            "polygons": [[[repr(float(v.x)), repr(float(v.y))] for v in poly] for poly in self.polygons],
            "gluing": glue,
        }


def polygon_surface_new(polygons, gluing, name: str = "", tol: float = 1e-9) -> PolygonSurface:
    """Validate a polygon gluing.

    ``gluing`` is a list of ``[p, e, q, f]`` records, each matching edge ``e``
    of polygon ``p`` with edge ``f`` of polygon ``q``.
    """
    polys = []
    for pi, poly in enumerate(polygons):
        pts = tuple(v if isinstance(v, PlanarVector) else PlanarVector(*v) for v in poly)
        if len(pts) < 3:
            raise InvalidGluing(f"polygon {pi} has fewer than 3 vertices")
        polys.append(pts)
    table: Dict[Tuple[int, int], Tuple[int, int]] = {}
    for rec in gluing:
        p, e, q, f = (int(x) for x in rec)
        for a, b in (((p, e), (q, f)), ((q, f), (p, e))):
            if not (0 <= a[0] < len(polys) and 0 <= a[1] < len(polys[a[0]])):
                raise InvalidGluing(f"edge {a} does not exist")
            if a in table and table[a] != b:
                raise InvalidGluing(f"edge {a} is glued twice")
            table[a] = b
    surf = PolygonSurface(tuple(polys), table, name)
    for p, poly in enumerate(polys):
        k = len(poly)
        for j in range(k):
            if (p, j) not in table:
                raise InvalidGluing(f"edge ({p}, {j}) is not glued")
            a = poly[j] - poly[j - 1]
            b = poly[(j + 1) % k] - poly[j]
            if float(a.x * b.y - a.y * b.x) <= 0:
                raise InvalidGluing(f"polygon {p} is not strictly convex and counterclockwise at vertex {j}")
    for (p, e), (q, f) in table.items():
        u, w = surf.edge_vector(p, e), surf.edge_vector(q, f)
        if abs(float(u.x + w.x)) > tol or abs(float(u.y + w.y)) > tol:
            raise InvalidGluing(f"edges ({p}, {e}) and ({q}, {f}) are not translation-glued")
    for vid, ang in enumerate(surf.vertex_angles):
        turns = ang / (2 * math.pi)
        if round(turns) < 1 or abs(turns - round(turns)) > 1e-7:
            raise InvalidGluing(f"vertex {vid} has cone angle {ang}, not a multiple of 2pi")
    return surf


def unit_square_torus() -> PolygonSurface:
    sq = [(0, 0), (1, 0), (1, 1), (0, 1)]
    return polygon_surface_new([sq], [[0, 0, 0, 2], [0, 1, 0, 3]], "square")


def parallelogram_l(a1, a2, b1, b3, name: str = "perturbed-l") -> PolygonSurface:
    """Three parallelograms glued like the L origami, with free edge vectors.

    Square 1 has sides ``a1`` (bottom) and ``b1``; square 2 sits to its right
    with sides ``a2, b1``; square 3 sits on top of square 1 with sides
    ``a1, b3``.  Generic choices give a generic surface in H(2).
    """
    def para(bottom, side):
        bx, by = bottom
        sx, sy = side
        return [(0.0, 0.0), (bx, by), (bx + sx, by + sy), (sx, sy)]

    polys = [para(a1, b1), para(a2, b1), para(a1, b3)]
    # edges: 0 bottom, 1 right, 2 top, 3 left
    gluing = [
        [0, 1, 1, 3], [1, 1, 0, 3],  # 1 -> 2 -> 1 horizontally
        [2, 1, 2, 3],                # 3 glued to itself horizontally
        [0, 2, 2, 0], [2, 2, 0, 0],  # 1 -> 3 -> 1 vertically
        [1, 2, 1, 0],                # 2 glued to itself vertically
    ]
    return polygon_surface_new(polys, gluing, name)


# --------------------------------------------------------------------------
# file formats

Surface = Union[Origami, PolygonSurface]


def area(s: Surface) -> float:
    return s.area()


def load_surface(source: Union[str, Path]) -> Surface:
    """Built-in name or path to an origami / polygon JSON document."""
    if isinstance(source, str) and source in BUILTINS:
        return BUILTINS[source]()
    path = Path(source)
    if not path.exists():
        raise SurfaceError(f"unknown surface {source!r}: not a built-in name or existing file")
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise SurfaceError(f"{path}: line {exc.lineno}: {exc.msg}") from exc
    return surface_from_json(doc)


def surface_from_json(doc: dict) -> Surface:
    if "polygons" in doc:
        try:
            polys = [[(float(x), float(y)) for x, y in poly] for poly in doc["polygons"]]
        except (TypeError, ValueError) as exc:
            raise SurfaceError(f"polygons: bad coordinate ({exc})") from exc
        return polygon_surface_new(polys, doc.get("gluing", []), doc.get("name", ""))
    for key in ("n", "h", "v"):
        if key not in doc:
            raise SurfaceError(f"origami document is missing field {key!r}")
    return origami_new(doc["n"], doc["h"], doc["v"], doc.get("name", ""))


def surface_to_json(s: Surface) -> dict:
    return s.to_json()
