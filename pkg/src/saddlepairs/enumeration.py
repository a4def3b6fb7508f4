"""Saddle connection enumeration.

Origamis are traced exactly: every square corner is a cone point (or marked
point), so a segment leaving a corner with primitive integer displacement
``(p, q)`` meets no lattice point before its endpoint and is a saddle
connection.  The tracer walks the Christoffel word of ``(|p|, |q|)`` through
the square permutations.

Polygon surfaces are searched by unfolding: from each corner a wedge of
directions is pushed through developed copies of the polygons until it leaves
the ball of radius ``R``.
"""

from __future__ import annotations

import csv
import io
import math
import os
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import cached_property
from math import gcd
from typing import Dict, Iterable, Iterator, List, Optional, Sequence, Tuple, Union

import numpy as np

from .errors import DegenerateNearHit, RadiusNonPositive
from .planar import PlanarVector
from .surface import LL, LR, UL, UR, Origami, PolygonSurface, Surface

NEAR_HIT_TOL = 1e-9
HIT_TOL = 1e-12


@dataclass(frozen=True)
class SaddleConnection:
    holonomy: PlanarVector
    start_singularity: int
    end_singularity: int
    start: Tuple[int, ...]  # (square,) for origamis, (polygon, vertex) for polygon surfaces
    surface: Surface = field(compare=False, repr=False, hash=False)
    polygon_crossings: Tuple[Tuple[int, int], ...] = field(default=(), compare=False, repr=False)

    @property
    def length(self) -> float:
        return self.holonomy.norm()

    def reversed(self) -> "SaddleConnection":
        if isinstance(self.surface, Origami):
            sq = _end_square(self.surface, self.start[0], int(self.holonomy.x), int(self.holonomy.y))
            return SaddleConnection(-self.holonomy, self.end_singularity, self.start_singularity,
                                    (sq,), self.surface)
        return SaddleConnection(-self.holonomy, self.end_singularity, self.start_singularity,
                                (), self.surface,
                                tuple(reversed(self.polygon_crossings)))

    @cached_property
    def crossings(self) -> Tuple[Tuple[int, str], ...]:
        """Edges crossed in order: (square exited, side) for origamis."""
        if not isinstance(self.surface, Origami):
            return self.polygon_crossings
        return _origami_crossings(self.surface, self.start[0], int(self.holonomy.x), int(self.holonomy.y))

    @cached_property
    def crossing_counts(self) -> Tuple[int, ...]:
        """Signed crossing counts against the ``2n`` edge classes (H_0.., V_0..)."""
        s = self.surface
        if not isinstance(s, Origami):
            return ()
        n = s.n
        out = [0] * (2 * n)
        for sq, side in self.crossings:
            if side == "R":
                out[n + sq] += 1
            elif side == "L":
                out[n + s.h_inv[sq]] -= 1
            elif side == "T":
                out[sq] += 1
            else:
                out[s.v_inv[sq]] -= 1
        return tuple(out)

    @cached_property
    def homology_fingerprint(self) -> Tuple[int, ...]:
        """Canonical class in ``H_1(X, Sigma; Z)`` (origamis); empty otherwise."""
        s = self.surface
        if not isinstance(s, Origami):
            return ()
        return s.reduce_chain(_origami_edge_chain(s, self.start[0], int(self.holonomy.x), int(self.holonomy.y)))


# --------------------------------------------------------------------------
# origami tracing


def _word(P: int, Q: int) -> bytes:
    """Order of grid-line crossings of the segment (0,0)->(P,Q): 0 vertical line, 1 horizontal."""
    out = bytearray()
    k = j = 1
    while k < P or j < Q:
        if j >= Q or (k < P and k * Q < j * P):
            out.append(0)
            k += 1
        else:
            out.append(1)
            j += 1
    return bytes(out)


def _moves(s: Origami, p: int, q: int):
    hm = s.h if p >= 0 else s.h_inv
    vm = s.v if q >= 0 else s.v_inv
    return hm, vm


def _corners(p: int, q: int) -> Tuple[int, int]:
    left = p >= 0
    bottom = q >= 0
    start = {(True, True): LL, (False, True): LR, (True, False): UL, (False, False): UR}[(left, bottom)]
    end_left = (not left) if p != 0 else left
    end_bottom = (not bottom) if q != 0 else bottom
    end = {(True, True): LL, (False, True): LR, (True, False): UL, (False, False): UR}[(end_left, end_bottom)]
    return start, end


def _end_square(s: Origami, start: int, p: int, q: int) -> int:
    hm, vm = _moves(s, p, q)
    sq = start
    for m in _word(abs(p), abs(q)):
        sq = vm[sq] if m else hm[sq]
    return sq


def _origami_crossings(s: Origami, start: int, p: int, q: int) -> Tuple[Tuple[int, str], ...]:
    hm, vm = _moves(s, p, q)
    hside = "R" if p >= 0 else "L"
    vside = "T" if q >= 0 else "B"
    out = []
    sq = start
    for m in _word(abs(p), abs(q)):
        if m:
            out.append((sq, vside))
            sq = vm[sq]
        else:
            out.append((sq, hside))
            sq = hm[sq]
    return tuple(out)


def _origami_edge_chain(s: Origami, start: int, p: int, q: int) -> List[int]:
    """Edge path homotopic (rel endpoints) to the traced segment.

    Follows the boundary of the cell strip on the side away from the direction
    of motion: the leading-edge side (bottom for upward motion) of every cell
    entered horizontally, and the trailing side (right for rightward motion) of
    every cell left vertically.
    """
    n = s.n
    chain = [0] * (2 * n)
    sx = 1 if p >= 0 else -1
    sy = 1 if q >= 0 else -1

    def horizontal(sq):
        # bottom edge of sq when moving up, top edge when moving down
        return s.v_inv[sq] if sy > 0 else sq

    def vertical(sq):
        return n + (sq if sx > 0 else s.h_inv[sq])

    if q == 0:
        chain[horizontal(start)] += sx
        return chain
    if p == 0:
        left = n + (s.h_inv[start] if sx > 0 else start)
        chain[left] += sy
        return chain
    hm, vm = _moves(s, p, q)
    sq = start
    chain[horizontal(sq)] += sx
    for m in _word(abs(p), abs(q)):
        if m:
            chain[vertical(sq)] += sy
            sq = vm[sq]
        else:
            sq = hm[sq]
            chain[horizontal(sq)] += sx
    chain[vertical(sq)] += sy
    return chain


def primitive_vectors(R: float) -> Iterator[Tuple[int, int]]:
    """Primitive integer vectors of norm at most ``R`` (all quadrants)."""
    bound = int(math.floor(R))
    r2 = R * R
    for P in range(0, bound + 1):
        for Q in range(0, bound + 1):
            if P * P + Q * Q > r2 or gcd(P, Q) != 1:
                continue
            for sx in ((1,) if P == 0 else (1, -1)):
                for sy in ((1,) if Q == 0 else (1, -1)):
                    yield sx * P, sy * Q
            if P == 0:
                yield 0, -Q
            if Q == 0:
                yield -P, 0


def _first_quadrant(R: float) -> List[Tuple[int, int]]:
    bound = int(math.floor(R))
    r2 = R * R
    return [(P, Q) for P in range(bound + 1) for Q in range(bound + 1)
            if (P or Q) and P * P + Q * Q <= r2 and gcd(P, Q) == 1]


def _trace_block(s: Origami, block: Sequence[Tuple[int, int]]) -> List[Tuple[int, int, int, int, int]]:
    """(p, q, start square, start vertex, end vertex) for every corner in ``block``."""
    cv = s.corner_vertex
    n = s.n
    out = []
    for P, Q in block:
        word = _word(P, Q)
        signs = [(1, 1)]
        if P:
            signs.append((-1, 1))
        if Q:
            signs.append((1, -1))
        if P and Q:
            signs.append((-1, -1))
        if P == 0:
            signs = [(1, 1), (1, -1)]
        if Q == 0:
            signs = [(1, 1), (-1, 1)]
        for sx, sy in signs:
            p, q = sx * P, sy * Q
            hm, vm = _moves(s, p, q)
            c0, c1 = _corners(p, q)
            tables = [vm if m else hm for m in word]
            for start in range(n):
                sq = start
                for tb in tables:
                    sq = tb[sq]
                out.append((p, q, start, cv[start][c0], cv[sq][c1]))
    return out


def _origami_saddle_connections(s: Origami, R: float, workers: int = 1) -> List[SaddleConnection]:
    directions = _first_quadrant(R)
    if workers > 1 and len(directions) > 2000:
        chunks = [directions[i::workers] for i in range(workers)]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_trace_block, [s] * workers, chunks))
        rows = [r for part in parts for r in part]
    else:
        rows = _trace_block(s, directions)
    rows.sort()
    return [SaddleConnection(PlanarVector(p, q), a, b, (sq,), s) for p, q, sq, a, b in rows]


# --------------------------------------------------------------------------
# polygon unfolding


def _cross(a, b) -> float:
    return a[0] * b[1] - a[1] * b[0]


def _seg_dist(a, b) -> float:
    """Distance from the origin to the segment ab."""
    dx, dy = b[0] - a[0], b[1] - a[1]
    L2 = dx * dx + dy * dy
    if L2 == 0:
        return math.hypot(*a)
    u = max(0.0, min(1.0, -(a[0] * dx + a[1] * dy) / L2))
    return math.hypot(a[0] + u * dx, a[1] + u * dy)


def _vertex_status(v, lo, hi) -> str:
    """'in', 'out', 'edge' (collinear with a beam boundary) or 'near'."""
    nv = math.hypot(*v)
    d_lo = _cross(lo, v) / math.hypot(*lo)
    d_hi = _cross(v, hi) / math.hypot(*hi)
    hit = HIT_TOL * max(1.0, nv)
    if d_lo > NEAR_HIT_TOL and d_hi > NEAR_HIT_TOL:
        return "in"
    if d_lo < -NEAR_HIT_TOL or d_hi < -NEAR_HIT_TOL:
        return "out"
    if abs(d_lo) <= hit or abs(d_hi) <= hit:
        return "edge"
    return "near"


def _polygon_saddle_connections(s: PolygonSurface, R: float, near_hit: str = "raise") -> List[SaddleConnection]:
    polys = [[(float(v.x), float(v.y)) for v in poly] for poly in s.polygons]
    cv = s.corner_vertex
    found: List[Tuple[Tuple[float, float], int, int, Tuple[int, int], Tuple[Tuple[int, int], ...]]] = []

    def report_near(v, where):
        msg = f"trajectory passes within {NEAR_HIT_TOL} of vertex at {v} ({where})"
        if near_hit == "raise":
            raise DegenerateNearHit(msg)
        warnings.warn(msg, RuntimeWarning)

    for p, poly in enumerate(polys):
        k = len(poly)
        for j in range(k):
            cx, cy = poly[j]
            pts = [(x - cx, y - cy) for x, y in poly]
            lo = pts[(j + 1) % k]
            hi = pts[(j - 1) % k]
            start_vid = cv[p][j]
            if math.hypot(*lo) <= R:
                found.append((lo, start_vid, cv[p][(j + 1) % k], (p, j), ()))
            for i in range(k):
                if i in (j, (j + 1) % k, (j - 1) % k):
                    continue
                if math.hypot(*pts[i]) <= R:
                    found.append((pts[i], start_vid, cv[p][i], (p, j), ()))
            stack = []
            for e in range(k):
                if e == j or e == (j - 1) % k:
                    continue
                stack.append((p, pts, e, lo, hi, ()))
            while stack:
                q, qpts, e, blo, bhi, chain = stack.pop()
                kq = len(qpts)
                a, b = qpts[e], qpts[(e + 1) % kq]
                # cone through the exit edge, clipped to the beam
                new_lo = a if _cross(blo, a) > 0 else blo
                new_hi = b if _cross(b, bhi) > 0 else bhi
                if _cross(new_lo, new_hi) <= HIT_TOL * math.hypot(*new_lo) * math.hypot(*new_hi):
                    continue
                if _seg_dist(a, b) > R:
                    continue
                r, f = s.gluing[(q, e)]
                rpoly = polys[r]
                kr = len(rpoly)
                ox = b[0] - rpoly[f][0]
                oy = b[1] - rpoly[f][1]
                rpts = [(x + ox, y + oy) for x, y in rpoly]
                nchain = chain + ((q, e),)
                for i in range(kr):
                    if i == f or i == (f + 1) % kr:
                        continue
                    v = rpts[i]
                    status = _vertex_status(v, new_lo, new_hi)
                    if status == "in":
                        if math.hypot(*v) <= R:
                            found.append((v, start_vid, cv[r][i], (p, j), nchain))
                    elif status == "near" and math.hypot(*v) <= R:
                        report_near(v, f"polygon {r} vertex {i}")
                for g in range(kr):
                    if g == f:
                        continue
                    ga, gb = rpts[g], rpts[(g + 1) % kr]
                    if _cross(ga, gb) > 0:
                        stack.append((r, rpts, g, new_lo, new_hi, nchain))

    out = []
    for hol, a, b, start, chain in found:
        x, y = hol
        scale = math.hypot(x, y)
        upper = y > HIT_TOL * scale or (abs(y) <= HIT_TOL * scale and x > 0)
        if not upper:
            continue
        sc = SaddleConnection(PlanarVector(x, y), a, b, start, s, chain)
        out.append(sc)
        out.append(sc.reversed())
    out.sort(key=lambda c: (c.holonomy.x, c.holonomy.y, c.start_singularity, c.end_singularity))
    return out


# --------------------------------------------------------------------------
# public API


def default_workers() -> int:
    env = os.environ.get("SADDLEPAIRS_THREADS")
    return max(1, int(env)) if env else 1


def saddle_connections(s: Surface, R: float, workers: Optional[int] = None,
                       near_hit: str = "raise") -> List[SaddleConnection]:
    """Every saddle connection of length at most ``R``.

    Output is sorted by holonomy, then start data; reversal-closed.
    """
    if not R > 0:
        raise RadiusNonPositive(f"radius must be positive, got {R}")
    if isinstance(s, Origami):
        return _origami_saddle_connections(s, R, workers or default_workers())
    return _polygon_saddle_connections(s, R, near_hit)


@dataclass(frozen=True)
class HolonomySet:
    """Distinct holonomy vectors up to ``radius`` with saddle-connection multiplicities.

    ``deduplicated`` selects whether counting treats Lambda as a set (the
    default) or weights each vector by its multiplicity.
    """

    radius: float
    vectors: Tuple[PlanarVector, ...]
    multiplicities: Tuple[int, ...]
    deduplicated: bool = True
    exact: bool = True

    def __len__(self) -> int:
        return len(self.vectors) if self.deduplicated else sum(self.multiplicities)

    def __contains__(self, v: PlanarVector) -> bool:
        return v in self._index

    def __iter__(self):
        return iter(self.vectors)

    @cached_property
    def _index(self) -> Dict[PlanarVector, int]:
        return {v: i for i, v in enumerate(self.vectors)}

    def multiplicity(self, v: PlanarVector) -> int:
        i = self._index.get(v)
        return 0 if i is None else self.multiplicities[i]

    @cached_property
    def xy(self) -> np.ndarray:
        """``(N, 2)`` array; int64 when exact."""
        dtype = np.int64 if self.exact else np.float64
        if not self.vectors:
            return np.zeros((0, 2), dtype=dtype)
        return np.array([(v.x, v.y) for v in self.vectors], dtype=dtype)

    @cached_property
    def weights(self) -> np.ndarray:
        if self.deduplicated:
            return np.ones(len(self.vectors), dtype=np.int64)
        return np.array(self.multiplicities, dtype=np.int64)

    def restrict(self, R: float) -> "HolonomySet":
        keep = [(v, m) for v, m in zip(self.vectors, self.multiplicities) if v.norm() <= R]
        return HolonomySet(min(R, self.radius), tuple(v for v, _ in keep), tuple(m for _, m in keep),
                           self.deduplicated, self.exact)

    def as_set(self) -> set:
        return set(self.vectors)

    def scaled(self, factor: float) -> "HolonomySet":
        """Holonomies multiplied by ``factor`` (e.g. ``1/sqrt(area)`` for unit area)."""
        if factor == 1:
            return self
        vecs = tuple(PlanarVector(float(v.x) * factor, float(v.y) * factor) for v in self.vectors)
        return HolonomySet(self.radius * factor, vecs, self.multiplicities, self.deduplicated, False)


def _float_key(v: PlanarVector, quantum: float = 1e-9) -> Tuple[int, int]:
    return round(float(v.x) / quantum), round(float(v.y) / quantum)


def holonomies(connections: Iterable[SaddleConnection], radius: float,
               dedupe: bool = True) -> HolonomySet:
    counts: Dict[PlanarVector, int] = {}
    exact = True
    float_keys: Dict[Tuple[int, int], PlanarVector] = {}
    for sc in connections:
        v = sc.holonomy
        if not v.exact:
            exact = False
            key = _float_key(v)
            rep = None
            for dx in (-1, 0, 1):
                for dy in (-1, 0, 1):
                    rep = float_keys.get((key[0] + dx, key[1] + dy))
                    if rep is not None:
                        break
                if rep is not None:
                    break
            if rep is None:
                float_keys[key] = v
                rep = v
            v = rep
        counts[v] = counts.get(v, 0) + 1
    vectors = sorted(counts, key=lambda u: (u.norm2(), u.x, u.y))
    return HolonomySet(radius, tuple(vectors), tuple(counts[u] for u in vectors), dedupe, exact)


def holonomy_set(s: Surface, R: float, dedupe: bool = True, workers: Optional[int] = None) -> HolonomySet:
    """``Lambda_omega(R)`` with multiplicities."""
    return holonomies(saddle_connections(s, R, workers), R, dedupe)


def _shortest(s: Surface) -> Tuple[float, List[SaddleConnection]]:
    R = 1.0
    while True:
        scs = saddle_connections(s, R)
        if scs:
            return R, scs
        R *= 2.0


def systole(s: Surface) -> float:
    """Length of the shortest saddle connection."""
    _, scs = _shortest(s)
    return min(sc.length for sc in scs)


def _same_vector(u: PlanarVector, w: PlanarVector) -> bool:
    if u.exact and w.exact:
        return u == w
    return math.hypot(float(u.x - w.x), float(u.y - w.y)) <= NEAR_HIT_TOL * max(1.0, u.norm())


def homologous(a: SaddleConnection, b: SaddleConnection, up_to_sign: bool = True) -> bool:
    """Decide whether two saddle connections are homologous.

    Equal holonomy is necessary.  On origamis the relative homology classes are
    compared exactly; elsewhere equal holonomy is taken as homologous.  With
    ``up_to_sign`` a connection and the reverse of another are identified.
    """
    def same(x: SaddleConnection, y: SaddleConnection, sign: int) -> bool:
        hy = y.holonomy if sign > 0 else -y.holonomy
        if not _same_vector(x.holonomy, hy):
            return False
        fx, fy = x.homology_fingerprint, y.homology_fingerprint
        if fx and fy:
            return fx == (fy if sign > 0 else tuple(-c for c in fy))
        return True

    return same(a, b, 1) or (up_to_sign and same(a, b, -1))


def shortest_connection(s: Surface) -> SaddleConnection:
    _, scs = _shortest(s)
    return min(scs, key=lambda c: (c.length, c.holonomy.x, c.holonomy.y, c.start))


def second_systole(s: Surface) -> float:
    """Shortest saddle connection not homologous (up to orientation) to a fixed shortest one."""
    gamma0 = shortest_connection(s)
    R = max(1.0, 2.0 * gamma0.length)
    while True:
        candidates = [sc for sc in saddle_connections(s, R) if not homologous(sc, gamma0)]
        if candidates:
            return min(sc.length for sc in candidates)
        R *= 2.0


# --------------------------------------------------------------------------
# CSV export

CSV_COLUMNS = ("x", "y", "length", "start", "end", "fingerprint")


def _fmt(x) -> str:
    if isinstance(x, int):
        return str(x)
    return format(float(x), ".17g")


def connections_to_csv(connections: Sequence[SaddleConnection], scale: float = 1.0,
                       header_comment: Optional[str] = None) -> str:
    buf = io.StringIO()
    if header_comment:
        buf.write(f"# {header_comment}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for sc in connections:
        x, y = sc.holonomy.x, sc.holonomy.y
        if scale != 1.0:
            x, y = float(x) * scale, float(y) * scale
        writer.writerow([_fmt(x), _fmt(y), _fmt(sc.length * scale), sc.start_singularity,
                         sc.end_singularity, ";".join(str(c) for c in sc.homology_fingerprint)])
    return buf.getvalue()
