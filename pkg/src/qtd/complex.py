"""The complex family K_0, K_1, ... generated by iterated subdivision.

Ids are integers handed out in construction order, so two builds of the same
(spec, level) are identical.  Per subdivision step the unit edges are refined
first (macroedge by macroedge), then tile interiors are instantiated in
address order; this makes the side vertices shared between the two tiles
flanking an edge without a separate gluing pass.
"""
from __future__ import annotations

import math
import os
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

from .substitution import CORNERS, SIDES, Position, SubstitutionSpec

Address = tuple[int, ...]

DEFAULT_MAX_VERTICES = 5_000_000


class ResourceLimitError(RuntimeError):
    pass


class NoTileError(ValueError):
    """Raised when a 3-vertex path does not run along two sides of one tile."""


@dataclass(frozen=True)
class VertexRecord:
    id: int
    kind: str  # corner | boundary | side | internal
    level: int
    pos: Position
    name: str = ""  # corner name or template internal vertex id
    address: Address = ()  # creating tile (internal vertices)
    macroedge: int | None = None  # carrying macroedge (side and boundary vertices)
    index: int = 0  # 1..s along the macroedge's canonical direction, within its insertion group
    between: tuple[int, int] | None = None  # unit edge it was inserted on, canonical direction


@dataclass(frozen=True)
class MacroedgeRecord:
    id: int
    level: int
    edge_type: int | str  # template edge number, or a side name on the outer boundary
    owner: Address
    first: tuple[Address, int]  # (subcomplex, side index) on the first half-plane
    second: tuple[Address, int] | None  # None on the outer boundary

    @property
    def boundary(self) -> bool:
        return self.second is None


@dataclass
class SubcomplexRecord:
    address: Address
    corners: tuple[int, int, int, int]
    sides: tuple[tuple[int, ...], ...] | None = None  # vertices inserted at its first subdivision

    def bosses(self) -> tuple[int, ...]:
        if self.sides is None:
            raise ValueError(f"subcomplex {format_address(self.address)} has not been subdivided")
        out: list[int] = []
        for j in range(4):
            out.append(self.corners[j])
            out.extend(self.sides[j])
        return tuple(out)


@dataclass(frozen=True)
class TileRecord:
    address: Address
    corners: tuple[int, int, int, int]

    @property
    def tile_type(self) -> int:
        return self.address[-1] if self.address else 0


def format_address(address: Address) -> str:
    return ".".join(map(str, address)) if address else "-"


def max_vertices_from_env(default: int = DEFAULT_MAX_VERTICES) -> int:
    raw = os.environ.get("QTD_MAX_VERTICES")
    return int(raw) if raw else default


@dataclass
class Complex:
    spec: SubstitutionSpec
    level: int
    vertices: list[VertexRecord]
    macroedges: list[MacroedgeRecord]
    chains: list[tuple[int, ...]]
    tiles: list[TileRecord]
    subcomplexes: dict[Address, SubcomplexRecord]
    max_vertices: int = DEFAULT_MAX_VERTICES
    _cache: dict = field(default_factory=dict, repr=False)

    # structure --------------------------------------------------------

    @property
    def edges(self) -> dict[tuple[int, int], int]:
        """Unit edges keyed by sorted endpoint pair, valued by macroedge id."""
        if "edges" not in self._cache:
            edges: dict[tuple[int, int], int] = {}
            for mid, chain in enumerate(self.chains):
                for u, w in zip(chain, chain[1:]):
                    edges[(u, w) if u < w else (w, u)] = mid
            self._cache["edges"] = edges
        return self._cache["edges"]

    def edge_macroedge(self, u: int, w: int) -> int:
        key = (u, w) if u < w else (w, u)
        try:
            return self.edges[key]
        except KeyError:
            raise KeyError(f"no unit edge between {u} and {w}") from None

    def edge_level(self, u: int, w: int) -> int:
        return self.macroedges[self.edge_macroedge(u, w)].level

    def has_edge(self, u: int, w: int) -> bool:
        return ((u, w) if u < w else (w, u)) in self.edges

    def counts(self) -> tuple[int, int, int]:
        return len(self.vertices), len(self.edges), len(self.tiles)

    def euler(self) -> int:
        v, e, f = self.counts()
        return v - e + f

    @property
    def tile_index(self) -> dict[Address, int]:
        if "tile_index" not in self._cache:
            self._cache["tile_index"] = {t.address: i for i, t in enumerate(self.tiles)}
        return self._cache["tile_index"]

    def tile(self, address: Sequence[int]) -> TileRecord:
        return self.tiles[self.tile_index[tuple(address)]]

    @property
    def vertex_tiles(self) -> list[list[int]]:
        if "vertex_tiles" not in self._cache:
            vt: list[list[int]] = [[] for _ in self.vertices]
            for i, t in enumerate(self.tiles):
                for c in t.corners:
                    vt[c].append(i)
            self._cache["vertex_tiles"] = vt
        return self._cache["vertex_tiles"]

    def root_corner(self, name: str) -> int:
        return CORNERS.index(name)

    # neighbourhoods -----------------------------------------------------

    def _rings(self) -> list[tuple[int, ...]]:
        if "rings" in self._cache:
            return self._cache["rings"]
        succ: list[dict[int, int]] = [dict() for _ in self.vertices]
        for t in self.tiles:
            c = t.corners
            for j in range(4):
                # clockwise around c[j]: from the next corner to the previous one
                succ[c[j]][c[(j + 1) % 4]] = c[(j - 1) % 4]
        rings: list[tuple[int, ...]] = []
        for v, nxt in enumerate(succ):
            starts = set(nxt) - set(nxt.values())
            if len(starts) > 1:
                raise RuntimeError(f"vertex {v} has a disconnected neighbourhood")
            start = starts.pop() if starts else min(nxt)
            ring = [start]
            cur = start
            while cur in nxt and nxt[cur] != start:
                cur = nxt[cur]
                ring.append(cur)
            rings.append(tuple(ring))
        self._cache["rings"] = rings
        return rings

    def ring(self, v: int) -> tuple[int, ...]:
        """Neighbours of ``v`` in clockwise order (open rings start at a boundary edge)."""
        if not 0 <= v < len(self.vertices):
            raise KeyError(f"unknown vertex {v}")
        return self._rings()[v]

    def degree(self, v: int) -> int:
        return len(self.ring(v))

    def is_closed_ring(self, v: int) -> bool:
        ring = self.ring(v)
        last, first = ring[-1], ring[0]
        return any(first in self.tiles[i].corners and last in self.tiles[i].corners
                   and _consecutive(self.tiles[i].corners, v, first, last)
                   for i in self.vertex_tiles[v])

    def neighborhood(self, v: int, start: int | None = None) -> list[tuple[tuple[int, int], int]]:
        """Clockwise ring of ``(edge, opposite vertex)`` pairs around ``v``.

        ``start`` is the opposite vertex of the first edge; by default the
        ring starts at the edge closest to due north, clockwise.
        """
        ring = list(self.ring(v))
        if start is None:
            x0, y0 = self.vertices[v].pos

            def bearing(w: int) -> float:
                x, y = self.vertices[w].pos
                # y grows downwards; 0 = north, increasing clockwise
                return math.atan2(float(x - x0), float(y0 - y)) % (2 * math.pi)

            start = min(ring, key=bearing)
        if start not in ring:
            raise KeyError(f"{start} is not adjacent to {v}")
        i = ring.index(start)
        ring = ring[i:] + ring[:i]
        return [(((v, w) if v < w else (w, v)), w) for w in ring]

    # paths and tiles -----------------------------------------------------

    def tile_through(self, a: int, b: int, c: int) -> int | None:
        """Index of the tile having a, b, c as consecutive corners."""
        for i in self.vertex_tiles[b]:
            if _consecutive(self.tiles[i].corners, b, a, c):
                return i
        return None

    def flip(self, path: Sequence[int]) -> tuple[int, int, int]:
        """Replace A,B,C (two sides of a tile) by A,D,C through the fourth corner."""
        a, b, c = path
        ti = self.tile_through(a, b, c)
        if ti is None:
            raise NoTileError(f"path {a}-{b}-{c} does not run along two sides of one tile")
        corners = self.tiles[ti].corners
        d = next(x for x in corners if x not in (a, b, c))
        return a, d, c

    # ownership -------------------------------------------------------------

    def owner_subcomplex(self, v: int | None = None, *, macroedge: int | None = None) -> Address:
        """Minimal subcomplex owning a vertex (or a macroedge) as an internal element."""
        if macroedge is not None:
            if not 0 <= macroedge < len(self.macroedges):
                raise KeyError(f"unknown macroedge {macroedge}")
            return self.macroedges[macroedge].owner
        if v is None or not 0 <= v < len(self.vertices):
            raise KeyError(f"unknown vertex {v}")
        rec = self.vertices[v]
        if rec.kind == "internal":
            return rec.address
        if rec.kind in ("side", "boundary"):
            return self.macroedges[rec.macroedge].owner
        return ()

    def bosses(self, v: int) -> tuple[int, ...]:
        return self.subcomplexes[self.owner_subcomplex(v)].bosses()

    # refinement --------------------------------------------------------------

    def subdivide(self) -> "Complex":
        return subdivide(self)


def _consecutive(corners: Sequence[int], b: int, a: int, c: int) -> bool:
    if b not in corners:
        return False
    j = corners.index(b)
    nb = {corners[(j + 1) % 4], corners[(j - 1) % 4]}
    return nb == {a, c} and a != c


def _lerp(p: Position, q: Position, t: Fraction) -> Position:
    return p[0] + (q[0] - p[0]) * t, p[1] + (q[1] - p[1]) * t


def _bilinear(quad: Sequence[Position], uv: Position) -> Position:
    x, y = uv
    w = ((1 - x) * (1 - y), x * (1 - y), x * y, (1 - x) * y)
    return (sum(wi * p[0] for wi, p in zip(w, quad)), sum(wi * p[1] for wi, p in zip(w, quad)))


def level_zero(spec: SubstitutionSpec, max_vertices: int | None = None) -> Complex:
    unit = [(Fraction(0), Fraction(0)), (Fraction(1), Fraction(0)),
            (Fraction(1), Fraction(1)), (Fraction(0), Fraction(1))]
    vertices = [VertexRecord(i, "corner", 0, unit[i], CORNERS[i]) for i in range(4)]
    macroedges = [MacroedgeRecord(j, 0, SIDES[j], (), ((), j), None) for j in range(4)]
    chains = [(j, (j + 1) % 4) for j in range(4)]
    return Complex(spec, 0, vertices, macroedges, chains, [TileRecord((), (0, 1, 2, 3))],
                   {(): SubcomplexRecord((), (0, 1, 2, 3))},
                   max_vertices=max_vertices if max_vertices is not None else max_vertices_from_env())


def subdivide(K: Complex) -> Complex:
    spec = K.spec
    s = spec.s
    n = K.level + 1
    vertices = list(K.vertices)
    subcomplexes = dict(K.subcomplexes)
    cap = K.max_vertices
    expected = len(vertices) + len(K.edges) * s + len(K.tiles) * spec.v
    if expected > cap:
        raise ResourceLimitError(f"level {n} needs {expected} vertices, cap is {cap}")

    split: dict[tuple[int, int], list[int]] = {}
    chains: list[tuple[int, ...]] = []
    for mid, chain in enumerate(K.chains):
        me = K.macroedges[mid]
        kind = "boundary" if me.boundary else "side"
        out = [chain[0]]
        for u, w in zip(chain, chain[1:]):
            pu, pw = vertices[u].pos, vertices[w].pos
            new = []
            for i in range(1, s + 1):
                vid = len(vertices)
                vertices.append(VertexRecord(vid, kind, n, _lerp(pu, pw, Fraction(i, s + 1)),
                                             macroedge=mid, index=i, between=(u, w)))
                new.append(vid)
            split[(u, w)] = new
            split[(w, u)] = new[::-1]
            out.extend(new)
            out.append(w)
        chains.append(tuple(out))

    macroedges = list(K.macroedges)
    tiles: list[TileRecord] = []
    oriented = [spec.oriented_edge(e.edge_type) for e in spec.internal_edges]
    for tile in K.tiles:
        c = tile.corners
        a = tile.address
        sides = tuple(tuple(split[(c[j], c[(j + 1) % 4])]) for j in range(4))
        subcomplexes[a] = SubcomplexRecord(a, c, sides)
        quad = [vertices[x].pos for x in c]
        local: dict[str, int] = {CORNERS[j]: c[j] for j in range(4)}
        for j, side in enumerate(SIDES):
            for i, vid in enumerate(sides[j], start=1):
                local[f"{'URDL'[j]}{i}"] = vid
        for name, uv in spec.internal_vertices.items():
            vid = len(vertices)
            vertices.append(VertexRecord(vid, "internal", n, _bilinear(quad, uv), name, address=a))
            local[name] = vid
        for t in spec.tiles:
            corners = tuple(local[x] for x in t.corners)
            child = a + (t.tile_type,)
            tiles.append(TileRecord(child, corners))  # type: ignore[arg-type]
            subcomplexes[child] = SubcomplexRecord(child, corners)  # type: ignore[arg-type]
        for e, (start, end, t1, x, y) in zip(spec.internal_edges, oriented):
            mid = len(macroedges)
            macroedges.append(MacroedgeRecord(mid, n, e.edge_type, a, (a + (t1,), x),
                                              (a + (e.second_side_tile,), y)))
            chains.append((local[start], local[end]))
    return Complex(spec, n, vertices, macroedges, chains, tiles, subcomplexes, max_vertices=cap)


def build_complex(spec: SubstitutionSpec, n: int, max_vertices: int | None = None) -> Complex:
    if n < 0:
        raise ValueError("level must be >= 0")
    K = level_zero(spec, max_vertices)
    for _ in range(n):
        K = subdivide(K)
    return K


def build_levels(spec: SubstitutionSpec, n_max: int, max_vertices: int | None = None) -> list[Complex]:
    """K_0 .. K_{n_max}."""
    out = [level_zero(spec, max_vertices)]
    for _ in range(n_max):
        out.append(subdivide(out[-1]))
    return out


# reports ------------------------------------------------------------------------


@dataclass
class LocalFinitenessReport:
    N: int
    stabilized: bool
    C: int
    C_nonmain: int
    degrees: list[int]

    def to_text(self) -> str:
        return (f"N: {self.N}\nstabilized: {str(self.stabilized).lower()}\nC: {self.C}\n"
                f"C_nonmain: {self.C_nonmain}\nmax_degree_per_level: {' '.join(map(str, self.degrees))}\n")


def local_finiteness_report(spec: SubstitutionSpec, n_max: int) -> LocalFinitenessReport:
    """Degree bound and level gap between vertices and their incident edges.

    ``C`` uses every incident edge; ``C_nonmain`` ignores the edges running
    along the vertex's own macroedge (those keep the macroedge's old level).
    """
    from .coloring import vertex_type  # local import: coloring depends on this module

    if n_max < 3:
        raise ValueError("n_max must be >= 3")
    levels = build_levels(spec, n_max)[1:]
    degrees = []
    per_type: list[dict[object, set[int]]] = []
    C = C_nonmain = 0
    for K in levels:
        degrees.append(max(K.degree(v) for v in range(len(K.vertices))))
        table: dict[object, set[int]] = {}
        for v, rec in enumerate(K.vertices):
            table.setdefault(vertex_type(K, v), set()).add(K.degree(v))
            for w in K.ring(v):
                mid = K.edge_macroedge(v, w)
                gap = rec.level - K.macroedges[mid].level
                C = max(C, gap)
                if rec.macroedge != mid and rec.kind != "corner":
                    C_nonmain = max(C_nonmain, gap)
        per_type.append(table)
    prev, last = per_type[-2], per_type[-1]
    stable_types = all(last[t] == prev[t] for t in prev if t in last)
    return LocalFinitenessReport(max(degrees), degrees[-1] == degrees[-2] and stable_types,
                                 C, C_nonmain, degrees)


def _fmt(q: Fraction) -> str:
    return str(q.numerator) if q.denominator == 1 else f"{q.numerator}/{q.denominator}"


def dump_lines(K: Complex) -> Iterable[str]:
    yield f"complex {K.spec.name} level {K.level}"
    for v in K.vertices:
        extra = v.name or (f"m{v.macroedge}:{v.index}" if v.macroedge is not None else "")
        yield f"vertex {v.id} {v.kind} {v.level} {_fmt(v.pos[0])} {_fmt(v.pos[1])} {extra}".rstrip()
    for (u, w), mid in sorted(K.edges.items()):
        yield f"edge {u} {w} {K.macroedges[mid].level} m{mid}"
    for t in K.tiles:
        yield f"tile {format_address(t.address)} {' '.join(map(str, t.corners))}"
    for me, chain in zip(K.macroedges, K.chains):
        yield (f"macroedge {me.id} {me.edge_type} {me.level} owner {format_address(me.owner)} "
               f"chain {' '.join(map(str, chain))}")


def dump_complex(K: Complex) -> str:
    return "\n".join(dump_lines(K)) + "\n"


__all__ = [
    "Address", "Complex", "LocalFinitenessReport", "MacroedgeRecord", "NoTileError",
    "ResourceLimitError", "SubcomplexRecord", "TileRecord", "VertexRecord", "build_complex",
    "build_levels", "dump_complex", "format_address", "level_zero", "local_finiteness_report",
    "subdivide",
]
