"""Vertex colors, full colors, main edges and path encodings on a complex."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence, Union

from .complex import Complex, build_levels
from .substitution import SIDES, SubstitutionSpec


class ColoringError(RuntimeError):
    pass


class PathError(ValueError):
    pass


# vertex types ---------------------------------------------------------------


@dataclass(frozen=True)
class InternalType:
    vertex: str

    def key(self) -> tuple:
        return ("I", self.vertex)


@dataclass(frozen=True)
class SideType:
    """(X, i, Y, j, r): flanking sides, indices along each side, macroedge type."""

    first: str
    i: int
    second: str
    j: int
    edge_type: int

    def key(self) -> tuple:
        return ("S", self.first, self.i, self.second, self.j, self.edge_type)


@dataclass(frozen=True)
class BoundaryType:
    side: str
    i: int

    def key(self) -> tuple:
        return ("B", self.side, self.i)


@dataclass(frozen=True)
class CornerType:
    corner: str

    def key(self) -> tuple:
        return ("C", self.corner)


VertexType = Union[InternalType, SideType, BoundaryType, CornerType]

BRACKETS = ("left", "right", "both", "none")


@dataclass(frozen=True)
class Color:
    vertex_type: VertexType
    three_level: int
    bracket: str

    def key(self) -> tuple:
        return (self.vertex_type.key(), self.three_level, self.bracket)


@dataclass(frozen=True)
class FullColor:
    own: Color
    bosses: tuple[Color, ...]

    def key(self) -> tuple:
        return (self.own.key(), tuple(b.key() for b in self.bosses))


@dataclass(frozen=True)
class EdgeIndexPair:
    """Ring positions of an edge at its tail (out) and head (in).

    ``out_main``/``in_main`` are 0 for a non-main edge, otherwise the rank of
    the edge among the main edges at that end (1 = first main edge).
    """

    out_index: int
    in_index: int
    out_main: int
    in_main: int

    def reversed(self) -> "EdgeIndexPair":
        return EdgeIndexPair(self.in_index, self.out_index, self.in_main, self.out_main)

    def key(self) -> tuple:
        return (self.out_index, self.in_index, self.out_main, self.in_main)


@dataclass(frozen=True)
class PathEncoding:
    vertices: tuple[FullColor, ...]
    edges: tuple[EdgeIndexPair, ...]

    def __post_init__(self) -> None:
        if len(self.edges) != max(len(self.vertices) - 1, 0):
            raise ValueError("a path encoding needs one edge fewer than vertices")

    def reversed(self) -> "PathEncoding":
        return PathEncoding(self.vertices[::-1], tuple(e.reversed() for e in self.edges[::-1]))

    def key(self) -> tuple:
        out: list = []
        for i, fc in enumerate(self.vertices):
            out.append(fc.key())
            if i < len(self.edges):
                out.append(self.edges[i].key())
        return tuple(out)


# the coloring of one complex ----------------------------------------------------


class Coloring:
    """Colors and ring data of a fixed complex, computed lazily and cached."""

    def __init__(self, K: Complex):
        self.K = K
        self.spec = K.spec
        self._type: dict[int, VertexType] = {}
        self._color: dict[int, Color] = {}
        self._full: dict[int, FullColor] = {}
        self._main: dict[int, tuple[int, ...]] = {}
        self._ring: dict[int, tuple[int, ...]] = {}
        self._chain_pos: dict[int, int] | None = None

    # components ------------------------------------------------------------

    def vertex_type(self, v: int) -> VertexType:
        t = self._type.get(v)
        if t is None:
            t = self._type[v] = _vertex_type(self.K, v)
        return t

    def three_level(self, v: int) -> int:
        gap = self.K.level - self.K.vertices[v].level
        return 1 if gap == 0 else 2 if gap == 1 else 3

    def bracket(self, v: int) -> str:
        rec = self.K.vertices[v]
        if rec.kind not in ("side", "boundary") or self.three_level(v) != 1:
            return "none"
        u, w = rec.between
        left_is_2 = self.three_level(u) == 2
        right_is_2 = self.three_level(w) == 2
        if left_is_2 and right_is_2:
            return "both"
        if right_is_2:
            return "left"
        if left_is_2:
            return "right"
        raise ColoringError(f"fresh side vertex {v} has no second-level neighbour on its macroedge")

    def color(self, v: int) -> Color:
        c = self._color.get(v)
        if c is None:
            c = self._color[v] = Color(self.vertex_type(v), self.three_level(v), self.bracket(v))
        return c

    def bosses(self, v: int) -> tuple[int, ...]:
        return self.K.bosses(v)

    def override_color(self, v: int, color: Color) -> None:
        """Replace the color of ``v``; used to inject faults into checkers."""
        self._color[v] = color
        self._full.clear()

    def full_color(self, v: int) -> FullColor:
        fc = self._full.get(v)
        if fc is None:
            fc = self._full[v] = FullColor(self.color(v), tuple(self.color(b) for b in self.bosses(v)))
        return fc

    # main edges and rings -------------------------------------------------------

    def _chain_position(self, v: int) -> int:
        if self._chain_pos is None:
            pos: dict[int, int] = {}
            for chain in self.K.chains:
                for i, x in enumerate(chain[1:-1], start=1):
                    pos[x] = i
            self._chain_pos = pos
        return self._chain_pos[v]

    def main_edges(self, v: int) -> tuple[int, ...]:
        """Opposite vertices of the main edges at ``v``, first main edge first."""
        m = self._main.get(v)
        if m is not None:
            return m
        K = self.K
        rec = K.vertices[v]
        if rec.kind in ("side", "boundary"):
            chain = K.chains[rec.macroedge]
            i = self._chain_position(v)
            m = (chain[i + 1], chain[i - 1])
        elif rec.kind == "corner":
            j = rec.id  # root corners have ids 0..3 in clockwise order
            m = (K.chains[j][1], K.chains[(j - 1) % 4][-2])
        else:
            mains = []
            for w in K.ring(v):
                me = K.macroedges[K.edge_macroedge(v, w)]
                if me.owner == rec.address and me.level == rec.level:
                    mains.append((me.edge_type, w))
            m = tuple(w for _, w in sorted(mains))
        self._main[v] = m
        return m

    def ordered_ring(self, v: int) -> tuple[int, ...]:
        """Clockwise neighbours of ``v`` starting at the first main edge."""
        r = self._ring.get(v)
        if r is None:
            ring = self.K.ring(v)
            i = ring.index(self.main_edges(v)[0])
            r = self._ring[v] = ring[i:] + ring[:i]
        return r

    def edge_index(self, v: int, w: int) -> int:
        try:
            return self.ordered_ring(v).index(w)
        except ValueError:
            raise PathError(f"{w} is not adjacent to {v}") from None

    def main_rank(self, v: int, w: int) -> int:
        m = self.main_edges(v)
        return m.index(w) + 1 if w in m else 0

    def edge_pair(self, a: int, b: int) -> EdgeIndexPair:
        return EdgeIndexPair(self.edge_index(a, b), self.edge_index(b, a),
                             self.main_rank(a, b), self.main_rank(b, a))

    # paths ---------------------------------------------------------------------

    def encode_path(self, path: Sequence[int]) -> PathEncoding:
        if not path:
            raise PathError("empty path")
        for a, b in zip(path, path[1:]):
            if not self.K.has_edge(a, b):
                raise PathError(f"consecutive vertices {a}, {b} are not joined by a unit edge")
        return PathEncoding(tuple(self.full_color(v) for v in path),
                            tuple(self.edge_pair(a, b) for a, b in zip(path, path[1:])))


def _vertex_type(K: Complex, v: int) -> VertexType:
    rec = K.vertices[v]
    if rec.kind == "internal":
        return InternalType(rec.name)
    if rec.kind == "corner":
        return CornerType(rec.name)
    me = K.macroedges[rec.macroedge]
    if rec.kind == "boundary":
        return BoundaryType(str(me.edge_type), rec.index)
    return SideType(SIDES[me.first[1]], rec.index, SIDES[me.second[1]],
                    K.spec.s + 1 - rec.index, int(me.edge_type))


def coloring(K: Complex) -> Coloring:
    """Shared coloring context of ``K`` (one per complex)."""
    ctx = K._cache.get("coloring")
    if ctx is None:
        ctx = K._cache["coloring"] = Coloring(K)
    return ctx


# module-level conveniences mirroring the operations -------------------------------


def vertex_type(K: Complex, v: int) -> VertexType:
    return coloring(K).vertex_type(v)


def three_level(K: Complex, v: int) -> int:
    return coloring(K).three_level(v)


def bracket_orientation(K: Complex, v: int) -> str:
    return coloring(K).bracket(v)


def bosses(K: Complex, v: int) -> tuple[int, ...]:
    return K.bosses(v)


def color(K: Complex, v: int) -> Color:
    return coloring(K).color(v)


def full_color(K: Complex, v: int) -> FullColor:
    return coloring(K).full_color(v)


def main_edges(K: Complex, v: int) -> tuple[int, ...]:
    return coloring(K).main_edges(v)


def edge_index(K: Complex, v: int, w: int) -> int:
    return coloring(K).edge_index(v, w)


def encode_path(K: Complex, path: Sequence[int]) -> PathEncoding:
    return coloring(K).encode_path(path)


# consequences of the definitions ----------------------------------------------------


@dataclass
class ConsequenceReport:
    directed_edges: int = 0
    nonmain_edges: int = 0
    main_main_edges: int = 0
    nonmain_not_main_at_head: int = 0  # (a)
    nonmain_tail_not_boss: int = 0  # (b), membership half
    nonmain_tail_not_older: int = 0  # (b), strict level half
    nonmain_tail_same_level: int = 0  # how many (b)-level failures are ties
    mainmain_boss_mismatch: int = 0  # (c)
    mainmain_different_macroedge: int = 0

    def merge(self, other: "ConsequenceReport") -> "ConsequenceReport":
        return ConsequenceReport(**{k: getattr(self, k) + getattr(other, k) for k in vars(self)})


def check_consequences(K: Complex) -> ConsequenceReport:
    ctx = coloring(K)
    rep = ConsequenceReport()
    for a in range(len(K.vertices)):
        for b in K.ring(a):
            rep.directed_edges += 1
            out_main = ctx.main_rank(a, b)
            in_main = ctx.main_rank(b, a)
            if not out_main:
                rep.nonmain_edges += 1
                if not in_main:
                    rep.nonmain_not_main_at_head += 1
                if a not in ctx.bosses(b):
                    rep.nonmain_tail_not_boss += 1
                la, lb = K.vertices[a].level, K.vertices[b].level
                if not la < lb:
                    rep.nonmain_tail_not_older += 1
                    rep.nonmain_tail_same_level += la == lb
            if out_main and in_main:
                rep.main_main_edges += 1
                if ctx.bosses(a) != ctx.bosses(b):
                    rep.mainmain_boss_mismatch += 1
                ka, kb = K.vertices[a], K.vertices[b]
                me = K.edge_macroedge(a, b)
                if ka.kind in ("side", "boundary") and ka.macroedge != me or \
                        kb.kind in ("side", "boundary") and kb.macroedge != me:
                    rep.mainmain_different_macroedge += 1
    return rep


# census ------------------------------------------------------------------------------


@dataclass
class CensusReport:
    spec: str
    levels: list[int]
    colors: list[int]
    full_colors: list[int]
    stabilization: int | None
    nested: list[bool]  # census(n) <= census(n+1)

    def to_text(self) -> str:
        lines = [f"census {self.spec}"]
        for n, c, f in zip(self.levels, self.colors, self.full_colors):
            lines.append(f"level {n} colors {c} full_colors {f}")
        lines.append(f"stabilization {self.stabilization if self.stabilization is not None else 'none'}")
        return "\n".join(lines) + "\n"


def full_color_set(K: Complex) -> set[FullColor]:
    ctx = coloring(K)
    return {ctx.full_color(v) for v in range(len(K.vertices))}


def color_census(spec: SubstitutionSpec, n_max: int,
                 complexes: Iterable[Complex] | None = None) -> CensusReport:
    if n_max < 3:
        raise ValueError("n_max must be >= 3")
    Ks = list(complexes) if complexes is not None else build_levels(spec, n_max)[1:]
    Ks = [K for K in Ks if 1 <= K.level <= n_max]
    color_sets, full_sets = [], []
    for K in Ks:
        ctx = coloring(K)
        color_sets.append({ctx.color(v) for v in range(len(K.vertices))})
        full_sets.append(full_color_set(K))
    stab = None
    for i in range(len(Ks) - 1):
        if all(full_sets[j] == full_sets[i] for j in range(i, len(Ks))):
            stab = Ks[i].level
            break
    nested = [full_sets[i] <= full_sets[i + 1] for i in range(len(Ks) - 1)]
    return CensusReport(spec.name, [K.level for K in Ks], [len(c) for c in color_sets],
                        [len(f) for f in full_sets], stab, nested)


# serialization ----------------------------------------------------------------------


def type_from_key(key: tuple) -> VertexType:
    tag, *rest = key
    if tag == "I":
        return InternalType(*rest)
    if tag == "S":
        return SideType(*rest)
    if tag == "B":
        return BoundaryType(*rest)
    if tag == "C":
        return CornerType(*rest)
    raise ValueError(f"unknown vertex type tag {tag!r}")


def color_from_key(key: tuple) -> Color:
    vt, level3, bracket = key
    if bracket not in BRACKETS or level3 not in (1, 2, 3):
        raise ValueError(f"malformed color {key!r}")
    return Color(type_from_key(vt), level3, bracket)


def full_color_from_key(key: tuple) -> FullColor:
    own, bosses = key
    return FullColor(color_from_key(own), tuple(color_from_key(b) for b in bosses))


def edge_pair_from_key(key: tuple) -> EdgeIndexPair:
    return EdgeIndexPair(*key)


def color_annex(K: Complex) -> str:
    """One line per vertex: its full color as a nested tuple with fixed field order."""
    ctx = coloring(K)
    return "".join(f"color {v} {ctx.full_color(v).key()!r}\n" for v in range(len(K.vertices)))
