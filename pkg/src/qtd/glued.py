"""Complexes with glued tiles, spatial path encodings and path straightening.

A glued complex is a union of flat components.  Component 0 is the root
square; every glued tile starts a new component whose left and top sides
are sewn onto existing edges.  Each component is an ordinary ``Complex`` in
its own local numbering, and vertices shared along seams get one global id.
"""
from __future__ import annotations

import json
import random
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .coloring import Color, EdgeIndexPair, FullColor, coloring
from .complex import Complex, ResourceLimitError, level_zero, max_vertices_from_env, subdivide
from .determinism import is_special, recover_tile_type
from .substitution import SubstitutionSpec
from .templates import Slot, template_rings


class GlueError(ValueError):
    pass


class AlternationError(AssertionError):
    pass


class StraightenError(RuntimeError):
    pass


class InconclusiveError(StraightenError):
    """A search ran out of budget; this is not a refutation."""


OPEN, CLOSE, FLAT = "open", "close", "flat"


@dataclass
class Component:
    index: int
    K: Complex
    created: int
    core: int | None = None
    to_global: list[int] = field(default_factory=list)

    def __post_init__(self) -> None:
        self.to_local = {g: i for i, g in enumerate(self.to_global)}

    def local(self, v: int) -> int | None:
        return self.to_local.get(v)


@dataclass(frozen=True)
class GluedTile:
    component: int
    level: int
    corners: tuple[int, int, int, int]  # A, B, C, D; B is the core


@dataclass
class GluedComplex:
    spec: SubstitutionSpec
    level: int
    components: list[Component]
    vertex_base: list[int]
    vertex_level: list[int]
    seams: list[tuple[int, int, int, int, int, int]]  # old comp, u, w, new comp, u', w'
    glued_tiles: list[GluedTile] = field(default_factory=list)
    max_vertices: int = 0
    _cache: dict = field(default_factory=dict, repr=False)

    # global graph ------------------------------------------------------------------

    @property
    def num_vertices(self) -> int:
        return len(self.vertex_base)

    @property
    def edge_component(self) -> dict[tuple[int, int], int]:
        """Sorted global edge -> the earliest component containing it."""
        if "edges" not in self._cache:
            out: dict[tuple[int, int], int] = {}
            for comp in self.components:
                g = comp.to_global
                for (u, w) in comp.K.edges:
                    key = (g[u], g[w]) if g[u] < g[w] else (g[w], g[u])
                    out.setdefault(key, comp.index)
            self._cache["edges"] = out
        return self._cache["edges"]

    @property
    def adjacency(self) -> list[list[int]]:
        if "adj" not in self._cache:
            adj: list[set[int]] = [set() for _ in range(self.num_vertices)]
            for u, w in self.edge_component:
                adj[u].add(w)
                adj[w].add(u)
            self._cache["adj"] = [sorted(x) for x in adj]
        return self._cache["adj"]

    @property
    def tiles(self) -> list[tuple[int, int, tuple[int, int, int, int]]]:
        """(component, local tile index, global corners) for every tile."""
        if "tiles" not in self._cache:
            out = []
            for comp in self.components:
                g = comp.to_global
                for ti, t in enumerate(comp.K.tiles):
                    out.append((comp.index, ti, tuple(g[c] for c in t.corners)))
            self._cache["tiles"] = out
        return self._cache["tiles"]

    @property
    def corner_paths(self) -> dict[tuple[int, int, int], list[tuple[int, int, int]]]:
        """(A, B, C) consecutive on a tile -> [(component, tile, D)]."""
        if "corner_paths" not in self._cache:
            out: dict[tuple[int, int, int], list[tuple[int, int, int]]] = {}
            for ci, ti, c in self.tiles:
                for j in range(4):
                    for d in (1, -1):
                        key = (c[(j - d) % 4], c[j], c[(j + d) % 4])
                        out.setdefault(key, []).append((ci, ti, c[(j + 2) % 4]))
            self._cache["corner_paths"] = out
        return self._cache["corner_paths"]

    def has_edge(self, u: int, w: int) -> bool:
        return ((u, w) if u < w else (w, u)) in self.edge_component

    def edge_comp(self, u: int, w: int) -> int:
        return self.edge_component[(u, w) if u < w else (w, u)]

    def counts(self) -> dict[str, int]:
        return {
            "level": self.level,
            "vertices": self.num_vertices,
            "edges": len(self.edge_component),
            "tiles": len(self.tiles),
            "components": len(self.components),
            "glued_tiles": len(self.glued_tiles),
        }

    def flip_options(self, a: int, b: int, c: int) -> list[int]:
        return sorted({d for _, _, d in self.corner_paths.get((a, b, c), ())})


# construction ----------------------------------------------------------------------------


def glued_level_zero(spec: SubstitutionSpec, max_vertices: int | None = None) -> GluedComplex:
    cap = max_vertices if max_vertices is not None else max_vertices_from_env()
    K = level_zero(spec, cap)
    return GluedComplex(spec, 0, [Component(0, K, 0, None, [0, 1, 2, 3])],
                        [0, 0, 0, 0], [0, 0, 0, 0], [], [], cap)


def glue_step(G: GluedComplex) -> GluedComplex:
    """Add a tile ABCD for every path A-B-C with B one level older than A and C and no cell on it.

    AB becomes the left side and BC the top side of the new tile, so B is its
    top-left corner (the core), C the top-right, A the bottom-left and the new
    vertex D the bottom-right corner.
    """
    if not G.spec.corner_condition_flag:
        raise GlueError(f"substitution {G.spec.name} violates the corner condition; gluing is undefined")
    n = G.level
    lv = G.vertex_level
    adj = G.adjacency
    cells = G.corner_paths
    found = []
    for b in range(G.num_vertices):
        if lv[b] != n - 1:
            continue
        # one tile per unordered pair; A precedes C in B's clockwise ring within its base
        ring = _base_ring(G, b)
        near = sorted((x for x in adj[b] if lv[x] == n), key=lambda x: (ring.get(x, len(ring)), x))
        for i, a in enumerate(near):
            for c in near[i + 1:]:
                if (a, b, c) not in cells and (c, b, a) not in cells:
                    found.append((a, b, c))
    if G.num_vertices + len(found) > G.max_vertices:
        raise ResourceLimitError(f"gluing needs {G.num_vertices + len(found)} vertices, cap is {G.max_vertices}")
    comps = list(G.components)
    base, level = list(G.vertex_base), list(G.vertex_level)
    seams = list(G.seams)
    glued = list(G.glued_tiles)
    for a, b, c in found:
        ci = len(comps)
        d = len(base)
        base.append(ci)
        level.append(n)
        comp = Component(ci, level_zero(G.spec, G.max_vertices), n, b, [b, c, d, a])
        comps.append(comp)
        for (u, w), (lu, lw) in (((a, b), (3, 0)), ((b, c), (0, 1))):
            old = comps[G.edge_comp(u, w)]
            seams.append((old.index, old.to_local[u], old.to_local[w], ci, lu, lw))
        glued.append(GluedTile(ci, n, (a, b, c, d)))
    return GluedComplex(G.spec, n, comps, base, level, seams, glued, G.max_vertices)


def _base_ring(G: GluedComplex, b: int) -> dict[int, int]:
    comp = G.components[G.vertex_base[b]]
    ring = coloring(comp.K).ordered_ring(comp.to_local[b]) if comp.K.level else comp.K.ring(comp.to_local[b])
    return {comp.to_global[w]: i for i, w in enumerate(ring)}


def _inserted(K_old: Complex, K_new: Complex) -> dict[tuple[int, int], list[int]]:
    ins: dict[tuple[int, int], list[int]] = {}
    for v in range(len(K_old.vertices), len(K_new.vertices)):
        rec = K_new.vertices[v]
        if rec.between is not None:
            ins.setdefault(rec.between, []).append(v)
    return ins


def _along(ins: dict[tuple[int, int], list[int]], u: int, w: int) -> list[int]:
    if (u, w) in ins:
        return ins[(u, w)]
    return ins[(w, u)][::-1]


def subdivide_glued(G: GluedComplex) -> GluedComplex:
    n = G.level + 1
    base, level = list(G.vertex_base), list(G.vertex_level)
    new_K = [subdivide(c.K) for c in G.components]
    ins = [_inserted(c.K, K2) for c, K2 in zip(G.components, new_K)]
    maps = [list(c.to_global) + [-1] * (len(K2.vertices) - len(c.K.vertices))
            for c, K2 in zip(G.components, new_K)]
    by_new: dict[int, list[tuple]] = {}
    for seam in G.seams:
        by_new.setdefault(seam[3], []).append(seam)
    new_seams = []
    for ci, comp in enumerate(G.components):
        for co, u, w, _, u2, w2 in by_new.get(ci, ()):
            old_chain = [u] + _along(ins[co], u, w) + [w]
            new_chain = [u2] + _along(ins[ci], u2, w2) + [w2]
            for x, y in zip(old_chain[1:-1], new_chain[1:-1]):
                maps[ci][y] = maps[co][x]
            for i in range(len(old_chain) - 1):
                new_seams.append((co, old_chain[i], old_chain[i + 1], ci, new_chain[i], new_chain[i + 1]))
        for v in range(len(comp.K.vertices), len(new_K[ci].vertices)):
            if maps[ci][v] == -1:
                maps[ci][v] = len(base)
                base.append(ci)
                level.append(n)
        if len(base) > G.max_vertices:
            raise ResourceLimitError(f"glued level {n} exceeds the vertex cap {G.max_vertices}")
    comps = [Component(c.index, K2, c.created, c.core, m) for c, K2, m in zip(G.components, new_K, maps)]
    return GluedComplex(G.spec, n, comps, base, level, new_seams, list(G.glued_tiles), G.max_vertices)


def build_glued(spec: SubstitutionSpec, n: int, max_vertices: int | None = None) -> GluedComplex:
    """Glued complex of level n: alternately glue and subdivide, starting from the square."""
    if n < 1:
        raise ValueError("glued complexes start at level 1")
    if not spec.corner_condition_flag:
        raise GlueError(f"substitution {spec.name} violates the corner condition; gluing is undefined")
    G = glued_level_zero(spec, max_vertices)
    for _ in range(n):
        G = subdivide_glued(glue_step(G))
    return G


def build_glued_levels(spec: SubstitutionSpec, n_max: int, max_vertices: int | None = None) -> list[GluedComplex]:
    out = []
    G = glued_level_zero(spec, max_vertices)
    for _ in range(n_max):
        G = subdivide_glued(glue_step(G))
        out.append(G)
    return out


def dump_glued(G: GluedComplex) -> str:
    lines = [f"glued-complex {G.spec.name} level {G.level}"]
    for c in G.components:
        core = "-" if c.core is None else str(c.core)
        lines.append(f"component {c.index} created {c.created} level {c.K.level} core {core}")
    for v in range(G.num_vertices):
        lines.append(f"vertex {v} base {G.vertex_base[v]} level {G.vertex_level[v]}")
    for (u, w), ci in sorted(G.edge_component.items()):
        lines.append(f"edge {u} {w} component {ci}")
    for ci, ti, c in G.tiles:
        lines.append(f"tile {ci} {ti} corners {' '.join(map(str, c))}")
    for t in G.glued_tiles:
        lines.append(f"glued {t.component} level {t.level} core {t.corners[1]} corners {' '.join(map(str, t.corners))}")
    return "\n".join(lines) + "\n"


# brackets ---------------------------------------------------------------------------------


def classify_edge(G: GluedComplex, u: int, w: int) -> str:
    """open: into a glued component from its border; close: back out; flat otherwise."""
    c = G.edge_comp(u, w)
    bu, bw = G.vertex_base[u], G.vertex_base[w]
    if bw == c and bu != c:
        return OPEN
    if bu == c and bw != c:
        return CLOSE
    return FLAT


def mark_brackets(G: GluedComplex, path: Sequence[int]) -> tuple[str, ...]:
    marks = tuple(classify_edge(G, u, w) for u, w in zip(path, path[1:]))
    for i in range(len(marks) - 1):
        if marks[i] == marks[i + 1] != FLAT:
            c1 = G.edge_comp(path[i], path[i + 1])
            c2 = G.edge_comp(path[i + 1], path[i + 2])
            if c1 == c2:
                raise AlternationError(f"two consecutive {marks[i]} edges at position {i + 1}")
    return marks


def bracket_count(G: GluedComplex, path: Sequence[int]) -> int:
    return sum(m != FLAT for m in mark_brackets(G, path))


# fans, flags and spatial encodings -----------------------------------------------------------


@dataclass(frozen=True)
class Omega:
    base: int
    left: int | None
    right: int | None


def omega(G: GluedComplex, path: Sequence[int], i: int) -> Omega | None:
    if not 0 <= i < len(path):
        return None
    v = path[i]
    left = right = None
    if i > 0 and classify_edge(G, v, path[i - 1]) == OPEN:
        left = G.edge_comp(v, path[i - 1])
    if i + 1 < len(path) and classify_edge(G, v, path[i + 1]) == OPEN:
        right = G.edge_comp(v, path[i + 1])
    return Omega(G.vertex_base[v], left, right)


def fan(G: GluedComplex, path: Sequence[int], i: int) -> tuple[Omega | None, ...]:
    return tuple(omega(G, path, j) for j in range(i - 2, i + 3))


@dataclass(frozen=True)
class SlotColor:
    """Color of a vertex relative to one component; bosses carry generalised types."""

    own: Color
    bosses: tuple[tuple[tuple, int, str], ...]

    def key(self) -> tuple:
        return (self.own.key(), self.bosses)


@dataclass(frozen=True)
class Flag:
    pattern: tuple[int | None, ...]  # component equality pattern over the 15 fan slots
    colors: tuple[SlotColor | None, ...]

    def key(self) -> tuple:
        return (self.pattern, tuple(None if c is None else c.key() for c in self.colors))


def _slots(f: tuple[Omega | None, ...]) -> tuple[int | None, ...]:
    out: list[int | None] = []
    for om in f:
        out.extend((None, None, None) if om is None else (om.base, om.left, om.right))
    return tuple(out)


def _generalized_type(G: GluedComplex, x: int, slots: tuple[int | None, ...]) -> tuple:
    out = []
    for c in slots:
        lx = None if c is None else G.components[c].local(x)
        out.append(None if lx is None else coloring(G.components[c].K).vertex_type(lx).key())
    return tuple(out)


def slot_color(G: GluedComplex, c: int, v: int, slots: tuple[int | None, ...]) -> SlotColor | None:
    cache = G._cache.setdefault("slot_color", {})
    key = (c, v, slots)
    if key not in cache:
        cache[key] = _slot_color(G, c, v, slots)
    return cache[key]


def _slot_color(G: GluedComplex, c: int, v: int, slots: tuple[int | None, ...]) -> SlotColor | None:
    comp = G.components[c]
    lv = comp.local(v)
    if lv is None:
        return None
    ctx = coloring(comp.K)
    own = ctx.color(lv)
    bosses = []
    for lb in comp.K.bosses(lv):
        bc = ctx.color(lb)
        bosses.append((_generalized_type(G, comp.to_global[lb], slots), bc.three_level, bc.bracket))
    return SlotColor(own, tuple(bosses))


def flag(G: GluedComplex, path: Sequence[int], i: int, blank: int | None = None) -> Flag:
    slots = _slots(fan(G, path, i))
    relabel: dict[int, int] = {}
    pattern = tuple(None if c is None else relabel.setdefault(c, len(relabel)) for c in slots)
    colors = []
    for k, c in enumerate(slots):
        colors.append(None if c is None or k == blank else slot_color(G, c, path[i], slots))
    return Flag(pattern, tuple(colors))


@dataclass(frozen=True)
class SpatialEdge:
    mark: str
    pair: EdgeIndexPair

    def key(self) -> tuple:
        return (self.mark, self.pair.key())


@dataclass(frozen=True)
class SpatialEncoding:
    flags: tuple[Flag, ...]
    edges: tuple[SpatialEdge, ...]

    def key(self) -> tuple:
        out: list = []
        for i, f in enumerate(self.flags):
            out.append(f.key())
            if i < len(self.edges):
                out.append(self.edges[i].key())
        return tuple(out)


def spatial_edge(G: GluedComplex, u: int, w: int) -> SpatialEdge:
    comp = G.components[G.edge_comp(u, w)]
    pair = coloring(comp.K).edge_pair(comp.to_local[u], comp.to_local[w])
    return SpatialEdge(classify_edge(G, u, w), pair)


def encode_spatial_path(G: GluedComplex, path: Sequence[int],
                        blank: tuple[int, int] | None = None) -> SpatialEncoding:
    """Flags and edge data along a path.  ``blank=(i, slot)`` empties one slot of the i-th flag."""
    for u, w in zip(path, path[1:]):
        if not G.has_edge(u, w):
            raise ValueError(f"{u} and {w} are not adjacent")
    mark_brackets(G, path)
    flags = tuple(flag(G, path, i, blank[1] if blank is not None and blank[0] == i else None)
                  for i in range(len(path)))
    return SpatialEncoding(flags, tuple(spatial_edge(G, u, w) for u, w in zip(path, path[1:])))


# establishing a cell from the encoding ------------------------------------------------------


_REVERSE = {OPEN: CLOSE, CLOSE: OPEN, FLAT: FLAT}
CENTER, LEFT, RIGHT = 6, 7, 8  # slots of the middle vertex's own Omega in its flag


@dataclass(frozen=True)
class CellVerdict:
    in_cell: bool
    tile_type: int | None
    reason: str


def establish_cell(spec: SubstitutionSpec, enc: SpatialEncoding, i: int = 1) -> CellVerdict:
    """Decide from the encoding whether path vertices i-1, i, i+1 are three corners of a cell."""
    if not 0 < i < len(enc.flags) - 1:
        raise ValueError("the middle vertex needs a neighbour on each side")
    f3, f4, f5 = enc.flags[i - 1], enc.flags[i], enc.flags[i + 1]
    e34, e45 = enc.edges[i - 1], enc.edges[i]
    to3, to5 = _REVERSE[e34.mark], e45.mark
    if to3 == OPEN and to5 == OPEN:
        return CellVerdict(False, None, "both edges enter gluings")
    if to3 != OPEN and to5 != OPEN:
        own = f4.colors[CENTER]
        hit = recover_tile_type(spec, FullColor(own.own, ()), e34.pair.in_index, e45.pair.out_index)
        if hit is not None:
            return CellVerdict(True, hit[0], "flat")
        if own.own.three_level == 3 and to3 == to5 == FLAT:
            # every non-cell pair at a vertex was glued one level after its creation
            return CellVerdict(True, None, "core of a glued tile")
        return CellVerdict(False, None, "flat edges not ring-adjacent")
    # one edge enters a gluing K; the other must run along K's border
    if to5 == OPEN:
        mine, k, main_other = f4.colors[RIGHT], e45.pair.out_index, e34.pair.in_main
        other = f3.colors[9 + 2]  # slot of K in the neighbour's flag
        forward = True
    else:
        mine, k, main_other = f4.colors[LEFT], e34.pair.in_index, e45.pair.out_main
        other = f5.colors[3 + 1]
        forward = False
    if other is None:
        return CellVerdict(False, None, "neighbour outside the gluing")
    if main_other == 0:
        return CellVerdict(False, None, "non-main edge into the border vertex")
    rings = template_rings(spec)
    R = rings.ring(mine.own.vertex_type, mine.own.three_level)
    R_other = rings.ring(other.own.vertex_type, other.own.three_level)
    types = set()
    for j in (0, R.degree - 1):
        if abs(j - k) != 1:
            continue
        a_idx, c_idx = (j, k) if forward else (k, j)
        hit = recover_tile_type(spec, FullColor(mine.own, ()), a_idx, c_idx)
        if hit is None:
            continue
        t, p, d = hit
        p_other = (p + d) % 4 if forward else (p - d) % 4
        if Slot(t, p_other) in R_other.slots:
            types.add(t)
    if not types:
        return CellVerdict(False, None, "no border tile fits")
    if len(types) > 1:
        raise ValueError("encoding fits tiles of several types")
    return CellVerdict(True, types.pop(), "border")


def is_cell(G: GluedComplex, a: int, b: int, c: int) -> bool:
    return (a, b, c) in G.corner_paths


# spatial determinism ---------------------------------------------------------------------


@dataclass
class SpatialReport:
    spec: str
    levels: tuple[int, ...]
    windows: int = 0
    excluded: int = 0
    classes: int = 0
    violations: int = 0
    exemplars: list[tuple] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.violations == 0

    def as_dict(self) -> dict:
        return {"spec": self.spec, "levels": list(self.levels), "windows": self.windows,
                "excluded": self.excluded, "classes": self.classes, "violations": self.violations,
                "exemplars": [list(map(list, e)) for e in self.exemplars]}

    def to_json(self) -> str:
        return json.dumps(self.as_dict(), indent=2, sort_keys=True) + "\n"

    def to_text(self) -> str:
        lines = [f"spatial-determinism spec={self.spec} levels={','.join(map(str, self.levels))}",
                 f"windows {self.windows}", f"excluded {self.excluded}", f"classes {self.classes}",
                 f"violations {self.violations}"]
        for k, (a, b) in enumerate(self.exemplars, 1):
            lines.append(f"exemplar {k}: level {a[0]} path {'-'.join(map(str, a[1:]))}"
                         f" vs level {b[0]} path {'-'.join(map(str, b[1:]))}")
        lines.append("result " + ("ok" if self.ok else "violated"))
        return "\n".join(lines) + "\n"


def spatial_windows(G: GluedComplex) -> Iterable[tuple[tuple[int, ...], int, bool]]:
    """(A2..A6, X, excluded) for every 5-vertex window whose middle three span a cell."""
    adj = G.adjacency
    for ci, ti, c in G.tiles:
        comp = G.components[ci]
        for j in range(4):
            for d in (1, -1):
                a3, a4, a5, x = c[(j - d) % 4], c[j], c[(j + d) % 4], c[(j + 2) % 4]
                excluded = is_special(comp.K, ti, comp.to_local[x])
                for a2 in adj[a3]:
                    if a2 == a4:
                        continue
                    for a6 in adj[a5]:
                        if a6 != a4:
                            yield (a2, a3, a4, a5, a6), x, excluded


def verify_spatial_determinism(levels: Sequence[GluedComplex],
                               blank: tuple[int, int, int] | None = None,
                               max_exemplars: int = 5) -> SpatialReport:
    """Check the window encoding fixes the encoding through the fourth corner.

    ``blank=(level, vertex, slot)`` injects a fault: one fan slot of that
    vertex's flag is emptied wherever the vertex is the completed corner.
    """
    if not levels:
        raise ValueError("no glued complexes given")
    rep = SpatialReport(levels[0].spec.name, tuple(G.level for G in levels))
    groups: dict[tuple, dict[tuple, tuple]] = {}
    for G in levels:
        for window, x, excluded in spatial_windows(G):
            rep.windows += 1
            if excluded:
                rep.excluded += 1
                continue
            key = encode_spatial_path(G, window).key()
            hit = blank is not None and blank[0] == G.level and blank[1] == x
            done = encode_spatial_path(G, (window[0], window[1], x, window[3], window[4]),
                                       (2, blank[2]) if hit else None).key()
            groups.setdefault(key, {}).setdefault(done, (G.level,) + window)
    rep.classes = len(groups)
    for key in sorted(groups, key=repr):
        outcomes = groups[key]
        if len(outcomes) > 1:
            rep.violations += 1
            if len(rep.exemplars) < max_exemplars:
                ex = sorted(outcomes.values())
                rep.exemplars.append((ex[0], ex[1]))
    return rep


# flips, flat regularity and straightening ---------------------------------------------------


@dataclass(frozen=True)
class Flip:
    position: int
    old: int
    new: int


def _on_border(K: Complex, path: Sequence[int]) -> bool:
    if any(K.vertices[v].kind not in ("corner", "boundary") for v in path):
        return False
    return all(K.macroedges[K.edge_macroedge(u, w)].boundary for u, w in zip(path, path[1:]))


def _flat_neighbors(K: Complex, path: tuple[int, ...]) -> Iterable[tuple[int, int]]:
    for i in range(1, len(path) - 1):
        a, b, c = path[i - 1], path[i], path[i + 1]
        ti = K.tile_through(a, b, c)
        if ti is not None:
            corners = K.tiles[ti].corners
            yield i, corners[(corners.index(b) + 2) % 4]


def _bfs(start: tuple[int, ...], moves, goal, budget: int) -> list[Flip] | None:
    """Shortest flip sequence from start to a goal path; None if none; raises when out of budget."""
    if goal(start):
        return []
    parent: dict[tuple[int, ...], tuple[tuple[int, ...], Flip] | None] = {start: None}
    queue = deque([start])
    while queue:
        cur = queue.popleft()
        for i, d in moves(cur):
            nxt = cur[:i] + (d,) + cur[i + 1:]
            if nxt in parent:
                continue
            parent[nxt] = (cur, Flip(i, cur[i], d))
            if goal(nxt):
                seq = []
                node = nxt
                while parent[node] is not None:
                    prev, f = parent[node]
                    seq.append(f)
                    node = prev
                return seq[::-1]
            if len(parent) > budget:
                raise InconclusiveError(f"flip search exceeded {budget} paths")
            queue.append(nxt)
    return None


@dataclass
class FlatRegularity:
    status: str  # regular | not_regular | inconclusive
    paths: int
    exemplar: tuple[int, ...] | None = None

    def __bool__(self) -> bool:
        return self.status == "regular"


def boundary_endpoint_paths(K: Complex, max_len: int) -> Iterable[tuple[int, ...]]:
    """Non-backtracking paths with 1..max_len edges starting and ending on the boundary."""
    border = [v for v in range(len(K.vertices)) if K.vertices[v].kind in ("corner", "boundary")]
    is_border = set(border)

    def extend(path: list[int]):
        if len(path) > 1 and path[-1] in is_border:
            yield tuple(path)
        if len(path) - 1 == max_len:
            return
        for w in K.ring(path[-1]):
            if len(path) > 1 and w == path[-2]:
                continue
            path.append(w)
            yield from extend(path)
            path.pop()

    for v in border:
        yield from extend([v])


def flat_regular_check(K: Complex, max_path_len: int, budget: int = 100_000) -> FlatRegularity:
    """Every boundary-endpoint path up to the bound flips onto the boundary."""
    count = 0
    inconclusive = None
    for p in boundary_endpoint_paths(K, max_path_len):
        count += 1
        try:
            seq = _bfs(p, lambda q: _flat_neighbors(K, q), lambda q: _on_border(K, q), budget)
        except InconclusiveError:
            inconclusive = inconclusive or p
            continue
        if seq is None:
            return FlatRegularity("not_regular", count, p)
    if inconclusive is not None:
        return FlatRegularity("inconclusive", count, inconclusive)
    return FlatRegularity("regular", count)


def _glued_neighbors(G: GluedComplex, path: tuple[int, ...], comp: int | None = None):
    for i in range(1, len(path) - 1):
        for ci, _, d in G.corner_paths.get((path[i - 1], path[i], path[i + 1]), ()):
            if comp is None or ci == comp:
                yield i, d


def in_component(G: GluedComplex, path: Sequence[int], comp: int) -> bool:
    c = G.components[comp]
    if any(c.local(v) is None for v in path):
        return False
    return all(c.K.has_edge(c.to_local[u], c.to_local[w]) for u, w in zip(path, path[1:]))


def apply_flips(G: GluedComplex, path: Sequence[int], flips: Sequence[Flip]) -> tuple[int, ...]:
    """Replay a certificate; every step must be a flip across a real cell."""
    p = list(path)
    for f in flips:
        i = f.position
        if not 0 < i < len(p) - 1 or p[i] != f.old:
            raise StraightenError(f"flip {f} does not apply")
        if f.new not in G.flip_options(p[i - 1], p[i], p[i + 1]):
            raise StraightenError(f"flip {f} is not across a cell")
        p[i] = f.new
    return tuple(p)


@dataclass
class Straightening:
    path: tuple[int, ...]
    flips: list[Flip]
    bracket_counts: list[int]

    def certificate(self) -> str:
        return "".join(f"flip {f.position} {f.old} {f.new}\n" for f in self.flips)


def _innermost_segment(G: GluedComplex, path: Sequence[int]) -> tuple[int, int] | None:
    marks = mark_brackets(G, path)
    last_open = None
    for j, m in enumerate(marks):
        if m == OPEN:
            last_open = j
        elif m == CLOSE and last_open is not None:
            if G.edge_comp(path[last_open], path[last_open + 1]) == G.edge_comp(path[j], path[j + 1]):
                return last_open, j
            last_open = None
    return None


def straighten(G: GluedComplex, path: Sequence[int], target: int, budget: int = 200_000) -> Straightening:
    """An equivalent path inside component ``target`` plus the flips leading to it."""
    path = tuple(path)
    comp = G.components[target]
    if comp.local(path[0]) is None or comp.local(path[-1]) is None:
        raise ValueError("path endpoints must lie in the target component")
    for u, w in zip(path, path[1:]):
        if not G.has_edge(u, w):
            raise ValueError(f"{u} and {w} are not adjacent")
    flips: list[Flip] = []
    counts = [bracket_count(G, path)]
    cur = path
    while not in_component(G, cur, target):
        seg = _innermost_segment(G, cur)
        step: list[Flip] | None = None
        if seg is not None:
            i, j = seg
            inner = G.edge_comp(cur[i], cur[i + 1])
            part = cur[i:j + 2]
            try:
                step = _bfs(part, lambda q: _glued_neighbors(G, q, inner),
                            lambda q: all(G.edge_comp(u, w) != inner for u, w in zip(q, q[1:])), budget)
            except InconclusiveError:
                step = None
            if step is not None:
                step = [Flip(f.position + i, f.old, f.new) for f in step]
        if not step:
            step = _bfs(cur, lambda q: _glued_neighbors(G, q),
                        lambda q: in_component(G, q, target), budget)
            if step is None:
                raise StraightenError("no equivalent path inside the target component")
        cur = apply_flips(G, cur, step)
        flips.extend(step)
        counts.append(bracket_count(G, cur))
    return Straightening(cur, flips, counts)


def sample_paths(G: GluedComplex, count: int, seed: int = 0,
                 max_len: int = 12) -> list[tuple[tuple[int, ...], int]]:
    """Random non-backtracking walks whose endpoints share a component, with that component.

    The target is the lowest-index component holding both endpoints.
    """
    rng = random.Random(seed)
    adj = G.adjacency
    out = []
    while len(out) < count:
        n_edges = rng.randint(1, max_len)
        p = [rng.randrange(G.num_vertices)]
        while len(p) < n_edges + 1:
            nb = [w for w in adj[p[-1]] if len(p) < 2 or w != p[-2]]
            p.append(rng.choice(nb))
        common = [c.index for c in G.components
                  if c.local(p[0]) is not None and c.local(p[-1]) is not None]
        if common:
            out.append((tuple(p), common[0]))
    return out
