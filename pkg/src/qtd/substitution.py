"""Tile substitutions: parsing, validation and the bundled corpus.

A substitution subdivides an oriented square into ``k`` oriented quadrilateral
tiles.  The outer square carries ``s`` equally spaced vertices on each side;
these and the four corners are implicit and get fixed ids::

    TL  U1 .. Us  TR
    Ls            R1
    ..            ..
    L1            Rs
    BL  Ds .. D1  BR

Side vertices are numbered clockwise starting from the side's clockwise-first
corner.  Tile corners are listed clockwise starting from the tile's top-left
corner, so side ``j`` of a tile runs from corner ``j`` to corner ``j + 1``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from importlib import resources
from typing import Iterable

import yaml

SIDES = ("top", "right", "bottom", "left")
CORNERS = ("TL", "TR", "BR", "BL")
SIDE_PREFIX = {"top": "U", "right": "R", "bottom": "D", "left": "L"}
SIDE_OF_PREFIX = {v: k for k, v in SIDE_PREFIX.items()}


class SubstitutionSyntaxError(ValueError):
    """Malformed substitution document (bad structure, ids or references)."""


Position = tuple[Fraction, Fraction]


@dataclass(frozen=True)
class TileTemplate:
    tile_type: int
    corners: tuple[str, str, str, str]

    def side(self, j: int) -> tuple[str, str]:
        return self.corners[j], self.corners[(j + 1) % 4]

    def side_of(self, a: str, b: str) -> int | None:
        """Index of the side joining ``a`` and ``b`` (either direction)."""
        for j in range(4):
            if set(self.side(j)) == {a, b}:
                return j
        return None


@dataclass(frozen=True)
class InternalEdgeTemplate:
    edge_type: int
    ends: tuple[str, str]
    first_side_tile: int
    second_side_tile: int | None = None


@dataclass
class Violation:
    condition: str
    description: str
    elements: tuple[str, ...] = ()


@dataclass
class ValidationReport:
    violations: list[Violation] = field(default_factory=list)
    corner_condition: bool = False

    @property
    def ok(self) -> bool:
        return not self.violations

    def to_text(self) -> str:
        lines = [f"ok: {str(self.ok).lower()}",
                 f"corner_condition: {str(self.corner_condition).lower()}"]
        for v in self.violations:
            elems = ",".join(v.elements)
            lines.append(f"violation [{v.condition}] {v.description} ({elems})")
        return "\n".join(lines) + "\n"


@dataclass
class SubstitutionSpec:
    name: str
    s: int
    internal_vertices: dict[str, Position]
    tiles: list[TileTemplate]
    internal_edges: list[InternalEdgeTemplate]
    side_counts: dict[str, int] = field(default_factory=dict)
    corner_condition_flag: bool = False

    def __post_init__(self) -> None:
        if not self.side_counts:
            self.side_counts = {side: self.s for side in SIDES}
        self._tile_by_type = {t.tile_type: t for t in self.tiles}
        self._edge_by_type = {e.edge_type: e for e in self.internal_edges}

    # sizes -------------------------------------------------------------

    @property
    def k(self) -> int:
        return len(self.tiles)

    @property
    def v(self) -> int:
        return len(self.internal_vertices)

    @property
    def r(self) -> int:
        return len(self.internal_edges)

    @property
    def boss_count(self) -> int:
        return 4 * self.s + 4

    # vertex bookkeeping --------------------------------------------------

    def side_vertex_ids(self, side: str) -> list[str]:
        return [f"{SIDE_PREFIX[side]}{i}" for i in range(1, self.side_counts[side] + 1)]

    def perimeter(self) -> list[str]:
        """Perimeter vertex ids clockwise from TL; this is also the boss order."""
        out: list[str] = []
        for j, side in enumerate(SIDES):
            out.append(CORNERS[j])
            out.extend(self.side_vertex_ids(side))
        return out

    def vertex_ids(self) -> list[str]:
        return self.perimeter() + list(self.internal_vertices)

    def is_perimeter(self, vid: str) -> bool:
        return vid in CORNERS or (vid[:1] in SIDE_OF_PREFIX and vid[1:].isdigit())

    def position(self, vid: str) -> Position:
        if vid in self.internal_vertices:
            return self.internal_vertices[vid]
        unit = {"TL": (0, 0), "TR": (1, 0), "BR": (1, 1), "BL": (0, 1)}
        if vid in unit:
            x, y = unit[vid]
            return Fraction(x), Fraction(y)
        side = SIDE_OF_PREFIX[vid[0]]
        i = Fraction(int(vid[1:]), self.side_counts[side] + 1)
        j = SIDES.index(side)
        (x0, y0), (x1, y1) = unit[CORNERS[j]], unit[CORNERS[(j + 1) % 4]]
        return x0 + (x1 - x0) * i, y0 + (y1 - y0) * i

    def tile(self, tile_type: int) -> TileTemplate:
        return self._tile_by_type[tile_type]

    def edge(self, edge_type: int) -> InternalEdgeTemplate:
        return self._edge_by_type[edge_type]

    def perimeter_segments(self) -> set[frozenset[str]]:
        per = self.perimeter()
        return {frozenset((per[i], per[(i + 1) % len(per)])) for i in range(len(per))}

    def tile_sides(self) -> dict[frozenset[str], list[tuple[int, int]]]:
        """Map each tile side (unordered) to the (tile type, side index) pairs using it."""
        sides: dict[frozenset[str], list[tuple[int, int]]] = {}
        for t in self.tiles:
            for j in range(4):
                sides.setdefault(frozenset(t.side(j)), []).append((t.tile_type, j))
        return sides

    def oriented_edge(self, edge_type: int) -> tuple[str, str, int, int, int]:
        """Canonical direction of an internal edge plus its flanking sides.

        Returns ``(start, end, first_tile, first_side, second_side)`` with
        ``start -> end`` the clockwise traversal of the first-side tile, i.e.
        the first half-plane lies on the right.
        """
        e = self.edge(edge_type)
        t1 = self.tile(e.first_side_tile)
        x = t1.side_of(*e.ends)
        t2 = self.tile(e.second_side_tile)
        y = t2.side_of(*e.ends)
        a, b = t1.side(x)
        return a, b, t1.tile_type, x, y

    def is_grid(self) -> int | None:
        """Return m when the substitution is combinatorially the m x m grid."""
        m = self.s + 1
        if self.k != m * m or self.v != self.s * self.s:
            return None
        sides = self.tile_sides()
        if len(sides) != 2 * m * (m + 1):
            return None
        degree: dict[str, int] = {}
        for side in sides:
            for vid in side:
                degree[vid] = degree.get(vid, 0) + 1
        if any(degree[v] != 4 for v in self.internal_vertices):
            return None
        return m


# parsing ------------------------------------------------------------------


def _number(value: object, where: str) -> Fraction:
    if isinstance(value, bool):
        raise SubstitutionSyntaxError(f"{where}: expected a number, got {value!r}")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, float):
        # yaml already turned "0.5" into a float; its repr is the decimal literal
        return Fraction(repr(value))
    if isinstance(value, str):
        try:
            return Fraction(value.strip())
        except ValueError:
            pass
    raise SubstitutionSyntaxError(f"{where}: expected a decimal or p/q, got {value!r}")


def _require(mapping: object, key: str, where: str) -> object:
    if not isinstance(mapping, dict) or key not in mapping:
        raise SubstitutionSyntaxError(f"{where}: missing key {key!r}")
    return mapping[key]


def parse_substitution(text: str) -> SubstitutionSpec:
    """Parse a substitution document (YAML) into a :class:`SubstitutionSpec`."""
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f"line {mark.line + 1}, column {mark.column + 1}" if mark else "unknown position"
        raise SubstitutionSyntaxError(f"syntax error at {where}: {exc}") from exc
    if not isinstance(doc, dict):
        raise SubstitutionSyntaxError("document root must be a mapping")

    name = str(_require(doc, "name", "document"))
    raw_s = _require(doc, "side_vertices", "document")
    if isinstance(raw_s, dict):
        side_counts = {}
        for side in SIDES:
            c = _require(raw_s, side, "side_vertices")
            if not isinstance(c, int) or c < 0:
                raise SubstitutionSyntaxError(f"side_vertices.{side}: expected integer >= 0")
            side_counts[side] = c
        s = max(side_counts.values())
    elif isinstance(raw_s, int) and not isinstance(raw_s, bool) and raw_s >= 0:
        s = raw_s
        side_counts = {side: s for side in SIDES}
    else:
        raise SubstitutionSyntaxError("side_vertices: expected integer >= 0 or per-side mapping")

    internal: dict[str, Position] = {}
    for n, item in enumerate(doc.get("internal_vertices") or []):
        where = f"internal_vertices[{n}]"
        vid = str(_require(item, "id", where))
        pos = _require(item, "pos", where)
        if not isinstance(pos, (list, tuple)) or len(pos) != 2:
            raise SubstitutionSyntaxError(f"{where}.pos: expected [x, y]")
        if vid in internal:
            raise SubstitutionSyntaxError(f"{where}: duplicate vertex id {vid!r}")
        internal[vid] = (_number(pos[0], where), _number(pos[1], where))

    perimeter_ids = set(CORNERS)
    for side in SIDES:
        perimeter_ids.update(f"{SIDE_PREFIX[side]}{i}" for i in range(1, side_counts[side] + 1))
    clash = perimeter_ids & set(internal)
    if clash:
        raise SubstitutionSyntaxError(f"internal vertex ids clash with implicit ids: {sorted(clash)}")
    known = perimeter_ids | set(internal)

    tiles: list[TileTemplate] = []
    seen_tiles: set[int] = set()
    for n, item in enumerate(_require(doc, "tiles", "document") or []):
        where = f"tiles[{n}]"
        ttype = _require(item, "type", where)
        corners = _require(item, "corners", where)
        if not isinstance(ttype, int):
            raise SubstitutionSyntaxError(f"{where}.type: expected integer")
        if not isinstance(corners, (list, tuple)) or len(corners) != 4:
            raise SubstitutionSyntaxError(f"{where}.corners: expected exactly 4 vertex ids")
        corners = tuple(str(c) for c in corners)
        for c in corners:
            if c not in known:
                raise SubstitutionSyntaxError(f"{where}: dangling vertex reference {c!r}")
        if ttype in seen_tiles:
            raise SubstitutionSyntaxError(f"{where}: duplicate tile type {ttype}")
        seen_tiles.add(ttype)
        tiles.append(TileTemplate(ttype, corners))  # type: ignore[arg-type]

    by_type = {t.tile_type: t for t in tiles}
    edges: list[InternalEdgeTemplate] = []
    seen_edges: set[int] = set()
    for n, item in enumerate(doc.get("internal_edges") or []):
        where = f"internal_edges[{n}]"
        etype = _require(item, "type", where)
        ends = _require(item, "ends", where)
        first = _require(item, "first_side", where)
        if not isinstance(etype, int) or not isinstance(first, int):
            raise SubstitutionSyntaxError(f"{where}: type and first_side must be integers")
        if not isinstance(ends, (list, tuple)) or len(ends) != 2:
            raise SubstitutionSyntaxError(f"{where}.ends: expected 2 vertex ids")
        ends = (str(ends[0]), str(ends[1]))
        for c in ends:
            if c not in known:
                raise SubstitutionSyntaxError(f"{where}: dangling vertex reference {c!r}")
        if first not in by_type:
            raise SubstitutionSyntaxError(f"{where}: first_side references unknown tile {first}")
        if etype in seen_edges:
            raise SubstitutionSyntaxError(f"{where}: duplicate edge type {etype}")
        seen_edges.add(etype)
        second = None
        for t in tiles:
            if t.tile_type != first and t.side_of(*ends) is not None:
                second = t.tile_type
                break
        edges.append(InternalEdgeTemplate(etype, ends, first, second))  # type: ignore[arg-type]

    spec = SubstitutionSpec(name=name, s=s, internal_vertices=internal, tiles=tiles,
                            internal_edges=edges, side_counts=side_counts)
    spec.corner_condition_flag = _corner_condition(spec)
    return spec


def _fmt(q: Fraction) -> str:
    return str(q.numerator) if q.denominator == 1 else f"{q.numerator}/{q.denominator}"


def serialize_substitution(spec: SubstitutionSpec) -> str:
    if len(set(spec.side_counts.values())) == 1:
        side_vertices: object = spec.s
    else:
        side_vertices = dict(spec.side_counts)
    doc = {
        "name": spec.name,
        "side_vertices": side_vertices,
        "internal_vertices": [{"id": vid, "pos": [_fmt(x), _fmt(y)]}
                              for vid, (x, y) in spec.internal_vertices.items()],
        "tiles": [{"type": t.tile_type, "corners": list(t.corners)} for t in spec.tiles],
        "internal_edges": [{"type": e.edge_type, "ends": list(e.ends), "first_side": e.first_side_tile}
                           for e in spec.internal_edges],
    }
    return yaml.safe_dump(doc, sort_keys=False, default_flow_style=None)


# validation ---------------------------------------------------------------


def _corner_condition(spec: SubstitutionSpec) -> bool:
    # only the top and left sides may meet the top-left corner
    return sum("TL" in t.corners for t in spec.tiles) == 1


def _signed_area(points: list[Position]) -> Fraction:
    total = Fraction(0)
    for i, (x0, y0) in enumerate(points):
        x1, y1 = points[(i + 1) % len(points)]
        total += x0 * y1 - x1 * y0
    return total


def validate_substitution(spec: SubstitutionSpec) -> ValidationReport:
    """Check the structural conditions a substitution must satisfy.

    Violations are returned as report entries.  The top-left corner condition
    is reported through ``corner_condition`` only.
    """
    report = ValidationReport()
    add = report.violations.append

    # condition 3: equal, equally spaced side vertices
    if len(set(spec.side_counts.values())) != 1:
        counts = ", ".join(f"{k}={v}" for k, v in spec.side_counts.items())
        add(Violation("3", f"sides carry different vertex counts ({counts})", tuple(SIDES)))

    for vid, (x, y) in spec.internal_vertices.items():
        if not (0 < x < 1 and 0 < y < 1):
            add(Violation("position", "internal vertex not strictly inside the unit square", (vid,)))
    by_pos: dict[Position, str] = {}
    for vid in spec.vertex_ids():
        pos = spec.position(vid)
        if pos in by_pos:
            add(Violation("position", "two vertices share a position", (by_pos[pos], vid)))
        by_pos[pos] = vid

    # condition 2: clockwise corner order
    for t in spec.tiles:
        if len(set(t.corners)) != 4:
            add(Violation("2", "tile corners are not distinct", (f"tile{t.tile_type}",)))
            continue
        if _signed_area([spec.position(c) for c in t.corners]) <= 0:
            add(Violation("2", "tile corners are not listed clockwise", (f"tile{t.tile_type}",)))

    # condition 1: side-to-side meeting, no T-junctions
    sides = spec.tile_sides()
    perimeter = spec.perimeter_segments()
    for seg in sorted(perimeter, key=sorted):
        users = sides.get(seg, [])
        if len(users) != 1:
            add(Violation("1", f"perimeter segment used by {len(users)} tiles", tuple(sorted(seg))))
    interior_sides = {}
    for side, users in sides.items():
        if side in perimeter:
            continue
        interior_sides[side] = users
        if len(users) != 2:
            add(Violation("1", f"internal side shared by {len(users)} tiles", tuple(sorted(side))))
    declared = {}
    for e in spec.internal_edges:
        key = frozenset(e.ends)
        declared[key] = e
        if key not in interior_sides or len(interior_sides[key]) != 2:
            add(Violation("1", "declared internal edge is not the common side of two tiles",
                          (f"edge{e.edge_type}", *e.ends)))
        elif e.second_side_tile is None or e.first_side_tile == e.second_side_tile:
            add(Violation("1", "internal edge needs two distinct flanking tiles", (f"edge{e.edge_type}",)))
    for side in interior_sides:
        if side not in declared:
            add(Violation("1", "tile side missing from internal_edges", tuple(sorted(side))))
    n_vertices = len(spec.vertex_ids())
    n_edges = len(perimeter | set(interior_sides))
    if n_vertices - n_edges + spec.k != 1:
        add(Violation("1", f"Euler characteristic {n_vertices - n_edges + spec.k} != 1 for a disc", ()))
    for vid in spec.vertex_ids():
        if not any(vid in t.corners for t in spec.tiles):
            add(Violation("1", "vertex is not a corner of any tile", (vid,)))

    # no chords between perimeter vertices
    for e in spec.internal_edges:
        if all(spec.is_perimeter(x) for x in e.ends):
            add(Violation("chord", "internal edge joins two perimeter vertices", (f"edge{e.edge_type}", *e.ends)))

    # condition 4: 0..3 perimeter corners, two only when adjacent
    for t in spec.tiles:
        on = [j for j, c in enumerate(t.corners) if spec.is_perimeter(c)]
        if len(on) == 4:
            add(Violation("4", "tile touches the boundary with 4 corners", (f"tile{t.tile_type}",)))
        elif len(on) == 2 and (on[1] - on[0]) % 4 == 2:
            add(Violation("4", "tile touches the boundary with two opposite corners", (f"tile{t.tile_type}",)))

    types = sorted(t.tile_type for t in spec.tiles)
    if types != list(range(1, spec.k + 1)):
        add(Violation("numbering", "tile types must be 1..k", ()))
    etypes = sorted(e.edge_type for e in spec.internal_edges)
    if etypes != list(range(1, spec.r + 1)):
        add(Violation("numbering", "internal edge types must be 1..r", ()))

    report.corner_condition = _corner_condition(spec)
    spec.corner_condition_flag = report.corner_condition
    return report


# bundled corpus -----------------------------------------------------------

BUILTIN_NAMES = ("grid2", "grid3", "diamond")


def load_builtin(name: str) -> SubstitutionSpec:
    try:
        text = resources.files("qtd.data").joinpath(f"{name}.yaml").read_text(encoding="utf-8")
    except FileNotFoundError:
        raise KeyError(f"no bundled substitution named {name!r}") from None
    return parse_substitution(text)


def builtin_substitutions() -> list[SubstitutionSpec]:
    return [load_builtin(name) for name in BUILTIN_NAMES]


def resolve_spec(name_or_path: str) -> SubstitutionSpec:
    """A bundled name or a path to a substitution file."""
    if name_or_path in BUILTIN_NAMES:
        return load_builtin(name_or_path)
    with open(name_or_path, encoding="utf-8") as fh:
        return parse_substitution(fh.read())


def grid_document(m: int) -> str:
    """Document text of the m x m grid substitution (used to author the bundled grids)."""
    s = m - 1

    def vid(row: int, col: int) -> str:
        # lattice point (row, col), 0 <= row, col <= m, row grows downwards
        if row == 0:
            return "TL" if col == 0 else "TR" if col == m else f"U{col}"
        if row == m:
            return "BL" if col == 0 else "BR" if col == m else f"D{m - col}"
        if col == 0:
            return f"L{m - row}"
        if col == m:
            return f"R{row}"
        return f"A{(row - 1) * s + col}"

    lines = [f"name: grid{m}", f"side_vertices: {s}", "internal_vertices:"]
    if s == 0:
        lines[-1] += " []"
    for row in range(1, m):
        for col in range(1, m):
            lines.append(f"  - {{id: {vid(row, col)}, pos: [\"{col}/{m}\", \"{row}/{m}\"]}}")
    lines.append("tiles:")
    tile_at = {}
    for row in range(m):
        for col in range(m):
            t = row * m + col + 1
            tile_at[row, col] = t
            corners = [vid(row, col), vid(row, col + 1), vid(row + 1, col + 1), vid(row + 1, col)]
            lines.append(f"  - {{type: {t}, corners: [{', '.join(corners)}]}}")
    lines.append("internal_edges:")
    n = 0
    # horizontal edges (first side: the tile above), then vertical (the tile to the left)
    for row in range(1, m):
        for col in range(m):
            n += 1
            lines.append(f"  - {{type: {n}, ends: [{vid(row, col)}, {vid(row, col + 1)}], "
                         f"first_side: {tile_at[row - 1, col]}}}")
    for col in range(1, m):
        for row in range(m):
            n += 1
            lines.append(f"  - {{type: {n}, ends: [{vid(row, col)}, {vid(row + 1, col)}], "
                         f"first_side: {tile_at[row, col - 1]}}}")
    return "\n".join(lines) + "\n"


def iter_template_ring(spec: SubstitutionSpec, vid: str) -> Iterable[str]:
    """Neighbours of a template vertex, clockwise, from tile adjacency."""
    succ: dict[str, str] = {}
    for t in spec.tiles:
        c = t.corners
        for j in range(4):
            if c[j] == vid:
                # clockwise around vid: from the next corner to the previous one
                succ[c[(j + 1) % 4]] = c[(j - 1) % 4]
    if not succ:
        return []
    starts = set(succ) - set(succ.values())
    cur = min(starts) if starts else min(succ)
    out = [cur]
    while cur in succ and succ[cur] != out[0]:
        cur = succ[cur]
        out.append(cur)
    return out
