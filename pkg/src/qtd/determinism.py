"""Weak determinism of corner paths.

For every tile with corners A, B, C, D (in either direction around the
tile) the encoding of the corner path A-B-C should fix whether D is the
special vertex of the tile and, when it is not, the encoding of A-D-C.
This module checks that claim exhaustively over a set of complexes and also
reconstructs A-D-C from A-B-C using only template data and a table of
neighbour full colors.
"""
from __future__ import annotations

import json
import os
from collections import defaultdict
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Sequence

from .coloring import (
    Color,
    EdgeIndexPair,
    FullColor,
    InternalType,
    PathEncoding,
    VertexType,
    coloring,
)
from .complex import Complex, format_address
from .substitution import CORNERS, SubstitutionSpec
from .templates import Slot, TemplateError, template_rings


class CompletionError(RuntimeError):
    """The path cannot be completed from the data at hand.

    ``reason`` is one of ``gap`` (no lemma route to D's bosses), ``ambiguous``
    (the neighbour table offers several candidates) or ``miss`` (the encoding
    never occurs in the table).
    """

    def __init__(self, reason: str, message: str):
        super().__init__(message)
        self.reason = reason


SPECIAL = "SPECIAL"


# enumeration ---------------------------------------------------------------------


@dataclass(frozen=True)
class CornerPathCase:
    level: int
    address: tuple[int, ...]
    path: tuple[int, int, int]
    opposite: int
    special: bool
    contact: int
    abc: PathEncoding
    adc: PathEncoding | None


def is_special(K: Complex, tile_index: int, v: int) -> bool:
    """True iff ``v`` is strictly older than the other three corners of the tile."""
    corners = K.tiles[tile_index].corners
    lv = K.vertices[v].level
    return all(lv < K.vertices[w].level for w in corners if w != v)


def contact(spec: SubstitutionSpec, tile_type: int) -> int:
    """Number of the tile's corners on the template perimeter."""
    return sum(spec.is_perimeter(x) for x in spec.tile(tile_type).corners)


def enumerate_corner_paths(K: Complex, tile_indices: Iterable[int] | None = None) -> Iterator[CornerPathCase]:
    ctx = coloring(K)
    spec = K.spec
    indices = range(len(K.tiles)) if tile_indices is None else tile_indices
    for ti in indices:
        tile = K.tiles[ti]
        c = tile.corners
        cont = contact(spec, tile.tile_type) if tile.address else 4
        for j in range(4):
            for d in (1, -1):
                a, b, cc, dd = c[(j - d) % 4], c[j], c[(j + d) % 4], c[(j + 2) % 4]
                special = is_special(K, ti, dd)
                yield CornerPathCase(
                    K.level, tile.address, (a, b, cc), dd, special, cont,
                    ctx.encode_path((a, b, cc)),
                    None if special else ctx.encode_path((a, dd, cc)),
                )


# the constructive side -------------------------------------------------------------


class NeighborTable:
    """Observed full colors of edge heads, keyed by the tail's data.

    Key: (tail full color, ring index of the edge at the tail, head type).
    """

    def __init__(self) -> None:
        self._heads: dict[tuple, set[FullColor]] = defaultdict(set)

    def add_complex(self, K: Complex) -> None:
        ctx = coloring(K)
        for (u, w) in K.edges:
            for a, b in ((u, w), (w, u)):
                key = (ctx.full_color(a), ctx.edge_index(a, b), ctx.vertex_type(b))
                self._heads[key].add(ctx.full_color(b))

    def candidates(self, tail: FullColor, out_index: int, head_type: VertexType) -> set[FullColor]:
        return self._heads.get((tail, out_index, head_type), set())

    def __len__(self) -> int:
        return len(self._heads)


def build_neighbor_table(complexes: Iterable[Complex]) -> NeighborTable:
    table = NeighborTable()
    for K in complexes:
        table.add_complex(K)
    return table


def determine_neighbor_full_color(table: NeighborTable, tail: FullColor, out_index: int,
                                  head_type: VertexType, own: Color | None = None) -> FullColor:
    """Full color of the head of a non-main edge, from the tail's full color.

    ``own`` restricts the candidates to a known own color of the head.
    """
    cands = table.candidates(tail, out_index, head_type)
    if own is not None:
        cands = {fc for fc in cands if fc.own == own}
    if not cands:
        raise CompletionError("miss", f"no head of type {head_type} seen at ring index {out_index}")
    boss_lists = {fc.bosses for fc in cands}
    if len(boss_lists) > 1:
        raise CompletionError("ambiguous", f"{len(boss_lists)} boss lists fit the tail data")
    if own is None:
        owns = {fc.own for fc in cands}
        if len(owns) > 1:
            raise CompletionError("ambiguous", f"{len(owns)} own colors fit the tail data")
        own = owns.pop()
    return FullColor(own, boss_lists.pop())


def recover_tile_type(spec: SubstitutionSpec, b: FullColor, index_to_a: int,
                      index_to_c: int) -> tuple[int, int, int] | None:
    """Tile type, B's corner position and orientation of the tile between two ring edges at B.

    The orientation is +1 when A follows B clockwise in the tile.  ``None``
    means the two edges do not bound a common tile.
    """
    R = template_rings(spec).ring(b.own.vertex_type, b.own.three_level)
    found = set()
    if (index_to_a + 1) % R.degree == index_to_c and R.slots[index_to_a] is not None:
        s = R.slots[index_to_a]
        found.add((s.tile_type, s.corner, 1))
    if (index_to_c + 1) % R.degree == index_to_a and R.slots[index_to_c] is not None:
        s = R.slots[index_to_c]
        found.add((s.tile_type, s.corner, -1))
    if not found:
        return None
    if len(found) > 1:
        raise TemplateError("two tiles fit the same pair of ring edges")
    return found.pop()


def _step(index: int, delta: int, degree: int) -> int:
    return (index + delta) % degree


def complete_path(spec: SubstitutionSpec, abc: PathEncoding, table: NeighborTable):
    """Encoding of A-D-C for the tile through the corner path A-B-C.

    Returns ``SPECIAL`` when D is the special vertex of the tile and ``None``
    when A-B-C is not a corner path of any tile.  Raises CompletionError when
    D's bosses cannot be pinned down.
    """
    if len(abc.vertices) != 3:
        raise ValueError("a corner path has three vertices")
    fa, fb, fc = abc.vertices
    ab, bc = abc.edges
    hit = recover_tile_type(spec, fb, ab.in_index, bc.out_index)
    if hit is None:
        return None
    t, pb, d = hit
    x = spec.tile(t).corners
    xa, xc, xd = x[(pb + d) % 4], x[(pb - d) % 4], x[(pb + 2) % 4]
    pd = (pb + 2) % 4
    template_corners = [y for y in x if y in CORNERS]
    if len(template_corners) == 1 and xd in CORNERS:
        return SPECIAL

    rings = template_rings(spec)
    Ra = rings.ring(fa.own.vertex_type, fa.own.three_level)
    Rc = rings.ring(fc.own.vertex_type, fc.own.three_level)
    ad_out = _step(ab.out_index, -d, Ra.degree)
    cd_out = _step(bc.in_index, d, Rc.degree)

    # D is fresh, so its color and ring come from the parent's template
    perimeter = spec.perimeter()
    parent_bosses = None
    for fv, xv in ((fa, xa), (fb, x[pb]), (fc, xc)):
        if not spec.is_perimeter(xv):
            parent_bosses = fv.bosses
            break
    if spec.is_perimeter(xd):
        if parent_bosses is not None:
            own = parent_bosses[perimeter.index(xd)]
        else:
            own = None
    else:
        own = Color(InternalType(xd), 1, "none")

    d_type = own.vertex_type if own is not None else _perimeter_type(spec, table, fa, ad_out, fc, cd_out)
    Rd = rings.ring(d_type, 1)
    ks = [k for k, s in enumerate(Rd.slots) if s == Slot(t, pd)]
    if len(ks) != 1:
        raise TemplateError(f"tile {t} occurs {len(ks)} times around {d_type}")
    k = ks[0]
    da_in, dc_in = (_step(k, 1, Rd.degree), k) if d == 1 else (k, _step(k, 1, Rd.degree))
    ad = EdgeIndexPair(ad_out, da_in, Ra.main[ad_out], Rd.main[da_in])
    cd = EdgeIndexPair(cd_out, dc_in, Rc.main[cd_out], Rd.main[dc_in])

    if not spec.is_perimeter(xd) and parent_bosses is not None:
        fd = FullColor(own, parent_bosses)
    elif ad.out_main and ad.in_main:
        fd = FullColor(own or _own_from(table, fa, ad_out, d_type), fa.bosses)
    elif cd.out_main and cd.in_main:
        fd = FullColor(own or _own_from(table, fc, cd_out, d_type), fc.bosses)
    elif not ad.out_main:
        fd = determine_neighbor_full_color(table, fa, ad_out, d_type, own)
    elif not cd.out_main:
        fd = determine_neighbor_full_color(table, fc, cd_out, d_type, own)
    else:
        raise CompletionError("gap", "no corner next to D is one of its bosses")
    return PathEncoding((fa, fd, fc), (ad, cd.reversed()))


def _own_from(table: NeighborTable, tail: FullColor, out_index: int, head_type: VertexType) -> Color:
    return determine_neighbor_full_color(table, tail, out_index, head_type).own


def _perimeter_type(spec, table, fa, ad_out, fc, cd_out) -> VertexType:
    types = {k[2] for k in table._heads if k[0] == fa and k[1] == ad_out}
    if len(types) != 1:
        raise CompletionError("ambiguous" if types else "miss", "type of D not determined")
    return types.pop()


# verification ---------------------------------------------------------------------------


@dataclass
class Exemplar:
    first: tuple
    second: tuple
    differs: tuple[str, ...]


@dataclass
class DeterminismReport:
    spec: str
    levels: tuple[int, ...]
    cases: int = 0
    cases_by_contact: dict[int, int] = field(default_factory=dict)
    classes: int = 0
    special_classes: int = 0
    nonregular_classes: int = 0
    violations: int = 0
    violation_parts: dict[str, int] = field(default_factory=dict)
    exemplars: list[Exemplar] = field(default_factory=list)
    constructive: dict[str, int] = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return self.nonregular_classes == 0 and self.violations == 0

    @property
    def constructive_ok(self) -> bool:
        return set(self.constructive) <= {"agree", "special", "skipped"}

    def as_dict(self) -> dict:
        return {
            "spec": self.spec,
            "levels": list(self.levels),
            "cases": self.cases,
            "cases_by_contact": {str(k): v for k, v in sorted(self.cases_by_contact.items())},
            "classes": self.classes,
            "special_classes": self.special_classes,
            "nonregular_classes": self.nonregular_classes,
            "violations": self.violations,
            "violation_parts": dict(sorted(self.violation_parts.items())),
            "constructive": dict(sorted(self.constructive.items())),
            "exemplars": [
                {"first": list(map(_jsonable, e.first)), "second": list(map(_jsonable, e.second)),
                 "differs": list(e.differs)}
                for e in self.exemplars
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.as_dict(), indent=2, sort_keys=True) + "\n"

    def to_text(self) -> str:
        lines = [
            f"determinism spec={self.spec} levels={','.join(map(str, self.levels))}",
            f"cases {self.cases}",
            "cases_by_contact " + " ".join(f"{k}:{v}" for k, v in sorted(self.cases_by_contact.items())),
            f"classes {self.classes}",
            f"special_classes {self.special_classes}",
            f"nonregular_classes {self.nonregular_classes}",
            f"violations {self.violations}",
            "violation_parts " + " ".join(f"{k}:{v}" for k, v in sorted(self.violation_parts.items())),
        ]
        if self.constructive:
            lines.append("constructive " + " ".join(f"{k}:{v}" for k, v in sorted(self.constructive.items())))
        for i, e in enumerate(self.exemplars, 1):
            lines.append(f"exemplar {i} differs={','.join(e.differs)}")
            lines.append("  " + _case_text(e.first))
            lines.append("  " + _case_text(e.second))
        lines.append("result " + ("ok" if self.ok else "violated"))
        return "\n".join(lines) + "\n"


def _jsonable(x):
    return list(x) if isinstance(x, tuple) else x


def _case_text(summary: tuple) -> str:
    level, address, path, opposite = summary
    return f"level {level} tile {format_address(address)} path {'-'.join(map(str, path))} opposite {opposite}"


def _differs(e1: PathEncoding, e2: PathEncoding) -> tuple[str, ...]:
    parts = []
    if e1.vertices[1].own != e2.vertices[1].own:
        parts.append("own")
    if e1.vertices[1].bosses != e2.vertices[1].bosses:
        parts.append("bosses")
    if e1.edges != e2.edges:
        parts.append("edges")
    return tuple(parts)


# worker plumbing: complexes are shared with forked workers through a module global
_SHARED: list[Complex] = []


def _collect(job: tuple[int, int | None]) -> list[tuple]:
    ci, top = job
    K = _SHARED[ci]
    if top is None:
        tiles = range(len(K.tiles))
    else:
        tiles = [i for i, t in enumerate(K.tiles) if t.address[:1] == (top,)]
    out = []
    for case in enumerate_corner_paths(K, tiles):
        out.append((case.abc.key(), case.special, case.contact, case.adc,
                    (case.level, case.address, case.path, case.opposite), case.abc))
    return out


def verify_weak_determinism(complexes: Sequence[Complex], *, threads: int = 1,
                            constructive: bool = False, max_exemplars: int = 5,
                            table: NeighborTable | None = None) -> DeterminismReport:
    """Group all corner paths by encoding and check the opposite corner is forced.

    The result does not depend on ``threads``; work is split by top-level
    tile address and merged in a fixed order.
    """
    if not complexes:
        raise ValueError("no complexes to check")
    spec = complexes[0].spec
    jobs: list[tuple[int, int | None]] = []
    for ci, K in enumerate(complexes):
        tops = sorted({t.address[0] for t in K.tiles if t.address})
        jobs.extend((ci, top) for top in tops) if tops else jobs.append((ci, None))

    global _SHARED
    _SHARED = list(complexes)
    try:
        if threads > 1 and len(jobs) > 1:
            import multiprocessing as mp

            with ProcessPoolExecutor(threads, mp_context=mp.get_context("fork")) as pool:
                chunks = list(pool.map(_collect, jobs))
        else:
            chunks = [_collect(j) for j in jobs]
    finally:
        _SHARED = []

    rep = DeterminismReport(spec.name, tuple(K.level for K in complexes))
    groups: dict[tuple, list[tuple]] = {}
    for chunk in chunks:
        for key, special, cont, adc, summary, abc in chunk:
            rep.cases += 1
            rep.cases_by_contact[cont] = rep.cases_by_contact.get(cont, 0) + 1
            groups.setdefault(key, []).append((special, adc, summary, abc))
    rep.classes = len(groups)

    if constructive and table is None:
        table = build_neighbor_table(complexes)
    outcome: dict[str, int] = defaultdict(int)
    for key in sorted(groups, key=repr):
        members = groups[key]
        flags = {m[0] for m in members}
        if len(flags) > 1:
            rep.nonregular_classes += 1
            continue
        if True in flags:
            rep.special_classes += 1
            if constructive:
                outcome["special" if complete_path(spec, members[0][3], table) == SPECIAL else "mismatch"] += 1
            continue
        distinct: dict[tuple, tuple] = {}
        for m in members:
            distinct.setdefault(m[1].key(), m)
        if len(distinct) > 1:
            rep.violations += 1
            m1, m2 = list(distinct.values())[:2]
            diff = _differs(m1[1], m2[1])
            for part in diff:
                rep.violation_parts[part] = rep.violation_parts.get(part, 0) + 1
            if len(rep.exemplars) < max_exemplars:
                rep.exemplars.append(Exemplar(m1[2], m2[2], diff))
        if constructive:
            try:
                got = complete_path(spec, members[0][3], table)
            except CompletionError as exc:
                outcome[exc.reason] += 1
                continue
            if got is None or got == SPECIAL:
                outcome["mismatch"] += 1
            elif all(got.key() == m[1].key() for m in members):
                outcome["agree"] += 1
            else:
                outcome["mismatch"] += 1
    rep.constructive = dict(outcome)
    return rep


def classify_regular(complexes: Sequence[Complex]) -> dict[tuple, bool]:
    """Map each corner-path encoding to whether its opposite corner is special.

    Raises ValueError on a class that mixes special and non-special cases.
    """
    out: dict[tuple, bool] = {}
    for K in complexes:
        for case in enumerate_corner_paths(K):
            key = case.abc.key()
            if out.setdefault(key, case.special) != case.special:
                raise ValueError("corner-path class is not regular")
    return out


def default_threads() -> int:
    return max(1, min(4, os.cpu_count() or 1))


def flip_bracket(K: Complex, v: int) -> Color:
    """Swap left and right (or both and none) in the color of ``v``; returns the new color."""
    ctx = coloring(K)
    c = ctx.color(v)
    swapped = {"left": "right", "right": "left", "both": "none", "none": "both"}[c.bracket]
    new = Color(c.vertex_type, c.three_level, swapped)
    ctx.override_color(v, new)
    return new
