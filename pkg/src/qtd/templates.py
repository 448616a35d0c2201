"""Neighbourhood structure of every vertex type, read off the template alone.

A vertex's ring (its incident edges, clockwise from the first main edge) is
fixed at creation and depends only on its type.  The tiles between
consecutive ring edges are template tiles while the vertex is fresh; every
later subdivision replaces each of them by the child sitting at the vertex's
corner.
"""
from __future__ import annotations

from dataclasses import dataclass

from .coloring import BoundaryType, CornerType, InternalType, SideType, VertexType
from .substitution import CORNERS, SIDES, SubstitutionSpec, iter_template_ring


class TemplateError(ValueError):
    pass


@dataclass(frozen=True)
class Slot:
    """The tile between ring edges k and k+1 and the vertex's corner position in it."""

    tile_type: int
    corner: int


@dataclass(frozen=True)
class TypeRing:
    degree: int
    closed: bool
    main: tuple[int, ...]  # main rank per ring index, 0 = not main
    slots: tuple[Slot | None, ...]  # slot k sits between edge k and edge k+1


def side_vertex_name(side: str, i: int) -> str:
    return f"{'URDL'[SIDES.index(side)]}{i}"


class TemplateRings:
    def __init__(self, spec: SubstitutionSpec):
        self.spec = spec
        self._corner_tile: dict[int, Slot] = {}
        for p, name in enumerate(CORNERS):
            for t in spec.tiles:
                if name in t.corners:
                    self._corner_tile[p] = Slot(t.tile_type, t.corners.index(name))
                    break
        self._cache: dict[tuple, TypeRing] = {}

    # template level ----------------------------------------------------

    def _open_ring(self, vid: str) -> tuple[list[str], list[Slot]]:
        ring = list(iter_template_ring(self.spec, vid))
        slots = []
        for a, b in zip(ring, ring[1:] + ring[:1]):
            slot = self._slot_between(vid, a, b)
            slots.append(slot)
        if slots and slots[-1] is None:
            slots = slots[:-1]
        return ring, slots

    def _slot_between(self, vid: str, nxt: str, prv: str) -> Slot | None:
        # tile with corners ..., prv, vid, nxt, ... clockwise
        for t in self.spec.tiles:
            c = t.corners
            if vid in c:
                p = c.index(vid)
                if c[(p + 1) % 4] == nxt and c[(p - 1) % 4] == prv:
                    return Slot(t.tile_type, p)
        return None

    def descend(self, slot: Slot) -> Slot:
        """The tile replacing ``slot`` after one more subdivision."""
        return self._corner_tile[slot.corner]

    # per type ------------------------------------------------------------

    def ring(self, vtype: VertexType, three_level: int = 1) -> TypeRing:
        key = (vtype, three_level)
        r = self._cache.get(key)
        if r is None:
            base = self._fresh_ring(vtype)
            steps = three_level - 1
            slots = base.slots
            for _ in range(steps):
                slots = tuple(None if s is None else self.descend(s) for s in slots)
            if three_level == 3:
                # at least two descents; the result must not depend on how many more
                more = tuple(None if s is None else self.descend(s) for s in slots)
                if more != slots:
                    raise TemplateError(f"ring of {vtype} is not stable under descent")
            r = self._cache[key] = TypeRing(base.degree, base.closed, base.main, slots)
        return r

    def _fresh_ring(self, vtype: VertexType) -> TypeRing:
        spec = self.spec
        if isinstance(vtype, InternalType):
            ring, slots_list = self._open_ring(vtype.vertex)
            if len(slots_list) != len(ring):
                raise TemplateError(f"internal vertex {vtype.vertex} has an open ring")
            by_nb = {}
            for e in spec.internal_edges:
                if vtype.vertex in e.ends:
                    other = e.ends[0] if e.ends[1] == vtype.vertex else e.ends[1]
                    by_nb[other] = e.edge_type
            first = min(by_nb, key=by_nb.get)
            i = ring.index(first)
            ring = ring[i:] + ring[:i]
            slots = slots_list[i:] + slots_list[:i]
            order = sorted(ring, key=lambda w: by_nb[w])
            main = tuple(order.index(w) + 1 for w in ring)
            return TypeRing(len(ring), True, main, tuple(slots))
        if isinstance(vtype, SideType):
            r1, s1 = self._open_ring(side_vertex_name(vtype.first, vtype.i))
            r2, s2 = self._open_ring(side_vertex_name(vtype.second, vtype.j))
            degree = len(r1) + len(r2) - 2
            slots = list(s1) + list(s2)
            main = [0] * degree
            main[0] = 1
            main[len(r1) - 1] = 2
            return TypeRing(degree, True, tuple(main), tuple(slots))
        if isinstance(vtype, BoundaryType):
            ring, slots = self._open_ring(side_vertex_name(vtype.side, vtype.i))
            main = [0] * len(ring)
            main[0], main[-1] = 1, 2
            return TypeRing(len(ring), False, tuple(main), tuple(slots) + (None,))
        if isinstance(vtype, CornerType):
            ring, slots = self._open_ring(vtype.corner)
            main = [0] * len(ring)
            main[0], main[-1] = 1, 2
            return TypeRing(len(ring), False, tuple(main), tuple(slots) + (None,))
        raise TypeError(vtype)


_RINGS: dict[int, TemplateRings] = {}


def template_rings(spec: SubstitutionSpec) -> TemplateRings:
    r = _RINGS.get(id(spec))
    if r is None or r.spec is not spec:
        r = _RINGS[id(spec)] = TemplateRings(spec)
    return r
