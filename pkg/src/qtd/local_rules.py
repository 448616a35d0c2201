"""Local rules for grid substitutions.

The allowed windows are the encodings of all two-edge paths (straight or
turning at a cell corner) that occur in the generated complexes.  A grid
coloring is valid when every window of it is allowed; embedding looks for the
coloring as an exact sub-rectangle of some generated complex.
"""
from __future__ import annotations

import ast
import json
import random
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .coloring import (
    EdgeIndexPair,
    FullColor,
    PathEncoding,
    coloring,
    edge_pair_from_key,
    full_color_from_key,
)
from .complex import Complex


class NotGridError(ValueError):
    pass


class PaletteError(ValueError):
    pass


class PreconditionError(ValueError):
    pass


class NotEmbeddableError(RuntimeError):
    """Search exhausted within the generated levels; this is not a disproof."""


# grid coordinates -------------------------------------------------------------------

_STEP = ((0, 1), (1, 0), (0, -1), (-1, 0))  # right, down, left, up (clockwise, y down)


def grid_coordinates(K: Complex) -> dict[int, tuple[int, int]]:
    """(row, column) of every vertex of a complex built from a grid substitution."""
    if K.spec.is_grid() is None:
        raise NotGridError(f"substitution {K.spec.name} is not a grid")
    cached = K._cache.get("grid_coordinates")
    if cached is not None:
        return cached
    tl = K.root_corner("TL")
    coords = {tl: (0, 0)}
    known_dir = {tl: (K.ring(tl)[0], 0)}
    queue = deque([tl])
    while queue:
        v = queue.popleft()
        w0, d0 = known_dir[v]
        ring = K.ring(v)
        i0 = ring.index(w0)
        r, c = coords[v]
        for i, w in enumerate(ring):
            d = (d0 + i - i0) % 4
            pos = (r + _STEP[d][0], c + _STEP[d][1])
            if w in coords:
                if coords[w] != pos:
                    raise NotGridError("vertex rings are not those of a square grid")
                continue
            coords[w] = pos
            known_dir[w] = (v, (d + 2) % 4)
            queue.append(w)
    K._cache["grid_coordinates"] = coords
    return coords


# grid colorings ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GridColoring:
    """Vertex full colors and edge data on a rows x cols block of the square grid.

    ``right[r][c]`` is the edge (r, c) -> (r, c+1), ``down[r][c]`` the edge
    (r, c) -> (r+1, c), both read in that direction.
    """

    colors: tuple[tuple[FullColor, ...], ...]
    right: tuple[tuple[EdgeIndexPair, ...], ...]
    down: tuple[tuple[EdgeIndexPair, ...], ...]

    def __post_init__(self) -> None:
        rows, cols = self.shape
        if rows < 2 or cols < 2:
            raise ValueError("a grid coloring needs at least 2 x 2 vertices")
        if any(len(row) != cols for row in self.colors):
            raise ValueError("ragged color array")
        if len(self.right) != rows or any(len(x) != cols - 1 for x in self.right):
            raise ValueError("horizontal edge array has the wrong shape")
        if len(self.down) != rows - 1 or any(len(x) != cols for x in self.down):
            raise ValueError("vertical edge array has the wrong shape")

    @property
    def shape(self) -> tuple[int, int]:
        return len(self.colors), len(self.colors[0]) if self.colors else 0

    def edge(self, p: tuple[int, int], q: tuple[int, int]) -> EdgeIndexPair:
        (r1, c1), (r2, c2) = p, q
        if r1 == r2 and c2 == c1 + 1:
            return self.right[r1][c1]
        if r1 == r2 and c2 == c1 - 1:
            return self.right[r1][c2].reversed()
        if c1 == c2 and r2 == r1 + 1:
            return self.down[r1][c1]
        if c1 == c2 and r2 == r1 - 1:
            return self.down[r2][c1].reversed()
        raise ValueError(f"{p} and {q} are not grid neighbours")

    def encode(self, path: Sequence[tuple[int, int]]) -> PathEncoding:
        return PathEncoding(tuple(self.colors[r][c] for r, c in path),
                            tuple(self.edge(p, q) for p, q in zip(path, path[1:])))

    def sub(self, r0: int, c0: int, rows: int, cols: int) -> "GridColoring":
        return GridColoring(
            tuple(row[c0:c0 + cols] for row in self.colors[r0:r0 + rows]),
            tuple(row[c0:c0 + cols - 1] for row in self.right[r0:r0 + rows]),
            tuple(row[c0:c0 + cols] for row in self.down[r0:r0 + rows - 1]),
        )

    def with_color(self, r: int, c: int, fc: FullColor) -> "GridColoring":
        rows = [list(row) for row in self.colors]
        rows[r][c] = fc
        return GridColoring(tuple(map(tuple, rows)), self.right, self.down)


def grid_windows(rows: int, cols: int) -> list[tuple[tuple[int, int], ...]]:
    """All straight and corner two-edge paths in a rows x cols vertex block, both directions."""
    out = []
    for r in range(rows):
        for c in range(cols):
            for d1 in range(4):
                a = (r + _STEP[d1][0], c + _STEP[d1][1])
                if not (0 <= a[0] < rows and 0 <= a[1] < cols):
                    continue
                for d2 in range(4):
                    if d2 == d1:
                        continue
                    b = (r + _STEP[d2][0], c + _STEP[d2][1])
                    if 0 <= b[0] < rows and 0 <= b[1] < cols:
                        out.append((a, (r, c), b))
    return out


def cut_window(K: Complex, r0: int, c0: int, rows: int, cols: int) -> GridColoring:
    """The coloring of K restricted to a rectangular block of vertices."""
    coords = grid_coordinates(K)
    at = {rc: v for v, rc in coords.items()}
    ctx = coloring(K)
    if (r0 + rows - 1, c0 + cols - 1) not in at or r0 < 0 or c0 < 0:
        raise ValueError("window exceeds the complex")
    colors = tuple(tuple(ctx.full_color(at[r, c]) for c in range(c0, c0 + cols))
                   for r in range(r0, r0 + rows))
    right = tuple(tuple(ctx.edge_pair(at[r, c], at[r, c + 1]) for c in range(c0, c0 + cols - 1))
                  for r in range(r0, r0 + rows))
    down = tuple(tuple(ctx.edge_pair(at[r, c], at[r + 1, c]) for c in range(c0, c0 + cols))
                 for r in range(r0, r0 + rows - 1))
    return GridColoring(colors, right, down)


def grid_size(K: Complex) -> int:
    """Number of vertices along one side of K."""
    m = K.spec.is_grid()
    if m is None:
        raise NotGridError(f"substitution {K.spec.name} is not a grid")
    return m ** K.level + 1


# the window language --------------------------------------------------------------------


@dataclass
class WindowLanguage:
    spec: str
    levels: tuple[int, ...]
    windows: set[tuple] = field(default_factory=set)
    palette: set[FullColor] = field(default_factory=set)

    def __len__(self) -> int:
        return len(self.windows)

    def __contains__(self, key: tuple) -> bool:
        return key in self.windows


def collect_window_language(complexes: Iterable[Complex]) -> WindowLanguage:
    complexes = list(complexes)
    if not complexes:
        raise ValueError("no complexes given")
    spec = complexes[0].spec
    if spec.is_grid() is None:
        raise NotGridError(f"substitution {spec.name} is not a grid; local rules are defined for grids only")
    lang = WindowLanguage(spec.name, tuple(K.level for K in complexes))
    for K in complexes:
        ctx = coloring(K)
        for b in range(len(K.vertices)):
            ring = K.ring(b)
            lang.palette.add(ctx.full_color(b))
            for a in ring:
                for c in ring:
                    if a != c:
                        lang.windows.add(ctx.encode_path((a, b, c)).key())
    return lang


@dataclass(frozen=True)
class Validation:
    ok: bool
    window: tuple[tuple[int, int], ...] | None = None

    def __bool__(self) -> bool:
        return self.ok


def validate_grid_coloring(lang: WindowLanguage, g: GridColoring) -> Validation:
    rows, cols = g.shape
    for row in g.colors:
        for fc in row:
            if fc not in lang.palette:
                raise PaletteError(f"color {fc.own} with {len(fc.bosses)} bosses is outside the palette")
    for w in grid_windows(rows, cols):
        if g.encode(w).key() not in lang.windows:
            return Validation(False, w)
    return Validation(True)


# embedding -------------------------------------------------------------------------------


@dataclass(frozen=True)
class Embedding:
    level: int
    row: int
    col: int


class _BlockIndex:
    """All 2 x 2 blocks of the source complexes, keyed by their full data."""

    def __init__(self, complexes: Sequence[Complex]):
        self.complexes = list(complexes)
        self.blocks: dict[GridColoring, list[Embedding]] = {}
        for K in self.complexes:
            n = grid_size(K)
            whole = cut_window(K, 0, 0, n, n)
            for r in range(n - 1):
                for c in range(n - 1):
                    self.blocks.setdefault(whole.sub(r, c, 2, 2), []).append(Embedding(K.level, r, c))


_INDEX_CACHE: dict[tuple[int, ...], _BlockIndex] = {}


def _block_index(complexes: Sequence[Complex]) -> _BlockIndex:
    key = tuple(id(K) for K in complexes)
    idx = _INDEX_CACHE.get(key)
    if idx is None or any(a is not b for a, b in zip(idx.complexes, complexes)):
        idx = _INDEX_CACHE[key] = _BlockIndex(complexes)
    return idx


def _candidates(idx: _BlockIndex, g: GridColoring, lang: WindowLanguage | None) -> set[Embedding]:
    rows, cols = g.shape
    if rows <= 2 and cols <= 2:
        return set(idx.blocks.get(g, ()))
    # split the longer side in half, sharing the seam line
    if rows >= cols:
        h = rows // 2 + 1 if rows > 2 else 2
        first, second = g.sub(0, 0, h, cols), g.sub(h - 1, 0, rows - h + 1, cols)
        shift = (h - 1, 0)
    else:
        w = cols // 2 + 1 if cols > 2 else 2
        first, second = g.sub(0, 0, rows, w), g.sub(0, w - 1, rows, cols - w + 1)
        shift = (0, w - 1)
    top = _candidates(idx, first, lang)
    if not top:
        return set()
    bottom = _candidates(idx, second, lang)
    return {e for e in top if Embedding(e.level, e.row + shift[0], e.col + shift[1]) in bottom}


def embed_grid(complexes: Sequence[Complex], g: GridColoring, lang: WindowLanguage | None = None) -> Embedding:
    """Place ``g`` inside one of ``complexes`` by recursive halving and sewing.

    Each half is embedded on its own and two placements are sewn when they
    agree on the shared seam.  Returns the first placement in (level, row,
    column) order.
    """
    if lang is None:
        lang = collect_window_language(complexes)
    if not validate_grid_coloring(lang, g):
        raise PreconditionError("the coloring contains a forbidden window")
    found = _candidates(_block_index(complexes), g, lang)
    if not found:
        levels = [K.level for K in complexes]
        raise NotEmbeddableError(f"not embeddable within n_max={max(levels)}")
    return min(found, key=lambda e: (e.level, e.row, e.col))


# mutation study ------------------------------------------------------------------------------


@dataclass
class MutationStudy:
    trials: int
    changed_color: int
    rejected_by_validation: int
    rejected_by_embedding: int
    accepted: int

    @property
    def rejection_rate(self) -> float:
        return (self.rejected_by_validation + self.rejected_by_embedding) / max(self.changed_color, 1)

    def to_text(self) -> str:
        return (f"mutations {self.trials}\nchanged_color {self.changed_color}\n"
                f"rejected_by_validation {self.rejected_by_validation}\n"
                f"rejected_by_embedding {self.rejected_by_embedding}\naccepted {self.accepted}\n"
                f"rejection_rate {self.rejection_rate:.4f}\n")

    def to_json(self) -> str:
        d = dict(self.__dict__, rejection_rate=round(self.rejection_rate, 6))
        return json.dumps(d, indent=2, sort_keys=True) + "\n"


def mutation_study(source: Complex, complexes: Sequence[Complex], lang: WindowLanguage,
                   trials: int = 200, seed: int = 0, sizes: Sequence[int] = (2, 4, 8, 16)) -> MutationStudy:
    """Swap one vertex's full color for a palette entry with a different own color and test it."""
    rng = random.Random(seed)
    palette = sorted(lang.palette, key=lambda fc: repr(fc.key()))
    n = grid_size(source)
    study = MutationStudy(trials, 0, 0, 0, 0)
    for _ in range(trials):
        m = rng.choice([s for s in sizes if s <= n])
        r0, c0 = rng.randrange(n - m + 1), rng.randrange(n - m + 1)
        g = cut_window(source, r0, c0, m, m)
        r, c = rng.randrange(m), rng.randrange(m)
        old = g.colors[r][c]
        choices = [fc for fc in palette if fc.own != old.own]
        mutated = g.with_color(r, c, rng.choice(choices))
        study.changed_color += 1
        if not validate_grid_coloring(lang, mutated):
            study.rejected_by_validation += 1
            continue
        try:
            embed_grid(complexes, mutated, lang)
        except NotEmbeddableError:
            study.rejected_by_embedding += 1
            continue
        study.accepted += 1
    return study


# text format -------------------------------------------------------------------------------


def dump_grid_coloring(g: GridColoring) -> str:
    rows, cols = g.shape
    lines = [f"grid {rows} {cols}"]
    for r in range(rows):
        for c in range(cols):
            lines.append(f"color {r} {c} {g.colors[r][c].key()!r}")
    for r in range(rows):
        for c in range(cols - 1):
            lines.append(f"right {r} {c} {g.right[r][c].key()!r}")
    for r in range(rows - 1):
        for c in range(cols):
            lines.append(f"down {r} {c} {g.down[r][c].key()!r}")
    return "\n".join(lines) + "\n"


def parse_grid_coloring(text: str) -> GridColoring:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines or not lines[0].startswith("grid "):
        raise ValueError("grid coloring must start with 'grid <rows> <cols>'")
    rows, cols = map(int, lines[0].split()[1:3])
    colors: dict[tuple[int, int], FullColor] = {}
    right: dict[tuple[int, int], EdgeIndexPair] = {}
    down: dict[tuple[int, int], EdgeIndexPair] = {}
    for no, ln in enumerate(lines[1:], start=2):
        kind, r, c, rest = ln.split(" ", 3)
        try:
            value = ast.literal_eval(rest)
        except (SyntaxError, ValueError) as exc:
            raise ValueError(f"line {no}: {exc}") from None
        pos = (int(r), int(c))
        if kind == "color":
            colors[pos] = full_color_from_key(value)
        elif kind == "right":
            right[pos] = edge_pair_from_key(value)
        elif kind == "down":
            down[pos] = edge_pair_from_key(value)
        else:
            raise ValueError(f"line {no}: unknown record {kind!r}")
    try:
        return GridColoring(
            tuple(tuple(colors[r, c] for c in range(cols)) for r in range(rows)),
            tuple(tuple(right[r, c] for c in range(cols - 1)) for r in range(rows)),
            tuple(tuple(down[r, c] for c in range(cols)) for r in range(rows - 1)),
        )
    except KeyError as exc:
        raise ValueError(f"missing record at {exc.args[0]}") from None
