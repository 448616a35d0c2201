"""Command-line front end: ``qtd <subcommand> [flags]``.

Exit status is 0 when nothing was violated, 1 when a check found violations
or an input was rejected, 2 on usage errors and 3 on internal failures.
Every output file is written atomically and is byte-stable for fixed inputs.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Callable, Sequence

from . import __version__
from .coloring import CensusReport, check_consequences, color_annex, color_census
from .complex import (
    ResourceLimitError,
    build_complex,
    build_levels,
    dump_complex,
    local_finiteness_report,
    max_vertices_from_env,
)
from .determinism import default_threads, verify_weak_determinism
from .glued import (
    StraightenError,
    bracket_count,
    build_glued,
    build_glued_levels,
    dump_glued,
    straighten,
    verify_spatial_determinism,
)
from .local_rules import (
    NotEmbeddableError,
    NotGridError,
    PaletteError,
    collect_window_language,
    embed_grid,
    mutation_study,
    parse_grid_coloring,
    validate_grid_coloring,
)
from .render import legend, render_glued_svg, render_svg
from .substitution import SubstitutionSpec, SubstitutionSyntaxError, resolve_spec, validate_substitution

OK, VIOLATED, USAGE, INTERNAL = 0, 1, 2, 3


class UsageError(Exception):
    pass


class Rejected(Exception):
    """Input rejected; reported with exit status 1."""


@dataclass(frozen=True)
class RunConfig:
    subcommand: str
    spec: str
    levels: int
    level: int
    max_vertices: int
    budget_bfs: int
    max_path_len: int
    threads: int
    out: Path | None
    format: str

    def __post_init__(self) -> None:
        for name in ("levels", "max_vertices", "budget_bfs", "max_path_len", "threads"):
            if getattr(self, name) <= 0:
                raise UsageError(f"--{name.replace('_', '-')} must be positive")
        if self.level < 0:
            raise UsageError("--level must be non-negative")


# output ------------------------------------------------------------------------------------


def write_atomic(path: Path, data: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _emit(cfg: RunConfig, text: str, name: str | None = None) -> None:
    """Write ``text`` to --out (a file, or a directory when ``name`` is given) or stdout."""
    if cfg.out is None:
        sys.stdout.write(text)
    elif name is not None and (cfg.out.is_dir() or not cfg.out.suffix):
        write_atomic(cfg.out / name, text)
    else:
        write_atomic(cfg.out, text)


def _as_json(d: dict) -> str:
    return json.dumps(d, indent=2, sort_keys=True) + "\n"


def _render(cfg: RunConfig, text: Callable[[], str], data: Callable[[], dict]) -> str:
    return _as_json(data()) if cfg.format == "json" else text()


# spec loading -------------------------------------------------------------------------------


def _load(cfg: RunConfig, checked: bool = True) -> SubstitutionSpec:
    try:
        spec = resolve_spec(cfg.spec)
    except FileNotFoundError:
        raise UsageError(f"no such substitution file or bundled name: {cfg.spec}") from None
    except SubstitutionSyntaxError as exc:
        raise Rejected(f"syntax error: {exc}") from None
    if checked:
        rep = validate_substitution(spec)
        if not rep.ok:
            raise Rejected(rep.to_text())
    return spec


# subcommands --------------------------------------------------------------------------------


def cmd_validate(cfg: RunConfig) -> int:
    try:
        spec = _load(cfg, checked=False)
    except Rejected as exc:
        msg = str(exc)
        _emit(cfg, _render(cfg, lambda: f"ok: false\nviolation [syntax] {msg}\n",
                           lambda: {"ok": False, "syntax_error": msg}))
        return VIOLATED
    rep = validate_substitution(spec)
    _emit(cfg, _render(cfg, rep.to_text,
                       lambda: {"ok": rep.ok, "corner_condition": rep.corner_condition,
                                "violations": [asdict(v) for v in rep.violations]}))
    return OK if rep.ok else VIOLATED


def cmd_build(cfg: RunConfig) -> int:
    K = build_complex(_load(cfg), cfg.level, cfg.max_vertices)
    text = dump_complex(K)
    if K.level >= 1:
        text += color_annex(K)
    _emit(cfg, text, f"{K.spec.name}-k{K.level}.dump")
    return OK


def cmd_render(cfg: RunConfig) -> int:
    if cfg.out is None:
        raise UsageError("render needs --out FILE.svg")
    K = build_complex(_load(cfg), cfg.level, cfg.max_vertices)
    svg = cfg.out if cfg.out.suffix == ".svg" else cfg.out / f"{K.spec.name}-k{K.level}.svg"
    write_atomic(svg, render_svg(K))
    if K.level >= 1:
        write_atomic(svg.with_suffix(".legend.txt"), legend(K))
    return OK


def _census(spec: SubstitutionSpec, cfg: RunConfig) -> CensusReport:
    if cfg.levels < 3:
        raise UsageError("census needs --levels >= 3")
    return color_census(spec, cfg.levels, build_levels(spec, cfg.levels, cfg.max_vertices)[1:])


def cmd_census(cfg: RunConfig) -> int:
    rep = _census(_load(cfg), cfg)
    _emit(cfg, _render(cfg, rep.to_text, lambda: asdict(rep)))
    return OK


def cmd_check_determinism(cfg: RunConfig) -> int:
    spec = _load(cfg)
    Ks = build_levels(spec, cfg.levels, cfg.max_vertices)[1:]
    rep = verify_weak_determinism(Ks, threads=cfg.threads, constructive=cfg.constructive)
    _emit(cfg, rep.to_json() if cfg.format == "json" else rep.to_text())
    ok = rep.ok and (rep.constructive_ok or not cfg.constructive)
    return OK if ok else VIOLATED


def cmd_check_spatial(cfg: RunConfig) -> int:
    spec = _load(cfg)
    Gs = build_glued_levels(spec, cfg.levels, cfg.max_vertices)
    rep = verify_spatial_determinism(Gs)
    _emit(cfg, rep.to_json() if cfg.format == "json" else rep.to_text())
    return OK if rep.ok else VIOLATED


def cmd_glue(cfg: RunConfig) -> int:
    G = build_glued(_load(cfg), cfg.level, cfg.max_vertices)
    if cfg.out is not None and cfg.out.suffix == ".svg":
        write_atomic(cfg.out, render_glued_svg(G))
    else:
        _emit(cfg, dump_glued(G), f"{G.spec.name}-g{G.level}.dump")
    return OK


def _parse_path(raw: str | None) -> tuple[int, ...]:
    if not raw:
        raise UsageError("straighten needs --path V1,V2,...")
    try:
        return tuple(int(x) for x in raw.replace("-", ",").split(",") if x)
    except ValueError:
        raise UsageError(f"malformed --path {raw!r}") from None


def cmd_straighten(cfg: RunConfig) -> int:
    path = _parse_path(cfg.path)
    G = build_glued(_load(cfg), cfg.level, cfg.max_vertices)
    target = cfg.target
    if target is None:
        target = next((c.index for c in G.components
                       if c.local(path[0]) is not None and c.local(path[-1]) is not None), None)
        if target is None:
            raise Rejected("no component contains both endpoints")
    if not 0 <= target < len(G.components):
        raise UsageError(f"--target must be in 0..{len(G.components) - 1}")
    try:
        res = straighten(G, path, target, budget=cfg.budget_bfs)
    except StraightenError as exc:
        _emit(cfg, f"straighten failed: {exc}\n", "straighten.txt")
        return VIOLATED
    except ValueError as exc:
        raise Rejected(str(exc)) from None
    summary = {"input": list(path), "target": target, "output": list(res.path), "flips": len(res.flips),
               "bracket_counts": res.bracket_counts, "output_brackets": bracket_count(G, res.path)}
    text = "".join(f"{k} {' '.join(map(str, v)) if isinstance(v, list) else v}\n"
                   for k, v in summary.items())
    if cfg.out is None:
        sys.stdout.write(_as_json(summary) if cfg.format == "json" else text)
        sys.stdout.write(res.certificate())
    else:
        base = cfg.out if cfg.out.suffix else cfg.out / "straighten"
        write_atomic(base.with_suffix(".cert"), res.certificate())
        write_atomic(base.with_suffix(".json" if cfg.format == "json" else ".txt"),
                     _as_json(summary) if cfg.format == "json" else text)
    return OK


def cmd_local_rules(cfg: RunConfig) -> int:
    spec = _load(cfg)
    Ks = build_levels(spec, cfg.levels, cfg.max_vertices)[1:]
    try:
        lang = collect_window_language(Ks)
    except NotGridError as exc:
        raise Rejected(str(exc)) from None
    if cfg.grid is None:
        study = mutation_study(Ks[-1], Ks, lang, trials=cfg.trials, seed=cfg.seed)
        _emit(cfg, study.to_json() if cfg.format == "json" else study.to_text())
        return OK
    try:
        g = parse_grid_coloring(Path(cfg.grid).read_text(encoding="utf-8"))
    except OSError as exc:
        raise UsageError(str(exc)) from None
    except ValueError as exc:
        raise Rejected(f"malformed grid coloring: {exc}") from None
    result: dict = {"windows": len(lang), "palette": len(lang.palette)}
    try:
        v = validate_grid_coloring(lang, g)
        result["valid"] = v.ok
        if not v.ok:
            result["bad_window"] = [list(p) for p in v.window]
    except PaletteError as exc:
        result["valid"] = False
        result["palette_error"] = str(exc)
    if result["valid"]:
        try:
            e = embed_grid(Ks, g, lang)
            result["embedding"] = [e.level, e.row, e.col]
        except NotEmbeddableError:
            result["embedding"] = None
    ok = result["valid"] and result.get("embedding") is not None
    text = "".join(f"{k} {v}\n" for k, v in result.items()) + f"result {'ok' if ok else 'rejected'}\n"
    _emit(cfg, _as_json(result) if cfg.format == "json" else text)
    return OK if ok else VIOLATED


def cmd_report(cfg: RunConfig) -> int:
    """Validation, local finiteness, census, coloring consequences and determinism in one document."""
    spec = _load(cfg)
    Ks = build_levels(spec, cfg.levels, cfg.max_vertices)[1:]
    val = validate_substitution(spec)
    fin = local_finiteness_report(spec, cfg.levels)
    census = color_census(spec, cfg.levels, Ks) if cfg.levels >= 3 else None
    cons = {K.level: check_consequences(K) for K in Ks}
    det = verify_weak_determinism(Ks, threads=cfg.threads)
    bad_cons = sum(r.nonmain_not_main_at_head + r.nonmain_tail_not_boss + r.nonmain_tail_not_older
                   + r.mainmain_boss_mismatch for r in cons.values())
    ok = val.ok and det.ok and bad_cons == 0
    if cfg.format == "json":
        text = _as_json({
            "spec": spec.name, "version": __version__, "ok": ok,
            "validation": {"ok": val.ok, "corner_condition": val.corner_condition},
            "local_finiteness": asdict(fin),
            "census": asdict(census) if census else None,
            "consequences": {str(n): asdict(r) for n, r in cons.items()},
            "determinism": det.as_dict(),
        })
    else:
        parts = [f"report {spec.name} levels 1..{cfg.levels}\n", "[validation]\n", val.to_text(),
                 "[local-finiteness]\n", fin.to_text()]
        if census:
            parts += ["[census]\n", census.to_text()]
        parts.append("[consequences]\n")
        for n, r in cons.items():
            parts.append(f"level {n} " + " ".join(f"{k}={v}" for k, v in asdict(r).items()) + "\n")
        parts += ["[determinism]\n", det.to_text(), f"result {'ok' if ok else 'violated'}\n"]
        text = "".join(parts)
    _emit(cfg, text, f"{spec.name}-report.{'json' if cfg.format == 'json' else 'txt'}")
    return OK if ok else VIOLATED


COMMANDS: dict[str, tuple[Callable[[RunConfig], int], str]] = {
    "validate": (cmd_validate, "check a substitution file against the well-formedness conditions"),
    "build": (cmd_build, "build K_n and write its dump with the color annex"),
    "render": (cmd_render, "draw K_n as SVG, with a color legend next to it"),
    "census": (cmd_census, "count colors and full colors per level"),
    "check-determinism": (cmd_check_determinism, "verify weak determinism over pooled levels 1..N"),
    "check-spatial": (cmd_check_spatial, "verify determinism of flag encodings on glued complexes"),
    "glue": (cmd_glue, "build the glued complex G_n and write its dump (or SVG)"),
    "straighten": (cmd_straighten, "move a glued path into one component; writes a flip certificate"),
    "local-rules": (cmd_local_rules, "check a grid coloring against the window language, or run the mutation study"),
    "report": (cmd_report, "canonical combined report for one substitution"),
}


# argument parsing ---------------------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # argparse exits with 2 already; keep the message format
        self.print_usage(sys.stderr)
        self.exit(USAGE, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--spec", default="grid2", help="bundled name (grid2, grid3, diamond) or substitution file")
    common.add_argument("--levels", type=int, default=4, help="pool levels 1..N (default 4)")
    common.add_argument("--level", type=int, default=3, help="single level n (default 3)")
    common.add_argument("--max-vertices", type=int, default=None,
                        help="vertex cap (default from QTD_MAX_VERTICES or 5000000)")
    common.add_argument("--budget-bfs", type=int, default=200_000, help="node budget for flip searches")
    common.add_argument("--max-path-len", type=int, default=12, help="path length bound")
    common.add_argument("--threads", type=int, default=None, help="worker processes (default: all CPUs)")
    common.add_argument("--out", type=Path, default=None, help="output file or directory (default stdout)")
    common.add_argument("--format", choices=("text", "json"), default="text", help="report format")

    parser = _Parser(prog="qtd", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"qtd {__version__}")
    sub = parser.add_subparsers(dest="subcommand", required=True, parser_class=_Parser)
    for name, (_, help_text) in COMMANDS.items():
        p = sub.add_parser(name, parents=[common], help=help_text, description=help_text)
        if name == "check-determinism":
            p.add_argument("--constructive", action="store_true",
                           help="also compare complete_path against the enumeration")
        if name == "straighten":
            p.add_argument("--path", help="vertex ids, comma separated")
            p.add_argument("--target", type=int, default=None,
                           help="component index (default: first one holding both endpoints)")
        if name == "local-rules":
            p.add_argument("--grid", help="grid coloring file to validate and embed")
            p.add_argument("--trials", type=int, default=200, help="mutation study size")
            p.add_argument("--seed", type=int, default=0, help="mutation study seed")
    return parser


@dataclass(frozen=True)
class _Config(RunConfig):
    constructive: bool = False
    path: str | None = None
    target: int | None = None
    grid: str | None = None
    trials: int = 200
    seed: int = 0


def make_config(ns: argparse.Namespace) -> _Config:
    return _Config(
        subcommand=ns.subcommand, spec=ns.spec, levels=ns.levels, level=ns.level,
        max_vertices=ns.max_vertices if ns.max_vertices is not None else max_vertices_from_env(),
        budget_bfs=ns.budget_bfs, max_path_len=ns.max_path_len,
        threads=ns.threads if ns.threads is not None else default_threads(),
        out=ns.out, format=ns.format,
        constructive=getattr(ns, "constructive", False), path=getattr(ns, "path", None),
        target=getattr(ns, "target", None), grid=getattr(ns, "grid", None),
        trials=getattr(ns, "trials", 200), seed=getattr(ns, "seed", 0),
    )


def run(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        cfg = make_config(ns)
        return COMMANDS[cfg.subcommand][0](cfg)
    except UsageError as exc:
        print(f"qtd {ns.subcommand}: {exc}", file=sys.stderr)
        return USAGE
    except Rejected as exc:
        print(f"qtd {ns.subcommand}: rejected\n{exc}", file=sys.stderr, end="" if str(exc).endswith("\n") else "\n")
        return VIOLATED
    except ResourceLimitError as exc:
        print(f"qtd {ns.subcommand}: resource limit: {exc}", file=sys.stderr)
        return INTERNAL
    except Exception as exc:  # noqa: BLE001
        print(f"qtd {ns.subcommand}: internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return INTERNAL


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
