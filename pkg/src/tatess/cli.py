"""Command-line front end.

Exit codes: 0 ok, 1 usage or malformed input, 2 hypothesis violation,
3 internal check failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Callable, TextIO

from . import charts
from .graded_algebra import basis_in_bidegree, basis_in_region
from .picard_bounds import exotic_bound_report
from .stabilizer_presets import (
    HeightContext,
    HypothesisError,
    _normalize_level,
    build_preset,
    check_no_late_targets,
    degree_form_check,
    necklace_count,
    preset_spectral_sequence,
    sparsity_check,
)
from .range_comparison import RangeBound, iterate_bounds, vanishing_line
from .spectral_sequence import UNIT_NOTE, PageWindow, SpectralSequence, SpectralSequenceError, WindowError

EXIT_OK, EXIT_USAGE, EXIT_HYPOTHESIS, EXIT_INTERNAL = 0, 1, 2, 3
FORMATS = ("table", "ascii-chart", "svg")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


@dataclass
class RunConfig:
    command: str
    prime: int | None = None
    level: str | None = None
    inverted: bool = False
    s: int | None = None
    t: int | None = None
    window: PageWindow | None = None
    format: str = "table"
    out: str | None = None
    png: str | None = None
    seed: int = 0
    workers: int = 1
    page: int | None = None
    definition: dict | None = None

    def need_prime(self) -> int:
        if self.prime is None:
            raise UsageError("--prime is required")
        return self.prime

    def need_level(self) -> str:
        if self.level is None:
            raise UsageError("--level/--group is required")
        try:
            return _normalize_level(self.level)
        except ValueError as exc:
            raise UsageError(str(exc)) from None


def _parse_window(text: str) -> tuple[int, ...]:
    try:
        parts = tuple(int(x) for x in text.split(","))
    except ValueError:
        raise UsageError(f"--window expects smin,smax,tmin,tmax (got {text!r})") from None
    if len(parts) not in (4, 5):
        raise UsageError("--window expects smin,smax,tmin,tmax[,margin]")
    return parts


def _window_from(value, prime: int | None) -> PageWindow | None:
    if value is None:
        return None
    if isinstance(value, dict):
        return PageWindow.from_dict(value)
    parts = _parse_window(value) if isinstance(value, str) else tuple(value)
    if len(parts) == 4:
        if prime is None:
            raise UsageError("a window without margin needs --prime")
        parts = parts + (HeightContext(prime).long_page,)
    return PageWindow(*parts)


def build_config(args: argparse.Namespace) -> RunConfig:
    """Merge the JSON config file (if any) with flags; flags win."""
    doc: dict = {}
    if getattr(args, "config", None):
        try:
            doc = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config {args.config}: {exc}") from None
        if not isinstance(doc, dict):
            raise UsageError("config file must hold a JSON object")
    if "group" in doc and "level" not in doc:
        doc["level"] = doc.pop("group")
    known = {f.name for f in fields(RunConfig)} - {"command"}
    unknown = set(doc) - known
    if unknown:
        raise UsageError(f"unknown config keys: {', '.join(sorted(unknown))}")
    merged = dict(doc)
    for key in known:
        value = getattr(args, key, None)
        if value is not None:
            merged[key] = value
    cfg = RunConfig(command=args.command)
    for key, value in merged.items():
        if key == "window":
            continue
        setattr(cfg, key, value)
    if cfg.prime is not None:
        cfg.prime = int(cfg.prime)
        if cfg.prime % 2 == 0:
            raise HypothesisError("p must be an odd prime")
    try:
        cfg.window = _window_from(merged.get("window"), cfg.prime)
    except (TypeError, ValueError) as exc:
        raise UsageError(f"bad window: {exc}") from None
    if cfg.format not in FORMATS:
        raise UsageError(f"--format must be one of {', '.join(FORMATS)}")
    return cfg


# -- commands ---------------------------------------------------------------------


def cmd_ring_basis(cfg: RunConfig, out: TextIO) -> int:
    p, level = cfg.need_prime(), cfg.need_level()
    if cfg.s is None or cfg.t is None:
        raise UsageError("ring-basis needs --s and --t")
    pres, _ = build_preset(p, level, cfg.inverted)
    basis = basis_in_bidegree(pres, cfg.s, cfg.t)
    out.write(f"# ring-basis prime={p} level={level.upper()} inverted={str(cfg.inverted).lower()} s={cfg.s} t={cfg.t}\n")
    out.write("index\tmonomial\n")
    for i, m in enumerate(basis):
        out.write(f"{i}\t{pres.format_monomial(m)}\n")
    out.write(f"# dimension {len(basis)}\n")
    return EXIT_OK


def _spectral_sequence(cfg: RunConfig) -> tuple[SpectralSequence, str]:
    if cfg.definition is not None:
        doc = dict(cfg.definition)
        if cfg.window is not None:
            doc["window"] = cfg.window.to_dict()
        return SpectralSequence.from_dict(doc, workers=cfg.workers), "custom"
    p, level = cfg.need_prime(), cfg.need_level()
    window = cfg.window or HeightContext(p).default_window()
    return preset_spectral_sequence(p, level, cfg.inverted, window, cfg.workers), level.upper()


def _emit_chart(cfg: RunConfig, ss: SpectralSequence, out: TextIO, title: str) -> None:
    r = cfg.page if cfg.page is not None else max(ss.rule_pages, default=2)
    doc = charts.chart_from_page(ss, r, f"{title} E_{r}")
    if cfg.format == "ascii-chart":
        text = charts.render_ascii(doc)
    elif cfg.format == "svg":
        text = charts.render_svg(doc)
    else:
        text = None
    if text is not None:
        if cfg.out:
            Path(cfg.out).write_text(text)
            out.write(f"# chart written to {cfg.out}\n")
        else:
            out.write(text)
    if cfg.png:
        charts.render_png(doc, cfg.png)
        out.write(f"# png written to {cfg.png}\n")


def cmd_ss_run(cfg: RunConfig, out: TextIO) -> int:
    try:
        ss, label = _spectral_sequence(cfg)
    except WindowError as exc:
        raise UsageError(str(exc)) from None
    w = ss.window
    s0, s1, t0, t1 = w.interior()
    title = f"{label} p={ss.prime}" + (" beta-inverted" if label != "custom" and cfg.inverted else "")
    out.write(f"# ss-run {title}\n")
    out.write(f"# window s={w.s_min}..{w.s_max} t={w.t_min}..{w.t_max} margin={w.margin}; interior s={s0}..{s1} t={t0}..{t1}\n")
    out.write(f"# {UNIT_NOTE}\n")
    out.write("page\tnonzero_bidegrees\ttotal_dim\tmax_s\n")
    final = {}
    for r in range(2, ss.last_page + 1):
        dims = ss.interior_dimensions(r)
        top = max((b[0] for b in dims), default="-")
        out.write(f"{r}\t{len(dims)}\t{sum(dims.values())}\t{top}\n")
        final = dims
    out.write(f"# E_{ss.last_page} interior: {'zero' if not final else 'nonzero'}\n")
    if cfg.format == "table" and cfg.page is not None:
        out.write("s\tt\tdim\n")
        for (s, t), d in ss.interior_dimensions(cfg.page).items():
            out.write(f"{s}\t{t}\t{d}\n")
    _emit_chart(cfg, ss, out, title)
    return EXIT_OK


def cmd_vanishing_line(cfg: RunConfig, out: TextIO) -> int:
    p, level = cfg.need_prime(), cfg.need_level()
    try:
        vl = vanishing_line(p, level)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    out.write(f"page {vl.page}, s = {vl.line}\n")
    out.write(f"# group={level.upper()} prime={p} vcd={vl.vcd}\n")
    out.write("page\tonto_from\tiso_from\n")
    for b in vl.trace:
        out.write(f"{b.page}\t{int(b.onto_from)}\t{int(b.iso_from)}\n")
    return EXIT_OK


def cmd_picard_bound(cfg: RunConfig, out: TextIO) -> int:
    p, level = cfg.need_prime(), cfg.need_level()
    try:
        report = exotic_bound_report(p, level, cfg.workers)
    except HypothesisError:
        raise
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    out.write(report.to_text())
    return EXIT_OK


def cmd_dims(cfg: RunConfig, out: TextIO) -> int:
    """E_2 (ring) dimensions over a window, or a page of the spectral sequence with --page."""
    p, level = cfg.need_prime(), cfg.need_level()
    ctx = HeightContext(p)
    n = ctx.n
    if cfg.page is not None:
        ss, _ = _spectral_sequence(cfg)
        rows = ss.interior_dimensions(cfg.page)
        out.write(f"# dims prime={p} level={level.upper()} page={cfg.page}\n")
    else:
        pres, _ = build_preset(p, level, cfg.inverted)
        if cfg.s is not None and cfg.t is not None:
            rows = {(cfg.s, cfg.t): len(basis_in_bidegree(pres, cfg.s, cfg.t))}
        else:
            w = cfg.window or PageWindow(0, 2 * n + 1, -4 * p * n, 4 * p * n, 0)
            rows = {b: len(ms) for b, ms in basis_in_region(pres, (w.s_min, w.s_max), (w.t_min, w.t_max)).items()}
        out.write(f"# dims prime={p} level={level.upper()} inverted={str(cfg.inverted).lower()} page=2\n")
    out.write("s\tt\tdim\n")
    for (s, t), d in sorted(rows.items()):
        out.write(f"{s}\t{t}\t{d}\n")
    if level in ("n", "g") and n <= 24:
        top = len(basis_in_bidegree(build_preset(p, level, True)[0], 2 * n + 1, 2 * n))
        out.write(f"# dim(2n+1, 2n) = {top}; necklaces(n={n}) = {necklace_count(n)}\n")
    return EXIT_OK


def cmd_selftest(cfg: RunConfig, out: TextIO) -> int:
    """Fast internal consistency checks; exit 3 if any fails."""
    checks: list[tuple[str, Callable[[], bool]]] = [
        ("top dimensions 4, 8, 56", lambda: [
            len(basis_in_bidegree(build_preset(p, "n")[0], 2 * p - 1, 2 * p - 2)) for p in (5, 7, 11)
        ] == [4, 8, 56]),
        ("necklaces 4, 8, 56", lambda: [necklace_count(n) for n in (4, 6, 10)] == [4, 8, 56]),
        ("vanishing line p=3 G", lambda: (vanishing_line(3, "g").page, vanishing_line(3, "g").line) == (10, 13)),
        ("propagation trace", lambda: all(
            b.iso_from == 5 + b.page - 1 for b in iterate_bounds(RangeBound(2, 5, 6), 20)
        )),
        ("sparsity and degree form p=5", lambda: all(
            sparsity_check(build_preset(5, lv)[0], HeightContext(5).default_window())
            and degree_form_check(build_preset(5, lv)[0], HeightContext(5).default_window(), HeightContext(5).vcd[lv])
            for lv in ("f", "n", "g")
        )),
        ("collapse p=3 F and N", lambda: all(
            not preset_spectral_sequence(3, lv, True).interior_dimensions(10) for lv in ("f", "n")
        )),
        ("no late targets p=5", lambda: check_no_late_targets(5)),
    ]
    failed = 0
    for name, fn in checks:
        ok = bool(fn())
        failed += not ok
        out.write(f"{'PASS' if ok else 'FAIL'}\t{name}\n")
    return EXIT_INTERNAL if failed else EXIT_OK


COMMANDS: dict[str, Callable[[RunConfig, TextIO], int]] = {
    "ring-basis": cmd_ring_basis,
    "ss-run": cmd_ss_run,
    "vanishing-line": cmd_vanishing_line,
    "picard-bound": cmd_picard_bound,
    "dims": cmd_dims,
    "selftest": cmd_selftest,
}


def make_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="FILE", help="JSON config; flags override its values")
    common.add_argument("--prime", type=int)
    common.add_argument("--level", "--group", dest="level", help="cp, f, n or g")
    common.add_argument("--inverted", action=argparse.BooleanOptionalAction, default=None, help="invert beta")
    common.add_argument("--s", type=int)
    common.add_argument("--t", type=int)
    common.add_argument("--window", help="smin,smax,tmin,tmax[,margin]")
    common.add_argument("--page", type=int, help="page to tabulate or chart")
    common.add_argument("--format", choices=FORMATS)
    common.add_argument("--out", help="write the chart here")
    common.add_argument("--png", help="also write a matplotlib PNG chart here")
    common.add_argument("--seed", type=int)
    common.add_argument("--workers", type=int, help="processes for page computations")
    parser = _Parser(prog="tatess", description="Tate spectral sequences at height p-1")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name, fn in COMMANDS.items():
        sub.add_parser(name, parents=[common], help=(fn.__doc__ or name).strip().splitlines()[0])
    return parser


def main(argv: list[str] | None = None, out: TextIO | None = None) -> int:
    out = out or sys.stdout
    args = make_parser().parse_args(argv)
    try:
        cfg = build_config(args)
        return COMMANDS[cfg.command](cfg, out)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except HypothesisError as exc:
        print(f"hypothesis violation: {exc}", file=sys.stderr)
        return EXIT_HYPOTHESIS
    except (RuntimeError, SpectralSequenceError) as exc:
        print(f"internal check failed: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    except (ValueError, KeyError, TypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
