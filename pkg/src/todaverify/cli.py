"""Command-line front end: inspect the catalog, certify, run suites.

Exit codes: 0 on success, 1 when a requested check fails, 2 for
configuration or usage errors (unknown ids, bad tolerances, unreadable
files).
"""

from __future__ import annotations

import argparse
import configparser
import io
import sys
from dataclasses import dataclass, field

from .pairs import CATALOG, build_pair
from .verify import certify, resolve_reading
from .quadrature import Contour
from .wavefun import (
    GROUND_SERIES, WaveGrid, WaveError, residual_of_grid, wavefunction_grid,
)
from .degenerate import LIMITS, LimitError, degeneration_check
from .suites import SUITES, SuiteError, run_suite


class ConfigError(ValueError):
    """Raised when a config file or flag combination is unusable."""


@dataclass
class RunConfig:
    """Runtime knobs shared by the suite runner and the grid commands."""

    couplings: dict = field(default_factory=dict)  # name -> value
    spectral: list = field(default_factory=list)
    window: float = 30.0
    offset: float = 0.35
    rel_tol: float = 1e-10
    max_depth: int = 12
    qmc_samples: int = 1_000_000
    seed: int = 12345
    output: str = "report.json"

    def validate(self) -> None:
        if self.rel_tol <= 0:
            raise ConfigError("quadrature relTol must be positive")
        if self.max_depth <= 0:
            raise ConfigError("quadrature maxDepth must be positive")
        if self.qmc_samples <= 0:
            raise ConfigError("quadrature qmcSamples must be positive")
        if self.window <= 0:
            raise ConfigError("contour window must be positive")

    def dumps(self) -> str:
        cp = configparser.ConfigParser()
        cp["couplings"] = {k: repr(v) for k, v in self.couplings.items()}
        cp["spectral"] = {
            "values": ", ".join(repr(v) for v in self.spectral)
        }
        cp["contour"] = {
            "window": repr(self.window), "offset": repr(self.offset)
        }
        cp["quadrature"] = {
            "relTol": repr(self.rel_tol),
            "maxDepth": str(self.max_depth),
            "qmcSamples": str(self.qmc_samples),
            "seed": str(self.seed),
        }
        cp["output"] = {"path": self.output}
        buf = io.StringIO()
        cp.write(buf)
        return buf.getvalue()

    @classmethod
    def loads(cls, text: str) -> "RunConfig":
        cp = configparser.ConfigParser()
        try:
            cp.read_string(text)
        except configparser.Error as exc:
            raise ConfigError(f"config does not parse: {exc}") from exc
        cfg = cls()
        try:
            if cp.has_section("couplings"):
                cfg.couplings = {
                    k: float(v) for k, v in cp.items("couplings")
                }
            if cp.has_option("spectral", "values"):
                raw = cp.get("spectral", "values").strip()
                cfg.spectral = (
                    [float(p) for p in raw.split(",")] if raw else []
                )
            if cp.has_option("contour", "window"):
                cfg.window = cp.getfloat("contour", "window")
            if cp.has_option("contour", "offset"):
                cfg.offset = cp.getfloat("contour", "offset")
            if cp.has_option("quadrature", "relTol"):
                cfg.rel_tol = cp.getfloat("quadrature", "relTol")
            if cp.has_option("quadrature", "maxDepth"):
                cfg.max_depth = cp.getint("quadrature", "maxDepth")
            if cp.has_option("quadrature", "qmcSamples"):
                cfg.qmc_samples = cp.getint("quadrature", "qmcSamples")
            if cp.has_option("quadrature", "seed"):
                cfg.seed = cp.getint("quadrature", "seed")
            if cp.has_option("output", "path"):
                cfg.output = cp.get("output", "path")
        except ValueError as exc:
            raise ConfigError(f"config value does not parse: {exc}") from exc
        cfg.validate()
        return cfg

    @classmethod
    def load(cls, path: str) -> "RunConfig":
        try:
            with open(path) as fh:
                return cls.loads(fh.read())
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc


def _parse_couplings(text: str) -> dict:
    """'g1=1,g2=0.5' -> {1: 1.0, 2: 0.5}."""
    out = {}
    for piece in text.split(","):
        name, _, val = piece.partition("=")
        name = name.strip()
        if not name.startswith("g") or not name[1:].isdigit():
            raise ConfigError(f"coupling {name!r} is not of the form gN")
        try:
            out[int(name[1:])] = float(val)
        except ValueError as exc:
            raise ConfigError(f"coupling value {val!r}: {exc}") from exc
    return out


def _potential_text(op) -> str:
    terms = []
    for t in op.potential.terms:
        txt = f"({t.num}) e^{{{t.form}}}"
        if t.dens:
            dens = " ".join(
                f"(1 + ({b.c}) e^{{{b.arg}}})^{p}" for b, p in t.dens
            )
            txt += f" / [{dens}]"
        terms.append(txt)
    body = "  +  ".join(terms) if terms else "0"
    shift = getattr(op, "shift", 0)
    if str(shift) not in ("0", "0.0"):
        body += f"   [+ constant {shift}]"
    return body


def _cmd_catalog(args) -> int:
    for name in sorted(CATALOG):
        e = CATALOG[name]
        tags = ",".join(e.tags)
        print(f"{name:26s} n={e.n_lo}..{e.n_hi}  tags: {tags}")
    return 0


def _require_pair(name: str) -> None:
    if name not in CATALOG:
        known = "\n  ".join(sorted(CATALOG))
        raise ConfigError(
            f"unknown pair {name!r}; valid ids:\n  {known}"
        )


def _cmd_kernel(args) -> int:
    _require_pair(args.pair)
    bp = build_pair(args.pair, args.n)
    if args.latex:
        print(bp.kernel.latex())
    else:
        print(bp.kernel.canonical())
    return 0


def _cmd_verify(args) -> int:
    _require_pair(args.pair)
    cert = certify(args.pair, args.n)
    print(f"{cert.pair} at n={cert.n}: {cert.status}"
          f"  ({cert.rational_terms} residual terms, {cert.elapsed:.2f}s)")
    if cert.witness is not None:
        print(f"  witness: {cert.witness}")
    return 0 if cert.ok else 1


def _cmd_explain(args) -> int:
    _require_pair(args.pair)
    entry = CATALOG[args.pair]
    n = args.n if args.n is not None else (entry.arbiter_n or entry.n_lo)
    bp = build_pair(args.pair, n)
    print(f"pair {args.pair} at n={n}")
    print(f"tags: {', '.join(entry.tags)}")
    print(f"applicable ranks: {entry.n_lo}..{entry.n_hi}")
    print()
    print("kernel (LaTeX):")
    print("  " + bp.kernel.latex())
    print()
    print(f"source operator on ({', '.join(v.name() for v in bp.src.vars)}):")
    print("  -1/2 sum d^2  +  " + _potential_text(bp.src))
    print(f"target operator on ({', '.join(v.name() for v in bp.dst.vars)}):")
    print("  -1/2 sum d^2  +  " + _potential_text(bp.dst))
    if entry.reading_options:
        rep = resolve_reading(args.pair)
        print()
        print("ambiguous-display arbitration:")
        print("  " + rep.summary().replace("\n", "\n  "))
    if entry.notes:
        print()
        print(f"notes: {entry.notes}")
    return 0


def _cmd_wavefunction(args) -> int:
    couplings = (
        _parse_couplings(args.couplings) if args.couplings
        else {i: 1.0 for i in range(1, args.n + 3)}
    )
    spectral = []
    for chunk in args.lam or []:
        spectral.extend(float(p) for p in str(chunk).split(","))
    contour = None
    if args.offset is not None:
        contour = Contour.make(window=30.0, offset=args.offset)
    wg = wavefunction_grid(
        args.system, args.n, couplings, spectral=spectral, grid=args.grid,
        contour=contour, seed=args.seed, budget=args.budget, jobs=args.jobs,
    )
    text = wg.to_json()
    if args.out == "-":
        print(text)
    else:
        with open(args.out, "w") as fh:
            fh.write(text)
        print(f"wrote {args.out}  ({wg.values.size} grid points, "
              f"E = {wg.eigenvalue})")
    return 0


def _cmd_eigen_residual(args) -> int:
    try:
        with open(args.infile) as fh:
            wg = WaveGrid.from_json(fh.read())
    except OSError as exc:
        raise ConfigError(f"cannot read {args.infile}: {exc}") from exc
    rep = residual_of_grid(wg)
    print(rep.summary())
    print(f"eigenvalue used: {wg.eigenvalue}")
    return 0


def _cmd_degenerate(args) -> int:
    if args.pair is not None:
        _require_pair(args.pair)
    rep = degeneration_check(args.check, args.n, seed=args.seed)
    print(rep.summary())
    return 0 if rep.passed else 1


def _cmd_run(args) -> int:
    cfg = RunConfig.load(args.config) if args.config else RunConfig()
    if args.seed is not None:
        cfg.seed = args.seed
    if args.out is not None:
        cfg.output = args.out
    cfg.validate()
    report = run_suite(
        args.suite, seed=cfg.seed, budget=cfg.qmc_samples, jobs=args.jobs
    )
    text = report.to_json()
    if cfg.output == "-":
        print(text)
    else:
        try:
            with open(cfg.output, "w") as fh:
                fh.write(text)
        except OSError as exc:
            raise ConfigError(
                f"cannot write report to {cfg.output}: {exc}"
            ) from exc
        print(report.summary())
        print(f"report written to {cfg.output}")
    return 0 if report.passed else 1


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="toda-verify",
        description="certify intertwining kernels and probe Toda "
                    "eigenfunctions numerically",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    sub.add_parser("catalog", help="list all kernel pairs")

    p = sub.add_parser("kernel", help="print one kernel")
    p.add_argument("pair")
    p.add_argument("--n", type=int, default=1)
    p.add_argument("--latex", action="store_true")

    p = sub.add_parser("verify", help="certify one pair")
    p.add_argument("pair")
    p.add_argument("--n", type=int, default=1)

    p = sub.add_parser("explain", help="pair summary: kernel, operators, "
                                       "reading")
    p.add_argument("pair")
    p.add_argument("--n", type=int, default=None)

    p = sub.add_parser("wavefunction", help="evaluate an eigenfunction on "
                                            "a grid")
    p.add_argument("--system", required=True, choices=list(GROUND_SERIES))
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--lambda", dest="lam", action="append",
                   help="spectral parameter (repeat or comma-separate)")
    p.add_argument("--grid", default="-1:1:0.25",
                   help="lo:hi:step, or name=lo:hi:step[,name=...]")
    p.add_argument("--couplings", help="g1=1,g2=1,...  (default: all 1)")
    p.add_argument("--offset", type=float, default=None,
                   help="contour imaginary offset override")
    p.add_argument("--seed", type=int, default=12345)
    p.add_argument("--budget", type=int, default=None)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out", required=True, help="output path or -")

    p = sub.add_parser("eigen-residual", help="check a stored grid against "
                                              "its operator")
    p.add_argument("--in", dest="infile", required=True)

    p = sub.add_parser("degenerate", help="run one coupling-limit check")
    p.add_argument("--check", required=True, choices=list(LIMITS))
    p.add_argument("--pair", default=None,
                   help="optional pair id, validated against the catalog")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, default=2024)

    p = sub.add_parser("run", help="run a check suite and write a report")
    p.add_argument("suite", choices=list(SUITES))
    p.add_argument("--config", default=None)
    p.add_argument("--out", default=None, help="report path or -")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--jobs", type=int, default=1)

    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    handler = {
        "catalog": _cmd_catalog,
        "kernel": _cmd_kernel,
        "verify": _cmd_verify,
        "explain": _cmd_explain,
        "wavefunction": _cmd_wavefunction,
        "eigen-residual": _cmd_eigen_residual,
        "degenerate": _cmd_degenerate,
        "run": _cmd_run,
    }[args.command]
    try:
        return handler(args)
    except (ConfigError, SuiteError, LimitError, WaveError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
