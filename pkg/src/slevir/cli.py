"""Command-line entry point: ``slevir <subcommand> [options]``.

Exit codes: 0 for CONSERVED / PASS, 2 for DRIFTING / FAIL, 3 for
INCONCLUSIVE, 64 for invalid usage, 74 for I/O failures.
"""

from __future__ import annotations

import argparse
import io
import json
import re
import sys
from dataclasses import dataclass, field
from fractions import Fraction
from typing import List, Optional

import numpy as np

from . import group_flow, loewner, martingale
from .virasoro import (
    ModuleParams,
    VermaVector,
    as_rational,
    c_kappa,
    h_kappa,
    lower_monomial,
    singular_defect,
)

EXIT_OK = 0
EXIT_FAIL = 2
EXIT_INCONCLUSIVE = 3
EXIT_USAGE = 64
EXIT_IO = 74

_EXIT_FOR = {
    martingale.CONSERVED: EXIT_OK,
    martingale.DRIFTING: EXIT_FAIL,
    martingale.INCONCLUSIVE: EXIT_INCONCLUSIVE,
    "PASS": EXIT_OK,
    "FAIL": EXIT_FAIL,
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


@dataclass
class RunConfig:
    command: str
    kappa: object = None
    trunc: int = group_flow.DEFAULT_TRUNCATION
    dt: float = group_flow.DEFAULT_DT
    T: float = 0.5
    n_samples: int = martingale.DEFAULT_SAMPLES
    seed: int = 0
    out: Optional[str] = None
    fmt: str = "csv"
    c: Optional[Fraction] = None
    h: Optional[Fraction] = None
    probes: List[str] = field(default_factory=list)
    points: int = martingale.DEFAULT_POINTS
    extra: dict = field(default_factory=dict)

    def params(self) -> ModuleParams:
        c = c_kappa(self.kappa) if self.c is None else self.c
        h = h_kappa(self.kappa) if self.h is None else self.h
        return ModuleParams(c, h)


def parse_rational(text: str) -> Fraction:
    try:
        return as_rational(text)
    except (TypeError, ValueError) as exc:
        raise UsageError(str(exc)) from None


_RATIONAL = re.compile(r"[+-]?\d+(/\d+)?$")


def parse_kappa(text: str, allow_float: bool = False, allow_zero: bool = False):
    if allow_float:
        try:
            kappa = float(text)
        except ValueError:
            raise UsageError(f"not a number: {text!r}") from None
    else:
        if not _RATIONAL.match(text.strip()):
            raise UsageError(f"kappa must be an integer or p/q, got {text!r} (see --float-kappa)")
        kappa = parse_rational(text)
    if kappa < 0 or (kappa == 0 and not allow_zero):
        raise UsageError(f"kappa must be positive, got {text}")
    return kappa


_FACTOR = re.compile(r"L-(\d+)(?:\^(\d+))?")


def parse_probe(text: str, params: ModuleParams, N: int) -> List[VermaVector]:
    """``all``, ``w`` or a word such as ``L-2L-1`` or ``L-1^2``."""
    text = text.replace(" ", "")
    if text == "all":
        return [VermaVector.basis(p, params) for p in group_flow.basis(N)]
    if text in ("w", "1", "omega"):
        return [VermaVector.highest_weight(params)]
    modes: List[int] = []
    pos = 0
    while pos < len(text):
        m = _FACTOR.match(text, pos)
        if not m:
            raise UsageError(f"cannot parse probe {text!r}")
        n, k = int(m.group(1)), int(m.group(2) or 1)
        if n < 1:
            raise UsageError("probe modes must be L-n with n >= 1")
        modes.extend([n] * k)
        pos = m.end()
    if sum(modes) > N:
        raise UsageError(f"probe grade {sum(modes)} exceeds truncation {N}")
    return [lower_monomial(VermaVector.highest_weight(params), tuple(modes), max_grade=N)]


def _fmt(x) -> str:
    if isinstance(x, Fraction):
        return str(x)
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def _csv(header, rows) -> str:
    buf = io.StringIO()
    buf.write(",".join(header) + "\n")
    for row in rows:
        buf.write(",".join(_fmt(v) for v in row) + "\n")
    return buf.getvalue()


def _dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, default=_fmt)


def _emit(cfg: RunConfig, text: str):
    if cfg.out is None:
        sys.stdout.write(text)
        return
    try:
        with open(cfg.out, "w", newline="\n", encoding="utf-8") as fh:
            fh.write(text)
    except OSError as exc:
        raise OSError(f"cannot write {cfg.out}: {exc.strerror}") from exc


def _report(cfg: RunConfig, line: str):
    # summary lines go to stdout unless stdout already carries the data
    stream = sys.stdout if cfg.out is not None else sys.stderr
    stream.write(line + "\n")


# ------------------------------------------------------------- subcommands

def cmd_kac(cfg: RunConfig) -> int:
    kappa = cfg.kappa
    dual = 16 / kappa
    record = {"kappa": kappa, "c": c_kappa(kappa), "h": h_kappa(kappa),
              "dual_kappa": dual, "dual_c": c_kappa(dual)}
    if cfg.fmt == "json":
        _emit(cfg, _dumps(record) + "\n")
    else:
        _emit(cfg, "".join(f"{k}={_fmt(v)}\n" for k, v in record.items()))
    return EXIT_OK


def cmd_singular_check(cfg: RunConfig) -> int:
    params = cfg.params()
    d1, d2 = singular_defect(cfg.kappa, params)
    verdict = "SINGULAR" if d1 == 0 and d2 == 0 else "NOT"
    record = {"kappa": cfg.kappa, "c": params.c, "h": params.h, "d1": d1, "d2": d2, "verdict": verdict}
    if cfg.fmt == "json":
        _emit(cfg, _dumps(record) + "\n")
    else:
        _emit(cfg, "".join(f"{k}={_fmt(v)}\n" for k, v in record.items()))
    return EXIT_OK


def cmd_trace(cfg: RunConfig) -> int:
    driving = loewner.sample_driving(cfg.kappa, cfg.dt, cfg.T, cfg.seed)
    tips = loewner.trace(driving)
    pts = np.concatenate([[complex(driving.values[0])], tips])
    rows = [(t, z.real, z.imag) for t, z in zip(driving.times, pts)]
    if cfg.fmt == "json":
        _emit(cfg, _dumps({"t": [r[0] for r in rows], "re": [r[1] for r in rows],
                           "im": [r[2] for r in rows]}) + "\n")
    else:
        _emit(cfg, _csv(["t", "re", "im"], rows))
    return EXIT_OK


def cmd_jet(cfg: RunConfig) -> int:
    driving = loewner.sample_driving(cfg.kappa, cfg.dt, cfg.T, cfg.seed)
    K = cfg.extra["order"]
    jets = loewner.laurent_flow(driving, K)
    header = ["t"] + [f"b{j}" for j in range(K + 1)]
    rows = [(t, *row) for t, row in zip(jets.times, jets.coeffs)]
    if cfg.fmt == "json":
        _emit(cfg, _dumps({"t": list(jets.times), "coeffs": jets.coeffs.tolist()}) + "\n")
    else:
        _emit(cfg, _csv(header, rows))
    return EXIT_OK


def _summary(cfg: RunConfig, params, probe: str, report) -> dict:
    return {"kappa": _fmt(cfg.kappa), "c": _fmt(params.c), "h": _fmt(params.h),
            "probe": probe, "slope": report.slope, "slope_stderr": report.slope_stderr,
            "z": report.z_score if np.isfinite(report.z_score) else None,
            "verdict": report.verdict, "degenerate": report.degenerate,
            "n": cfg.n_samples, "dt": cfg.dt, "T": cfg.T, "trunc": cfg.trunc, "seed": cfg.seed}


def _worst(verdicts) -> int:
    codes = [_EXIT_FOR[v] for v in verdicts]
    if EXIT_FAIL in codes:
        return EXIT_FAIL
    if EXIT_INCONCLUSIVE in codes:
        return EXIT_INCONCLUSIVE
    return EXIT_OK


def cmd_martingale(cfg: RunConfig) -> int:
    params = cfg.params()
    probes: List[VermaVector] = []
    for text in cfg.probes or ["all"]:
        probes.extend(parse_probe(text, params, cfg.trunc))
    results = martingale.pairing_drifts(probes, cfg.kappa, cfg.trunc, cfg.dt, cfg.T,
                                        cfg.n_samples, cfg.seed, cfg.points)
    summaries = []
    rows = []
    for w, (report, series) in zip(probes, results):
        label = martingale.probe_label(w)
        summaries.append(_summary(cfg, params, label, report))
        rows.extend((label, e.t, e.mean, e.stderr, e.n) for e in series)
    if cfg.fmt == "json":
        series = {s["probe"]: [dict(zip(("t", "mean", "stderr", "n"), r[1:])) for r in rows if r[0] == s["probe"]]
                  for s in summaries}
        _emit(cfg, _dumps({"summaries": summaries, "series": series}) + "\n")
    elif len(probes) == 1:
        _emit(cfg, _csv(["t", "mean", "stderr", "n"], [r[1:] for r in rows]))
    else:
        _emit(cfg, _csv(["probe", "t", "mean", "stderr", "n"], rows))
    for s in summaries:
        _report(cfg, _dumps(s))
    return _worst(s["verdict"] for s in summaries)


RATIO_BAND = (0.35, 0.65)


def cmd_generator_check(cfg: RunConfig) -> int:
    params = cfg.params()
    dt = as_rational(cfg.extra["dt_exact"])
    rows = []
    leading_ok = True
    for part in group_flow.basis(cfg.trunc)[1:]:
        w = VermaVector.basis(part, params)
        coeffs = group_flow.generator_drift_coefficients(w, cfg.kappa, params)
        leading = coeffs[0]
        expected = martingale.expected_initial_drift(w, cfg.kappa, params)
        leading_ok &= leading == expected
        r1 = group_flow.generator_step_defect(w, cfg.kappa, params, dt)
        r2 = group_flow.generator_step_defect(w, cfg.kappa, params, dt / 2)
        rows.append((martingale.probe_label(w), leading, expected, float(r1), float(r2)))
    top = max(abs(r[3]) for r in rows)
    half = max(abs(r[4]) for r in rows)
    ratio = half / top if top > 0 else None
    ratio_ok = ratio is None or RATIO_BAND[0] <= ratio <= RATIO_BAND[1]
    verdict = "PASS" if leading_ok and ratio_ok else "FAIL"
    summary = {"kappa": _fmt(cfg.kappa), "c": _fmt(params.c), "h": _fmt(params.h), "dt": _fmt(dt),
               "trunc": cfg.trunc, "max_residual": top, "max_residual_half": half,
               "ratio": ratio, "leading_terms_match": leading_ok, "verdict": verdict}
    header = ["probe", "leading", "expected", "residual", "residual_half"]
    if cfg.fmt == "json":
        _emit(cfg, _dumps({"summary": summary, "rows": [dict(zip(header, r)) for r in rows]}) + "\n")
    else:
        _emit(cfg, _csv(header, rows))
    _report(cfg, _dumps(summary))
    return _EXIT_FOR[verdict]


def cmd_boundary(cfg: RunConfig) -> int:
    h = float(cfg.h if cfg.h is not None else 0)
    p = cfg.extra.get("p")
    if p is None:
        roots = martingale.boundary_power_exponents(cfg.kappa, h)
        if isinstance(roots[0], complex):
            raise UsageError(f"exponents are complex: {roots}")
        p = max(roots)
    report = martingale.boundary_martingale_test(cfg.kappa, h, p, cfg.extra["x0"], cfg.dt, cfg.T,
                                                 cfg.n_samples, cfg.seed, cfg.points)
    summary = {"kappa": _fmt(cfg.kappa), "h": h, "p": float(p), "x0": cfg.extra["x0"],
               "slope": report.slope, "slope_stderr": report.slope_stderr,
               "z": report.z_score if np.isfinite(report.z_score) else None,
               "verdict": report.verdict, "stopped_fraction": report.stopped_fraction,
               "n": cfg.n_samples, "dt": cfg.dt, "T": cfg.T, "seed": cfg.seed}
    _emit(cfg, _dumps(summary) + "\n")
    return _EXIT_FOR[report.verdict]


COMMANDS = {
    "kac": cmd_kac,
    "singular-check": cmd_singular_check,
    "trace": cmd_trace,
    "jet": cmd_jet,
    "martingale": cmd_martingale,
    "generator-check": cmd_generator_check,
    "boundary": cmd_boundary,
}


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="slevir", description="SLE / Virasoro null-vector toolkit")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p, sim=True):
        p.add_argument("--kappa", required=True, help="rational string such as 8/3")
        p.add_argument("--out", help="output path (default: stdout)")
        p.add_argument("--format", dest="fmt", choices=("csv", "json"), default="csv")
        if sim:
            p.add_argument("--dt", default="1e-3")
            p.add_argument("--T", default="0.5")
            p.add_argument("--seed", type=int, default=0)

    common(sub.add_parser("kac", help="central charge and weight at kappa"), sim=False)

    p = sub.add_parser("singular-check", help="level-2 null-vector defects")
    common(p, sim=False)
    p.add_argument("--c", required=True)
    p.add_argument("--h", required=True)

    for name in ("trace", "jet"):
        p = sub.add_parser(name)
        common(p)
        p.add_argument("--float-kappa", action="store_true", help="accept kappa as a float")
        if name == "jet":
            p.add_argument("--order", type=int, default=4)

    p = sub.add_parser("martingale", help="conservation test of pairing observables")
    common(p)
    p.add_argument("--probe", action="append", default=[], help="w, L-2, L-1^2, L-2L-1, or all")
    p.add_argument("--trunc", type=int, default=group_flow.DEFAULT_TRUNCATION)
    p.add_argument("--n", type=int, default=martingale.DEFAULT_SAMPLES)
    p.add_argument("--points", type=int, default=martingale.DEFAULT_POINTS)
    p.add_argument("--c")
    p.add_argument("--h")

    p = sub.add_parser("generator-check", help="one-step generator residuals")
    p.add_argument("--kappa", required=True)
    p.add_argument("--dt", default="1/1000")
    p.add_argument("--trunc", type=int, default=group_flow.DEFAULT_TRUNCATION)
    p.add_argument("--c")
    p.add_argument("--h")
    p.add_argument("--out")
    p.add_argument("--format", dest="fmt", choices=("csv", "json"), default="csv")

    p = sub.add_parser("boundary", help="boundary power-law observable")
    common(p)
    p.set_defaults(T="0.1", dt="1e-4")
    p.add_argument("--float-kappa", action="store_true")
    p.add_argument("--h", default="0")
    p.add_argument("--p", type=float, help="exponent (default: larger root of the quadratic)")
    p.add_argument("--x0", type=float, default=1.0)
    p.add_argument("--n", type=int, default=martingale.DEFAULT_SAMPLES)
    p.add_argument("--points", type=int, default=martingale.DEFAULT_POINTS)
    return parser


def make_config(args) -> RunConfig:
    cmd = args.command
    allow_float = getattr(args, "float_kappa", False)
    kappa = parse_kappa(args.kappa, allow_float=allow_float, allow_zero=cmd in ("trace", "jet"))
    cfg = RunConfig(command=cmd, kappa=kappa, out=args.out, fmt=args.fmt)
    if hasattr(args, "c") and args.c is not None:
        cfg.c = parse_rational(args.c)
    if hasattr(args, "h") and args.h is not None:
        cfg.h = parse_rational(args.h)
    if cmd == "generator-check":
        dt = parse_rational(args.dt)
        if dt <= 0:
            raise UsageError("dt must be positive")
        cfg.extra["dt_exact"] = dt
        cfg.dt = float(dt)
    elif hasattr(args, "dt"):
        try:
            cfg.dt, cfg.T = float(args.dt), float(args.T)
        except ValueError:
            raise UsageError("dt and T must be numbers") from None
        if cfg.dt <= 0 or cfg.T < cfg.dt:
            raise UsageError("need dt > 0 and T >= dt")
        try:
            group_flow._random.n_steps_for(cfg.dt, cfg.T)
        except ValueError as exc:
            raise UsageError(str(exc)) from None
        cfg.seed = args.seed
    if hasattr(args, "trunc"):
        if not 1 <= args.trunc <= 6:
            raise UsageError("--trunc must be between 1 and 6")
        cfg.trunc = args.trunc
    if hasattr(args, "n"):
        if args.n < 2:
            raise UsageError("--n must be at least 2")
        cfg.n_samples = args.n
    if hasattr(args, "points"):
        steps = group_flow._random.n_steps_for(cfg.dt, cfg.T)
        if not 3 <= args.points <= steps:
            raise UsageError("--points must be between 3 and the number of steps")
        cfg.points = args.points
    if cmd == "martingale":
        cfg.probes = list(args.probe)
        for text in cfg.probes:
            parse_probe(text, cfg.params(), cfg.trunc)
    if cmd == "jet":
        if not 1 <= args.order <= loewner.MAX_JET_ORDER:
            raise UsageError(f"--order must be in 1..{loewner.MAX_JET_ORDER}")
        cfg.extra["order"] = args.order
    if cmd == "boundary":
        if args.x0 <= 0:
            raise UsageError("--x0 must be positive")
        cfg.extra["x0"] = args.x0
        cfg.extra["p"] = args.p
    return cfg


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = make_config(args)
        return COMMANDS[cfg.command](cfg)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        sys.stderr.write(f"slevir: error: {exc}\n")
        return EXIT_USAGE
    except OSError as exc:
        sys.stderr.write(f"slevir: {exc}\n")
        return EXIT_IO
    except martingale.InsufficientDataError as exc:
        sys.stderr.write(f"slevir: insufficient data: {exc}\n")
        return EXIT_INCONCLUSIVE


if __name__ == "__main__":
    sys.exit(main())
