"""Command-line front end: ``frontspeed <command> model.toml [options]``.

Exit codes: 0 success, 1 usage, 2 model validation, 3 numerical failure,
4 refused operation.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import time
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .bvp_solver import INDETERMINATE, SolveOptions, solve_bvp
from .coefficients import load_model, validate
from .errors import (ConfigError, DomainError, ExprSyntaxError, HypothesisError, NumericalError,
                     QuadratureError, RefusedError)
from .profile import reconstruct, residual_integral_form
from .regularization import default_ladder, model_sweep
from .wave_speed import bounds_c_star, certify, find_c_star

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_MODEL = 2
EXIT_NUMERICAL = 3
EXIT_REFUSED = 4

COMMANDS = ("validate", "bounds", "certify", "solve", "speed", "profile", "reg-sweep")


class UsageError(Exception):
    pass


@dataclass
class RunReport:
    model_hash: str = ""
    command: list = field(default_factory=list)
    outputs: list = field(default_factory=list)
    timings: dict = field(default_factory=dict)
    warnings: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"model_hash": self.model_hash, "command": list(self.command),
                "outputs": list(self.outputs), "warnings": list(self.warnings),
                "timings": dict(self.timings)}


class _Timer:
    def __init__(self, report: RunReport, name: str):
        self.report, self.name = report, name

    def __enter__(self):
        self.t0 = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.report.timings[self.name] = time.perf_counter() - self.t0
        return False


# ---------------------------------------------------------------------------
# serialization


def _num(x: float) -> str:
    if math.isnan(x):
        return '"nan"'
    if math.isinf(x):
        return '"inf"' if x > 0 else '"-inf"'
    if x == int(x) and abs(x) < 1e16:
        return repr(float(x))
    return "%.17g" % x


def to_json(obj, indent: int = 2, _level: int = 0) -> str:
    """JSON text with every float written at 17 significant digits."""
    pad = " " * (indent * (_level + 1))
    end = " " * (indent * _level)
    if obj is None:
        return "null"
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _num(float(obj))
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{to_json(str(k))}: {to_json(v, indent, _level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        if len(obj) == 0:
            return "[]"
        items = [pad + to_json(v, indent, _level + 1) for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def to_csv(header, rows) -> str:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(v if isinstance(v, str) else "%.12g" % v for v in row))
    return "\n".join(lines) + "\n"


def _paths(out: str | None):
    """(json_path, csv_path) for --out; ``None`` json means stdout."""
    if out is None:
        return None, None
    stem, ext = os.path.splitext(out)
    if ext.lower() == ".csv":
        return stem + ".json", out
    return out, stem + ".csv"


def _write(path: str, text: str, report: RunReport):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)
    report.outputs.append(path)


# ---------------------------------------------------------------------------
# commands


def _cmd_validate(m, args, rep):
    diags = validate(m)
    failed = [d for d in diags if not d.passed]
    rep.warnings.extend(f"({d.hypothesis}) {d.message}" for d in failed)
    body = {"name": m.name, "p": m.p, "theta": list(m.theta),
            "hypotheses": [{"name": d.hypothesis, "passed": d.passed, "message": d.message,
                            "witness": d.witness} for d in diags]}
    if failed:
        first = failed[0]
        exc = HypothesisError(first.hypothesis, first.message, first.witness)
        exc.partial = body
        raise exc
    return body, None


def _cmd_bounds(m, args, rep):
    with _Timer(rep, "stats"):
        st = m.stats
    rep.warnings.extend(st.warnings)
    with _Timer(rep, "bounds"):
        b = bounds_c_star(m, st)
    return {"stats": st.to_dict(), "bounds": _bounds_dict(b)}, None


def _bounds_dict(b):
    d = b.to_dict()
    return {"lower": d["lower"], "upper": d["upper"], "simple_lower": d["simple_lower"],
            "simple_upper": d["simple_upper"], "assumptions_checked": d["assumptions_checked"]}


def _need_c(args):
    if args.c is None:
        raise UsageError(f"{args.command} needs --c")
    return args.c


def _cmd_certify(m, args, rep):
    c = _need_c(args)
    with _Timer(rep, "certify"):
        cert = certify(m, m.stats, c)
    if cert.verdict == INDETERMINATE:
        rep.warnings.append(f"certificate at c={c!r} is Indeterminate")
    return {"verdicts": [cert.to_dict()]}, None


def _cmd_solve(m, args, rep):
    c = _need_c(args)
    with _Timer(rep, "solve"):
        res = solve_bvp(m, c, SolveOptions())
    if res.verdict == INDETERMINATE:
        rep.warnings.append(f"solver verdict at c={c!r} is Indeterminate")
    if res.verdict != "Inadmissible":
        rep.warnings.extend(res.diagnostics)
    csv = None
    if res.solution is not None:
        csv = to_csv(("xi", "y", "ydot_left", "ydot_right", "residual"), res.solution.to_rows())
    return {"verdicts": [res.to_dict()]}, csv


def _cmd_speed(m, args, rep):
    tol = args.tol if args.tol is not None else 1e-3
    st = m.stats
    rep.warnings.extend(st.warnings)
    try:
        with _Timer(rep, "speed"):
            res = find_c_star(m, st, tol, SolveOptions())
    except RefusedError as exc:
        exc.partial = {"verdicts": [], "bounds": _bounds_dict(bounds_c_star(m, st)),
                       "c_star": None, "bracket_history": []}
        raise
    hist = [dict(h) for h in res.history]
    n_ind = sum(1 for h in hist if h["verdict"] not in ("Admissible", "Inadmissible"))
    if n_ind:
        rep.warnings.append(f"{n_ind} bisection step(s) were Indeterminate or failed")
    body = {"verdicts": [{"c": h["c"], "verdict": h["verdict"]} for h in hist],
            "bounds": _bounds_dict(res.bounds), "c_star": res.c_star,
            "bracket": list(res.bracket), "tol": tol, "bracket_history": hist}
    return body, None


def _cmd_profile(m, args, rep):
    c = args.c
    if c is None:
        with _Timer(rep, "speed"):
            c = find_c_star(m, m.stats, args.tol or 1e-3).admissible_above
    with _Timer(rep, "solve"):
        res = solve_bvp(m, c, SolveOptions())
    if not res.admissible:
        raise NumericalError(f"solver verdict at c={c!r} is {res.verdict}; no profile")
    with _Timer(rep, "profile"):
        prof = reconstruct(m, res.solution, args.grid or 2048)
        resid = residual_integral_form(m, c, prof)
    meta = prof.metadata()
    body = {"a": meta["a"], "b": meta["b"], "sharp_at_zero": meta["sharp_at_zero"],
            "sharp_at_one": meta["sharp_at_one"], "kinks": meta["kinks"], "residual": resid,
            "c": c, "a_kind": meta["a_kind"], "b_kind": meta["b_kind"],
            "slope_at_b": meta["slope_at_b"]}
    csv = to_csv(("z", "v", "phi_v"), prof.samples)
    return body, csv


def _cmd_reg_sweep(m, args, rep):
    c = _need_c(args)
    if args.eps:
        try:
            ladder = [float(t) for t in args.eps.split(",") if t.strip()]
        except ValueError:
            raise UsageError(f"--eps must be a comma list of reals, got {args.eps!r}") from None
    else:
        ladder = list(default_ladder(m.theta))
    with _Timer(rep, "sweep"):
        sw = model_sweep(m, c, ladder, opts=SolveOptions())
    for name, r in (("inf_avg_H", sw.inf_avg_H), ("sup_avg_psi", sw.sup_avg_psi)):
        if not r.converged:
            rep.warnings.append(f"{name}: final gap {r.gaps[-1]:.3g} above {r.tol:g}")
    rows = []
    for name, r in (("inf_avg_H", sw.inf_avg_H), ("sup_avg_psi", sw.sup_avg_psi)):
        for e, v, g in r.rows():
            rows.append((name, e, v, g))
    return sw.to_dict(), to_csv(("quantity", "eps", "value", "gap"), rows)


_HANDLERS = {
    "validate": _cmd_validate, "bounds": _cmd_bounds, "certify": _cmd_certify,
    "solve": _cmd_solve, "speed": _cmd_speed, "profile": _cmd_profile,
    "reg-sweep": _cmd_reg_sweep,
}


# ---------------------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="frontspeed", description="Traveling-wave speeds and profiles for "
                 "reaction-diffusion-advection models with piecewise coefficients.")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("model", help="model config (TOML)")
    ap.add_argument("--c", type=float, help="wave speed")
    ap.add_argument("--tol", type=float, help="bisection tolerance for c* (default 1e-3)")
    ap.add_argument("--out", help="JSON output path; CSV goes next to it with a .csv suffix")
    ap.add_argument("--eps", help="comma-separated eps ladder for reg-sweep")
    ap.add_argument("--grid", type=int, help="number of profile samples (default 2048)")
    ap.add_argument("--quiet", action="store_true", help="no warnings on stderr")
    return ap


def run(argv=None) -> tuple[int, RunReport]:
    argv = list(sys.argv[1:] if argv is None else argv)
    rep = RunReport(command=list(argv))
    err = sys.stderr
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        print(f"frontspeed: usage error: {exc}", file=err)
        return EXIT_USAGE, rep
    quiet = args.quiet

    def fail(code, exc, partial=None):
        print(f"frontspeed: {exc}", file=err)
        if partial is not None:
            _emit(args, rep, dict(partial, error=str(exc)), None, quiet)
        return code, rep

    try:
        with _Timer(rep, "parse"):
            m = load_model(args.model, check_hypotheses=args.command != "validate")
            rep.model_hash = m.source_hash
    except FileNotFoundError as exc:
        return fail(EXIT_USAGE, exc)
    except HypothesisError as exc:
        return fail(EXIT_MODEL, exc)
    except (ExprSyntaxError, ConfigError, DomainError) as exc:
        return fail(EXIT_MODEL, exc)

    try:
        body, csv = _HANDLERS[args.command](m, args, rep)
    except UsageError as exc:
        print(f"frontspeed: usage error: {exc}", file=err)
        return EXIT_USAGE, rep
    except HypothesisError as exc:
        return fail(EXIT_MODEL, exc, getattr(exc, "partial", None))
    except RefusedError as exc:
        return fail(EXIT_REFUSED, exc, getattr(exc, "partial", None))
    except (NumericalError, QuadratureError, DomainError) as exc:
        return fail(EXIT_NUMERICAL, exc)
    _emit(args, rep, body, csv, quiet)
    return EXIT_OK, rep


def _emit(args, rep, body, csv, quiet):
    json_path, csv_path = _paths(args.out)
    if csv is not None and csv_path is not None:
        _write(csv_path, csv, rep)
    doc = {"model_hash": rep.model_hash, "command": args.command}
    doc.update(body)
    if json_path is not None:
        rep.outputs.append(json_path)
    doc["run"] = rep.to_dict()
    text = to_json(doc) + "\n"
    if json_path is None:
        sys.stdout.write(text)
    else:
        with open(json_path, "w", encoding="utf-8") as fh:
            fh.write(text)
    if not quiet:
        for w in rep.warnings:
            print(f"frontspeed: warning: {w}", file=sys.stderr)


def main(argv=None) -> int:
    code, _ = run(argv)
    return code


if __name__ == "__main__":
    sys.exit(main())
