"""Kernel selection for the backward shooting integrator.

The compiled extension is used when it imports; ``FRONTSPEED_BACKEND=python``
forces the pure-Python kernel and ``=compiled`` makes a missing extension an
error.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from . import expr as E
from . import _shoot_py

STATUS_OK = 0
STATUS_CROSSING = 1
STATUS_UNDERFLOW = 2
STATUS_NONFINITE = 3
STATUS_MAX_STEPS = 4
STATUS_BAD_SEED = 5

STATUS_NAMES = {
    STATUS_OK: "ok",
    STATUS_CROSSING: "crossing",
    STATUS_UNDERFLOW: "step underflow",
    STATUS_NONFINITE: "non-finite right-hand side",
    STATUS_MAX_STEPS: "step budget exhausted",
    STATUS_BAD_SEED: "seed failed to leave y=0",
}


@dataclass(frozen=True)
class ShootOptions:
    rtol: float = 1e-8
    atol: float = 1e-10
    seed: float = 1e-6
    seed_steps: int = 16
    switch: float = 1e-6
    max_steps: int = 200_000
    max_step: float = 4e-3


@dataclass(frozen=True, eq=False)
class ShootProblem:
    """Cells ``[nodes[k], nodes[k+1]]`` with one (g, f, kappa) expression triple each."""

    nodes: np.ndarray
    g: tuple
    f: tuple
    kappa: tuple
    p: float
    extra: dict = field(default_factory=dict)

    @cached_property
    def pyfuncs(self):
        return [(E.to_pyfunc(g), E.to_pyfunc(f), E.to_pyfunc(k))
                for g, f, k in zip(self.g, self.f, self.kappa)]

    @cached_property
    def programs(self):
        """Flat opcode/argument arrays plus offsets, three programs per cell."""
        ops: list[int] = []
        args: list[float] = []
        offsets = [0]
        for triple in zip(self.g, self.f, self.kappa):
            for node in triple:
                o, a = E.to_program(node)
                ops.extend(o)
                args.extend(a)
                offsets.append(len(ops))
        return (np.asarray(ops, dtype=np.int32), np.asarray(args, dtype=np.float64),
                np.asarray(offsets, dtype=np.int64))


def _load_compiled():
    try:
        from . import _shoot  # type: ignore[attr-defined]
    except ImportError:
        return None
    return _shoot


_compiled = _load_compiled()
_requested = os.environ.get("FRONTSPEED_BACKEND", "").strip().lower()
if _requested not in ("", "python", "compiled"):
    raise ImportError(f"FRONTSPEED_BACKEND must be 'python' or 'compiled', got {_requested!r}")
if _requested == "compiled" and _compiled is None:
    raise ImportError("FRONTSPEED_BACKEND=compiled but the compiled kernel is not built")

BACKEND = "compiled" if (_compiled is not None and _requested != "python") else "python"


def available() -> list[str]:
    return ["python"] + (["compiled"] if _compiled is not None else [])


def shoot(problem: ShootProblem, c: float, opts: ShootOptions, backend: str | None = None):
    """Integrate backward from xi=1; returns ``(xs, ys, errs, status, status_x, nsteps)``.

    ``xs`` is decreasing and starts at the seed abscissa.
    """
    name = backend or BACKEND
    if name not in ("python", "compiled"):
        raise ValueError(f"unknown backend {name!r}")
    if name == "compiled":
        if _compiled is None:
            raise ImportError("compiled kernel not available")
        ops, args, offsets = problem.programs
        return _compiled.shoot(np.ascontiguousarray(problem.nodes, dtype=np.float64), ops, args,
                               offsets, float(c), float(problem.p), opts.rtol, opts.atol,
                               opts.seed, opts.seed_steps, opts.switch, opts.max_steps,
                               opts.max_step)
    return _shoot_py.shoot(problem.nodes, problem.pyfuncs, float(c), float(problem.p),
                           opts.rtol, opts.atol, opts.seed, opts.seed_steps, opts.switch,
                           opts.max_steps, opts.max_step)
