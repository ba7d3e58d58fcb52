"""Random piecewise-polynomial models that satisfy every structural hypothesis."""

import numpy as np

from frontspeed import parse_model

BREAK_GRID = np.round(np.arange(0.15, 0.86, 0.05), 2)


def _breaks(rng):
    n = int(rng.integers(0, 3))
    while True:
        pts = np.sort(rng.choice(BREAK_GRID, size=n, replace=False))
        if n < 2 or np.min(np.diff(pts)) >= 0.15:
            return [float(t) for t in pts]


def _poly(coefs):
    terms = [f"{coefs[0]:.3f}"]
    for k, a in enumerate(coefs[1:], start=1):
        terms.append(f"({a:.3f})*x^{k}")
    return " + ".join(terms)


def _table(name, breaks, exprs):
    nodes = [0.0] + breaks + [1.0]
    rows = [f'  {{ interval = [{a}, {b}], expr = "{e}" }},' for a, b, e in zip(nodes, nodes[1:], exprs)]
    return f"{name} = [\n" + "\n".join(rows) + "\n]"


def random_model_text(rng):
    p = float(rng.choice([2.0, 2.0, 2.0, 1.5, 3.0]))
    out = [f"p = {p}"]
    bf, bg, bh, bd = (_breaks(rng) for _ in range(4))
    out.append(_table("f", bf, [_poly(rng.uniform(-0.5, 0.5, int(rng.integers(1, 4))))
                                for _ in range(len(bf) + 1)]))
    out.append(_table("g", bg, [_poly([rng.uniform(0.5, 2.0), rng.uniform(-0.3, 0.3)])
                                for _ in range(len(bg) + 1)]))
    # p < 2 needs h = O(x^2) at 0 for a finite slope limit
    base = "x^2*(1 - x)" if p < 2.0 else "x*(1 - x)"
    out.append(_table("h", bh, [f"{base}*({rng.uniform(0.5, 2.0):.3f} + ({rng.uniform(-0.4, 0.4):.3f})*x)"
                                for _ in range(len(bh) + 1)]))
    degenerate = p == 2.0 and rng.random() < 0.25
    dexprs = [f"{rng.uniform(0.5, 2.0):.3f}" for _ in range(len(bd) + 1)]
    if degenerate:
        dexprs = [f"x*{e}" for e in dexprs]
    out.append(_table("d", bd, dexprs))
    return "\n".join(out) + "\n"


def random_models(n, seed=20240601):
    rng = np.random.default_rng(seed)
    return [parse_model(random_model_text(rng), name=f"random_{k}") for k in range(n)]
