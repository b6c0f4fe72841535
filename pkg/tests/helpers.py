"""Shared builders for the test suite."""

from __future__ import annotations

import numpy as np

from finslerflow import metric as mt


def halfplane_metric() -> mt.PseudoFinslerMetric:
    """F = p**2 - x: strata split by the vertical axis."""
    return mt.metric_from_strings(3, ["-x", "0", "1", "0"])


def parabola_metric(alpha: float = 1.0) -> mt.PseudoFinslerMetric:
    """F = p**2 + alpha*y**2 - x: parabolic boundary stratum."""
    return mt.metric_from_strings(3, [f"{alpha}*y^2 - x", "0", "1", "0"])


def quartic_product_metric() -> mt.PseudoFinslerMetric:
    """F = p*(p - 4*x): the induced tangency example, written directly."""
    return mt.metric_from_strings(3, ["0", "-4*x", "1", "0"])


def random_poly_text(rng, degree: int = 2) -> str:
    """A random polynomial in x and y with coefficients in [-2, 2]."""
    parts = []
    for i in range(degree + 1):
        for j in range(degree + 1 - i):
            c = float(rng.uniform(-2.0, 2.0))
            if abs(c) < 0.15:
                continue
            term = f"{c:.6f}"
            if i:
                term += f"*x^{i}" if i > 1 else "*x"
            if j:
                term += f"*y^{j}" if j > 1 else "*y"
            parts.append(term)
    if not parts:
        parts = ["0.5"]
    return " + ".join(parts)


def random_metric(rng, degree: int) -> mt.PseudoFinslerMetric:
    """Random polynomial metric with a safely nonvanishing top coefficient."""
    texts = [random_poly_text(rng) for _ in range(degree)]
    lead = float(rng.uniform(0.6, 1.8) * rng.choice([-1.0, 1.0]))
    texts.append(f"{lead:.6f}")
    return mt.metric_from_strings(degree, texts)


def nondegenerate_state(m, rng, box=(-1.0, 1.0, -1.0, 1.0), min_field=1e-3):
    """A random (x, y, p) where the projectivized field is well scaled."""
    for _ in range(200):
        x = float(rng.uniform(box[0], box[1]))
        y = float(rng.uniform(box[2], box[3]))
        p = float(rng.uniform(-1.5, 1.5))
        dv = mt.denom_poly(m, x, y)(p)
        sc = 1.0 + mt.metric_scale(m, x, y)
        if abs(dv) > min_field * sc:
            return x, y, p
    raise AssertionError("no well-scaled state found")


def max_ode_residual(m, trace, stride: int = 7, event_margin: int = 21) -> float:
    """Spot-check dy/dx = slope and d(slope)/dx = P/Delta along a trace.

    Differentiates a quartic fitted through five consecutive p-chart
    samples, so the check's own error is fourth order in the sample
    spacing.  Windows near recorded events are skipped: there the curve
    folds or degenerates and no finite-difference stencil is meaningful.
    """
    event_ix = np.array([e.index for e in trace.events], dtype=int)
    worst = 0.0
    checked = 0
    for k in range(stride, len(trace.t) - stride, stride):
        if event_ix.size and np.min(np.abs(event_ix - k)) <= event_margin:
            continue
        lo, hi = k - 2, k + 3
        if any(trace.chart[j] != "p" for j in range(lo, hi)):
            continue
        xs = trace.x[lo:hi]
        d = np.diff(xs)
        if not (np.all(d > 0) or np.all(d < 0)) or np.abs(d).min() < 1e-12:
            continue
        x, y, p = trace.x[k], trace.y[k], trace.slope[k]
        dv = mt.denom_poly(m, x, y)(p)
        nv = mt.numer_poly(m, x, y)(p)
        sc = 1.0 + mt.metric_scale(m, x, y)
        if abs(dv) < 1e-3 * sc**2:
            continue
        u = xs - x
        s = np.abs(u).max()
        dy = np.polyfit(u / s, trace.y[lo:hi], 4)[3] / s
        dp = np.polyfit(u / s, trace.slope[lo:hi], 4)[3] / s
        worst = max(worst, abs(dy - p) / (1.0 + abs(p)))
        worst = max(worst, abs(dp - nv / dv) / (1.0 + abs(nv / dv)))
        checked += 1
    assert checked > 0, "residual check found no usable interior samples"
    return worst
