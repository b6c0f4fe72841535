"""Singular points of the geodesic direction field.

A singular point of the projectivized field is a triple (x, y, p) where
both the denominator and numerator polynomials vanish.  The linearization
there has one vanishing eigenvalue along the field's kernel; the other
two decide the local phase portrait:

* RealPair      -- opposite real eigenvalues (saddle-like passage),
* ImaginaryPair -- conjugate imaginary pair (spiralling approach),
* Resonant32    -- real spectrum in ratio 3:2, the generic boundary
                   point with a double isotropic direction,
* Degenerate    -- everything else (including a fully zero spectrum).

The singular set over the plane projects to curves; they are traced as
the zero set of the resultant of the two polynomials in p.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import metric as mt
from . import poly
from .metric import PseudoFinslerMetric, Stratum

REAL_PAIR = "RealPair"
IMAGINARY_PAIR = "ImaginaryPair"
RESONANT_32 = "Resonant32"
DEGENERATE = "Degenerate"

_KIND_TOL = 1e-6


class StratumError(ValueError):
    """Operation requested on the wrong stratum."""


@dataclass
class SingularPoint:
    x: float
    y: float
    p: float
    eigenvalues: np.ndarray
    kind: str
    transversal: bool | None = None


@dataclass
class CurveSamples:
    points: np.ndarray
    label: str = ""

    def __len__(self) -> int:
        return len(self.points)


@dataclass
class TangencyReport:
    x: float
    y: float
    p: float
    tangent: tuple[float, float]
    direction_dot: float
    transversal: bool
    eigenvalues: np.ndarray
    eigenvalues_nonzero: bool
    consistent: bool


def singular_directions(m: PseudoFinslerMetric, x: float, y: float) -> tuple[float, float]:
    """The two real zeros of the denominator at a point of MMinus."""
    if m.degree != 3:
        raise StratumError("singular directions are defined for degree 3")
    stratum = mt.classify_point(m, x, y)
    if stratum != Stratum.MMinus:
        raise StratumError(
            f"point ({x}, {y}) lies in {stratum.value}, not MMinus"
        )
    roots = mt.denom_poly(m, x, y).real_roots()
    flat = [r for r, k in roots for _ in range(k)]
    if len(flat) != 2:
        raise StratumError(
            f"expected two real denominator roots at ({x}, {y}), got {flat}"
        )
    return flat[0], flat[1]


def jacobian_at(m: PseudoFinslerMetric, x: float, y: float, p: float) -> np.ndarray:
    """Exact Jacobian of the field (denom, p*denom, numer) at (x, y, p).

    Coefficient partials come from symbolic differentiation; the slope
    partial is the polynomial derivative.
    """
    d = mt.denom_poly(m, x, y)
    dv = d(p)
    dp_ = d.deriv()(p)
    dx_ = m.table("denom_x").poly_value(x, y, p)
    dy_ = m.table("denom_y").poly_value(x, y, p)
    npoly_ = mt.numer_poly(m, x, y)
    px_ = m.table("numer_x").poly_value(x, y, p)
    py_ = m.table("numer_y").poly_value(x, y, p)
    pp_ = npoly_.deriv()(p)
    return np.array(
        [
            [dx_, dy_, dp_],
            [p * dx_, p * dy_, dv + p * dp_],
            [px_, py_, pp_],
        ]
    )


def classify_singular(
    m: PseudoFinslerMetric, x: float, y: float, p: float
) -> SingularPoint:
    """Classify a singular point by the spectrum of the linearization."""
    sc = (1.0 + mt.metric_scale(m, x, y)) ** 2
    dv = mt.denom_poly(m, x, y)(p)
    pv = mt.numer_poly(m, x, y)(p)
    if max(abs(dv), abs(pv)) > 1e-4 * sc:
        raise ValueError(
            f"({x}, {y}, {p}) is not singular: |denom|={abs(dv):.3g}, "
            f"|numer|={abs(pv):.3g}"
        )
    J = jacobian_at(m, x, y, p)
    eigs = np.linalg.eigvals(J)
    norm = float(np.linalg.norm(J))
    order = np.argsort(-np.abs(eigs))
    eigs = eigs[order]
    if np.abs(eigs[0]) < 1e-7 * max(norm, 1e-30):
        return SingularPoint(x, y, p, eigs, DEGENERATE)
    l1, l2 = eigs[0], eigs[1]
    mag = max(abs(l1), abs(l2))
    kind = DEGENERATE
    transversal = None
    if abs(l1 + l2) < _KIND_TOL * mag:
        if abs(l1.imag) < _KIND_TOL * abs(l1):
            kind = REAL_PAIR
        elif abs(l1.real) < _KIND_TOL * abs(l1):
            kind = IMAGINARY_PAIR
    elif (
        abs(l1.imag) < _KIND_TOL * abs(l1)
        and abs(l2.imag) < _KIND_TOL * abs(l2)
        and abs(l2.real) > 0
        and abs(abs(l1 / l2) - 1.5) < 1e-4
        and l1.real * l2.real > 0
    ):
        kind = RESONANT_32
        try:
            from .flow import check_transversality

            check_transversality(m, x, y, p)
            transversal = True
        except Exception:
            transversal = False
    return SingularPoint(x, y, p, eigs, kind, transversal)


# ---------------------------------------------------------------------------
# the resultant locus and its tracing


def resultant_at(m: PseudoFinslerMetric, x: float, y: float) -> float:
    """Resultant in p of the denominator and numerator polynomials."""
    n = m.degree
    dc = np.zeros(max(2 * n - 3, 2))
    v = m.table("denom").values_at(x, y)
    dc[: v.size] = v
    nc = np.zeros(2 * n)
    v = m.table("numer").values_at(x, y)
    nc[: v.size] = v
    return poly.resultant(dc, nc, deg_f=max(2 * n - 4, 1), deg_g=2 * n - 1)


def resultant_grid_fn(m: PseudoFinslerMetric):
    """Vectorized (X, Y) -> resultant values for implicit tracing."""
    n = m.degree

    def fn(X, Y):
        X = np.asarray(X, dtype=np.float64)
        dc = m.table("denom").values_on_grid(X, Y)
        nc = m.table("numer").values_on_grid(X, Y)
        dfull = np.zeros((max(2 * n - 3, 2),) + X.shape)
        dfull[: dc.shape[0]] = dc
        return poly.resultant_grid(dfull, nc)

    return fn


def disc_grid_fn(m: PseudoFinslerMetric):
    """Vectorized (X, Y) -> discriminant of F (degrees 2 and 3)."""
    if m.degree == 2:

        def fn2(X, Y):
            c0, c1, c2 = m.table("F").values_on_grid(np.asarray(X, float), Y)
            return c1 * c1 - 4.0 * c2 * c0

        return fn2
    if m.degree != 3:
        raise ValueError("discriminant grid requires degree 2 or 3")

    def fn(X, Y):
        c0, c1, c2, c3 = m.table("F").values_on_grid(np.asarray(X, float), Y)
        return (
            18.0 * c3 * c2 * c1 * c0
            - 4.0 * c2**3 * c0
            + c2**2 * c1**2
            - 4.0 * c3 * c1**3
            - 27.0 * c3**2 * c0**2
        )

    return fn


# 16-case marching-squares table: corner order (i, j), (i+1, j), (i+1, j+1),
# (i, j+1); entries are pairs of cell edges (0 bottom, 1 right, 2 top, 3 left)
_MS_SEGMENTS = {
    0: [], 15: [],
    1: [(3, 0)], 14: [(3, 0)],
    2: [(0, 1)], 13: [(0, 1)],
    4: [(1, 2)], 11: [(1, 2)],
    8: [(2, 3)], 7: [(2, 3)],
    3: [(3, 1)], 12: [(3, 1)],
    6: [(0, 2)], 9: [(0, 2)],
    5: None, 10: None,  # saddles, resolved by the cell-center sample
}


def _edge_point(edge, x0, y0, dx, dy, v):
    """Linear zero crossing on a cell edge; v holds the corner values."""

    def lerp(va, vb):
        d = vb - va
        t = 0.5 if d == 0 else min(max(-va / d, 0.0), 1.0)
        return t

    if edge == 0:
        t = lerp(v[0], v[1])
        return (x0 + t * dx, y0)
    if edge == 1:
        t = lerp(v[1], v[2])
        return (x0 + dx, y0 + t * dy)
    if edge == 2:
        t = lerp(v[3], v[2])
        return (x0 + t * dx, y0 + dy)
    t = lerp(v[0], v[3])
    return (x0, y0 + t * dy)


def _marching_squares(vals, xs, ys):
    """Segments of the zero contour of vals[i, j] = g(xs[i], ys[j])."""
    segs = []
    ni, nj = vals.shape
    for i in range(ni - 1):
        for j in range(nj - 1):
            v = (vals[i, j], vals[i + 1, j], vals[i + 1, j + 1], vals[i, j + 1])
            if not all(np.isfinite(v)):
                continue
            idx = 0
            for k, vk in enumerate(v):
                if vk < 0:
                    idx |= 1 << k
            entry = _MS_SEGMENTS[idx]
            if entry == []:
                continue
            x0, y0 = xs[i], ys[j]
            dx, dy = xs[i + 1] - xs[i], ys[j + 1] - ys[j]
            if entry is None:
                center = 0.25 * sum(v)
                if idx == 5:
                    pairs = [(3, 2), (0, 1)] if center < 0 else [(3, 0), (1, 2)]
                else:
                    pairs = [(0, 1), (2, 3)] if center < 0 else [(0, 3), (1, 2)]
                entry = pairs
            for ea, eb in entry:
                pa = _edge_point(ea, x0, y0, dx, dy, v)
                pb = _edge_point(eb, x0, y0, dx, dy, v)
                segs.append((pa, pb))
    return segs


def _stitch(segs, snap):
    """Join segments into polylines by endpoint proximity."""
    def key(pt):
        return (round(pt[0] / snap), round(pt[1] / snap))

    adj: dict[tuple, list[int]] = {}
    for idx, (a, b) in enumerate(segs):
        adj.setdefault(key(a), []).append(idx)
        adj.setdefault(key(b), []).append(idx)
    used = [False] * len(segs)
    lines = []
    for start in range(len(segs)):
        if used[start]:
            continue
        used[start] = True
        a, b = segs[start]
        chain = [a, b]
        for head in (1, 0):
            while True:
                pt = chain[-1] if head else chain[0]
                nxt = None
                for cand in adj.get(key(pt), []):
                    if not used[cand]:
                        nxt = cand
                        break
                if nxt is None:
                    break
                used[nxt] = True
                ca, cb = segs[nxt]
                far = cb if key(ca) == key(pt) else ca
                if head:
                    chain.append(far)
                else:
                    chain.insert(0, far)
        lines.append(np.asarray(chain))
    return lines


def trace_implicit_curve(
    g,
    box: tuple[float, float, float, float],
    resolution: int = 200,
    label: str = "",
    polish: bool = True,
) -> list[CurveSamples]:
    """Zero set of g over a box as polished polylines.

    g is either a callable g(x, y) acting on arrays, or a pair
    (scalar_fn, grid_fn).  Samples found by marching squares get Newton
    steps along the gradient; the target residual is 1e-12 of the value
    scale on the grid.  Returns [] when no crossings exist.
    """
    if isinstance(g, tuple):
        scalar_fn, grid_fn = g
    else:
        scalar_fn, grid_fn = g, g
    x0, x1, y0, y1 = box
    xs = np.linspace(x0, x1, resolution)
    ys = np.linspace(y0, y1, resolution)
    Xg, Yg = np.meshgrid(xs, ys, indexing="ij")
    vals = np.asarray(grid_fn(Xg, Yg), dtype=np.float64)
    finite = vals[np.isfinite(vals)]
    if finite.size == 0:
        return []
    gscale = float(np.max(np.abs(finite))) or 1.0
    segs = _marching_squares(vals, xs, ys)
    if not segs:
        return []
    cell = max((x1 - x0) / (resolution - 1), (y1 - y0) / (resolution - 1))
    lines = _stitch(segs, snap=1e-6 * cell)
    out = []
    for line in lines:
        if polish:
            line = _polish_onto(scalar_fn, line, cell, 1e-12 * gscale)
        if len(line) >= 2:
            out.append(CurveSamples(points=line, label=label))
    out.sort(key=lambda c: (-len(c.points), c.points[0, 0], c.points[0, 1]))
    return out


def _split_runs(pts: np.ndarray, keep: np.ndarray) -> list[np.ndarray]:
    """Maximal runs of consecutive kept points, each at least two long."""
    runs = []
    start = None
    for i, k in enumerate(keep):
        if k and start is None:
            start = i
        if start is not None and (not k or i == len(keep) - 1):
            end = i + 1 if k else i
            if end - start >= 2:
                runs.append(pts[start:end])
            start = None
    return runs


def singular_curves(
    m: PseudoFinslerMetric,
    box: tuple[float, float, float, float],
    resolution: int = 220,
) -> list[CurveSamples]:
    """Traced components of the planar singular locus, labeled.

    The locus is the zero set of the resultant of the denominator and
    numerator polynomials.  Points inside the open strata form the
    slope-carrying singular curves (label "singular"); the rest of the
    locus sits on the metric boundary, which is traced separately from
    the discriminant zero set (label "boundary").  Resultant components
    are split wherever they touch the boundary band, since a marching
    pass can glue the two loci when they pass within one grid cell.
    """
    comps = trace_implicit_curve(
        (lambda x, y: resultant_at(m, x, y), resultant_grid_fn(m)),
        box,
        resolution,
    )
    out = []
    for c in comps:
        keep = np.empty(len(c.points), dtype=bool)
        for i, (px, py) in enumerate(c.points):
            sc = mt.metric_scale(m, float(px), float(py))
            d = mt.disc_metric(m, float(px), float(py))
            keep[i] = abs(d) >= 1e-6 * max(sc, 1e-30) ** 4
        for run in _split_runs(c.points, keep):
            out.append(CurveSamples(points=run, label="singular"))
    out.sort(key=lambda c: (-len(c.points), c.points[0, 0], c.points[0, 1]))
    boundary = trace_implicit_curve(
        (lambda x, y: mt.disc_metric(m, x, y), disc_grid_fn(m)),
        box,
        resolution,
        label="boundary",
    )
    return out + boundary


def _polish_onto(fn, pts, cell, target):
    h = 1e-6 * cell
    out = []
    for x, y in pts:
        for _ in range(20):
            v = float(fn(x, y))
            if abs(v) <= target:
                break
            gx = (float(fn(x + h, y)) - float(fn(x - h, y))) / (2 * h)
            gy = (float(fn(x, y + h)) - float(fn(x, y - h))) / (2 * h)
            g2 = gx * gx + gy * gy
            if g2 == 0 or not math.isfinite(g2):
                break
            dx, dy = v * gx / g2, v * gy / g2
            x -= dx
            y -= dy
            if math.hypot(dx, dy) < 1e-14 * (1.0 + abs(x) + abs(y)):
                break
        out.append((x, y))
    return np.asarray(out)


# ---------------------------------------------------------------------------
# lifting the locus to the slope and the tangency test


def lift_to_slope(m: PseudoFinslerMetric, x: float, y: float) -> float:
    """Denominator root at which the numerator is smallest in magnitude."""
    roots = mt.denom_poly(m, x, y).real_roots()
    if not roots:
        raise StratumError(f"denominator has no real roots at ({x}, {y})")
    P = mt.numer_poly(m, x, y)
    return min((r for r, _ in roots), key=lambda r: abs(P(r)))


def tangency_report(
    m: PseudoFinslerMetric, x: float, y: float, curve_fn=None
) -> TangencyReport:
    """Transversality of the singular direction against its own curve.

    The singular curve is the resultant zero set; its tangent comes from
    the resultant gradient.  The field direction there is (1, p).  The
    point is transversal when the direction is not tangent; this must
    agree with the two dominant eigenvalues of the linearization being
    away from zero.
    """
    fn = curve_fn or (lambda a, b: resultant_at(m, a, b))
    p = lift_to_slope(m, x, y)
    h = 1e-6
    gx = (fn(x + h, y) - fn(x - h, y)) / (2 * h)
    gy = (fn(x, y + h) - fn(x, y - h)) / (2 * h)
    gnorm = math.hypot(gx, gy)
    tangent = (-gy / gnorm, gx / gnorm) if gnorm > 0 else (0.0, 0.0)
    dot = (gx + p * gy) / (gnorm * math.hypot(1.0, p)) if gnorm > 0 else 0.0
    transversal = abs(dot) > 1e-6
    J = jacobian_at(m, x, y, p)
    eigs = np.linalg.eigvals(J)
    eigs = eigs[np.argsort(-np.abs(eigs))]
    jn = float(np.linalg.norm(J))
    nonzero = abs(eigs[1]) > 1e-6 * max(jn, 1e-30)
    return TangencyReport(
        x=x, y=y, p=p, tangent=tangent, direction_dot=dot,
        transversal=transversal, eigenvalues=eigs,
        eigenvalues_nonzero=nonzero, consistent=(transversal == nonzero),
    )


def find_tangency_failures(
    m: PseudoFinslerMetric, curve: CurveSamples, curve_fn=None
) -> list[tuple[float, float]]:
    """Points along a traced singular curve where transversality fails.

    Scans the normalized direction-vs-tangent dot product for sign
    changes and refines each by bisection (with Newton re-projection onto
    the curve at every probe).
    """
    fn = curve_fn or (lambda a, b: resultant_at(m, a, b))
    pts = curve.points

    def measure(x, y):
        # the traced component may graze the metric boundary, where the
        # lift loses its real root; such samples cannot carry a tangency
        try:
            return tangency_report(m, x, y, curve_fn=fn).direction_dot
        except StratumError:
            return math.nan

    vals = [measure(x, y) for x, y in pts]
    cell = max(
        float(np.max(np.abs(np.diff(pts[:, 0])))),
        float(np.max(np.abs(np.diff(pts[:, 1])))),
    )
    found = []
    for i in range(len(pts) - 1):
        va, vb = vals[i], vals[i + 1]
        if not (np.isfinite(va) and np.isfinite(vb)) or va * vb > 0:
            continue
        a, b = pts[i], pts[i + 1]
        for _ in range(60):
            mid = 0.5 * (a + b)
            mid = _polish_onto(fn, mid[None, :], cell, 0.0)[0]
            vm = measure(mid[0], mid[1])
            if not np.isfinite(vm):
                break
            if (vm > 0) == (va > 0):
                a = mid
            else:
                b = mid
            if np.hypot(*(b - a)) < 1e-9:
                break
        found.append((float(mid[0]), float(mid[1])))
    return found


# ---------------------------------------------------------------------------
# admissible directions for quadratic metrics


def admissible_directions(m: PseudoFinslerMetric, x: float, y: float) -> list[float]:
    """Real zeros of the numerator at a degenerate point of a quadratic
    metric: the directions a geodesic may leave the discriminant curve."""
    if m.degree != 2:
        raise StratumError("admissible directions are defined for degree 2")
    sc = mt.metric_scale(m, x, y)
    if abs(mt.disc_metric(m, x, y)) > 1e-8 * max(sc, 1e-30) ** 2:
        raise StratumError(
            f"({x}, {y}) is not on the discriminant curve of the metric"
        )
    roots = mt.numer_poly(m, x, y).real_roots()
    return [r for r, _ in roots]
