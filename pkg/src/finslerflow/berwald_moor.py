"""Metrics induced on surfaces immersed in a Berwald-Moor product space.

An n-dimensional ambient space carrying the n-fold product form assigns to
a velocity the product of its coordinate components.  A surface immersed
through components (f_1, ..., f_n) of two parameters inherits the metric
function

    F(x, y; p) = prod_i (f_ix(x, y) + f_iy(x, y) * p),

a polynomial of degree at most n in the slope p whose isotropic directions
are the kernels of the differentials df_i.  Where two factors become
proportional, two isotropic directions collide into a double one.  In an
adapted chart that places the collision line at x = 0 the metric takes the
local shape

    F = p * (a(x, y) * x + b(x, y) * p) * G(x, y; p),

with a, b, G nonvanishing at the origin.  The slope substitution p = x*u
then resolves the flow: after rescaling, the plane x = 0 is invariant and
carries rest points only at three admissible u values (0, -a/2b, -a/b)
whose spectra are constant along the rest lines and decide the local
geodesic picture, including a tongue of geodesics squeezed between the two
isotropic curves through the collision point.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from . import expr as ex
from . import metric as mt
from .expr import ScalarField, as_field
from .flow import FamilyMember, IntegratorConfig, PTMPoint, _integrate_outward
from .metric import PseudoFinslerMetric
from .singular import CurveSamples, trace_implicit_curve

__all__ = [
    "SurfaceImmersion",
    "AdaptedLocalMetric",
    "induced_metric",
    "double_direction_locus",
    "adapted_from_immersion",
    "full_metric",
    "admissible_u",
    "blowup_field_at",
    "blowup_spectrum",
    "bm_family_shoot",
]

# Probe grid half-width used to certify that each component has a
# nondegenerate differential near the working region.
_PROBE_HALF = 1.0
_PROBE_SIDE = 7
_DEGEN_TOL = 1e-10


def _eadd(a: ex.Expr, b: ex.Expr) -> ex.Expr:
    if isinstance(a, ex.Const) and a.value == 0.0:
        return b
    if isinstance(b, ex.Const) and b.value == 0.0:
        return a
    return ex.add(a, b)


def _emul(a: ex.Expr, b: ex.Expr) -> ex.Expr:
    if isinstance(a, ex.Const) and a.value in (0.0, 1.0):
        return a if a.value == 0.0 else b
    if isinstance(b, ex.Const) and b.value in (0.0, 1.0):
        return b if b.value == 0.0 else a
    return ex.mul(a, b)


def _expand_factors(factors) -> list[ex.Expr]:
    """Slope-polynomial coefficients of prod (cx + cy * p)."""
    coeffs: list[ex.Expr] = [ex.const(1.0)]
    for cx, cy in factors:
        new: list[ex.Expr] = [ex.const(0.0) for _ in range(len(coeffs) + 1)]
        for k, c in enumerate(coeffs):
            new[k] = _eadd(new[k], _emul(c, cx))
            new[k + 1] = _eadd(new[k + 1], _emul(c, cy))
        coeffs = new
    return coeffs


@dataclass(frozen=True)
class SurfaceImmersion:
    """Surface in the n-dimensional product space, componentwise.

    Components may be given as ScalarField, Expr or text.  Construction
    probes a grid around the origin and refuses components whose
    differential degenerates there.
    """

    components: tuple[ScalarField, ...] = field(default_factory=tuple)

    def __post_init__(self):
        comps = tuple(as_field(c) for c in self.components)
        if len(comps) < 3:
            raise ValueError("need at least three components")
        ticks = np.linspace(-_PROBE_HALF, _PROBE_HALF, _PROBE_SIDE)
        for idx, f in enumerate(comps):
            fx, fy = f.partial("x"), f.partial("y")
            for xv in ticks:
                for yv in ticks:
                    if abs(fx(xv, yv)) + abs(fy(xv, yv)) <= _DEGEN_TOL:
                        raise ValueError(
                            f"component {idx} has a degenerate differential "
                            f"near ({xv:.3g}, {yv:.3g})"
                        )
        object.__setattr__(self, "components", comps)

    @property
    def n(self) -> int:
        return len(self.components)


def induced_metric(imm: SurfaceImmersion) -> PseudoFinslerMetric:
    """Expand prod (f_ix + f_iy p) into polynomial metric coefficients."""
    factors = [
        (ex.diff(f.expr, "x"), ex.diff(f.expr, "y")) for f in imm.components
    ]
    return PseudoFinslerMetric(imm.n, _expand_factors(factors))


def _vectorized(f: ScalarField):
    def g(xs, ys):
        xa = np.asarray(xs, dtype=np.float64)
        ya = np.asarray(ys, dtype=np.float64)
        shape = np.broadcast_shapes(xa.shape, ya.shape)
        bx = np.broadcast_to(xa, shape).ravel()
        by = np.broadcast_to(ya, shape).ravel()
        vals = np.fromiter(
            (f(float(a), float(b)) for a, b in zip(bx, by)),
            dtype=np.float64,
            count=bx.size,
        )
        return vals.reshape(shape)

    return g


def double_direction_locus(
    imm: SurfaceImmersion,
    i: int,
    j: int,
    box: tuple[float, float, float, float],
    resolution: int = 220,
) -> list[CurveSamples]:
    """Zero set of the (i, j) factor Jacobian f_ix*f_jy - f_iy*f_jx.

    Indices are zero-based.  On the returned curves the two isotropic
    directions of the chosen factor pair coincide.
    """
    if i == j:
        raise ValueError("need two distinct component indices")
    fi, fj = imm.components[i].expr, imm.components[j].expr
    jac = ex.sub(
        ex.mul(ex.diff(fi, "x"), ex.diff(fj, "y")),
        ex.mul(ex.diff(fi, "y"), ex.diff(fj, "x")),
    )
    return trace_implicit_curve(
        _vectorized(ScalarField(jac)), box, resolution, label="double-direction"
    )


@dataclass(frozen=True)
class AdaptedLocalMetric:
    """Local data (a, b, extra factors) of the shape p*(a*x + b*p)*G.

    ``extra`` holds the velocity-linear factors of G as (gx, gy) pairs;
    the slope polynomial of G is prod (gx + gy * p).  The total velocity
    degree is 2 + len(extra).
    """

    a: ScalarField
    b: ScalarField
    extra: tuple[tuple[ScalarField, ScalarField], ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "a", as_field(self.a))
        object.__setattr__(self, "b", as_field(self.b))
        object.__setattr__(
            self,
            "extra",
            tuple((as_field(gx), as_field(gy)) for gx, gy in self.extra),
        )
        if abs(self.a(0.0, 0.0)) <= _DEGEN_TOL:
            raise ValueError("field a vanishes at the origin (tangency too flat)")
        if abs(self.b(0.0, 0.0)) <= _DEGEN_TOL:
            raise ValueError("field b vanishes at the origin")
        for k, (gx, _) in enumerate(self.extra):
            if abs(gx(0.0, 0.0)) <= _DEGEN_TOL:
                raise ValueError(
                    f"extra factor {k} is vertical at the origin; only one "
                    "double direction is supported"
                )

    @property
    def n(self) -> int:
        return 2 + len(self.extra)


@lru_cache(maxsize=None)
def full_metric(alm: AdaptedLocalMetric) -> PseudoFinslerMetric:
    """Expand p*(a*x + b*p)*G into a polynomial metric."""
    factors = [
        (ex.const(0.0), ex.const(1.0)),
        (ex.mul(alm.a.expr, ex.Var("x")), alm.b.expr),
    ]
    factors.extend((gx.expr, gy.expr) for gx, gy in alm.extra)
    return PseudoFinslerMetric(alm.n, _expand_factors(factors))


def admissible_u(alm: AdaptedLocalMetric, x: float = 0.0, y: float = 0.0):
    """The three rest values of the blown-up slope: 0, -a/2b, -a/b."""
    av, bv = alm.a(x, y), alm.b(x, y)
    if abs(bv) <= _DEGEN_TOL * (1.0 + abs(av)):
        raise ValueError("field b vanishes here; no finite admissible slopes")
    return (0.0, -av / (2.0 * bv), -av / bv)


def _ambient_guard(n: int, av: float, bv: float) -> None:
    d = n * (2 - n) * (av * bv) ** 2
    if d >= -1e-12:
        raise ValueError(
            "a*b vanishes here: the double isotropic direction degenerates "
            "and the blow-up chart does not apply"
        )


def blowup_field_at(alm: AdaptedLocalMetric, x: float, y: float, u: float):
    """Orbit-equivalent rescaled flow in blown-up coordinates (x, y, u).

    The substitution p = x*u turns the projectivized geodesic field into
    (x, x**2*u, (numer - u*denom)/denom); the last component extends
    continuously to x = 0 where it becomes an explicit rational function
    of u built from a, b and the degree.  Rescaling divides by a scalar
    that may change sign, so orbits are preserved but not their time
    orientation.
    """
    n = alm.n
    av, bv = alm.a(x, y), alm.b(x, y)
    _ambient_guard(n, av, bv)
    if abs(x) < 1e-12:
        amb = (1 - n) * av * av + 2.0 * (2 - n) * (av * bv * u + (bv * u) ** 2)
        mag = av * av + (bv * u) ** 2 + abs(av * bv * u)
        if abs(amb) <= 1e-10 * max(mag, 1.0):
            raise ValueError(
                "blow-up denominator vanishes at this slope; shrink the "
                "neighborhood"
            )
        du = u * (n - 2) * (2.0 * (bv * u) ** 2 + 3.0 * av * bv * u + av * av) / amb
        return (0.0, 0.0, du)
    m = full_metric(alm)
    p = x * u
    dv = mt.denom_poly(m, x, y)(p)
    nv = mt.numer_poly(m, x, y)(p)
    if abs(dv) <= 1e-14 * max(1.0, abs(nv)):
        raise ValueError("slope-degeneracy polynomial vanishes here")
    return (x, x * x * u, (nv - u * dv) / dv)


def blowup_spectrum(alm: AdaptedLocalMetric, y0: float = 0.0, which: int = 1):
    """Normalized eigenvalues (1, lam, 0) at rest point (0, y0, u_which).

    The Jacobian is finite-differenced; eigenvalues are sorted by
    magnitude and normalized by the largest, which belongs to the x
    direction.
    """
    us = admissible_u(alm, 0.0, y0)
    u0 = us[int(which)]
    base = np.array([0.0, y0, u0])
    steps = 1e-5 * (1.0 + np.abs(base))
    jac = np.zeros((3, 3))
    for k in range(3):
        hi = base.copy()
        lo = base.copy()
        hi[k] += steps[k]
        lo[k] -= steps[k]
        fhi = blowup_field_at(alm, *hi)
        flo = blowup_field_at(alm, *lo)
        jac[:, k] = (np.asarray(fhi) - np.asarray(flo)) / (2.0 * steps[k])
    eig = np.linalg.eigvals(jac)
    order = np.argsort(-np.abs(eig))
    eig = eig[order]
    if abs(eig[0]) < 1e-8:
        raise ValueError("degenerate spectrum: leading eigenvalue vanished")
    lam = complex(eig[1] / eig[0])
    if abs(lam.imag) > 1e-8 * (1.0 + abs(lam.real)):
        raise ValueError(f"unexpected complex spectrum ratio {lam}")
    return (1.0, float(lam.real), 0.0)


def adapted_from_immersion(
    imm: SurfaceImmersion, tangent_index: int, vertical_index: int
) -> AdaptedLocalMetric:
    """Best-effort adapted data for an immersion already in position.

    Expects polynomial components with the double-direction pair meeting
    on the line x = 0 and the base point at the origin: the vertical
    component must not depend on x, and the tangent component's x-partial
    must be divisible by x.  Apply your own affine change first if the
    immersion is not in this position.  The reconstruction is validated
    against the directly induced metric on random probes.
    """
    if tangent_index == vertical_index:
        raise ValueError("need two distinct component indices")
    comps = imm.components
    fi = comps[tangent_index].expr
    fj = comps[vertical_index].expr

    cjx = ex.expr_to_poly2d(ex.diff(fj, "x"))
    if np.max(np.abs(cjx)) > 1e-12:
        raise ValueError(
            "not in adapted position: the vertical component depends on x"
        )
    fjy = ex.diff(fj, "y")

    cix = ex.expr_to_poly2d(ex.diff(fi, "x"))
    scale = max(float(np.max(np.abs(cix))), 1.0)
    if np.max(np.abs(cix[0, :])) > 1e-12 * scale:
        raise ValueError(
            "not in adapted position: the tangent component's x-partial "
            "is not divisible by x"
        )
    a_expr = ex.poly2d_to_expr(cix[1:, :]) if cix.shape[0] > 1 else ex.const(0.0)
    b_expr = ex.diff(fi, "y")

    # Fold the vertical factor's scalar weight into (a, b); the shape and
    # all blow-up invariants are unchanged by a common rescaling.
    a_expr = _emul(a_expr, fjy)
    b_expr = _emul(b_expr, fjy)

    extra = [
        (ex.diff(comps[k].expr, "x"), ex.diff(comps[k].expr, "y"))
        for k in range(len(comps))
        if k not in (tangent_index, vertical_index)
    ]
    alm = AdaptedLocalMetric(
        ScalarField(a_expr),
        ScalarField(b_expr),
        tuple((ScalarField(gx), ScalarField(gy)) for gx, gy in extra),
    )

    want = induced_metric(imm)
    got = full_metric(alm)
    rng = np.random.default_rng(20260814)
    for _ in range(25):
        xv, yv = rng.uniform(-0.8, 0.8, 2)
        cw = mt.coeff_values(want, xv, yv)
        cg = mt.coeff_values(got, xv, yv)
        if not np.allclose(cg, cw, atol=1e-9 * max(1.0, float(np.max(np.abs(cw))))):
            raise ValueError("adapted reconstruction failed validation")
    return alm


def bm_family_shoot(
    alm: AdaptedLocalMetric,
    alphas,
    t0: float = 0.2,
    y0: float = 0.0,
    order: int = 14,
    cfg: IntegratorConfig | None = None,
) -> list[FamilyMember]:
    """Shoot the geodesic family squeezed between the isotropic curves.

    Each alpha parametrizes one member of the family through the double
    direction point (0, y0).  Seeds come from a fractional-power series
    with x = t**n whose first free coefficient carries alpha; each member
    is integrated outward on both sides.  Requires first-order tangency
    (a nonvanishing at the base point).
    """
    from .puiseux import series_point, solve_geodesic_series

    n = alm.n
    av, bv = alm.a(0.0, y0), alm.b(0.0, y0)
    _ambient_guard(n, av, bv)
    if abs(av) <= _DEGEN_TOL:
        raise ValueError("tangency order is not one (field a vanishes)")
    u1 = -av / (2.0 * bv)
    m = full_metric(alm)
    cfg = cfg or IntegratorConfig()

    members: list[FamilyMember] = []
    for alpha in alphas:
        sol = solve_geodesic_series(
            m,
            s=n,
            seed={n: u1},
            order=order,
            free={2 * n - 2: float(alpha)},
            y0=y0,
        )
        for tsign in (1, -1):
            xv, yv, pv = series_point(sol, tsign * t0)
            trace = _integrate_outward(
                m, PTMPoint(xv, yv, pv), (0.0, y0, 0.0), cfg
            )
            members.append(FamilyMember(alpha=float(alpha), eta_sign=tsign, trace=trace))
    return members
