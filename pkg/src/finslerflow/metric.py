"""Planar pseudo-Finsler metrics with polynomial velocity dependence.

A metric of degree n is F(x, y; p) = sum_i a_i(x, y) p^i where p is the
slope dy/dx of a direction.  Everything the geodesic field needs reduces
to two derived polynomials in p:

* denom_poly  -- the coefficient of d/dx in the direction field; it is
  proportional to the velocity Hessian determinant of the homogeneous
  metric on the tangent bundle, and its zeros are the directions where
  the second-order geodesic system degenerates;
* numer_poly  -- the forcing of the slope equation dp/dx, so that away
  from zeros of denom_poly the geodesics satisfy
  dp/dx = numer_poly / denom_poly.

Both are assembled coefficient-by-coefficient with integer weights so
that the leading cancellations hold exactly: denom has degree at most
2n-4 and numer at most 2n-1.

accel_determinants computes the same data independently on the tangent
bundle (Cramer determinants of the acceleration system of the
homogeneous metric) and serves as the cross-check oracle.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from . import expr as ex
from . import poly
from ._kernels import ProgramTable

DISC_BAND_REL = 1e-10
DEGREE_TRIM_REL = 1e-12


class Stratum(str, enum.Enum):
    MPlus = "MPlus"
    MMinus = "MMinus"
    M01 = "M01"
    M00 = "M00"


@dataclass(frozen=True)
class ProjectiveRoot:
    """A direction p with F(x, y; p) = 0; infinite means the vertical one."""

    value: float
    multiplicity: int
    at_infinity: bool = False


class DegeneratePointError(ValueError):
    """All metric coefficients vanish at the requested point."""


_PROBES = [(0.37, -0.84), (-1.2, 0.55), (2.1, 1.7), (0.0, 0.0), (-0.31, -0.27)]


class PseudoFinslerMetric:
    """Immutable-by-convention container; derived data is cached lazily."""

    def __init__(self, degree: int, coeffs):
        if degree < 2:
            raise ValueError(f"degree must be >= 2, got {degree}")
        if len(coeffs) != degree + 1:
            raise ValueError(
                f"need {degree + 1} coefficients a_0..a_{degree}, got {len(coeffs)}"
            )
        self.degree = int(degree)
        self.coeffs = tuple(ex.as_field(c) for c in coeffs)
        self._check_not_identically_zero()
        self._exprs: dict[str, list[ex.Expr]] = {}
        self._tables: dict[str, ProgramTable] = {}
        self._dual: PseudoFinslerMetric | None = None

    def _check_not_identically_zero(self) -> None:
        for px, py in _PROBES:
            for c in self.coeffs:
                try:
                    v = c(px, py)
                except ArithmeticError:
                    return
                if abs(v) > 1e-14:
                    return
        raise ValueError("metric coefficients vanish on all probe points")

    # -- symbolic layers ----------------------------------------------------

    def coeff_exprs(self) -> list[ex.Expr]:
        return [c.expr for c in self.coeffs]

    def _expr_layer(self, name: str) -> list[ex.Expr]:
        got = self._exprs.get(name)
        if got is not None:
            return got
        if name == "F":
            out = self.coeff_exprs()
        elif name == "denom":
            out = _denom_exprs(self)
        elif name == "numer":
            out = _numer_exprs(self)
        elif name.endswith(("_x", "_y")):
            base, var = name[:-2], name[-1]
            out = [ex.diff(e, var) for e in self._expr_layer(base)]
        else:
            raise KeyError(name)
        self._exprs[name] = out
        return out

    def table(self, name: str) -> ProgramTable:
        got = self._tables.get(name)
        if got is None:
            got = ProgramTable(
                [ex.compile_expr(e) for e in self._expr_layer(name)]
            )
            self._tables[name] = got
        return got

    def dual(self) -> "PseudoFinslerMetric":
        """Metric seen from the chart with the roles of x and y exchanged.

        Coefficients are reversed (the slope becomes q = dx/dy) and each
        coefficient field gets its arguments swapped.
        """
        if self._dual is None:
            swapped = [
                ex.ScalarField(ex.swap_xy(c.expr)) for c in reversed(self.coeffs)
            ]
            self._dual = PseudoFinslerMetric(self.degree, swapped)
            self._dual._dual = self
        return self._dual

    def __repr__(self) -> str:
        parts = ", ".join(c.text for c in self.coeffs)
        return f"PseudoFinslerMetric(n={self.degree}, [{parts}])"


def metric_from_strings(degree: int, coeff_texts) -> PseudoFinslerMetric:
    return PseudoFinslerMetric(degree, list(coeff_texts))


# ---------------------------------------------------------------------------
# weight-built derived polynomials


def _denom_exprs(m: PseudoFinslerMetric) -> list[ex.Expr]:
    n = m.degree
    a = m.coeff_exprs()
    length = max(2 * n - 3, 1)
    terms: list[list[ex.Expr]] = [[] for _ in range(length)]
    for i in range(n + 1):
        for j in range(i, n + 1):
            k = i + j - 2
            if k < 0 or k >= length:
                continue
            if i == j:
                w = i * (i - n)
            else:
                w = n * (j * j - j + i * i - i) - 2 * (n - 1) * i * j
            if w == 0:
                continue
            terms[k].append(ex.mul(ex.const(w), ex.mul(a[i], a[j])))
    return [_sum_terms(t) for t in terms]


def _numer_exprs(m: PseudoFinslerMetric) -> list[ex.Expr]:
    n = m.degree
    a = m.coeff_exprs()
    ax = [ex.diff(e, "x") for e in a]
    ay = [ex.diff(e, "y") for e in a]
    terms: list[list[ex.Expr]] = [[] for _ in range(2 * n)]
    for i in range(n + 1):
        for j in range(n + 1):
            wx = (n - 1) * i - n * j
            if wx != 0 and 0 <= i + j - 1 < 2 * n:
                terms[i + j - 1].append(
                    ex.mul(ex.const(wx), ex.mul(a[i], ax[j]))
                )
            wy = n * (1 - j) + (n - 1) * i
            if wy != 0 and i + j < 2 * n:
                terms[i + j].append(ex.mul(ex.const(wy), ex.mul(a[i], ay[j])))
    return [_sum_terms(t) for t in terms]


def _sum_terms(terms: list[ex.Expr]) -> ex.Expr:
    if not terms:
        return ex.ZERO
    acc = terms[0]
    for t in terms[1:]:
        acc = ex.add(acc, t)
    return acc


# ---------------------------------------------------------------------------
# pointwise evaluation


def coeff_values(m: PseudoFinslerMetric, x: float, y: float) -> np.ndarray:
    return m.table("F").values_at(x, y)


def metric_scale(m: PseudoFinslerMetric, x: float, y: float) -> float:
    return float(np.max(np.abs(coeff_values(m, x, y))))


def eval_F(m: PseudoFinslerMetric, x: float, y: float, p: float) -> float:
    return m.table("F").poly_value(x, y, p)


def denom_poly(m: PseudoFinslerMetric, x: float, y: float) -> poly.RealPolynomial:
    return poly.RealPolynomial(m.table("denom").values_at(x, y))


def numer_poly(m: PseudoFinslerMetric, x: float, y: float) -> poly.RealPolynomial:
    return poly.RealPolynomial(m.table("numer").values_at(x, y))


def fdp_values(
    m: PseudoFinslerMetric, x: float, y: float, p: float
) -> tuple[float, float, float]:
    """(F, denom, numer) at one projectivized point; the field hot path."""
    return (
        m.table("F").poly_value(x, y, p),
        m.table("denom").poly_value(x, y, p),
        m.table("numer").poly_value(x, y, p),
    )


def disc_metric(m: PseudoFinslerMetric, x: float, y: float) -> float:
    """Discriminant of F in p (degrees 2 and 3 only)."""
    c = coeff_values(m, x, y)
    if m.degree == 2:
        return poly.disc_quadratic(c)
    if m.degree == 3:
        return poly.disc_cubic(c)
    raise ValueError("discriminant implemented for degrees 2 and 3 only")


def disc_denom(m: PseudoFinslerMetric, x: float, y: float) -> float:
    """Discriminant of denom_poly in p (degree-3 metrics only)."""
    if m.degree != 3:
        raise ValueError("denominator discriminant requires degree 3")
    c = np.zeros(3)
    v = m.table("denom").values_at(x, y)
    c[: v.size] = v
    return poly.disc_quadratic(c)


def isotropic_directions(
    m: PseudoFinslerMetric, x: float, y: float
) -> list[ProjectiveRoot]:
    """Real directions (including the vertical one) with F = 0."""
    c = coeff_values(m, x, y)
    scale = float(np.max(np.abs(c)))
    if scale == 0.0:
        raise DegeneratePointError(f"all coefficients vanish at ({x}, {y})")
    eff = c.copy()
    eff[np.abs(eff) <= DEGREE_TRIM_REL * scale] = 0.0
    rp = poly.RealPolynomial(eff)
    out = [
        ProjectiveRoot(value=r, multiplicity=k)
        for r, k in rp.real_roots()
    ]
    inf_mult = m.degree - max(rp.degree, 0)
    if inf_mult > 0:
        out.append(
            ProjectiveRoot(value=float("nan"), multiplicity=inf_mult, at_infinity=True)
        )
    return out


def classify_point(m: PseudoFinslerMetric, x: float, y: float) -> Stratum:
    """Stratify a base point of a degree-3 metric by its discriminant.

    MPlus / MMinus are the open strata with three / one real isotropic
    direction; inside the band |disc| < 1e-10 * scale^4 the multiple-root
    structure decides between the generic boundary (M01, a double
    direction) and the degenerate one (M00, a triple direction).
    """
    if m.degree != 3:
        raise ValueError("classification requires a degree-3 metric")
    c = coeff_values(m, x, y)
    scale = float(np.max(np.abs(c)))
    if scale == 0.0:
        raise DegeneratePointError(f"all coefficients vanish at ({x}, {y})")
    d = poly.disc_cubic(c)
    band = DISC_BAND_REL * scale**4
    if d > band:
        return Stratum.MPlus
    if d < -band:
        return Stratum.MMinus
    # Inside the band the multiple-root structure decides.  Numeric root
    # clustering cannot resolve a triple root (the extracted cluster has
    # a cube-root-of-epsilon spread), but the Hessian of the binary
    # cubic form vanishes identically exactly at a projective triple
    # root, including one sitting at infinity.
    a0, a1, a2, a3 = (float(v) for v in c)
    hess = (
        a2 * a2 - 3.0 * a3 * a1,
        a2 * a1 - 9.0 * a3 * a0,
        a1 * a1 - 3.0 * a2 * a0,
    )
    if max(abs(h) for h in hess) <= DISC_BAND_REL * scale**2:
        return Stratum.M00
    return Stratum.M01


# ---------------------------------------------------------------------------
# tangent-bundle oracle


def _ipow(b: float, k: int) -> float:
    return float(b) ** k if k > 0 else 1.0


def accel_determinants(
    m: PseudoFinslerMetric, x: float, y: float, xdot: float, ydot: float
) -> tuple[float, float, float]:
    """Cramer determinants (H, H1, H2) of the acceleration system.

    The homogeneous metric Fbar(x, y, xdot, ydot) = sum a_i xdot^(n-i)
    ydot^i defines second-order geodesic equations; their linear system
    for the accelerations has matrix [[F11, F12], [F12, F22]] (velocity
    second partials) and right-hand side (G1, G2).  H is the matrix
    determinant, H1/H2 the Cramer numerators.  This route never touches
    the weight-built slope polynomials, which it cross-checks.
    """
    n = m.degree
    a = coeff_values(m, x, y)
    axv = m.table("F_x").values_at(x, y)
    ayv = m.table("F_y").values_at(x, y)
    f11 = f12 = f22 = 0.0
    fx = fy = f1x = f1y = f2x = f2y = 0.0
    for i in range(n + 1):
        ni = n - i
        xe = _ipow(xdot, ni)
        ye = _ipow(ydot, i)
        fx += axv[i] * xe * ye
        fy += ayv[i] * xe * ye
        if ni >= 1:
            xm1 = _ipow(xdot, ni - 1)
            f1x += axv[i] * ni * xm1 * ye
            f1y += ayv[i] * ni * xm1 * ye
            if ni >= 2:
                f11 += a[i] * ni * (ni - 1) * _ipow(xdot, ni - 2) * ye
        if i >= 1:
            ym1 = _ipow(ydot, i - 1)
            f2x += axv[i] * i * xe * ym1
            f2y += ayv[i] * i * xe * ym1
            if i >= 2:
                f22 += a[i] * i * (i - 1) * xe * _ipow(ydot, i - 2)
            if ni >= 1:
                f12 += a[i] * ni * i * _ipow(xdot, ni - 1) * ym1
    g1 = fx - xdot * f1x - ydot * f1y
    g2 = fy - xdot * f2x - ydot * f2y
    h = f11 * f22 - f12 * f12
    h1 = g1 * f22 - g2 * f12
    h2 = f11 * g2 - f12 * g1
    return h, h1, h2


def eval_Fbar(
    m: PseudoFinslerMetric, x: float, y: float, xdot: float, ydot: float
) -> float:
    a = coeff_values(m, x, y)
    n = m.degree
    return float(
        sum(a[i] * _ipow(xdot, n - i) * _ipow(ydot, i) for i in range(n + 1))
    )
