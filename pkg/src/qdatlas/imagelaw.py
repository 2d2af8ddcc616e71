"""Closed-form image polygon of the complete harmonic embedding.

For the family [z^(2m) - c z^(m-1)] dz^2 the image is the ideal polygon with
vertices {omega^k, omega^k e^(i alpha)} where alpha depends only on the tree
edge length nu through tan(alpha/2) = sin(pi/(m+1)) / (cos(pi/(m+1)) +
e^(2 nu)). The asymptotic two-equation system that determines alpha in the
first place is solved independently by bracketed root finding and must agree
with the closed form; the second labeling branch and the signed angle
function b -> alpha(b) expose the two-to-one structure.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

from scipy.optimize import brentq

from .errors import NoRoot, UnsupportedM
from .hypdisc import IdealPolygon, equivalent
from .polyfield import SymmetricFamily


@dataclass(frozen=True)
class PolygonPrediction:
    m: int
    nu: float
    alpha: float
    polygon: IdealPolygon
    branch: str = "principal"

    def __post_init__(self):
        if not 0.0 < self.alpha < 2.0 * math.pi / (self.m + 1):
            raise ValueError("alpha outside (0, 2 pi / (m+1))")


def _family_polygon(m: int, alpha: float) -> IdealPolygon:
    verts = []
    for k in range(m + 1):
        base = 2.0 * math.pi * k / (m + 1)
        verts.append(cmath.exp(1j * base))
        verts.append(cmath.exp(1j * (base + alpha)))
    return IdealPolygon(tuple(verts))


def _angle_from_exponent(m: int, t: float) -> float:
    # 2 atan2(sin theta, cos theta + e^t) with both arguments rescaled by
    # e^(-max(t, 0)) so neither direction of t can overflow
    theta = math.pi / (m + 1)
    s = max(t, 0.0)
    damp = math.exp(-s)
    return 2.0 * math.atan2(math.sin(theta) * damp,
                            math.cos(theta) * damp + math.exp(t - s))


def closed_form_alpha(m: int, nu: float) -> float:
    return _angle_from_exponent(m, 2.0 * nu)


def predict(f: SymmetricFamily, nu: float | None = None) -> PolygonPrediction:
    """Image polygon of the family, an isometry class depending on |b| only.

    nu optionally supplies an independently measured edge length; it is
    cross-checked against the closed form to 1e-8 and never replaces it.
    """
    nu_cf = f.nu
    if nu is not None and abs(nu - nu_cf) > 1e-8:
        raise ValueError(
            f"measured nu {nu} disagrees with closed form {nu_cf} beyond 1e-8"
        )
    alpha = closed_form_alpha(f.m, nu_cf)
    return PolygonPrediction(f.m, nu_cf, alpha, _family_polygon(f.m, alpha))


def solve_asymptotic_system(m: int, nu: float) -> tuple[float, float]:
    """(alpha, A) from sqrt(A) e^(-2 nu) = sin(alpha/2), sqrt(A) = sin(theta - alpha/2).

    Eliminating A leaves g(alpha) = sin(alpha/2) - e^(-2 nu) sin(theta -
    alpha/2) with a single bracketed root in (0, 2 theta), theta =
    pi/(m+1). Agrees with closed_form_alpha to root-finder precision.
    """
    if m < 1:
        raise ValueError("m must be >= 1")
    if nu < 0:
        raise ValueError("nu must be nonnegative")
    theta = math.pi / (m + 1)
    damp = math.exp(-2.0 * nu)

    def g(alpha: float) -> float:
        return math.sin(alpha / 2.0) - damp * math.sin(theta - alpha / 2.0)

    lo = 1e-14 * theta
    hi = 2.0 * theta * (1.0 - 1e-14)
    if g(lo) >= 0.0 or g(hi) <= 0.0:
        raise NoRoot("asymptotic system lost its bracket")
    alpha = float(brentq(g, lo, hi, xtol=1e-15, rtol=8.9e-16))
    a_val = math.sin(theta - alpha / 2.0) ** 2
    return alpha, a_val


def other_branch(pred: PolygonPrediction) -> PolygonPrediction:
    """Alternate labeling branch; alpha + alpha' = 2 pi/(m+1)."""
    theta = math.pi / (pred.m + 1)
    alpha2 = 2.0 * math.atan2(
        math.sin(theta), math.cos(theta) + math.exp(-2.0 * pred.nu)
    )
    return PolygonPrediction(
        pred.m, pred.nu, alpha2, _family_polygon(pred.m, alpha2), branch="other"
    )


def classify_shi_tam(f: SymmetricFamily) -> bool:
    """Whether the image is the regular ideal 4-gon; true exactly at b = 0."""
    if f.m != 1:
        raise UnsupportedM("the 4-gon rigidity statement applies to m = 1 only")
    square = IdealPolygon((1.0, 1.0j, -1.0, -1.0j))
    return equivalent(predict(f).polygon, square, tol=1e-9)


@dataclass(frozen=True)
class AngleFunction:
    """Signed angle function b -> alpha(b), strictly decreasing onto (0, 2 pi/(m+1))."""

    m: int

    def __call__(self, b: float) -> float:
        return _angle_from_exponent(self.m, b * math.pi / (self.m + 1))
