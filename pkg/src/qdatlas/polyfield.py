"""Complex polynomials, simultaneous root finding, and the symmetric family
z^(2m) - (a+ib) z^(m-1) whose quadratic differential is studied downstream.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateFamily, DegreeZero, NonConvergence


@dataclass(frozen=True)
class ComplexPoly:
    """Polynomial with complex coefficients, ascending order.

    coeffs[k] multiplies z**k. Trailing zero coefficients are dropped so
    degree() reflects the true degree.
    """

    coeffs: tuple[complex, ...]

    def __post_init__(self):
        cs = tuple(complex(c) for c in self.coeffs)
        while len(cs) > 1 and cs[-1] == 0:
            cs = cs[:-1]
        object.__setattr__(self, "coeffs", cs)

    def degree(self) -> int:
        return len(self.coeffs) - 1

    def __call__(self, z):
        """Horner evaluation, scalar or ndarray argument."""
        if isinstance(z, np.ndarray):
            acc = np.full_like(z, self.coeffs[-1], dtype=complex)
            for c in reversed(self.coeffs[:-1]):
                acc = acc * z + c
            return acc
        acc = self.coeffs[-1]
        for c in reversed(self.coeffs[:-1]):
            acc = acc * z + c
        return acc

    def derivative(self) -> "ComplexPoly":
        if self.degree() == 0:
            return ComplexPoly((0.0,))
        return ComplexPoly(tuple(k * c for k, c in enumerate(self.coeffs) if k > 0))

    def shifted(self, z0: complex) -> "ComplexPoly":
        """Taylor coefficients around z0, i.e. p(z0 + w) as a polynomial in w.

        Repeated synthetic division, numerically adequate for the small
        degrees used here.
        """
        return ComplexPoly(tuple(_taylor(self.coeffs, z0)))

    def eval_scale(self, z: complex) -> float:
        """Sum_k |c_k| |z|^k, the natural backward-error scale at z."""
        az = abs(z)
        s = 0.0
        pw = 1.0
        for c in self.coeffs:
            s += abs(c) * pw
            pw *= az
        return max(s, 1e-300)


def _taylor(coeffs: tuple[complex, ...], z0: complex) -> list[complex]:
    """Coefficients of p(z0 + w) in w, by repeated synthetic division."""
    work = list(coeffs)
    n = len(work)
    out: list[complex] = []
    for j in range(n):
        acc = 0j
        for k in range(n - 1 - j, -1, -1):
            acc = acc * z0 + work[k]
            work[k] = acc
        out.append(work[0])
        del work[0]
    return out


def _initial_circle(p: ComplexPoly, rng: np.random.Generator) -> np.ndarray:
    n = p.degree()
    an = abs(p.coeffs[-1])
    r = 1.0 + max(abs(c) for c in p.coeffs[:-1]) / an if n > 0 else 1.0
    # Cauchy bound, slightly inflated, with a seeded angular perturbation to
    # break the symmetry of symmetric polynomials.
    base = 2 * np.pi * (np.arange(n) + 0.25) / n
    jitter = 0.3 * rng.uniform(-1.0, 1.0, n) / n
    return (0.7 * r) * np.exp(1j * (base + jitter))


def _aberth(p: ComplexPoly, tol: float, max_iter: int, rng: np.random.Generator) -> np.ndarray:
    dp = p.derivative()
    z = _initial_circle(p, rng)
    n = len(z)
    for _ in range(max_iter):
        pz = p(z)
        scale = np.array([p.eval_scale(zi) for zi in z])
        if np.all(np.abs(pz) <= tol * scale):
            return z
        dpz = dp(z)
        # Newton correction with a guard against p'(z) = 0
        bad = np.abs(dpz) < 1e-300
        dpz = np.where(bad, 1e-300, dpz)
        newton = pz / dpz
        diff = z[:, None] - z[None, :]
        np.fill_diagonal(diff, np.inf)
        rep = np.sum(1.0 / diff, axis=1)
        denom = 1.0 - newton * rep
        denom = np.where(np.abs(denom) < 1e-300, 1e-300, denom)
        step = newton / denom
        z = z - step
    pz = p(z)
    scale = np.array([p.eval_scale(zi) for zi in z])
    if np.all(np.abs(pz) <= tol * scale):
        return z
    raise NonConvergence(
        f"Aberth iteration did not drop residuals below tol={tol} in {max_iter} steps"
    )


def _cluster(z: np.ndarray, tol: float) -> list[tuple[complex, int]]:
    """Merge root approximations into (root, multiplicity) pairs.

    Two clusters merge when their centroids are closer than tol**(1/k) with
    k the combined size: simple attainable-accuracy heuristic for a
    multiplicity-k root.
    """
    clusters: list[list[complex]] = [[zi] for zi in z]
    merged = True
    while merged:
        merged = False
        out: list[list[complex]] = []
        while clusters:
            c = clusters.pop()
            cen = sum(c) / len(c)
            hit = None
            for other in out:
                ocen = sum(other) / len(other)
                k = len(c) + len(other)
                if abs(cen - ocen) <= tol ** (1.0 / k):
                    hit = other
                    break
            if hit is None:
                out.append(c)
            else:
                hit.extend(c)
                merged = True
        clusters = out
    return [(sum(c) / len(c), len(c)) for c in clusters]


def _sort_key(root: complex) -> tuple[float, float]:
    ph = cmath.phase(root) % (2 * math.pi)
    return (ph, abs(root))


def roots(p: ComplexPoly, tol: float = 1e-12, max_iter: int = 400,
          seed: int = 0) -> list[tuple[complex, int]]:
    """All roots of p with multiplicities, sorted by argument then modulus.

    Aberth-Ehrlich simultaneous iteration from a perturbed initial circle,
    followed by cluster merging: clusters of k approximations within radius
    tol**(1/k) collapse to one root of multiplicity k. Deterministic for a
    fixed (tol, seed).

    Raises DegreeZero for constants and NonConvergence when the iteration
    cap is hit before residuals meet tol.
    """
    if p.degree() < 1:
        raise DegreeZero("constant polynomial has no roots")
    rng = np.random.default_rng(seed)
    z = _aberth(p, tol, max_iter, rng)
    pairs = _cluster(z, tol)
    pairs.sort(key=lambda rm: _sort_key(rm[0]))
    return pairs


@dataclass(frozen=True)
class SymmetricFamily:
    """The family p(z) = z^(2m) - c z^(m-1) with c = a + ib, m >= 1.

    Invariant under z -> omega z with omega = exp(2 pi i/(m+1)). nu is the
    finite edge length of the vertical-foliation tree, pi |b| / (2 (m+1)).
    """

    m: int
    a: float
    b: float

    def __post_init__(self):
        if self.m < 1:
            raise ValueError("m must be a positive integer")

    @property
    def c(self) -> complex:
        return complex(self.a, self.b)

    @property
    def omega(self) -> complex:
        return cmath.exp(2j * math.pi / (self.m + 1))

    @property
    def nu(self) -> float:
        """Finite tree edge length pi |b| / (2 (m+1))."""
        return math.pi * abs(self.b) / (2 * (self.m + 1))

    @property
    def eta(self) -> complex:
        """Principal (m+1)-th root of c."""
        if self.c == 0:
            raise DegenerateFamily("c = 0, all zeros collapse at the origin")
        r = abs(self.c) ** (1.0 / (self.m + 1))
        return r * cmath.exp(1j * cmath.phase(self.c) / (self.m + 1))

    def expand(self) -> ComplexPoly:
        """Coefficient form z^(2m) - c z^(m-1)."""
        cs = [0j] * (2 * self.m + 1)
        cs[2 * self.m] = 1.0 + 0j
        cs[self.m - 1] += -self.c
        return ComplexPoly(tuple(cs))


def family_roots(f: SymmetricFamily, allow_degenerate: bool = False
                 ) -> tuple[tuple[complex, int] | None, list[complex]]:
    """Zero set of the family in closed form.

    Returns (center, outer): center is (0, m-1) for m >= 2 and None for
    m = 1; outer lists the m+1 simple zeros eta * omega^k in counterclockwise
    order starting from the principal root eta.

    c = 0 raises DegenerateFamily unless allow_degenerate, in which case all
    zeros sit at the origin with multiplicity 2m and outer is empty.
    """
    if f.c == 0:
        if allow_degenerate:
            return ((0j, 2 * f.m), [])
        raise DegenerateFamily("c = 0, all zeros collapse at the origin")
    eta = f.eta
    outer = [eta * f.omega ** k for k in range(f.m + 1)]
    center = (0j, f.m - 1) if f.m >= 2 else None
    return (center, outer)


def all_zeros(p: ComplexPoly, tol: float = 1e-12) -> list[tuple[complex, int]]:
    """Roots with multiplicity, or [] for (nonzero) constants."""
    if p.degree() < 1:
        return []
    return roots(p, tol=tol)
