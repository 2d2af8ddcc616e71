"""Elliptic solver for the energy density of the harmonic embedding and the
measurement pipeline built on top of it.

The density H solves Delta log H = 2 (H - |P|^2 / H) with H = |P| far away,
so log H is the natural unknown: it stays smooth across zeros of P and the
Newton linearization is uniformly elliptic. On a solved grid the module
measures image lengths of traced trajectories, extracts the tree edge length
nu from length differences of marked arcs, and develops curves of the
pullback metric into the unit disc.

Two self-tests pin the constant conventions: P = 1 must admit H = 1 exactly,
and the pullback metric 2 Re(P dz^2) + (H + |P|^2/H)|dz|^2 must have Gaussian
curvature -1 wherever it is nondegenerate.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np
from scipy import sparse
from scipy.interpolate import RegularGridInterpolator
from scipy.sparse.linalg import splu

from .errors import (
    DegenerateMetric,
    GridTooCoarse,
    NewtonDiverged,
    OutsideGrid,
    RegionTooSmall,
    TooFewSamples,
)
from .polyfield import ComplexPoly, SymmetricFamily, all_zeros
from .quaddiff import TracedTrajectory, integrate_zeta, critical_directions, trace
from .realtree import family_zero_list, measure_edge_numeric

# edge lengths below this transverse resolution are treated as zero and the
# marked-arc construction falls back to per-zero whisker seeding
_NU_FLOOR = 0.05

_GL16_NODES, _GL16_WEIGHTS = np.polynomial.legendre.leggauss(16)


# ---------------------------------------------------------------------------
# grid, solver configuration, binary field format


@dataclass(frozen=True)
class Grid:
    """Uniform rectangular grid; point (i, j) sits at x0 + i h, y0 + j h.

    Fields are stored as (ny, nx) arrays with the row index running over y.
    """

    x0: float
    y0: float
    h: float
    nx: int
    ny: int

    def xs(self) -> np.ndarray:
        return self.x0 + self.h * np.arange(self.nx)

    def ys(self) -> np.ndarray:
        return self.y0 + self.h * np.arange(self.ny)

    def mesh(self) -> np.ndarray:
        return self.xs()[None, :] + 1j * self.ys()[:, None]


@dataclass(frozen=True)
class SolverConfig:
    radius: float = 6.0
    h: float = 12.0 / 511.0
    tol: float = 1e-8
    newton_damping: float = 1.0
    max_iter: int = 60
    exclusion_eps: float = 1e-3


_CONFIG_KEYS = {
    "radius": ("radius", float),
    "h": ("h", float),
    "tol": ("tol", float),
    "newtonDamping": ("newton_damping", float),
    "maxIter": ("max_iter", int),
    "exclusionEps": ("exclusion_eps", float),
}


def parse_solver_config(text: str) -> SolverConfig:
    """Parse plain key = value solver configuration text.

    Recognized keys: radius, h, tol, newtonDamping, maxIter, exclusionEps.
    Blank lines and lines starting with # are ignored; unknown keys raise
    ValueError.
    """
    out = {}
    for ln, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ValueError(f"line {ln}: expected key = value, got {raw!r}")
        key, _, val = line.partition("=")
        key = key.strip()
        if key not in _CONFIG_KEYS:
            raise ValueError(f"line {ln}: unknown solver key {key!r}")
        attr, cast = _CONFIG_KEYS[key]
        try:
            out[attr] = cast(val.strip())
        except ValueError as exc:
            raise ValueError(f"line {ln}: bad value for {key}: {val.strip()!r}") from exc
    return SolverConfig(**out)


def save_field(path, grid: Grid, field: np.ndarray) -> None:
    """Write a grid field: int64 nx, ny then float64 x0, y0, h then row-major
    float64 data, all little-endian."""
    a = np.asarray(field, dtype="<f8")
    if a.shape != (grid.ny, grid.nx):
        raise ValueError(f"field shape {a.shape} does not match grid "
                         f"({grid.ny}, {grid.nx})")
    with open(path, "wb") as f:
        f.write(np.asarray([grid.nx, grid.ny], dtype="<i8").tobytes())
        f.write(np.asarray([grid.x0, grid.y0, grid.h], dtype="<f8").tobytes())
        f.write(np.ascontiguousarray(a).tobytes())


def load_field(path) -> tuple[Grid, np.ndarray]:
    with open(path, "rb") as f:
        nx, ny = (int(v) for v in np.frombuffer(f.read(16), dtype="<i8"))
        x0, y0, h = (float(v) for v in np.frombuffer(f.read(24), dtype="<f8"))
        data = np.frombuffer(f.read(), dtype="<f8")
    if data.size != nx * ny:
        raise ValueError(f"grid file holds {data.size} values, expected {nx * ny}")
    return Grid(x0, y0, h, nx, ny), data.reshape(ny, nx).copy()


# ---------------------------------------------------------------------------
# the solve


@dataclass(frozen=True)
class VortexSolution:
    """Solved energy density on a truncated grid; immutable after solve.

    H is the density, logH its log (the solver unknown), absP the modulus of
    the polynomial on the grid. family is None when the solve was driven by a
    bare polynomial. w_field is the half-log density relative to |P|; it is
    infinite at grid points that coincide with zeros of P.
    """

    grid: Grid
    H: np.ndarray
    logH: np.ndarray
    absP: np.ndarray
    poly: ComplexPoly
    family: SymmetricFamily | None
    zeros: tuple[complex, ...]
    residual: float
    iterations: int

    def __post_init__(self):
        for name in ("H", "logH", "absP"):
            arr = np.asarray(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def w_field(self) -> np.ndarray:
        with np.errstate(divide="ignore"):
            return 0.5 * (self.logH - np.log(self.absP))

    @property
    def jacobian(self) -> np.ndarray:
        return self.H - self.absP ** 2 / self.H


def _laplacian_matrix(nix: int, niy: int, h: float) -> sparse.csr_matrix:
    ex = np.ones(nix)
    ey = np.ones(niy)
    tx = sparse.diags([ex[:-1], -2.0 * ex, ex[:-1]], [-1, 0, 1])
    ty = sparse.diags([ey[:-1], -2.0 * ey, ey[:-1]], [-1, 0, 1])
    a = sparse.kron(sparse.identity(niy), tx) + sparse.kron(ty, sparse.identity(nix))
    return (a / h ** 2).tocsr()


def _residual(q: np.ndarray, gsq: np.ndarray, h: float) -> np.ndarray:
    lap = (q[1:-1, 2:] + q[1:-1, :-2] + q[2:, 1:-1] + q[:-2, 1:-1]
           - 4.0 * q[1:-1, 1:-1]) / h ** 2
    qi = q[1:-1, 1:-1]
    return lap - 2.0 * (np.exp(qi) - gsq[1:-1, 1:-1] * np.exp(-qi))


def _newton(q: np.ndarray, gsq: np.ndarray, h: float, tol: float,
            damping: float, max_iter: int) -> tuple[np.ndarray, float, int]:
    a_int = None
    f = _residual(q, gsq, h)
    res = float(np.max(np.abs(f)))
    gi = gsq[1:-1, 1:-1]
    iters = 0
    while res > tol:
        if iters >= max_iter:
            raise NewtonDiverged(
                f"residual {res:.3e} above tol {tol:.3e} after {max_iter} steps"
            )
        if a_int is None:
            a_int = _laplacian_matrix(q.shape[1] - 2, q.shape[0] - 2, h)
        qi = q[1:-1, 1:-1]
        diag = 2.0 * (np.exp(qi) + gi * np.exp(-qi))
        jac = a_int - sparse.diags(diag.ravel())
        delta = splu(jac.tocsc()).solve(-f.ravel()).reshape(qi.shape)
        lam = damping
        while True:
            qn = q.copy()
            qn[1:-1, 1:-1] = qi + lam * delta
            fn = _residual(qn, gsq, h)
            resn = float(np.max(np.abs(fn)))
            if resn < res or resn <= tol:
                break
            lam *= 0.5
            if lam < 1.0 / 256.0:
                raise NewtonDiverged(
                    f"line search stalled at residual {res:.3e}; "
                    "try a smaller newtonDamping or a finer start"
                )
        q, f, res = qn, fn, resn
        iters += 1
    return q, res, iters


def _initial_q(absp: np.ndarray) -> np.ndarray:
    pmax = float(absp.max())
    if pmax == 0.0:
        raise ValueError("polynomial vanishes identically on the grid")
    if float(absp.min()) > 0.5 * pmax:
        return np.log(absp)
    delta = 1e-2 * pmax
    # smoothed log modulus: finite at zeros, asymptotically log|P|
    return 0.5 * np.log(absp ** 2 + delta ** 2)


def _solve_level(poly: ComplexPoly, radius: float, n: int, tol: float,
                 damping: float, max_iter: int) -> tuple[np.ndarray, float, int, Grid]:
    grid = Grid(-radius, -radius, 2.0 * radius / (n - 1), n, n)
    z = grid.mesh()
    absp = np.abs(poly(z))
    gsq = absp ** 2
    with np.errstate(divide="ignore"):
        qb = np.log(np.maximum(absp, 1e-300))
    if n > 96:
        nc = (n + 1) // 2
        qc, _, _, gc = _solve_level(poly, radius, nc, max(tol, 1e-7),
                                    damping, max_iter)
        interp = RegularGridInterpolator((gc.ys(), gc.xs()), qc)
        pts = np.stack([np.broadcast_to(grid.ys()[:, None], z.shape),
                        np.broadcast_to(grid.xs()[None, :], z.shape)], axis=-1)
        q0 = interp(pts.reshape(-1, 2)).reshape(z.shape)
    else:
        q0 = _initial_q(absp)
    q = q0.copy()
    q[0, :], q[-1, :] = qb[0, :], qb[-1, :]
    q[:, 0], q[:, -1] = qb[:, 0], qb[:, -1]
    q, res, iters = _newton(q, gsq, grid.h, tol, damping, max_iter)
    return q, res, iters, grid


def solve_vortex(target, radius: float, h: float, tol: float = 1e-8,
                 damping: float = 1.0, max_iter: int = 60) -> VortexSolution:
    """Solve Delta log H = 2 (H - |P|^2/H) with H = |P| on the box boundary.

    target is a SymmetricFamily or a bare ComplexPoly. The box is the square
    of half-width radius; the spacing is adjusted so the box is spanned
    exactly (n = round(2 radius / h) + 1 points per side). Damped Newton on
    log H with nested-grid continuation; the reported iteration count is for
    the finest level.

    Raises GridTooCoarse when fewer than 8 grid points span the smallest
    distance between distinct zeros, NewtonDiverged when the iteration stalls,
    ValueError when the box does not leave threefold margin around the zeros.
    """
    if isinstance(target, SymmetricFamily):
        family = target
        poly = target.expand()
        zs = family_zero_list(target)
    elif isinstance(target, ComplexPoly):
        family = None
        poly = target
        zs = [r for r, _ in all_zeros(poly)]
    else:
        raise TypeError("target must be a SymmetricFamily or ComplexPoly")
    if radius <= 0 or h <= 0 or tol <= 0:
        raise ValueError("radius, h and tol must be positive")
    rmax = max((abs(z) for z in zs), default=0.0)
    if radius < 3.0 * (1.0 + rmax) - 1e-12:
        raise ValueError(
            f"radius {radius} below the 3 (1 + max|zero|) = "
            f"{3.0 * (1.0 + rmax):.3f} margin"
        )
    n = int(round(2.0 * radius / h)) + 1
    if n < 8:
        raise GridTooCoarse(f"{n} points per side cannot resolve anything")
    h_eff = 2.0 * radius / (n - 1)
    if len(zs) >= 2:
        dmin = min(abs(p - q) for i, p in enumerate(zs) for q in zs[i + 1:])
        if h_eff > dmin / 8.0:
            raise GridTooCoarse(
                f"spacing {h_eff:.4g} too large for zero separation {dmin:.4g}"
            )
    q, res, iters, grid = _solve_level(poly, radius, n, tol, damping, max_iter)
    z = grid.mesh()
    absp = np.abs(poly(z))
    return VortexSolution(
        grid=grid, H=np.exp(q), logH=q, absP=absp, poly=poly, family=family,
        zeros=tuple(zs), residual=res, iterations=iters,
    )


# ---------------------------------------------------------------------------
# field interpolation and the decay check


def _bilinear(grid: Grid, field: np.ndarray, pts: np.ndarray) -> np.ndarray:
    x = (pts.real - grid.x0) / grid.h
    y = (pts.imag - grid.y0) / grid.h
    eps = 1e-9
    if (np.any(x < -eps) or np.any(x > grid.nx - 1 + eps)
            or np.any(y < -eps) or np.any(y > grid.ny - 1 + eps)):
        raise OutsideGrid("point left the solved region")
    ix = np.clip(np.floor(x).astype(int), 0, grid.nx - 2)
    iy = np.clip(np.floor(y).astype(int), 0, grid.ny - 2)
    fx = x - ix
    fy = y - iy
    f00 = field[iy, ix]
    f10 = field[iy, ix + 1]
    f01 = field[iy + 1, ix]
    f11 = field[iy + 1, ix + 1]
    return (1 - fy) * ((1 - fx) * f00 + fx * f10) + fy * ((1 - fx) * f01 + fx * f11)


def phi_distance(sol: VortexSolution, points) -> np.ndarray:
    """Straight-chord flat distance from each point to the nearest zero.

    The chord integral of |P|^(1/2) bounds the flat distance from above and
    is exact in the radial directions, which is all the shell statistics
    need.
    """
    z = np.asarray(points, dtype=complex)
    if not sol.zeros:
        return np.full(z.shape, np.inf)
    t = 0.5 * (_GL16_NODES + 1.0)
    wt = 0.5 * _GL16_WEIGHTS
    best = None
    for z0 in sol.zeros:
        acc = np.zeros(z.shape)
        for tj, wj in zip(t, wt):
            acc += wj * np.sqrt(np.abs(sol.poly(z0 + tj * (z - z0))))
        acc *= np.abs(z - z0)
        best = acc if best is None else np.minimum(best, acc)
    return best


def phi_distance_field(sol: VortexSolution) -> np.ndarray:
    """phi_distance evaluated on the whole grid."""
    return phi_distance(sol, sol.grid.mesh())


@dataclass(frozen=True)
class DecayFit:
    rate: float
    r2: float
    shells: tuple[tuple[float, float], ...]


def decay_fit(sol: VortexSolution, shell_width: float = 0.25,
              d_min: float = 0.5, d_max: float | None = None,
              floor: float | None = None) -> DecayFit:
    """Exponential fit of shell-max |w| against flat distance from the zeros.

    Shells of the given width start at d_min and stop at d_max (default 80%
    of the smallest boundary distance, where the Dirichlet truncation starts
    to bite) or at the first shell whose maximum drops below floor. The
    default floor is estimated from the far-field undershoot of w, which for
    an exact solution would be nonnegative, so its negative part measures
    discretization noise. Returns the fitted rate (positive means decay),
    the fit R^2 and the shell data.
    """
    d = phi_distance_field(sol)
    wf = sol.w_field
    w = np.abs(wf)
    if floor is None:
        undershoot = -float(np.nanmin(wf))
        floor = max(1e-7, 5.0 * undershoot)
    if d_max is None:
        edge = min(d[0, :].min(), d[-1, :].min(), d[:, 0].min(), d[:, -1].min())
        d_max = 0.8 * float(edge)
    shells = []
    lo = d_min
    while lo + shell_width <= d_max:
        mask = (d >= lo) & (d < lo + shell_width) & np.isfinite(w)
        if mask.any():
            val = float(w[mask].max())
            if val < floor:
                break
            shells.append((lo + 0.5 * shell_width, val))
        lo += shell_width
    if len(shells) < 4:
        raise TooFewSamples(
            f"only {len(shells)} usable shells between {d_min} and {d_max}"
        )
    xs = np.array([m for m, _ in shells])
    ys = np.log(np.array([v for _, v in shells]))
    slope, intercept = np.polyfit(xs, ys, 1)
    fit = slope * xs + intercept
    ss_res = float(np.sum((ys - fit) ** 2))
    ss_tot = float(np.sum((ys - ys.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return DecayFit(rate=float(-slope), r2=r2, shells=tuple(shells))


# ---------------------------------------------------------------------------
# image length functionals along traced trajectories


def _exp_w(sol: VortexSolution, pts: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """(e^w, e^-w) along sample points, from interpolated log H and exact P."""
    q = _bilinear(sol.grid, sol.logH, pts)
    root_absp = np.sqrt(np.abs(sol.poly(pts)))
    with np.errstate(divide="ignore"):
        ew = np.exp(0.5 * q) / root_absp
    emw = root_absp * np.exp(-0.5 * q)
    return ew, emw


def horizontal_image_length(sol: VortexSolution, gamma: TracedTrajectory) -> float:
    """Image length of a horizontal trace: integral of e^w + e^-w against the
    horizontal transverse measure |d Re zeta|. Far from the zeros the
    integrand is 2, so the value approaches twice the flat length."""
    if gamma.kind != "horizontal":
        raise ValueError("gamma must be a horizontal trace")
    pts = gamma.path.points
    ew, emw = _exp_w(sol, pts)
    f = ew + emw
    dx = np.abs(np.diff(gamma.path.zetas.real))
    return float(np.sum(0.5 * (f[1:] + f[:-1]) * dx))


def vertical_image_length(sol: VortexSolution, gamma: TracedTrajectory) -> float:
    """Image length of a vertical trace: integral of e^w - e^-w (twice the
    hyperbolic sine of w) against |d Im zeta|. Decays exponentially in the
    distance of the trace from the zeros."""
    if gamma.kind != "vertical":
        raise ValueError("gamma must be a vertical trace")
    pts = gamma.path.points
    ew, emw = _exp_w(sol, pts)
    f = ew - emw
    dy = np.abs(np.diff(gamma.path.zetas.imag))
    return float(np.sum(0.5 * (f[1:] + f[:-1]) * dy))


# ---------------------------------------------------------------------------
# marked arcs and the edge length estimate


@dataclass(frozen=True)
class _MarkedArc:
    kind: str  # "short" | "long" | "whisker"
    angle: float
    top: complex
    height: float
    budget: float
    minus: TracedTrajectory
    plus: TracedTrajectory


def _radial_alignment(theta: float, anchor: complex) -> float:
    return math.cos(theta - cmath.phase(anchor))


def _climb(sol, base: complex, theta: float, height: float, excl: float,
           regular: bool) -> complex:
    """Walk the vertical leaf leaving base along direction theta up to the
    given flat height; returns the top point."""
    p = sol.poly
    if regular:
        seed = complex(base)
        off = 0.0
    else:
        r0 = 3.0 * excl * (1.0 + abs(base))
        seed = base + r0 * cmath.exp(1j * theta)
        off = integrate_zeta(p, [base, seed], zeros=sol.zeros,
                             exclusion_eps=excl).philen
        if off >= height:
            raise RegionTooSmall(
                f"height {height} does not clear the seed offset {off:.3g}"
            )
    v = 1j / cmath.sqrt(p(seed))
    d = 1 if math.cos(cmath.phase(v) - theta) > 0 else -1
    t = trace(p, seed, "vertical", direction=d, budget=height - off,
              exclusion_eps=excl, zeros=sol.zeros)
    if t.terminated != "length-budget":
        raise RegionTooSmall(
            f"vertical climb from {base:.3g} ended early ({t.terminated})"
        )
    return complex(t.path.points[-1])


def _horizontal_pair(sol, top: complex, budget: float, excl: float
                     ) -> tuple[TracedTrajectory, TracedTrajectory]:
    plus = trace(sol.poly, top, "horizontal", direction=1, budget=budget,
                 exclusion_eps=excl, zeros=sol.zeros)
    minus = trace(sol.poly, top, "horizontal", direction=-1, budget=budget,
                  exclusion_eps=excl, zeros=sol.zeros)
    for t in (plus, minus):
        if t.terminated != "length-budget":
            raise RegionTooSmall(
                f"horizontal arc from {top:.3g} ended early ({t.terminated})"
            )
    return minus, plus


def _marked_arcs(sol: VortexSolution, L: float, y_short: float, y_long: float,
                 excl: float) -> list[_MarkedArc]:
    """The alternating family of horizontal arcs behind the nu estimate.

    Long arcs are seeded on the critical vertical chain through the center
    (for m = 1 on the regular center leaf through the origin) and span flat
    length 2L; short arcs are seeded on the outward vertical whisker of each
    outer zero and span 2(L - nu_x) with nu_x the quadrature edge length.
    When nu_x is below the transverse resolution floor both arcs of every
    outer zero are seeded on its two sideways whiskers instead, which keeps
    the construction well defined in the collapsed-edge limit.
    """
    f = sol.family
    if f is None:
        raise ValueError("marked arcs need a symmetric family solve")
    p = sol.poly
    nu_x = measure_edge_numeric(f, 0)
    if min(y_short, y_long) <= 0:
        raise RegionTooSmall("seed height must be positive")
    outer = [f.eta * f.omega ** k for k in range(f.m + 1)]
    arcs: list[_MarkedArc] = []
    if nu_x >= _NU_FLOOR:
        if L - nu_x <= 0.25 * L:
            raise RegionTooSmall(
                f"budget {L} too close to the edge length {nu_x:.3g}"
            )
        for zk in outer:
            dirs = critical_directions(p, zk, "vertical")
            theta = max(dirs, key=lambda t: _radial_alignment(t, zk))
            top = _climb(sol, zk, theta, y_short, excl, regular=False)
            minus, plus = _horizontal_pair(sol, top, L - nu_x, excl)
            arcs.append(_MarkedArc("short", cmath.phase(top) % (2 * math.pi),
                                   top, y_short, L - nu_x, minus, plus))
        if f.m == 1:
            long_seeds = []
            for d in (1, -1):
                t = trace(p, 0j, "vertical", direction=d, budget=y_long,
                          exclusion_eps=excl, zeros=sol.zeros)
                if t.terminated != "length-budget":
                    raise RegionTooSmall(
                        f"center leaf climb ended early ({t.terminated})"
                    )
                long_seeds.append(complex(t.path.points[-1]))
        else:
            long_seeds = [
                _climb(sol, 0j, theta, y_long, excl, regular=False)
                for theta in critical_directions(p, 0j, "vertical")
            ]
        for top in long_seeds:
            minus, plus = _horizontal_pair(sol, top, L, excl)
            arcs.append(_MarkedArc("long", cmath.phase(top) % (2 * math.pi),
                                   top, y_long, L, minus, plus))
        arcs.sort(key=lambda a: a.angle)
        return arcs

    # collapsed-edge fallback: two sideways whiskers per outer zero
    specs = []
    for zk in outer:
        dirs = sorted(critical_directions(p, zk, "vertical"),
                      key=lambda t: -_radial_alignment(t, zk))
        for theta in dirs[:2]:
            probe = zk + 0.3 * (1.0 + abs(zk)) * cmath.exp(1j * theta)
            specs.append((cmath.phase(probe) % (2 * math.pi), zk, theta))
    specs.sort(key=lambda s: s[0])
    for idx, (ang, zk, theta) in enumerate(specs):
        height = y_short if idx % 2 == 0 else y_long
        top = _climb(sol, zk, theta, height, excl, regular=False)
        minus, plus = _horizontal_pair(sol, top, L - nu_x, excl)
        arcs.append(_MarkedArc("whisker", ang, top, height, L - nu_x,
                               minus, plus))
    return arcs


def _arc_image_length(sol: VortexSolution, arc: _MarkedArc) -> float:
    return (horizontal_image_length(sol, arc.minus)
            + horizontal_image_length(sol, arc.plus))


def extract_nu(sol: VortexSolution, L: float, y_height: float | None = None,
               exclusion_eps: float = 1e-3) -> float:
    """Edge length estimate from image lengths of the marked arcs.

    Adjacent arcs alternate between flat length 2L through the center class
    and 2(L - nu) across an outer zero, so their image lengths differ by
    4 nu up to corrections that decay in the seed height. The estimate is
    the mean cyclic adjacent difference over 4. y_height defaults to L/2.
    """
    if L <= 0:
        raise ValueError("L must be positive")
    y = 0.5 * L if y_height is None else y_height
    arcs = _marked_arcs(sol, L, y, y, exclusion_eps)
    try:
        s = [_arc_image_length(sol, a) for a in arcs]
    except OutsideGrid as exc:
        raise RegionTooSmall(
            f"marked arcs leave the solved box at L = {L}"
        ) from exc
    n = len(s)
    diffs = [abs(s[i] - s[(i + 1) % n]) for i in range(n)]
    return float(np.mean(diffs) / 4.0)


# ---------------------------------------------------------------------------
# pullback metric, curvature check, development into the disc


@dataclass(frozen=True)
class PullbackMetric:
    """2 Re(P dz^2) + (H + |P|^2/H) |dz|^2 sampled on the solve grid.

    E, F, G are the metric components in (x, y); qx, qy hold the grid
    gradient of log H used for the analytic Christoffel evaluation along
    curves; jac is the grid Jacobian density H - |P|^2/H.
    """

    sol: VortexSolution
    E: np.ndarray
    F: np.ndarray
    G: np.ndarray
    qx: np.ndarray
    qy: np.ndarray
    jac: np.ndarray

    def __post_init__(self):
        for name in ("E", "F", "G", "qx", "qy", "jac"):
            arr = np.asarray(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)


def pullback_metric(sol: VortexSolution) -> PullbackMetric:
    z = sol.grid.mesh()
    pz = sol.poly(z)
    e = sol.H + sol.absP ** 2 / sol.H
    h = sol.grid.h
    return PullbackMetric(
        sol=sol,
        E=e + 2.0 * pz.real,
        F=-2.0 * pz.imag,
        G=e - 2.0 * pz.real,
        qx=np.gradient(sol.logH, h, axis=1),
        qy=np.gradient(sol.logH, h, axis=0),
        jac=sol.H - sol.absP ** 2 / sol.H,
    )


def _det3(m) -> np.ndarray:
    (a, b, c), (d, e, f), (g, h, i) = m
    return a * (e * i - f * h) - b * (d * i - f * g) + c * (d * h - e * g)


def gaussian_curvature(pm: PullbackMetric, degeneracy_cut: float = 0.02
                       ) -> np.ndarray:
    """Discrete Gaussian curvature of the pullback metric (Brioschi form).

    NaN on the two-cell boundary ring and wherever the Jacobian density
    falls below degeneracy_cut times the conformal factor: the curvature
    formula divides by det g squared, which is the fourth power of the
    Jacobian, so the cancellation is numerically meaningless once the
    metric is nearly rank one. Elsewhere the value should sit near -1.
    """
    h = pm.sol.grid.h
    E, F, G = pm.E, pm.F, pm.G
    Ex, Ey = np.gradient(E, h, axis=1), np.gradient(E, h, axis=0)
    Fx, Fy = np.gradient(F, h, axis=1), np.gradient(F, h, axis=0)
    Gx, Gy = np.gradient(G, h, axis=1), np.gradient(G, h, axis=0)
    Eyy = np.gradient(Ey, h, axis=0)
    Gxx = np.gradient(Gx, h, axis=1)
    Fxy = np.gradient(Fx, h, axis=0)
    m1 = ((-0.5 * Eyy + Fxy - 0.5 * Gxx, 0.5 * Ex, Fx - 0.5 * Ey),
          (Fy - 0.5 * Gx, E, F),
          (0.5 * Gy, F, G))
    m2 = ((np.zeros_like(E), 0.5 * Ey, 0.5 * Gx),
          (0.5 * Ey, E, F),
          (0.5 * Gx, F, G))
    det = E * G - F ** 2
    with np.errstate(divide="ignore", invalid="ignore"):
        k = (_det3(m1) - _det3(m2)) / det ** 2
    k[:2, :] = k[-2:, :] = np.nan
    k[:, :2] = k[:, -2:] = np.nan
    k[pm.jac < degeneracy_cut * 0.5 * (E + G)] = np.nan
    return k


def _metric_along(pm: PullbackMetric, pts: np.ndarray):
    """Metric components, first partials and Jacobian at sample points.

    log H and its grid gradient are interpolated bilinearly; everything
    involving P uses exact evaluations, so the only smoothing error is in q.
    """
    sol = pm.sol
    q = _bilinear(sol.grid, sol.logH, pts)
    qx = _bilinear(sol.grid, pm.qx, pts)
    qy = _bilinear(sol.grid, pm.qy, pts)
    pz = sol.poly(pts)
    dpz = sol.poly.derivative()(pts)
    a = np.exp(q)
    b = np.abs(pz) ** 2 * np.exp(-q)
    e = a + b
    jac = a - b
    # holomorphy: d/dx P = P', d/dy P = i P'
    pp = np.conj(pz) * dpz
    p2x = 2.0 * pp.real
    p2y = -2.0 * pp.imag
    ex = jac * qx + np.exp(-q) * p2x
    ey = jac * qy + np.exp(-q) * p2y
    E = e + 2.0 * pz.real
    F = -2.0 * pz.imag
    G = e - 2.0 * pz.real
    Ex = ex + 2.0 * dpz.real
    Ey = ey - 2.0 * dpz.imag
    Fx = -2.0 * dpz.imag
    Fy = -2.0 * dpz.real
    Gx = ex - 2.0 * dpz.real
    Gy = ey + 2.0 * dpz.imag
    return (E, F, G), (Ex, Ey, Fx, Fy, Gx, Gy), jac, e


def _nonuniform_derivatives(vals: np.ndarray, s: np.ndarray):
    """First and second derivative of samples against a nonuniform grid,
    three-point formulas at the interior, copied ends."""
    h1 = s[1:-1] - s[:-2]
    h2 = s[2:] - s[1:-1]
    d1 = (-h2 / (h1 * (h1 + h2)) * vals[:-2]
          + (h2 - h1) / (h1 * h2) * vals[1:-1]
          + h1 / (h2 * (h1 + h2)) * vals[2:])
    d2 = 2.0 * (vals[:-2] * h2 - vals[1:-1] * (h1 + h2) + vals[2:] * h1) \
        / (h1 * h2 * (h1 + h2))
    d1 = np.concatenate([[d1[0]], d1, [d1[-1]]])
    d2 = np.concatenate([[d2[0]], d2, [d2[-1]]])
    return d1, d2


def _dedupe(curve) -> np.ndarray:
    pts = np.asarray([complex(w) for w in curve], dtype=complex)
    if pts.size >= 2:
        keep = np.concatenate([[True], np.abs(np.diff(pts)) > 1e-12])
        pts = pts[keep]
    return pts


def _segment_lengths(pm: PullbackMetric, pts: np.ndarray) -> np.ndarray:
    mids = 0.5 * (pts[:-1] + pts[1:])
    (em, fm, gm), _, _, _ = _metric_along(pm, mids)
    dx = np.diff(pts.real)
    dy = np.diff(pts.imag)
    return np.sqrt(np.maximum(em * dx ** 2 + 2.0 * fm * dx * dy + gm * dy ** 2,
                              1e-300))


def _replay(pm: PullbackMetric, pts: np.ndarray, ma: complex, mb: complex
            ) -> tuple[np.ndarray, complex, complex]:
    """Replay one smooth polyline through the Mobius turtle.

    The state (ma, mb) is an SU(1,1) element acting by z -> (ma z + mb) /
    (conj(mb) z + conj(ma)); its frame must sit at the developed position of
    pts[0] heading along the image of the initial tangent. Returns the
    developed points and the advanced state (at pts[-1], heading along the
    final tangent).
    """
    (E, F, G), (Ex, Ey, Fx, Fy, Gx, Gy), jac, e = _metric_along(pm, pts)
    if float(np.min(jac)) <= 1e-8 * float(np.max(e)):
        raise DegenerateMetric(
            "Jacobian density vanishes along the curve; image degenerates"
        )
    seg = _segment_lengths(pm, pts)
    s = np.concatenate([[0.0], np.cumsum(seg)])
    x1, x2 = _nonuniform_derivatives(pts.real, s)
    y1, y2 = _nonuniform_derivatives(pts.imag, s)

    den = 2.0 * (E * G - F ** 2)
    g111 = (G * Ex - 2.0 * F * Fx + F * Ey) / den
    g112 = (G * Ey - F * Gx) / den
    g122 = (2.0 * G * Fy - G * Gx - F * Gy) / den
    g211 = (2.0 * E * Fx - E * Ey - F * Ex) / den
    g212 = (E * Gx - F * Ey) / den
    g222 = (E * Gy - 2.0 * F * Fy + F * Gx) / den
    ax = x2 + g111 * x1 ** 2 + 2.0 * g112 * x1 * y1 + g122 * y1 ** 2
    ay = y2 + g211 * x1 ** 2 + 2.0 * g212 * x1 * y1 + g222 * y1 ** 2
    speed = np.sqrt(np.maximum(E * x1 ** 2 + 2.0 * F * x1 * y1 + G * y1 ** 2,
                               1e-300))
    kg = np.sqrt(np.maximum(E * G - F ** 2, 0.0)) * (x1 * ay - y1 * ax) / speed ** 3

    out = np.empty(pts.size, dtype=complex)
    out[0] = mb / np.conj(ma)
    for i in range(seg.size):
        c, sh = math.cosh(0.5 * seg[i]), math.sinh(0.5 * seg[i])
        ma, mb = ma * c + mb * sh, ma * sh + mb * c
        out[i + 1] = mb / np.conj(ma)
        tau = 0.5 * (kg[i] + kg[i + 1]) * seg[i]
        r = cmath.exp(0.5j * tau)
        ma, mb = ma * r, mb / r
        if i % 64 == 63:
            d = math.sqrt(abs(abs(ma) ** 2 - abs(mb) ** 2))
            ma, mb = ma / d, mb / d
    return out, ma, mb


def _image_angle(pm: PullbackMetric, z: complex, u: complex, v: complex) -> float:
    """Signed angle from tangent u to tangent v at z, measured in the metric."""
    (E, F, G), _, _, _ = _metric_along(pm, np.asarray([z], dtype=complex))
    E, F, G = float(E[0]), float(F[0]), float(G[0])
    dot = E * u.real * v.real + F * (u.real * v.imag + u.imag * v.real) \
        + G * u.imag * v.imag
    cross = math.sqrt(max(E * G - F * F, 0.0)) * (u.real * v.imag - u.imag * v.real)
    return math.atan2(cross, dot)


def develop_curve(pm: PullbackMetric, curve, seed_point: complex = 0j,
                  seed_dir: float = 0.0) -> np.ndarray:
    """Isometrically develop a smooth curve of the pullback metric into the
    unit disc.

    The curve's arclength and signed geodesic curvature are computed from
    the metric (Christoffel symbols from the analytic component derivatives,
    with interpolated log H gradients) and replayed from (seed_point,
    seed_dir): translate by each segment length, then turn by the integrated
    curvature. The result is the image curve up to isometry. Corners are not
    handled here; split the curve and develop piecewise instead.

    Raises DegenerateMetric when the Jacobian density drops to zero along
    the curve (the image collapses to rank one there).
    """
    pts = _dedupe(curve)
    if pts.size < 3:
        raise ValueError("develop needs at least 3 distinct curve points")
    sp = complex(seed_point)
    if abs(sp) >= 1.0:
        raise ValueError("seed point must lie inside the unit disc")
    norm = 1.0 / math.sqrt(1.0 - abs(sp) ** 2)
    rot = cmath.exp(0.5j * seed_dir)
    out, _, _ = _replay(pm, pts, norm * rot, sp * norm / rot)
    return out


# ---------------------------------------------------------------------------
# direct polygon measurement


def _connector(sol: VortexSolution, a: complex, b: complex, excl: float
               ) -> np.ndarray:
    """Vertical hop between two points of one leaf (consecutive arc ends)."""
    p = sol.poly
    dz = integrate_zeta(p, [a, b], zeros=sol.zeros, exclusion_eps=excl).zeta
    budget = abs(dz.imag)
    if budget < 1e-6:
        return np.asarray([a, b], dtype=complex)
    v = 1j / cmath.sqrt(p(a))
    d = 1 if ((b - a).conjugate() * v).real > 0 else -1
    t = trace(p, a, "vertical", direction=d, budget=budget,
              exclusion_eps=excl, zeros=sol.zeros)
    pts = t.path.points
    j = int(np.argmin(np.abs(pts - b)))
    pts = pts[:j + 1]
    if abs(complex(pts[-1]) - b) > 0.1 * (1.0 + abs(b)):
        raise RegionTooSmall("consecutive arcs do not meet on a common leaf")
    return np.concatenate([pts, [b]])


def _first_tangent(pts: np.ndarray) -> complex:
    start = complex(pts[0])
    for k in range(1, pts.size):
        d = complex(pts[k]) - start
        if abs(d) > 1e-6 * (1.0 + abs(start)):
            return d
    return complex(pts[-1]) - start


def _last_tangent(pts: np.ndarray) -> complex:
    end = complex(pts[-1])
    for k in range(pts.size - 2, -1, -1):
        d = end - complex(pts[k])
        if abs(d) > 1e-6 * (1.0 + abs(end)):
            return d
    return end - complex(pts[0])


def _vertical_image_quantities(pm: PullbackMetric, pts: np.ndarray
                               ) -> tuple[float, float]:
    """(image length, total image turning) of a vertical leaf polyline.

    In natural coordinates the pullback is 4 cosh^2(w) dx^2 + 4 sinh^2(w)
    dy^2, so along a leaf x = const the turning density is k_g ds = w_x dy
    and the speed is 2 sinh w. Both are evaluated per segment at midpoints
    with the principal root of P; the root's sign cancels between the
    gradient transform and the dy increment, so no branch tracking is
    needed. This sidesteps the chord-direction noise that makes stencil
    curvature meaningless where the metric is strongly anisotropic.
    """
    sol = pm.sol
    mids = 0.5 * (pts[:-1] + pts[1:])
    q = _bilinear(sol.grid, sol.logH, mids)
    qx = _bilinear(sol.grid, pm.qx, mids)
    qy = _bilinear(sol.grid, pm.qy, mids)
    pz = sol.poly(mids)
    dpz = sol.poly.derivative()(mids)
    rat = dpz / pz
    wx = 0.5 * (qx - rat.real)
    wy = 0.5 * (qy + rat.imag)
    rt = np.sqrt(pz)
    w = 0.5 * (q - np.log(np.abs(pz)))
    dz = np.diff(pts)
    dy = (rt * dz).imag
    length = float(np.sum(2.0 * np.sinh(np.abs(w)) * np.abs(dy)))
    turn = float(np.sum(((wx - 1j * wy) / rt).real * dy))
    return length, turn


def _develop_chain(pm: PullbackMetric, tagged: list[tuple[str, np.ndarray]]
                   ) -> list[np.ndarray]:
    """Develop alternating side and connector polylines into one frame.

    Sides (horizontal arcs, image speed of order one) are replayed through
    the curvature stencils. Connectors (vertical hops, image crushed by
    sinh w) are advanced as geodesic segments of their image length with
    the closed-form leaf turning applied halfway. Corners between a side
    and a connector are exactly a quarter turn because leaf directions are
    metric-orthogonal; only the turn's sign is read from the domain chords.
    """
    ma, mb = 1.0 + 0j, 0j
    prev_tan = None
    devs = []
    for tag, raw in tagged:
        pts = _dedupe(raw)
        if pts.size < 2:
            raise RegionTooSmall("development chain piece degenerated")
        if prev_tan is not None:
            v = _first_tangent(pts)
            sgn = prev_tan.real * v.imag - prev_tan.imag * v.real
            if sgn == 0.0:
                raise RegionTooSmall("chain corner direction is ambiguous")
            phi = math.copysign(0.5 * math.pi, sgn)
            r = cmath.exp(0.5j * phi)
            ma, mb = ma * r, mb / r
        if tag == "conn":
            ln, turn = _vertical_image_quantities(pm, pts)
            dev = np.empty(2, dtype=complex)
            dev[0] = mb / np.conj(ma)
            c, sh = math.cosh(0.25 * ln), math.sinh(0.25 * ln)
            ma, mb = ma * c + mb * sh, ma * sh + mb * c
            r = cmath.exp(0.5j * turn)
            ma, mb = ma * r, mb / r
            ma, mb = ma * c + mb * sh, ma * sh + mb * c
            dev[1] = mb / np.conj(ma)
        else:
            dev, ma, mb = _replay(pm, pts, ma, mb)
        devs.append(dev)
        prev_tan = _last_tangent(pts)
    return devs


def _develop_polygon(sol: VortexSolution, L: float, exclusion_eps: float
                     ) -> tuple[float, list[complex]]:
    """Develop the chained marked arcs and read the image polygon angle.

    The chain alternates the marked horizontal arcs with short vertical
    connectors between consecutive arc ends on a common far leaf; the first
    arc is developed twice so every junction has both of its sides placed in
    one frame. Each side end is fitted by the ideal endpoints of the
    geodesic through two of its developed samples; the cross ratio of four
    consecutive junction vertices then determines the angle subtended by the
    short sides.
    """
    from .hypdisc import cross_ratio, geodesic_ideal_endpoints

    arcs = _marked_arcs(sol, L, 0.45 * L, 0.6 * L, exclusion_eps)
    if any(a.kind == "short" for a in arcs):
        while arcs[1].kind != "short":
            arcs = arcs[1:] + arcs[:1]
    n = len(arcs)

    polylines = []
    for arc in arcs:
        pl = np.concatenate([arc.minus.path.points[::-1],
                             arc.plus.path.points[1:]])
        fwd = complex(pl[-1])
        off = (cmath.phase(fwd) - arc.angle + math.pi) % (2 * math.pi) - math.pi
        if off < 0:
            pl = pl[::-1]
        polylines.append(pl)

    pieces = [("side", polylines[0])]
    try:
        for i in range(1, n + 1):
            nxt = polylines[i % n]
            conn = _connector(sol, complex(pieces[-1][1][-1]), complex(nxt[0]),
                              exclusion_eps)
            pieces.append(("conn", conn))
            pieces.append(("side", nxt))
        pm = pullback_metric(sol)
        devs = _develop_chain(pm, pieces)
    except OutsideGrid as exc:
        raise RegionTooSmall(
            f"development chain leaves the solved box at L = {L}"
        ) from exc
    side_devs = [d for (tag, _), d in zip(pieces, devs) if tag == "side"]
    if len(side_devs) != n + 1:
        raise RegionTooSmall("development chain degenerated")

    def fit_point(dev: np.ndarray, frac: float) -> complex:
        return complex(dev[int(frac * (dev.size - 1))])

    verts = []
    for i in range(n):
        fwd = geodesic_ideal_endpoints(fit_point(side_devs[i], 0.55),
                                       fit_point(side_devs[i], 0.92))[1]
        back = geodesic_ideal_endpoints(fit_point(side_devs[i + 1], 0.08),
                                        fit_point(side_devs[i + 1], 0.45))[0]
        v = fwd + back
        if abs(v) < 0.5:
            raise RegionTooSmall(
                "ideal endpoints of adjacent sides disagree; "
                "increase L or the grid resolution"
            )
        verts.append(v / abs(v))

    cr = complex(cross_ratio(verts[0], verts[1], verts[2], verts[3])).real
    if cr <= 1.0:
        raise RegionTooSmall(
            f"junction cross ratio {cr:.4g} outside the polygon range"
        )
    shalf = math.sin(math.pi / (sol.family.m + 1))
    alpha = 2.0 * math.asin(min(1.0, shalf * math.sqrt(1.0 - 1.0 / cr)))
    return alpha, verts


def measure_alpha(sol: VortexSolution, L: float, mode: str = "lengths",
                  exclusion_eps: float = 1e-3) -> float:
    """Image polygon angle from the solved grid.

    mode "lengths" maps the extracted edge length through the closed angle
    law 2 atan(sin(pi/(m+1)) / (cos(pi/(m+1)) + e^(2 nu))); mode "develop"
    measures the angle directly from the developed polygon's junction
    vertices.
    """
    if sol.family is None:
        raise ValueError("alpha measurement needs a symmetric family solve")
    if mode == "lengths":
        theta = math.pi / (sol.family.m + 1)
        nu = extract_nu(sol, L, exclusion_eps=exclusion_eps)
        return 2.0 * math.atan2(math.sin(theta),
                                math.cos(theta) + math.exp(2.0 * nu))
    if mode == "develop":
        alpha, _ = _develop_polygon(sol, L, exclusion_eps)
        return alpha
    raise ValueError("mode must be 'lengths' or 'develop'")
