"""Natural-parameter geometry of the quadratic differential P(z) dz^2.

Central objects: the natural parameter zeta = int sqrt(P) dz with a branch of
the square root continued along the integration path, the induced transverse
measures |d Re zeta| and |d Im zeta|, and trajectory tracing along the
horizontal (Im zeta constant) and vertical (Re zeta constant) foliations.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad

from .errors import (
    BranchJump,
    NonConvergence,
    NotAZero,
    SeedTooCloseToZero,
    ZeroOnPath,
)
from .polyfield import ComplexPoly, roots

_ENDPOINT_SNAP = 1e-9
# sqrt(P) inherits a relative noise floor of sqrt(machine eps) near zeros of
# P; below it the phase is rounding noise and must not steer branch tracking
_PHASE_FLOOR = 1e-7


@dataclass(frozen=True)
class NaturalPath:
    """A polyline with its natural-parameter data.

    points : polyline vertices in the z plane
    zetas  : accumulated zeta at each vertex, zetas[0] = 0
    hlen   : integral of |d Re zeta| (horizontal transverse measure)
    vlen   : integral of |d Im zeta| (vertical transverse measure)
    philen : integral of |d zeta| (length in the |P|^(1/2) |dz| metric)

    The branch of sqrt(P) is continued along the path; when the path passes
    through a zero of P at a vertex the branch restarts there, so zeta is
    well defined per smooth piece while the three measures are unaffected.
    """

    points: np.ndarray
    zetas: np.ndarray
    hlen: float
    vlen: float
    philen: float

    @property
    def zeta(self) -> complex:
        return complex(self.zetas[-1])

    def concat(self, other: "NaturalPath") -> "NaturalPath":
        if abs(complex(self.points[-1]) - complex(other.points[0])) > 1e-9 * (
            1.0 + abs(complex(self.points[-1]))
        ):
            raise ValueError("paths do not share an endpoint")
        pts = np.concatenate([self.points, other.points[1:]])
        zs = np.concatenate([self.zetas, self.zetas[-1] + other.zetas[1:]])
        return NaturalPath(
            pts, zs,
            self.hlen + other.hlen,
            self.vlen + other.vlen,
            self.philen + other.philen,
        )


_ZERO_CACHE: dict[tuple[complex, ...], tuple[complex, ...]] = {}


def zeros_of(p: ComplexPoly) -> tuple[complex, ...]:
    """Zeros of p without multiplicity, cached per coefficient tuple."""
    key = p.coeffs
    if key not in _ZERO_CACHE:
        if p.degree() < 1:
            _ZERO_CACHE[key] = ()
        else:
            _ZERO_CACHE[key] = tuple(r for r, _ in roots(p, tol=1e-12))
    return _ZERO_CACHE[key]


# ---------------------------------------------------------------------------
# branch-continuous adaptive quadrature along a polyline


def _chain_align(raw: np.ndarray, ref: complex, tiny: float):
    """Align sqrt samples along the path by sign flips.

    Returns (aligned values, indices i of intervals [i, i+1] whose rotation
    exceeds 45 degrees and therefore need subdivision before the branch can
    be trusted). Samples below the phase floor tiny carry no usable phase
    and are bridged over.
    """
    out = np.array(raw, dtype=complex)
    bad: list[int] = []
    prev = ref
    prev_idx = -1
    for i, v in enumerate(out):
        if abs(v) <= tiny:
            continue
        if abs(prev) <= tiny:
            prev = v
            prev_idx = i
            continue
        dot = v.real * prev.real + v.imag * prev.imag
        if dot < 0:
            v = -v
            out[i] = v
            dot = -dot
        if prev_idx >= 0 and dot < 0.7071 * abs(v) * abs(prev):
            bad.extend(range(prev_idx, i))
        prev = v
        prev_idx = i
    return out, np.array(sorted(set(bad)), dtype=int)


def _pair_align(vals: np.ndarray, refs: np.ndarray, tiny: float):
    """Align each sample to its own reference; flag ambiguous rotations.

    References below the phase floor carry no usable phase (rounding residue
    of P at an anchored zero): such samples keep their raw branch, which by
    construction is the branch the chain restarted from.
    """
    out = np.array(vals, dtype=complex)
    dots = out.real * refs.real + out.imag * refs.imag
    usable = np.abs(refs) > tiny
    flip = (dots < 0) & usable
    out[flip] = -out[flip]
    dots = np.abs(dots)
    mags = np.abs(out) * np.abs(refs)
    ambiguous = usable & (np.abs(out) > tiny) & (dots < 0.05 * mags)
    return out, ambiguous


def _simpson4(ha, ga, gm, gb):
    """Simpson for the four integrands from complex node values.

    Returns (zeta, hlen, vlen, philen) contributions, vectorized over
    intervals. ha is the parameter width of each interval.
    """
    w = ha / 6.0
    z = w * (ga + 4.0 * gm + gb)
    h = w * (np.abs(ga.real) + 4.0 * np.abs(gm.real) + np.abs(gb.real))
    v = w * (np.abs(ga.imag) + 4.0 * np.abs(gm.imag) + np.abs(gb.imag))
    p = w * (np.abs(ga) + 4.0 * np.abs(gm) + np.abs(gb))
    return z, h, v, p


def _integrate_part(p, z0, z1, tmap, zr, excl, exempt, ref, rtol, n0):
    """Adaptive branch-continuous Simpson over one reparametrized piece.

    Returns (zeta, hlen, vlen, philen, end_ref).
    """
    K = z1 - z0

    def ev(s: np.ndarray):
        t, w = tmap(s)
        z = z0 + K * t
        if zr.size:
            d = np.abs(z[:, None] - zr[None, :])
            viol = d < excl[None, :]
            if exempt.size:
                viol[:, exempt] = False
            if viol.any():
                raise ZeroOnPath(
                    "integration path enters the exclusion disc of a zero of P"
                )
        return np.sqrt(p(z)), w

    s = np.linspace(0.0, 1.0, n0 + 1)
    sq, _ = ev(s)

    # phase floor: cancellation noise in P caps the usable sqrt magnitude
    noise = math.sqrt(64.0 * 2.3e-16 * max(p.eval_scale(z0), p.eval_scale(z1)))

    # bootstrap: refine until the branch rotates < 45 degrees per interval
    aligned = sq
    tiny = noise
    for _ in range(60):
        gmax = max(float(np.abs(sq).max()), 1e-300)
        tiny = max(_PHASE_FLOOR * gmax, noise)
        aligned, bad = _chain_align(sq, ref, tiny)
        if bad.size == 0:
            break
        widths = s[bad + 1] - s[bad]
        if widths.min() < 1e-13:
            raise BranchJump(
                "sqrt(P) branch rotates >= pi/2 across an interval at the "
                "subdivision floor"
            )
        mids = 0.5 * (s[bad] + s[bad + 1])
        mq, _ = ev(mids)
        s = np.insert(s, bad + 1, mids)
        sq = np.insert(sq, bad + 1, mq)
    else:
        raise BranchJump("branch continuation did not stabilize")

    end_ref = complex(aligned[-1])

    def gvals(svals, sqvals):
        _, w = tmap(svals)
        return sqvals * (K * w)

    # midpoints of every bootstrap interval
    A, B = s[:-1], s[1:]
    SA, SB = aligned[:-1], aligned[1:]
    M = 0.5 * (A + B)
    rawm, _ = ev(M)
    SM, amb = _pair_align(rawm, SA, tiny)
    forced = amb.copy()

    acc = np.zeros(4)
    acc_z = 0.0 + 0.0j

    for _ in range(60):
        if A.size == 0:
            break
        if A.size > 200000:
            raise NonConvergence("quadrature worklist exploded")
        Q1 = 0.5 * (A + M)
        Q2 = 0.5 * (M + B)
        r1, _ = ev(Q1)
        r2, _ = ev(Q2)
        S1v, amb1 = _pair_align(r1, SA, tiny)
        S2v, amb2 = _pair_align(r2, SM, tiny)
        # consistency across each half interval
        d1 = S1v.real * SM.real + S1v.imag * SM.imag
        d2 = S2v.real * SB.real + S2v.imag * SB.imag
        inc1 = (np.abs(S1v) > tiny) & (np.abs(SM) > tiny) & (d1 < 0)
        inc2 = (np.abs(S2v) > tiny) & (np.abs(SB) > tiny) & (d2 < 0)
        forced = forced | amb1 | amb2 | inc1 | inc2

        gA, gM, gB = gvals(A, SA), gvals(M, SM), gvals(B, SB)
        gQ1, gQ2 = gvals(Q1, S1v), gvals(Q2, S2v)

        z1c, h1, v1, p1 = _simpson4(B - A, gA, gM, gB)
        zl, hl, vl, pl = _simpson4(M - A, gA, gQ1, gM)
        zrr, hr, vr, pr = _simpson4(B - M, gM, gQ2, gB)
        z2c, h2, v2, p2 = zl + zrr, hl + hr, vl + vr, pl + pr

        err = (np.abs(z2c - z1c) + np.abs(h2 - h1)
               + np.abs(v2 - v1) + np.abs(p2 - p1))
        scale = acc[3] + float(np.sum(p2))
        tol_round = max(1e-280, rtol * max(scale, 1e-30))
        width = B - A
        at_floor = width <= 1e-12
        if np.any(forced & at_floor):
            raise BranchJump(
                "sqrt(P) branch ambiguous at the subdivision floor"
            )
        good = (~forced) & ((err <= tol_round * width) | at_floor)

        if np.any(good):
            corr = (z2c[good] - z1c[good]) / 15.0
            acc_z += complex(np.sum(z2c[good] + corr))
            acc[1] += float(np.sum(h2[good] + (h2[good] - h1[good]) / 15.0))
            acc[2] += float(np.sum(v2[good] + (v2[good] - v1[good]) / 15.0))
            acc[3] += float(np.sum(p2[good] + (p2[good] - p1[good]) / 15.0))

        keep = ~good
        if not np.any(keep):
            A = np.empty(0)
            break
        # split kept intervals into halves, children inherit evaluated nodes
        A = np.concatenate([A[keep], M[keep]])
        B = np.concatenate([M[keep], B[keep]])
        M = np.concatenate([Q1[keep], Q2[keep]])
        SAk, SBk, SMk = SA[keep], SB[keep], SM[keep]
        SA = np.concatenate([SAk, SMk])
        SB = np.concatenate([SMk, SBk])
        SM = np.concatenate([S1v[keep], S2v[keep]])
        forced = np.zeros(A.size, dtype=bool)
    else:
        raise NonConvergence("adaptive quadrature failed to meet tolerance")

    return acc_z, acc[1], acc[2], acc[3], end_ref


def _map_linear(ta, tb):
    def m(s):
        return ta + (tb - ta) * s, np.full_like(s, tb - ta)
    return m


def _map_anchor_start(ta, tb):
    def m(s):
        return ta + (tb - ta) * s * s, 2.0 * (tb - ta) * s
    return m


def _map_anchor_end(ta, tb):
    def m(s):
        u = 1.0 - s
        return tb - (tb - ta) * u * u, 2.0 * (tb - ta) * u
    return m


def integrate_zeta(p: ComplexPoly, polyline, max_step: float = 0.25,
                   rtol: float = 1e-10, exclusion_eps: float = 1e-3,
                   zeros=None, branch_seed: complex | None = None
                   ) -> NaturalPath:
    """Integrate sqrt(P) dz along a polyline with a continued branch.

    The polyline must avoid the zeros of p by more than the exclusion radius
    exclusion_eps * (1 + |zero|); it may touch zeros at segment endpoints, in
    which case the endpoint-singular factor is removed by a quadratic
    reparametrization before quadrature. Branch tracking is by
    nearest-argument continuation with forced subdivision whenever the
    argument of sqrt(P) rotates too fast across an interval.

    branch_seed optionally fixes the branch at the start (value of sqrt(P)
    there); by default the principal square root at the first sample is used.
    """
    pts = [complex(w) for w in polyline]
    if len(pts) < 2:
        raise ValueError("polyline needs at least two points")
    if zeros is None:
        zeros = zeros_of(p)
    zr = np.asarray(zeros, dtype=complex)
    excl = exclusion_eps * (1.0 + np.abs(zr)) if zr.size else np.empty(0)
    snap = _ENDPOINT_SNAP * (1.0 + np.abs(zr)) if zr.size else np.empty(0)

    ref = 0j if branch_seed is None else complex(branch_seed)
    zetas = [0j]
    hlen = vlen = philen = 0.0

    for z0, z1 in zip(pts[:-1], pts[1:]):
        if z0 == z1:
            zetas.append(zetas[-1])
            continue
        if zr.size:
            anchor0 = np.abs(zr - z0) <= snap
            anchor1 = np.abs(zr - z1) <= snap
        else:
            anchor0 = anchor1 = np.zeros(0, dtype=bool)
        exempt = np.where(anchor0 | anchor1)[0]
        a0, a1 = bool(anchor0.any()), bool(anchor1.any())
        if a0 and a1:
            parts = [_map_anchor_start(0.0, 0.5), _map_anchor_end(0.5, 1.0)]
        elif a0:
            parts = [_map_anchor_start(0.0, 1.0)]
        elif a1:
            parts = [_map_anchor_end(0.0, 1.0)]
        else:
            parts = [_map_linear(0.0, 1.0)]
        if a0:
            ref = 0j  # branch restarts when leaving a zero
        n0 = max(8, int(math.ceil(abs(z1 - z0) / max_step / len(parts))))
        seg_z = 0j
        for tmap in parts:
            z, h, v, ph, ref = _integrate_part(
                p, z0, z1, tmap, zr, excl, exempt, ref, rtol, n0
            )
            seg_z += z
            hlen += h
            vlen += v
            philen += ph
        zetas.append(zetas[-1] + seg_z)

    return NaturalPath(
        np.asarray(pts, dtype=complex), np.asarray(zetas, dtype=complex),
        float(hlen), float(vlen), float(philen),
    )


# ---------------------------------------------------------------------------
# closed-form cross-check integral of the symmetric family


def family_edge_integral(m: int) -> float:
    """int_0^1 sqrt(t^(m-1) (1 - t^(m+1))) dt by adaptive quadrature.

    The integrand has algebraic endpoint singularities which the adaptive
    Gauss-Kronrod scheme resolves by subdivision and extrapolation. Equals
    pi / (2 (m + 1)).
    """
    if m < 1:
        raise ValueError("m must be >= 1")

    def f(t: float) -> float:
        return math.sqrt(max(t ** (m - 1) * (1.0 - t ** (m + 1)), 0.0))

    val, _ = quad(f, 0.0, 1.0, epsabs=1e-13, epsrel=1e-13, limit=400)
    return val


# ---------------------------------------------------------------------------
# critical directions at a zero


def critical_directions(p: ComplexPoly, zero: complex, kind: str,
                        tol: float = 1e-8) -> list[float]:
    """Limiting directions of the chosen foliation at a zero of P.

    A zero of order n has n + 2 equally spaced directions. With c_n the
    leading Taylor coefficient at the zero, horizontal directions solve
    arg(c_n) + (n + 2) theta = 0 mod 2 pi and vertical ones are offset by
    pi / (n + 2). Angles are returned sorted in [0, 2 pi).
    """
    if kind not in ("horizontal", "vertical"):
        raise ValueError("kind must be horizontal or vertical")
    sh = p.shifted(complex(zero))
    scale = max(abs(c) for c in sh.coeffs)
    if scale == 0:
        raise NotAZero("polynomial vanishes identically")
    if abs(sh.coeffs[0]) > tol * scale:
        raise NotAZero(f"p({zero}) = {sh.coeffs[0]} is not within tol of zero")
    n = None
    for k in range(1, len(sh.coeffs)):
        if abs(sh.coeffs[k]) > tol * scale:
            n = k
            break
    if n is None:
        raise NotAZero("could not determine the order of the zero")
    arg_cn = cmath.phase(sh.coeffs[n])
    offset = 0.0 if kind == "horizontal" else math.pi
    out = []
    for j in range(n + 2):
        th = (offset + 2.0 * math.pi * j - arg_cn) / (n + 2)
        out.append(th % (2.0 * math.pi))
    return sorted(out)


# ---------------------------------------------------------------------------
# trajectory tracing


@dataclass(frozen=True)
class TracedTrajectory:
    """Result of tracing a single foliation leaf from a seed."""

    kind: str
    direction: int
    seed: complex
    path: NaturalPath
    terminated: str
    branch_end: complex


_GL3_NODES = (0.5 - math.sqrt(15.0) / 10.0, 0.5, 0.5 + math.sqrt(15.0) / 10.0)
_GL3_WEIGHTS = (5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0)


def trace(p: ComplexPoly, seed: complex, kind: str, direction: int = 1,
          budget: float = 1.0, max_step: float | None = None,
          exclusion_eps: float = 1e-3, escape_radius: float | None = None,
          branch_seed: complex | None = None, drift_tol: float = 1e-7,
          zeros=None) -> TracedTrajectory:
    """Trace a horizontal or vertical trajectory at unit Phi speed.

    Integrates dz/ds = direction * e^(i theta) / sqrt(P(z)) with theta = 0
    for the horizontal and pi/2 for the vertical foliation, by an embedded
    Runge-Kutta step whose error control acts on the drift of the conserved
    part of zeta (Im zeta for horizontal leaves, Re zeta for vertical ones)
    rather than on z. Each accepted step also projects the endpoint back
    onto the leaf, cancelling accumulated drift.

    Terminates on "length-budget", "escaped-radius" (default escape radius
    10 (1 + max |zero|)) or "near-zero" (the exclusion disc of a zero).
    branch_seed fixes sqrt(P) at the seed so a trace can continue another
    one's branch; the default is the principal square root.
    """
    if kind not in ("horizontal", "vertical"):
        raise ValueError("kind must be horizontal or vertical")
    if direction not in (-1, 1):
        raise ValueError("direction must be +1 or -1")
    if budget <= 0:
        raise ValueError("budget must be positive")
    seed = complex(seed)
    if zeros is None:
        zeros = zeros_of(p)
    zr = np.asarray(zeros, dtype=complex)
    excl = exclusion_eps * (1.0 + np.abs(zr)) if zr.size else np.empty(0)
    if escape_radius is None:
        escape_radius = 10.0 * (1.0 + (float(np.abs(zr).max()) if zr.size else 0.0))

    def dist_nearest(z: complex) -> float:
        if not zr.size:
            return math.inf
        return float(np.min(np.abs(zr - z)))

    def inside_exclusion(z: complex) -> bool:
        if not zr.size:
            return False
        return bool(np.any(np.abs(zr - z) < excl))

    if inside_exclusion(seed):
        raise SeedTooCloseToZero(f"seed {seed} is inside a zero exclusion disc")

    phase = 1.0 + 0.0j if kind == "horizontal" else 1.0j
    ref = cmath.sqrt(p(seed)) if branch_seed is None else complex(branch_seed)
    if ref == 0:
        raise SeedTooCloseToZero("sqrt(P) vanishes at the seed")

    def sq(z: complex, r: complex) -> complex:
        s = cmath.sqrt(p(z))
        if s.real * r.real + s.imag * r.imag < 0:
            s = -s
        return s

    def vel(z: complex, r: complex) -> complex:
        s = sq(z, r)
        return direction * phase / s, s

    def chord(za: complex, zb: complex, r: complex):
        """GL3 estimate of int sqrt(P) dz and int |sqrt(P)| |dz| on [za, zb]."""
        dz = zb - za
        acc = 0j
        mag = 0.0
        rr = r
        for x, w in zip(_GL3_NODES, _GL3_WEIGHTS):
            s = sq(za + dz * x, rr)
            acc += w * s
            mag += w * abs(s)
            rr = s
        return acc * dz, mag * abs(dz), rr

    conserved = (lambda w: w.imag) if kind == "horizontal" else (lambda w: w.real)

    pts = [seed]
    zetas = [0j]
    hlen = vlen = philen = 0.0
    zeta_acc = 0j
    s_done = 0.0
    terminated = "length-budget"
    if max_step is None:
        max_step = min(0.08, budget / 8.0)
    h = min(max_step, budget / 16.0)
    h_min = 1e-10 * budget
    z = seed
    guard = 0

    while s_done < budget - 1e-14:
        guard += 1
        if guard > 2_000_000:
            raise NonConvergence("trace step budget exhausted")
        h = min(h, budget - s_done)
        # cap the z-space step so the zero exclusion region cannot be jumped
        dn = dist_nearest(z)
        v0, s0 = vel(z, ref)
        zcap = 0.4 * dn * abs(s0)
        if zcap < h:
            h = max(min(h, zcap), h_min)

        k1 = v0
        z2 = z + 0.5 * h * k1
        z3 = None
        bad_stage = inside_exclusion(z2) or abs(z2) > escape_radius
        if not bad_stage:
            k2, _ = vel(z2, s0)
            z3 = z + 0.5 * h * k2
            bad_stage = inside_exclusion(z3) or abs(z3) > escape_radius
        if not bad_stage:
            k3, _ = vel(z3, s0)
            z4 = z + h * k3
            bad_stage = inside_exclusion(z4) or abs(z4) > escape_radius
        if bad_stage:
            # approach boundary cautiously: shrink, or terminate when tiny
            if h <= 4.0 * h_min:
                near = inside_exclusion(z2) or (z3 is not None and inside_exclusion(z3))
                terminated = "near-zero" if near else "escaped-radius"
                break
            h *= 0.25
            continue
        k4, _ = vel(z4, s0)
        z_prop = z + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)

        if inside_exclusion(z_prop):
            if h <= 4.0 * h_min:
                terminated = "near-zero"
                break
            h *= 0.25
            continue

        dzeta1, _, ref_prop = chord(z, z_prop, s0)
        drift_step = conserved(dzeta1)
        tol_step = drift_tol * max(h, 1e-3 * budget)
        if abs(drift_step) > 5.0 * tol_step and h > 2.0 * h_min:
            h = max(h * max(0.25, 0.8 * (tol_step / abs(drift_step)) ** 0.25),
                    h_min)
            continue
        # rotation guard keeps the branch chain sound
        dot = ref_prop.real * s0.real + ref_prop.imag * s0.imag
        if dot < 0.9 * abs(ref_prop) * abs(s0) and h > 2.0 * h_min:
            h = max(0.5 * h, h_min)
            continue

        # cancel total accumulated drift by a transverse nudge
        total_drift = conserved(zeta_acc + dzeta1)
        corr = -total_drift / ref_prop
        if kind == "horizontal":
            corr *= 1j
        z_new = z_prop + corr
        if inside_exclusion(z_new):
            z_new = z_prop
        dzeta, dmag, ref_new = chord(z, z_new, s0)

        zeta_acc += dzeta
        hlen += abs(dzeta.real)
        vlen += abs(dzeta.imag)
        philen += dmag
        s_done += h
        z = z_new
        ref = ref_new
        pts.append(z)
        zetas.append(zeta_acc)

        if abs(z) > escape_radius:
            terminated = "escaped-radius"
            break
        if abs(drift_step) < 0.05 * tol_step:
            h = min(1.4 * h, max_step)

    path = NaturalPath(
        np.asarray(pts, dtype=complex), np.asarray(zetas, dtype=complex),
        float(hlen), float(vlen), float(philen),
    )
    return TracedTrajectory(kind, direction, seed, path, terminated, ref)
