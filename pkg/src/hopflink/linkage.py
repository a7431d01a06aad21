"""
Linking integrals of field lines and closed loops.

Two traced lines are split into equal panels in magnetic time.  Panel
pairs that are well separated use a 4x4 Gauss-Legendre rule on the Gauss
kernel.  Pairs closer than ``near_factor`` times their combined radii are
bisected on the dense output until the pieces separate; pieces still
touching at the deepest level are summed as straight chords with the
exact segment-segment linking formula, which stays bounded however close
the lines pass.

Orientation: with the kernel (1/4pi)(B1, B2, x1 - x2)/|x1 - x2|^3 the
counter-clockwise unit circle in the xy-plane and the circle
s -> (1 + cos s, 0, sin s) link with value -1 (see ``hopf_link``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field

import numpy as np
from numba import njit
from scipy import optimize

from .biot import kernel_scalar
from .errors import ConfigError, NumericalFailure, ProximityError
from .fieldcore import _eval_many
from .fieldcore import _eval_point
from .tracer import _dense_point, trace

_GL_X, _GL_W = np.polynomial.legendre.leggauss(4)


@dataclass
class LinkingEstimate:
    """A limit estimate with its error and the partial values it came from."""

    value: float
    error: float
    trace: list
    T: float | None = None
    n_samples: int | None = None
    converged: bool = True
    meta: dict = dc_field(default_factory=dict)

    def __post_init__(self):
        if not self.trace:
            raise ConfigError("convergence trace must be nonempty")
        self.error = abs(float(self.error))

    def to_dict(self):
        return {"value": self.value, "error": self.error, "trace": list(self.trace),
                "T": self.T, "n_samples": self.n_samples, "converged": self.converged,
                **({"meta": self.meta} if self.meta else {})}


@dataclass(frozen=True)
class QuadRule:
    """Tuning of the field-line double integral.

    ``near_factor`` decides which top-level panel pairs are subdivided;
    ``inner_factor`` is the looser separation accepted for sub-panels.
    """

    near_factor: float = 1.5
    inner_factor: float = 1.0
    max_depth: int = 6
    m_leaf: int = 4


DEFAULT_RULE = QuadRule()


def default_dcut(field):
    return 1e-3 * field.domain.length_scale


# ---------------------------------------------------------------------------
# compiled quadrature


@njit(cache=True, inline="always")
def _seg_link(l0x, l0y, l0z, l1x, l1y, l1z, k0x, k0y, k0z, k1x, k1y, k1z):
    # exact Gauss integral of two straight segments (signed solid angle / 4 pi)
    ax, ay, az = l0x - k0x, l0y - k0y, l0z - k0z
    bx, by, bz = l0x - k1x, l0y - k1y, l0z - k1z
    cx, cy, cz = l1x - k1x, l1y - k1y, l1z - k1z
    dx, dy, dz = l1x - k0x, l1y - k0y, l1z - k0z
    p = ax * (by * cz - bz * cy) + ay * (bz * cx - bx * cz) + az * (bx * cy - by * cx)
    an = math.sqrt(ax * ax + ay * ay + az * az)
    bn = math.sqrt(bx * bx + by * by + bz * bz)
    cn = math.sqrt(cx * cx + cy * cy + cz * cz)
    dn = math.sqrt(dx * dx + dy * dy + dz * dz)
    ab = ax * bx + ay * by + az * bz
    bc = bx * cx + by * cy + bz * cz
    ca = cx * ax + cy * ay + cz * az
    ad = ax * dx + ay * dy + az * dz
    dc = dx * cx + dy * cy + dz * cz
    d1 = an * bn * cn + ab * cn + bc * an + ca * bn
    d2 = an * dn * cn + ad * cn + dc * an + ca * dn
    return (math.atan2(p, d1) + math.atan2(p, d2)) / (2.0 * math.pi)


@njit(cache=True)
def _arc(ts, ys, ks, a, b, xa, xm, xb):
    _dense_point(ts, ys, ks, a, xa)
    _dense_point(ts, ys, ks, 0.5 * (a + b), xm)
    _dense_point(ts, ys, ks, b, xb)
    ra = math.sqrt((xa[0] - xm[0]) ** 2 + (xa[1] - xm[1]) ** 2 + (xa[2] - xm[2]) ** 2)
    rb = math.sqrt((xb[0] - xm[0]) ** 2 + (xb[1] - xm[1]) ** 2 + (xb[2] - xm[2]) ** 2)
    # small margin for the bulge of the arc beyond its chords
    return 1.1 * max(ra, rb)


@njit(cache=True)
def _near(kind, p, kv, ar, ai, grid, t1, y1, k1, t2, y2, k2,
          a1, b1, a2, b2, ox, oy, oz, period, inner_factor, max_depth, m_leaf, best):
    """Adaptive subdivision of one close panel pair.

    Sub-pairs that become well separated get the 4x4 Gauss rule; pairs
    still close at ``max_depth`` fall back to exact chord-chord linking.
    ``best`` collects the closest approach [distance, t1, t2].
    """
    stack = np.empty((4 * max_depth + 8, 5))
    stack[0, 0] = a1
    stack[0, 1] = b1
    stack[0, 2] = a2
    stack[0, 3] = b2
    stack[0, 4] = 0
    top = 1
    xa = np.empty(3)
    xm = np.empty(3)
    xb = np.empty(3)
    za = np.empty(3)
    zm = np.empty(3)
    zb = np.empty(3)
    q1 = np.empty((4, 3))
    q2 = np.empty((4, 3))
    f1 = np.empty((4, 3))
    f2 = np.empty((4, 3))
    tmp = np.empty(3)
    c1 = np.empty((m_leaf + 1, 3))
    c2 = np.empty((m_leaf + 1, 3))
    total = 0.0
    while top > 0:
        top -= 1
        s1, e1, s2, e2, depth = stack[top, 0], stack[top, 1], stack[top, 2], stack[top, 3], stack[top, 4]
        r1 = _arc(t1, y1, k1, s1, e1, xa, xm, xb)
        r2 = _arc(t2, y2, k2, s2, e2, za, zm, zb)
        dx = xm[0] - zm[0] - ox
        dy = xm[1] - zm[1] - oy
        dz = xm[2] - zm[2] - oz
        dmid = math.sqrt(dx * dx + dy * dy + dz * dz)
        if dmid - r1 - r2 < best[0]:
            best[0] = max(dmid - r1 - r2, 0.0)
            best[1] = 0.5 * (s1 + e1)
            best[2] = 0.5 * (s2 + e2)
        if depth > 0 and dmid >= inner_factor * (r1 + r2):
            if period > 0.0 and dmid - r1 - r2 >= 0.5 * period:
                continue
            h1 = 0.5 * (e1 - s1)
            h2 = 0.5 * (e2 - s2)
            for a in range(4):
                _dense_point(t1, y1, k1, 0.5 * (s1 + e1) + h1 * _GL_X[a], tmp)
                q1[a] = tmp
                _eval_point(kind, p, kv, ar, ai, grid, tmp[0], tmp[1], tmp[2], f1[a])
                _dense_point(t2, y2, k2, 0.5 * (s2 + e2) + h2 * _GL_X[a], tmp)
                q2[a, 0] = tmp[0] + ox
                q2[a, 1] = tmp[1] + oy
                q2[a, 2] = tmp[2] + oz
                _eval_point(kind, p, kv, ar, ai, grid, tmp[0], tmp[1], tmp[2], f2[a])
            acc = 0.0
            for a in range(4):
                for b in range(4):
                    acc += _GL_W[a] * _GL_W[b] * kernel_scalar(
                        f1[a, 0], f1[a, 1], f1[a, 2], f2[b, 0], f2[b, 1], f2[b, 2],
                        q1[a, 0] - q2[b, 0], q1[a, 1] - q2[b, 1], q1[a, 2] - q2[b, 2], period)
            total += h1 * h2 * acc
        elif depth >= max_depth:
            for a in range(m_leaf + 1):
                _dense_point(t1, y1, k1, s1 + (e1 - s1) * a / m_leaf, tmp)
                c1[a] = tmp
                _dense_point(t2, y2, k2, s2 + (e2 - s2) * a / m_leaf, tmp)
                c2[a, 0] = tmp[0] + ox
                c2[a, 1] = tmp[1] + oy
                c2[a, 2] = tmp[2] + oz
            for a in range(m_leaf + 1):
                for b in range(m_leaf + 1):
                    dd = math.sqrt((c1[a, 0] - c2[b, 0]) ** 2 + (c1[a, 1] - c2[b, 1]) ** 2
                                   + (c1[a, 2] - c2[b, 2]) ** 2)
                    if dd < best[0]:
                        best[0] = dd
                        best[1] = s1 + (e1 - s1) * a / m_leaf
                        best[2] = s2 + (e2 - s2) * b / m_leaf
            for a in range(m_leaf):
                for b in range(m_leaf):
                    if period > 0.0:
                        ex = 0.5 * (c1[a, 0] + c1[a + 1, 0] - c2[b, 0] - c2[b + 1, 0])
                        ey = 0.5 * (c1[a, 1] + c1[a + 1, 1] - c2[b, 1] - c2[b + 1, 1])
                        ez = 0.5 * (c1[a, 2] + c1[a + 1, 2] - c2[b, 2] - c2[b + 1, 2])
                        if ex * ex + ey * ey + ez * ez >= 0.25 * period * period:
                            continue
                    total += _seg_link(c1[a, 0], c1[a, 1], c1[a, 2],
                                       c1[a + 1, 0], c1[a + 1, 1], c1[a + 1, 2],
                                       c2[b, 0], c2[b, 1], c2[b, 2],
                                       c2[b + 1, 0], c2[b + 1, 1], c2[b + 1, 2])
        else:
            m1 = 0.5 * (s1 + e1)
            m2 = 0.5 * (s2 + e2)
            for u in range(2):
                for v in range(2):
                    stack[top, 0] = s1 if u == 0 else m1
                    stack[top, 1] = m1 if u == 0 else e1
                    stack[top, 2] = s2 if v == 0 else m2
                    stack[top, 3] = m2 if v == 0 else e2
                    stack[top, 4] = depth + 1
                    top += 1
    return total


@njit(cache=True)
def _panel_matrix(kind, p, kv, ar, ai, grid, t1, y1, k1, t2, y2, k2, edges,
                  P1, B1, M1, R1, P2, B2, M2, R2, period, near_factor, inner_factor,
                  max_depth, m_leaf):
    n = edges.shape[0] - 1
    out = np.zeros((n, n))
    best = np.array([np.inf, np.nan, np.nan])
    for i in range(n):
        h1 = 0.5 * (edges[i + 1] - edges[i])
        for j in range(n):
            h2 = 0.5 * (edges[j + 1] - edges[j])
            dx = M1[i, 0] - M2[j, 0]
            dy = M1[i, 1] - M2[j, 1]
            dz = M1[i, 2] - M2[j, 2]
            ox = 0.0
            oy = 0.0
            oz = 0.0
            if period > 0.0:
                ox = period * np.round(dx / period)
                oy = period * np.round(dy / period)
                oz = period * np.round(dz / period)
                dx -= ox
                dy -= oy
                dz -= oz
            dmid = math.sqrt(dx * dx + dy * dy + dz * dz)
            if dmid >= near_factor * (R1[i] + R2[j]):
                if period > 0.0 and dmid - R1[i] - R2[j] >= 0.5 * period:
                    continue
                acc = 0.0
                for a in range(4):
                    for b in range(4):
                        acc += _GL_W[a] * _GL_W[b] * kernel_scalar(
                            B1[i, a, 0], B1[i, a, 1], B1[i, a, 2],
                            B2[j, b, 0], B2[j, b, 1], B2[j, b, 2],
                            P1[i, a, 0] - P2[j, b, 0], P1[i, a, 1] - P2[j, b, 1],
                            P1[i, a, 2] - P2[j, b, 2], period)
                out[i, j] = h1 * h2 * acc
            else:
                out[i, j] = _near(kind, p, kv, ar, ai, grid, t1, y1, k1, t2, y2, k2,
                                  edges[i], edges[i + 1], edges[j], edges[j + 1],
                                  ox, oy, oz, period, inner_factor, max_depth, m_leaf, best)
    return out, best


@njit(cache=True)
def _loop_sum(X1, V1, X2, V2, period):
    acc = 0.0
    for i in range(X1.shape[0]):
        for j in range(X2.shape[0]):
            acc += kernel_scalar(V1[i, 0], V1[i, 1], V1[i, 2], V2[j, 0], V2[j, 1], V2[j, 2],
                                 X1[i, 0] - X2[j, 0], X1[i, 1] - X2[j, 1],
                                 X1[i, 2] - X2[j, 2], period)
    return acc


@njit(cache=True)
def _min_dist(X1, X2):
    best = np.inf
    bi = 0
    bj = 0
    for i in range(X1.shape[0]):
        for j in range(X2.shape[0]):
            d = ((X1[i, 0] - X2[j, 0]) ** 2 + (X1[i, 1] - X2[j, 1]) ** 2
                 + (X1[i, 2] - X2[j, 2]) ** 2)
            if d < best:
                best = d
                bi = i
                bj = j
    return math.sqrt(best), bi, bj


# ---------------------------------------------------------------------------
# line discretisation


def panel_edges(T_schedule, quad_n):
    """Panel boundaries in magnetic time; every schedule entry is a boundary."""
    if quad_n < 8:
        raise ConfigError("quad_n must be >= 8 nodes per unit magnetic time")
    width = 4.0 / quad_n
    edges = [0.0]
    for T in T_schedule:
        lo = edges[-1]
        span = T - lo
        if span < 0:
            raise ConfigError("T schedule must be increasing")
        if span == 0:
            continue
        n = max(1, int(math.ceil(span / width - 1e-9)))
        edges.extend((lo + span * np.arange(1, n + 1) / n).tolist())
        edges[-1] = float(T)
    return np.array(edges)


def _panels(field, line, edges):
    a, b = edges[:-1], edges[1:]
    half = 0.5 * (b - a)
    mid = 0.5 * (a + b)
    npan = len(a)
    tq = (mid[:, None] + half[:, None] * _GL_X[None, :]).ravel()
    P = line.at(tq)
    B = _eval_many(*field.payload, np.ascontiguousarray(P))
    ends = line.at(np.concatenate([a, mid, b])).reshape(3, npan, 3)
    R = 1.1 * np.maximum(np.linalg.norm(ends[0] - ends[1], axis=1),
                         np.linalg.norm(ends[2] - ends[1], axis=1))
    return (np.ascontiguousarray(P.reshape(npan, 4, 3)),
            np.ascontiguousarray(B.reshape(npan, 4, 3)),
            np.ascontiguousarray(ends[1]), R)


def link_matrix(field, line1, line2, edges, rule=DEFAULT_RULE):
    """Panel-pair contributions to the Gauss integral and the closest approach.

    Returns ``(M, dmin, t1, t2)`` with ``M[i, j]`` the integral over panel i
    of line 1 and panel j of line 2.
    """
    if line1.sign < 0 or line2.sign < 0:
        raise ConfigError("linking needs forward-traced lines")
    P1, B1, M1, R1 = _panels(field, line1, edges)
    P2, B2, M2, R2 = _panels(field, line2, edges)
    M, best = _panel_matrix(*field.payload, line1.t, line1.x, line1.stages,
                            line2.t, line2.x, line2.stages, np.ascontiguousarray(edges),
                            P1, B1, M1, R1, P2, B2, M2, R2,
                            float(field.domain.period), float(rule.near_factor),
                            float(rule.inner_factor), int(rule.max_depth), int(rule.m_leaf))
    return M, float(best[0]), float(best[1]), float(best[2])


def _check_start(field, x1, x2, dcut):
    d = np.asarray(x1, float) - np.asarray(x2, float)
    if field.domain.period > 0:
        d = d - field.domain.period * np.round(d / field.domain.period)
    r = float(np.linalg.norm(d))
    if r < dcut:
        raise ProximityError(f"start points closer than dcut ({r:.3g} < {dcut:.3g})", r, 0.0, 0.0)


def _prefix_link(field, x1, x2, T_schedule, quad_n, dcut, on_proximity, tol,
                 rule):
    if on_proximity not in ("raise", "ignore"):
        raise ConfigError("on_proximity must be 'raise' or 'ignore'")
    dcut = default_dcut(field) if dcut is None else dcut
    _check_start(field, x1, x2, dcut)
    T_schedule = [float(t) for t in T_schedule]
    Tmax = T_schedule[-1]
    if Tmax == 0:
        return [0.0 for _ in T_schedule]
    l1 = trace(field, x1, Tmax, tol)
    l2 = trace(field, x2, Tmax, tol)
    edges = panel_edges(T_schedule, quad_n)
    M, dmin, t1, t2 = link_matrix(field, l1, l2, edges, rule)
    if on_proximity == "raise" and dmin < dcut:
        raise ProximityError(
            f"field lines approach within {dmin:.3g} < dcut={dcut:.3g} at t1={t1:.4g}, t2={t2:.4g}",
            dmin, t1, t2)
    out = []
    for T in T_schedule:
        n = int(np.searchsorted(edges, T, side="left"))
        if abs(edges[n] - T) > 1e-9 * max(1.0, T) if n < len(edges) else True:
            raise NumericalFailure("schedule entry is not a panel boundary")
        out.append(float(M[:n, :n].sum()))
    return out


def segment_linking(field, x1, x2, T, quad_n=8, dcut=None, on_proximity="raise",
                    tol=1e-8, rule=DEFAULT_RULE):
    """Gauss linking integral of the two field-line segments of length T."""
    if T < 0:
        raise ConfigError("T must be >= 0")
    return _prefix_link(field, x1, x2, [T], quad_n, dcut, on_proximity, tol,
                        rule)[0]


def asymptotic_linking(field, x1, x2, T_schedule, quad_n=8, dcut=None,
                       on_proximity="raise", tol=1e-8, spread_bound=None,
                       extrapolate=False, rule=DEFAULT_RULE):
    """lk(T)/T^2 along an increasing schedule; value is the last entry.

    The error is the spread (max - min) of the last three normalised
    values.  With ``extrapolate`` the value is a linear fit in 1/T over the
    last three entries instead.
    """
    T_schedule = [float(t) for t in T_schedule]
    if len(T_schedule) < 3:
        raise ConfigError("T_schedule needs at least 3 entries")
    if any(b <= a for a, b in zip(T_schedule, T_schedule[1:])) or T_schedule[0] <= 0:
        raise ConfigError("T_schedule must be positive and strictly increasing")
    lks = _prefix_link(field, x1, x2, T_schedule, quad_n, dcut, on_proximity, tol,
                       rule)
    lam = [lk / T**2 for lk, T in zip(lks, T_schedule)]
    tail = lam[-3:]
    spread = max(tail) - min(tail)
    value = lam[-1]
    if extrapolate:
        inv = 1.0 / np.array(T_schedule[-3:])
        value = float(np.polyval(np.polyfit(inv, tail, 1), 0.0))
    converged = True if spread_bound is None else spread <= spread_bound
    return LinkingEstimate(value, spread, lam, T=T_schedule[-1], converged=converged,
                           meta={"lk": lks, "T_schedule": T_schedule})


# ---------------------------------------------------------------------------
# closed loops


@dataclass(frozen=True)
class Loop:
    """A closed curve s -> point(s), s in [0, 1), with derivative ``tangent``."""

    point: callable
    tangent: callable
    length_hint: float = 2 * np.pi

    @classmethod
    def circle(cls, center=(0, 0, 0), normal=(0, 0, 1), radius=1.0, turns=1, phase=0.0,
               axis=None):
        c = np.asarray(center, float)
        n = np.asarray(normal, float)
        n = n / np.linalg.norm(n)
        if axis is None:
            trial = np.array([1.0, 0, 0]) if abs(n[0]) < 0.9 else np.array([0, 1.0, 0])
            axis = trial - n * (trial @ n)
        e1 = np.asarray(axis, float) - n * (np.asarray(axis, float) @ n)
        e1 /= np.linalg.norm(e1)
        e2 = np.cross(n, e1)
        w = 2 * np.pi * turns

        def point(s):
            th = w * np.asarray(s)[:, None] + phase
            return c + radius * (np.cos(th) * e1 + np.sin(th) * e2)

        def tangent(s):
            th = w * np.asarray(s)[:, None] + phase
            return radius * w * (-np.sin(th) * e1 + np.cos(th) * e2)

        return cls(point, tangent, abs(w) * radius)

    @classmethod
    def ellipse(cls, center, e1, e2):
        """s -> center + cos(2 pi s) e1 + sin(2 pi s) e2."""
        c, a, b = (np.asarray(v, float) for v in (center, e1, e2))

        def point(s):
            th = 2 * np.pi * np.asarray(s)[:, None]
            return c + np.cos(th) * a + np.sin(th) * b

        def tangent(s):
            th = 2 * np.pi * np.asarray(s)[:, None]
            return 2 * np.pi * (-np.sin(th) * a + np.cos(th) * b)

        return cls(point, tangent, 2 * np.pi * max(np.linalg.norm(a), np.linalg.norm(b)))


def hopf_link():
    """Unit circle in the xy-plane and unit circle in the xz-plane through its centre."""
    return (Loop.circle((0, 0, 0), (0, 0, 1), 1.0, axis=(1, 0, 0)),
            Loop.circle((1, 0, 0), (0, -1, 0), 1.0, axis=(1, 0, 0)))


def _loop_closest(curve1, curve2, n=512):
    """Closest approach: grid probe, then local refinement in (s1, s2)."""
    probe = np.linspace(0.0, 1.0, n, endpoint=False)
    d0, i, j = _min_dist(np.ascontiguousarray(curve1.point(probe)),
                         np.ascontiguousarray(curve2.point(probe)))

    def f(s):
        d = curve1.point(s[:1])[0] - curve2.point(s[1:])[0]
        return float(d @ d)

    s0 = np.array([probe[i], probe[j]])
    res = optimize.minimize(f, s0, method="L-BFGS-B",
                            bounds=[(s0[0] - 2 / n, s0[0] + 2 / n), (s0[1] - 2 / n, s0[1] + 2 / n)])
    d1 = math.sqrt(max(res.fun, 0.0))
    if d1 < d0:
        return d1, float(res.x[0] % 1.0), float(res.x[1] % 1.0)
    return d0, float(probe[i]), float(probe[j])


def closed_curve_linking(curve1, curve2, quad_n=256, dcut=1e-3, max_nodes=8192):
    """Gauss double integral over two closed loops (periodic trapezoid rule).

    The node count is raised until the spacing is a small fraction of the
    closest approach, which gives exponential convergence for smooth loops.
    """
    dmin, s1, s2 = _loop_closest(curve1, curve2)
    if dmin < dcut:
        raise ProximityError(f"loops approach within {dmin:.3g} < dcut={dcut:.3g}",
                             dmin, s1, s2)

    def nodes(c):
        length = c.length_hint
        n = int(min(max_nodes, max(quad_n, math.ceil(8 * length / dmin))))
        s = np.arange(n) / n
        return (np.ascontiguousarray(c.point(s)), np.ascontiguousarray(c.tangent(s) / n))

    X1, V1 = nodes(curve1)
    X2, V2 = nodes(curve2)
    return float(_loop_sum(X1, V1, X2, V2, 0.0))


# ---------------------------------------------------------------------------
# distributions


@dataclass
class LinkingDistribution:
    """Sorted asymptotic-linking samples with an empirical CDF."""

    values: np.ndarray
    errors: np.ndarray
    pairs: np.ndarray
    n_failed: int
    T: float
    seed: int
    meta: dict = dc_field(default_factory=dict)

    def cdf(self, lam0):
        """Fraction of samples with value strictly below ``lam0``."""
        v = np.sort(self.values)
        return np.searchsorted(v, np.asarray(lam0, float), side="left") / max(len(v), 1)

    @property
    def sorted_values(self):
        return np.sort(self.values)

    def to_csv(self, path):
        import csv
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["pair_id", "x1", "y1", "z1", "x2", "y2", "z2", "lambda", "err"])
            for k, (p, v, e) in enumerate(zip(self.pairs, self.values, self.errors)):
                w.writerow([k, *(repr(float(c)) for c in p.ravel()), repr(float(v)), repr(float(e))])


def sample_pairs(field, n_pairs, seed, dcut=None):
    """Uniform start pairs in the domain, rejecting pairs closer than ``dcut``.

    Draws happen in a fixed order from one generator, so the pair list
    depends only on the seed.
    """
    dcut = default_dcut(field) if dcut is None else dcut
    rng = np.random.default_rng(seed)
    out = []
    period = field.domain.period
    while len(out) < n_pairs:
        need = n_pairs - len(out)
        X1 = field.domain.sample(rng, need)
        X2 = field.domain.sample(rng, need)
        d = X1 - X2
        if period > 0:
            d = d - period * np.round(d / period)
        ok = np.linalg.norm(d, axis=1) >= dcut
        out.extend(np.stack([X1[ok], X2[ok]], axis=1))
    return np.array(out[:n_pairs])


def pair_lambda(field, pair, T, quad_n, dcut, tol, rule=DEFAULT_RULE):
    """(lambda_T, |lambda_T - lambda_{T/2}|) for one start pair.

    Close approaches are handled by the chord rule rather than rejected.
    """
    lk_half, lk = _prefix_link(field, pair[0], pair[1], [0.5 * T, T], quad_n, dcut,
                               "ignore", tol, rule)
    lam = lk / T**2
    return lam, abs(lam - lk_half / (0.5 * T) ** 2)


def _pair_task(args):
    field, pairs, T, quad_n, dcut, tol = args
    vals = np.full(len(pairs), np.nan)
    errs = np.full(len(pairs), np.nan)
    ok = np.ones(len(pairs), dtype=bool)
    for k, pr in enumerate(pairs):
        try:
            vals[k], errs[k] = pair_lambda(field, pr, T, quad_n, dcut, tol)
        except NumericalFailure:
            ok[k] = False
    return vals, errs, ok


def pair_lambdas(field, pairs, T, quad_n=8, dcut=None, tol=1e-8, workers=1):
    """lambda_T, its half-time error and success flags, in pair order.

    The chunking depends on ``workers`` but each pair is computed
    independently and results are reassembled in pair order, so the output
    is identical for any worker count.
    """
    from ._parallel import ordered_map
    dcut = default_dcut(field) if dcut is None else dcut
    n = len(pairs)
    if n == 0:
        return np.zeros(0), np.zeros(0), np.zeros(0, bool)
    chunks = np.array_split(np.arange(n), max(1, min(n, 4 * (workers or 1))))
    tasks = [(field, pairs[c], T, quad_n, dcut, tol) for c in chunks if len(c)]
    res = ordered_map(_pair_task, tasks, workers)
    return (np.concatenate([r[0] for r in res]), np.concatenate([r[1] for r in res]),
            np.concatenate([r[2] for r in res]))


def linking_distribution(field, n_pairs, T, seed=0, quad_n=8, dcut=None, tol=1e-8, workers=1):
    """Empirical distribution of lambda_T over uniformly sampled start pairs."""
    if n_pairs < 1:
        raise ConfigError("n_pairs must be >= 1")
    if T <= 0:
        raise ConfigError("T must be positive")
    pairs = sample_pairs(field, n_pairs, seed, dcut)
    vals, errs, ok = pair_lambdas(field, pairs, T, quad_n, dcut, tol, workers)
    return LinkingDistribution(vals[ok], errs[ok], pairs[ok],
                               int((~ok).sum()), T, seed,
                               {"quad_n": quad_n, "dcut": default_dcut(field) if dcut is None else dcut})
