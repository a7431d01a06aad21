"""
Field-line tracing in magnetic time, dx/dt = B(x).

The integrator is the Dormand-Prince 5(4) pair with its quartic dense
output.  Trajectories on a periodic box are kept in the covering space;
the field itself is periodic so no wrapping is needed for evaluation.
Tolerances are relative: the absolute floor is ``rtol * length_scale``,
which keeps step selection invariant under B -> lB, x -> mx with l = m.
"""

import csv
from dataclasses import dataclass

import numpy as np
from numba import njit

from .errors import ConfigError, DomainExitError, StagnationError
from .fieldcore import Ball, _eval_point

# Dormand-Prince 5(4) tableau
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0])
_A = np.array([
    [0.0, 0.0, 0.0, 0.0, 0.0],
    [1 / 5, 0.0, 0.0, 0.0, 0.0],
    [3 / 40, 9 / 40, 0.0, 0.0, 0.0],
    [44 / 45, -56 / 15, 32 / 9, 0.0, 0.0],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729, 0.0],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
])
_B = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84])
_E = np.array([-71 / 57600, 0.0, 71 / 16695, -71 / 1920, 17253 / 339200, -22 / 525, 1 / 40])
# dense-output polynomial coefficients (powers theta^1..theta^4)
_P = np.array([
    [1.0, -2.8535800653862835, 3.0717434641059005, -1.1270175653862835],
    [0.0, 0.0, 0.0, 0.0],
    [0.0, 4.023133379230305, -6.249321565289, 2.675424484351598],
    [0.0, -3.7324019615885042, 10.068970589843675, -5.685526961588504],
    [0.0, 2.5548038301849423, -6.399112377351017, 3.5219323679207912],
    [0.0, -1.3744241142186024, 3.272657752246729, -1.7672812570757455],
    [0.0, 1.3824689317781436, -3.764937863556287, 2.382468931778144],
])

STATUS_OK = 0
STATUS_STALL = 1
STATUS_EXIT = 2
STATUS_MAXSTEPS = 3


@njit(cache=True)
def _rhs(kind, p, kv, ar, ai, grid, sign, y, out):
    _eval_point(kind, p, kv, ar, ai, grid, y[0], y[1], y[2], out)
    out[0] *= sign
    out[1] *= sign
    out[2] *= sign


@njit(cache=True)
def _dopri(kind, p, kv, ar, ai, grid, x0, T, sign, rtol, atol, h0, stall, ball_R, max_steps):
    cap = 256
    ts = np.empty(cap + 1)
    ys = np.empty((cap + 1, 3))
    ks = np.empty((cap, 7, 3))
    ts[0] = 0.0
    y = x0.copy()
    ys[0] = y
    K = np.empty((7, 3))
    f = np.empty(3)
    _rhs(kind, p, kv, ar, ai, grid, sign, y, f)
    K[0] = f
    if np.sqrt(f[0] ** 2 + f[1] ** 2 + f[2] ** 2) < stall:
        return ts[:1], ys[:1], ks[:0], STATUS_STALL
    t = 0.0
    h = min(h0, T)
    n = 0
    ytmp = np.empty(3)
    ynew = np.empty(3)
    while t < T:
        if n >= max_steps:
            return ts[:n + 1], ys[:n + 1], ks[:n], STATUS_MAXSTEPS
        if t + h > T:
            h = T - t
        for s in range(1, 6):
            for c in range(3):
                acc = y[c]
                for j in range(s):
                    acc += h * _A[s, j] * K[j, c]
                ytmp[c] = acc
            _rhs(kind, p, kv, ar, ai, grid, sign, ytmp, f)
            K[s] = f
        for c in range(3):
            acc = y[c]
            for j in range(6):
                acc += h * _B[j] * K[j, c]
            ynew[c] = acc
        _rhs(kind, p, kv, ar, ai, grid, sign, ynew, f)
        K[6] = f
        err = 0.0
        for c in range(3):
            e = 0.0
            for j in range(7):
                e += _E[j] * K[j, c]
            sc = atol + rtol * max(abs(y[c]), abs(ynew[c]))
            err += (h * e / sc) ** 2
        err = np.sqrt(err / 3.0)
        if err <= 1.0:
            t_new = t + h if t + h < T else T
            if n >= cap:
                ncap = 2 * cap
                ts2 = np.empty(ncap + 1)
                ys2 = np.empty((ncap + 1, 3))
                ks2 = np.empty((ncap, 7, 3))
                ts2[:cap + 1] = ts
                ys2[:cap + 1] = ys
                ks2[:cap] = ks
                ts, ys, ks, cap = ts2, ys2, ks2, ncap
            ks[n] = K
            n += 1
            ts[n] = t_new
            ys[n] = ynew
            t = t_new
            y[:] = ynew
            K[0] = K[6]
            fn = np.sqrt(K[6, 0] ** 2 + K[6, 1] ** 2 + K[6, 2] ** 2)
            if fn < stall:
                return ts[:n + 1], ys[:n + 1], ks[:n], STATUS_STALL
            if ball_R > 0.0 and y[0] ** 2 + y[1] ** 2 + y[2] ** 2 > (ball_R * (1 + 1e-9)) ** 2:
                return ts[:n + 1], ys[:n + 1], ks[:n], STATUS_EXIT
            fac = 10.0 if err == 0.0 else min(10.0, 0.9 * err ** -0.2)
        else:
            fac = max(0.2, 0.9 * err ** -0.2)
        h *= fac
    return ts[:n + 1], ys[:n + 1], ks[:n], STATUS_OK


@njit(cache=True)
def _dense_eval(ts, ys, ks, tq):
    out = np.empty((tq.shape[0], 3))
    nstep = ks.shape[0]
    i = 0
    for q in range(tq.shape[0]):
        t = tq[q]
        if nstep == 0:
            out[q] = ys[0]
            continue
        # queries are usually sorted, so start from the previous interval
        if t < ts[i]:
            i = 0
        while i < nstep - 1 and t > ts[i + 1]:
            i += 1
        h = ts[i + 1] - ts[i]
        th = (t - ts[i]) / h if h > 0 else 0.0
        for c in range(3):
            acc = 0.0
            for k in range(7):
                w = th * (_P[k, 0] + th * (_P[k, 1] + th * (_P[k, 2] + th * _P[k, 3])))
                acc += ks[i, k, c] * w
            out[q, c] = ys[i, c] + h * acc
    return out


@njit(cache=True)
def _dense_point(ts, ys, ks, t, out):
    nstep = ks.shape[0]
    if nstep == 0:
        out[:] = ys[0]
        return
    i = np.searchsorted(ts, t) - 1
    if i < 0:
        i = 0
    if i > nstep - 1:
        i = nstep - 1
    h = ts[i + 1] - ts[i]
    th = (t - ts[i]) / h if h > 0 else 0.0
    for c in range(3):
        acc = 0.0
        for k in range(7):
            w = th * (_P[k, 0] + th * (_P[k, 1] + th * (_P[k, 2] + th * _P[k, 3])))
            acc += ks[i, k, c] * w
        out[c] = ys[i, c] + h * acc


@dataclass(frozen=True, eq=False)
class FieldLine:
    """A traced trajectory g^t(x0), t in [0, T] (or [T, 0] for backward lines).

    ``t``, ``x`` and ``B`` hold the accepted integrator nodes; :meth:`at`
    resamples through the dense output.
    """

    start: np.ndarray
    t: np.ndarray
    x: np.ndarray
    B: np.ndarray
    stages: np.ndarray
    sign: float
    rtol: float
    n_steps: int

    @property
    def T(self):
        return float(self.t[-1]) * self.sign

    @property
    def samples(self):
        return [(float(self.sign * t), x, b) for t, x, b in zip(self.t, self.x, self.B)]

    def at(self, times):
        """Positions at magnetic times (same sign as ``T``)."""
        tq = np.atleast_1d(np.asarray(times, dtype=float)) * self.sign
        if np.any(tq < -1e-12 * max(1.0, self.t[-1])) or np.any(tq > self.t[-1] * (1 + 1e-12) + 1e-300):
            raise ConfigError("resampling time outside the traced interval")
        tq = np.clip(tq, 0.0, self.t[-1])
        out = _dense_eval(self.t, self.x, self.stages, np.ascontiguousarray(tq))
        return out[0] if np.ndim(times) == 0 else out

    def to_csv(self, path, field=None, times=None):
        """Write ``t,x,y,z,Bx,By,Bz`` rows (node times unless ``times`` given)."""
        if times is None:
            tt = self.sign * self.t
            X = self.x
            B = self.B if field is None else field(X)
        else:
            tt = np.asarray(times, dtype=float)
            X = self.at(tt)
            if field is None:
                raise ConfigError("field required to write resampled B values")
            B = field(X)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "x", "y", "z", "Bx", "By", "Bz"])
            for ti, xi, bi in zip(tt, X, B):
                w.writerow([repr(float(v)) for v in (ti, *xi, *bi)])


def stall_threshold(field):
    return 1e-10 * field.max_norm_estimate()


def trace(field, x0, T, tol=1e-8, max_steps=10_000_000):
    """Integrate the phase flow of ``field`` from ``x0`` for magnetic time ``T``.

    Negative ``T`` integrates backwards.  Raises :class:`StagnationError` if
    |B| falls below ``1e-10 * max|B|`` and :class:`DomainExitError` if the
    line leaves a ball domain.
    """
    x0 = np.array(x0, dtype=float).reshape(3)
    field._check_points(x0)
    if not np.isfinite(T):
        raise ConfigError("T must be finite")
    if tol <= 0:
        raise ConfigError("tol must be positive")
    sign = -1.0 if T < 0 else 1.0
    Tabs = abs(float(T))
    L = field.domain.length_scale
    ball_R = field.domain.R if isinstance(field.domain, Ball) else 0.0
    bmax = field.max_norm_estimate()
    if bmax <= 0:
        raise StagnationError("field vanishes identically")
    h0 = 0.01 * L / bmax
    if Tabs == 0.0:
        B0 = field(x0)
        if np.linalg.norm(B0) < stall_threshold(field):
            raise StagnationError("field below stall threshold at the start point")
        return FieldLine(x0, np.zeros(1), x0[None, :].copy(), B0[None, :],
                         np.zeros((0, 7, 3)), sign, tol, 0)
    ts, ys, ks, status = _dopri(*field.payload, x0, Tabs, sign, tol, tol * L * 1e-3, h0,
                                stall_threshold(field), ball_R, max_steps)
    if status == STATUS_STALL:
        raise StagnationError(f"|B| below stall threshold at t={sign * ts[-1]:.6g}")
    if status == STATUS_EXIT:
        raise DomainExitError(f"trajectory left the ball at t={sign * ts[-1]:.6g}")
    if status == STATUS_MAXSTEPS:
        raise StagnationError("step budget exhausted before reaching T")
    B = field(ys) if ball_R == 0.0 else _eval_unchecked(field, ys)
    return FieldLine(x0, ts, ys, B, ks, sign, tol, len(ks))


def _eval_unchecked(field, X):
    from .fieldcore import _eval_many
    return _eval_many(*field.payload, np.ascontiguousarray(X))


def reverse_check(field, x0, T, tol=1e-8):
    """Distance between x0 and g^{-T}(g^{T}(x0))."""
    if T == 0:
        return 0.0
    fwd = trace(field, x0, T, tol)
    back = trace(field, fwd.x[-1], -T, tol)
    return float(np.linalg.norm(back.x[-1] - np.asarray(x0, dtype=float)))
