"""
Divergence-free vector fields on a periodic box or a ball.

Every field carries a flat numeric payload so that the same compiled
evaluator serves vectorised sampling, field-line tracing and the
quadrature kernels.  Fields are immutable after construction.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from numba import njit
from scipy.stats import qmc

from .errors import ConfigError, DomainError, UnsupportedRepresentation

# payload kind codes for the compiled evaluator
KIND_BELTRAMI = 0
KIND_ENSEMBLE = 1
KIND_GRID = 2
KIND_ROTATION = 3
KIND_UNIFORM = 4


# ---------------------------------------------------------------------------
# domains


@dataclass(frozen=True)
class PeriodicBox:
    """Cube [0, L)^3 with periodic identification."""

    L: float

    def __post_init__(self):
        if not (self.L > 0 and np.isfinite(self.L)):
            raise ConfigError(f"box side must be positive, got {self.L}")

    @property
    def volume(self):
        return self.L**3

    @property
    def length_scale(self):
        return self.L

    @property
    def period(self):
        return self.L

    def wrap(self, x):
        return np.mod(x, self.L)

    def sample(self, rng, n):
        return rng.random((n, 3)) * self.L

    def to_dict(self):
        return {"type": "box", "L": self.L}


@dataclass(frozen=True)
class Ball:
    """Ball of radius R centred at the origin (no periodicity)."""

    R: float

    def __post_init__(self):
        if not (self.R > 0 and np.isfinite(self.R)):
            raise ConfigError(f"ball radius must be positive, got {self.R}")

    @property
    def volume(self):
        return 4.0 / 3.0 * np.pi * self.R**3

    @property
    def length_scale(self):
        return 2.0 * self.R

    @property
    def period(self):
        # 0 switches off minimum-image handling in the kernels
        return 0.0

    def wrap(self, x):
        return np.asarray(x, dtype=float)

    def sample(self, rng, n):
        # rejection from the bounding cube, kept in draw order for determinism
        out = np.empty((n, 3))
        filled = 0
        while filled < n:
            cand = (rng.random((2 * (n - filled) + 8, 3)) * 2.0 - 1.0) * self.R
            cand = cand[np.einsum("ij,ij->i", cand, cand) <= self.R**2]
            take = min(len(cand), n - filled)
            out[filled:filled + take] = cand[:take]
            filled += take
        return out

    def to_dict(self):
        return {"type": "ball", "R": self.R}


def domain_from_dict(d):
    if d["type"] == "box":
        return PeriodicBox(float(d["L"]))
    if d["type"] == "ball":
        return Ball(float(d["R"]))
    raise ConfigError(f"unknown domain type {d['type']!r}")


# ---------------------------------------------------------------------------
# compiled evaluator


@njit(cache=True)
def _eval_point(kind, p, kv, ar, ai, grid, x, y, z, out):
    if kind == KIND_BELTRAMI:
        a, b, c, k = p[0], p[1], p[2], p[3]
        out[0] = a * np.sin(k * z) + c * np.cos(k * y)
        out[1] = b * np.sin(k * x) + a * np.cos(k * z)
        out[2] = c * np.sin(k * y) + b * np.cos(k * x)
    elif kind == KIND_ENSEMBLE:
        bx = 0.0
        by = 0.0
        bz = 0.0
        for m in range(kv.shape[0]):
            ph = kv[m, 0] * x + kv[m, 1] * y + kv[m, 2] * z
            c = np.cos(ph)
            s = np.sin(ph)
            bx += ar[m, 0] * c - ai[m, 0] * s
            by += ar[m, 1] * c - ai[m, 1] * s
            bz += ar[m, 2] * c - ai[m, 2] * s
        # each stored mode stands for itself plus its conjugate partner
        out[0] = 2.0 * bx
        out[1] = 2.0 * by
        out[2] = 2.0 * bz
    elif kind == KIND_GRID:
        L = p[0]
        nx = grid.shape[0]
        ny = grid.shape[1]
        nz = grid.shape[2]
        gx = (x % L) / L * nx
        gy = (y % L) / L * ny
        gz = (z % L) / L * nz
        i0 = int(np.floor(gx))
        j0 = int(np.floor(gy))
        k0 = int(np.floor(gz))
        fx = gx - i0
        fy = gy - j0
        fz = gz - k0
        i0 = i0 % nx
        j0 = j0 % ny
        k0 = k0 % nz
        i1 = (i0 + 1) % nx
        j1 = (j0 + 1) % ny
        k1 = (k0 + 1) % nz
        for c in range(3):
            v00 = grid[i0, j0, k0, c] * (1 - fx) + grid[i1, j0, k0, c] * fx
            v10 = grid[i0, j1, k0, c] * (1 - fx) + grid[i1, j1, k0, c] * fx
            v01 = grid[i0, j0, k1, c] * (1 - fx) + grid[i1, j0, k1, c] * fx
            v11 = grid[i0, j1, k1, c] * (1 - fx) + grid[i1, j1, k1, c] * fx
            out[c] = (v00 * (1 - fy) + v10 * fy) * (1 - fz) + (v01 * (1 - fy) + v11 * fy) * fz
    elif kind == KIND_ROTATION:
        w = p[0]
        out[0] = -w * y
        out[1] = w * x
        out[2] = 0.0
    else:
        out[0] = p[0]
        out[1] = p[1]
        out[2] = p[2]


@njit(cache=True)
def _eval_many(kind, p, kv, ar, ai, grid, X):
    n = X.shape[0]
    out = np.empty((n, 3))
    tmp = np.empty(3)
    for i in range(n):
        _eval_point(kind, p, kv, ar, ai, grid, X[i, 0], X[i, 1], X[i, 2], tmp)
        out[i, 0] = tmp[0]
        out[i, 1] = tmp[1]
        out[i, 2] = tmp[2]
    return out


_EMPTY2 = np.zeros((0, 3))
_EMPTY4 = np.zeros((1, 1, 1, 3))


# ---------------------------------------------------------------------------
# fields


class VectorField:
    """Base class.  Subclasses fill ``kind`` and ``params``."""

    kind: int = -1

    def __init__(self, domain):
        self.domain = domain
        self._params = np.zeros(4)
        self._kv = _EMPTY2
        self._ar = _EMPTY2
        self._ai = _EMPTY2
        self._grid = _EMPTY4

    @property
    def payload(self):
        """Arguments for the compiled evaluator, in order."""
        return (self.kind, self._params, self._kv, self._ar, self._ai, self._grid)

    def _check_points(self, X):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if X.shape[-1] != 3:
            raise ConfigError("points must have three coordinates")
        if not np.all(np.isfinite(X)):
            raise DomainError("non-finite coordinates")
        if isinstance(self.domain, Ball):
            r2 = np.einsum("ij,ij->i", X, X)
            if np.any(r2 > self.domain.R**2 * (1 + 1e-12)):
                raise DomainError("point outside the ball domain")
        return np.ascontiguousarray(X)

    def __call__(self, x):
        """Field value(s) at ``x`` (shape (3,) or (n, 3))."""
        x = np.asarray(x, dtype=float)
        X = self._check_points(x)
        B = _eval_many(*self.payload, X)
        return B[0] if x.ndim == 1 else B

    def _eval(self, X):
        # no domain check: stencils may graze a ball boundary
        return _eval_many(*self.payload, np.ascontiguousarray(X, dtype=float))

    def potential(self, x):
        raise UnsupportedRepresentation(
            f"{type(self).__name__} has no vector-potential reconstruction")

    def scaled(self, amplitude, length):
        """The field x -> amplitude * B(x / length) on the scaled domain."""
        raise UnsupportedRepresentation(f"{type(self).__name__} cannot be rescaled")

    def max_norm_estimate(self):
        """Upper bound (or close estimate) of max |B| used for thresholds."""
        raise NotImplementedError

    def to_dict(self):
        raise UnsupportedRepresentation(f"{type(self).__name__} is not serialisable")


class BeltramiField(VectorField):
    """ABC flow ``(A sin kz + C cos ky, B sin kx + A cos kz, C sin ky + B cos kx)``.

    An eigenfield of curl with eigenvalue ``k``.  The natural domain is the
    periodic box of side ``2*pi/k``.
    """

    kind = KIND_BELTRAMI

    def __init__(self, A=1.0, B=1.0, C=1.0, k=1.0, domain=None):
        if k <= 0:
            raise ConfigError("Beltrami eigenvalue k must be positive")
        super().__init__(domain if domain is not None else PeriodicBox(2 * np.pi / k))
        self.A, self.B, self.C, self.k = float(A), float(B), float(C), float(k)
        self._params = np.array([self.A, self.B, self.C, self.k])

    def potential(self, x):
        return self(x) / self.k

    def scaled(self, amplitude, length):
        return BeltramiField(amplitude * self.A, amplitude * self.B, amplitude * self.C,
                             self.k / length, PeriodicBox(self.domain.L * length))

    def max_norm_estimate(self):
        return float(np.sqrt(2.0) * (abs(self.A) + abs(self.B) + abs(self.C)))

    def to_dict(self):
        return {"type": "abc", "A": self.A, "B": self.B, "C": self.C, "k": self.k,
                "domain": self.domain.to_dict()}

    def __repr__(self):
        return f"BeltramiField(A={self.A}, B={self.B}, C={self.C}, k={self.k})"


@dataclass(frozen=True)
class FourierMode:
    """One transverse harmonic ``B(k) exp(i k.x)``; its conjugate partner is implicit."""

    k: np.ndarray
    amplitude: np.ndarray
    weight: float = 1.0

    @property
    def wavenumber(self):
        return float(np.linalg.norm(self.k))

    def helical(self):
        from .spectral import helical_decompose
        return helical_decompose(self)


class FourierEnsemble(VectorField):
    """Real field ``sum_m [B_m exp(i k_m.x) + c.c.]`` on a periodic box.

    Only one member of each conjugate pair is stored; ``full_modes`` lists
    both.  ``weights`` are shell multiplicities used by spectral binning and
    do not affect the field itself.
    """

    kind = KIND_ENSEMBLE

    def __init__(self, kvecs, amplitudes, domain, weights=None, check=True):
        if not isinstance(domain, PeriodicBox):
            raise ConfigError("Fourier ensembles live on a periodic box")
        super().__init__(domain)
        kv = np.array(kvecs, dtype=float).reshape(-1, 3)
        amp = np.array(amplitudes, dtype=complex).reshape(-1, 3)
        if kv.shape != amp.shape:
            raise ConfigError("wavevector and amplitude tables differ in length")
        if check and len(kv):
            kk = np.linalg.norm(kv, axis=1)
            if np.any(kk == 0):
                raise ConfigError("zero wavevector in ensemble")
            trans = np.abs(np.einsum("ij,ij->i", kv, amp))
            scale = np.linalg.norm(amp, axis=1) * kk
            if np.any(trans > 1e-10 * np.maximum(scale, 1e-300)):
                raise ConfigError("mode amplitudes are not transverse (k.B != 0)")
        self._kv = np.ascontiguousarray(kv)
        self._amp = amp
        self._ar = np.ascontiguousarray(amp.real)
        self._ai = np.ascontiguousarray(amp.imag)
        self.weights = (np.ones(len(kv)) if weights is None
                        else np.asarray(weights, dtype=float).copy())
        for arr in (self._kv, self._ar, self._ai, self.weights):
            arr.flags.writeable = False

    @property
    def kvecs(self):
        return self._kv

    @property
    def amplitudes(self):
        return self._amp

    def __len__(self):
        return len(self._kv)

    def modes(self):
        return [FourierMode(k, a, w) for k, a, w in zip(self._kv, self._amp, self.weights)]

    def full_modes(self):
        """Both members of every conjugate pair: (kvecs, amplitudes)."""
        return (np.concatenate([self._kv, -self._kv]),
                np.concatenate([self._amp, self._amp.conj()]))

    def eval_complex(self, x):
        """Complex sum over the full mode table (diagnostic for reality)."""
        X = np.atleast_2d(np.asarray(x, dtype=float))
        kv, amp = self.full_modes()
        ph = np.exp(1j * X @ kv.T)
        return ph @ amp

    def potential(self, x):
        x = np.asarray(x, dtype=float)
        X = self._check_points(x)
        k2 = np.einsum("ij,ij->i", self._kv, self._kv)
        apot = 1j * np.cross(self._kv, self._amp) / k2[:, None]
        A = _eval_many(KIND_ENSEMBLE, self._params, self._kv,
                       np.ascontiguousarray(apot.real), np.ascontiguousarray(apot.imag),
                       self._grid, X)
        return A[0] if x.ndim == 1 else A

    def scaled(self, amplitude, length):
        return FourierEnsemble(self._kv / length, self._amp * amplitude,
                               PeriodicBox(self.domain.L * length), self.weights)

    def max_norm_estimate(self):
        return float(2.0 * np.sum(np.linalg.norm(self._amp, axis=1))) if len(self) else 0.0

    def to_dict(self):
        return {"type": "ensemble", "domain": self.domain.to_dict(),
                "modes": [{"kx": k[0], "ky": k[1], "kz": k[2],
                           "re": list(a.real), "im": list(a.imag), "weight": w}
                          for k, a, w in zip(self._kv.tolist(), self._amp, self.weights.tolist())]}

    @classmethod
    def from_dict(cls, d):
        modes = d["modes"]
        kv = [[m["kx"], m["ky"], m["kz"]] for m in modes]
        amp = [np.array(m["re"]) + 1j * np.array(m["im"]) for m in modes]
        w = [m.get("weight", 1.0) for m in modes]
        return cls(kv, amp, domain_from_dict(d["domain"]), w)

    def __repr__(self):
        return f"FourierEnsemble(n_modes={len(self)}, L={self.domain.L})"


class GridField(VectorField):
    """Samples on a regular periodic grid, trilinearly interpolated.

    Trilinear interpolation does not preserve solenoidality; use
    :func:`divergence_check` to measure the residual.
    """

    kind = KIND_GRID

    def __init__(self, values, L, order=1):
        if order != 1:
            raise ConfigError("only trilinear interpolation (order=1) is implemented")
        values = np.ascontiguousarray(values, dtype=float)
        if values.ndim != 4 or values.shape[-1] != 3:
            raise ConfigError("grid values must have shape (nx, ny, nz, 3)")
        super().__init__(PeriodicBox(L))
        self.order = order
        self._grid = values
        self._grid.flags.writeable = False
        self._params = np.array([float(L), 0.0, 0.0, 0.0])

    @property
    def shape(self):
        return self._grid.shape[:3]

    def max_norm_estimate(self):
        return float(np.max(np.linalg.norm(self._grid, axis=-1)))

    @classmethod
    def from_csv(cls, csv_path, sidecar_path=None):
        """Read ``x,y,z,Bx,By,Bz`` rows plus the ``{nx,ny,nz,L}`` sidecar."""
        csv_path = Path(csv_path)
        sidecar_path = Path(sidecar_path) if sidecar_path else csv_path.with_suffix(".json")
        meta = json.loads(sidecar_path.read_text())
        nx, ny, nz, L = int(meta["nx"]), int(meta["ny"]), int(meta["nz"]), float(meta["L"])
        with open(csv_path, newline="") as fh:
            reader = csv.DictReader(fh)
            if reader.fieldnames is None or [f.strip() for f in reader.fieldnames] != \
                    ["x", "y", "z", "Bx", "By", "Bz"]:
                raise ConfigError("grid CSV header must be x,y,z,Bx,By,Bz")
            rows = np.array([[float(r[c]) for c in ("x", "y", "z", "Bx", "By", "Bz")]
                             for r in reader])
        if len(rows) != nx * ny * nz:
            raise ConfigError(f"expected {nx * ny * nz} grid rows, found {len(rows)}")
        # row-major: x slowest, z fastest
        values = rows[:, 3:].reshape(nx, ny, nz, 3)
        return cls(values, L)

    def to_csv(self, csv_path, sidecar_path=None):
        csv_path = Path(csv_path)
        sidecar_path = Path(sidecar_path) if sidecar_path else csv_path.with_suffix(".json")
        nx, ny, nz = self.shape
        L = self.domain.L
        idx = np.stack(np.meshgrid(np.arange(nx), np.arange(ny), np.arange(nz),
                                   indexing="ij"), axis=-1).reshape(-1, 3)
        xyz = idx * (L / np.array([nx, ny, nz]))
        vals = self._grid.reshape(-1, 3)
        with open(csv_path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["x", "y", "z", "Bx", "By", "Bz"])
            for p, b in zip(xyz, vals):
                w.writerow([repr(float(v)) for v in (*p, *b)])
        sidecar_path.write_text(json.dumps({"nx": nx, "ny": ny, "nz": nz, "L": L}))


class RotationField(VectorField):
    """Rigid rotation ``omega * (-y, x, 0)`` on a ball; every orbit has period 2 pi / omega."""

    kind = KIND_ROTATION

    def __init__(self, R=1.0, omega=1.0):
        super().__init__(Ball(R))
        self.omega = float(omega)
        self._params = np.array([self.omega, 0.0, 0.0, 0.0])

    def scaled(self, amplitude, length):
        return RotationField(self.domain.R * length, self.omega * amplitude / length)

    def max_norm_estimate(self):
        return abs(self.omega) * self.domain.R

    def to_dict(self):
        return {"type": "rotation", "R": self.domain.R, "omega": self.omega}


class UniformField(VectorField):
    """Constant field; trivially solenoidal and periodic."""

    kind = KIND_UNIFORM

    def __init__(self, b, domain):
        super().__init__(domain)
        self.b = np.asarray(b, dtype=float).reshape(3)
        self._params = np.array([*self.b, 0.0])

    def scaled(self, amplitude, length):
        dom = (PeriodicBox(self.domain.L * length) if isinstance(self.domain, PeriodicBox)
               else Ball(self.domain.R * length))
        return UniformField(self.b * amplitude, dom)

    def max_norm_estimate(self):
        return float(np.linalg.norm(self.b))

    def to_dict(self):
        return {"type": "uniform", "b": self.b.tolist(), "domain": self.domain.to_dict()}


def field_from_dict(d):
    t = d["type"]
    if t == "abc":
        dom = domain_from_dict(d["domain"]) if "domain" in d else None
        return BeltramiField(d.get("A", 1.0), d.get("B", 1.0), d.get("C", 1.0),
                             d.get("k", 1.0), dom)
    if t == "ensemble":
        return FourierEnsemble.from_dict(d)
    if t == "rotation":
        return RotationField(d.get("R", 1.0), d.get("omega", 1.0))
    if t == "uniform":
        return UniformField(d["b"], domain_from_dict(d["domain"]))
    raise ConfigError(f"unknown field type {t!r}")


# ---------------------------------------------------------------------------
# operations


def eval_field(field, x):
    return field(x)


def eval_vector_potential(field, x):
    return field.potential(x)


def zero_ensemble(L=2 * np.pi):
    return FourierEnsemble(np.zeros((0, 3)), np.zeros((0, 3)), PeriodicBox(L))


def fd_step(field):
    return 1e-4 * field.domain.length_scale


def _jacobian_fd(field, X, h):
    """Central-difference Jacobian dB_i/dx_j at points X, shape (n, 3, 3)."""
    X = np.atleast_2d(X)
    J = np.empty((len(X), 3, 3))
    for j in range(3):
        e = np.zeros(3)
        e[j] = h
        J[:, :, j] = (field(X + e) - field(X - e)) / (2 * h)
    return J


def curl_fd(F, X, h):
    """Central-difference curl of a callable ``F`` (n,3)->(n,3)."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    J = np.empty((len(X), 3, 3))
    for j in range(3):
        e = np.zeros(3)
        e[j] = h
        J[:, :, j] = (F(X + e) - F(X - e)) / (2 * h)
    return np.stack([J[:, 2, 1] - J[:, 1, 2],
                     J[:, 0, 2] - J[:, 2, 0],
                     J[:, 1, 0] - J[:, 0, 1]], axis=1)


def _interior_points(field, n, seed, margin):
    sob = qmc.Halton(d=3, scramble=True, seed=seed)
    u = sob.random(n)
    dom = field.domain
    if isinstance(dom, PeriodicBox):
        return u * dom.L
    # map the unit cube onto the ball of radius R - margin (radius ~ cube root)
    r = (dom.R - margin) * np.cbrt(u[:, 0])
    ct = 2 * u[:, 1] - 1
    st = np.sqrt(1 - ct**2)
    ph = 2 * np.pi * u[:, 2]
    return np.stack([r * st * np.cos(ph), r * st * np.sin(ph), r * ct], axis=1)


def divergence_check(field, n_samples=100, seed=0):
    """Max |div B| from central differences at quasi-random points."""
    if n_samples < 1:
        raise ConfigError("n_samples must be >= 1")
    h = fd_step(field)
    X = _interior_points(field, n_samples, seed, 2 * h)
    J = _jacobian_fd(field, X, h)
    return float(np.max(np.abs(np.trace(J, axis1=1, axis2=2))))


def tangency_check(field, n_samples=100, seed=0):
    """Max |B.n| / |B| on the boundary of a ball domain (0 for periodic boxes)."""
    dom = field.domain
    if not isinstance(dom, Ball):
        return 0.0
    u = qmc.Halton(d=2, scramble=True, seed=seed).random(n_samples)
    ct = 2 * u[:, 0] - 1
    st = np.sqrt(1 - ct**2)
    ph = 2 * np.pi * u[:, 1]
    n = np.stack([st * np.cos(ph), st * np.sin(ph), ct], axis=1)
    B = field(n * dom.R)
    norm = np.linalg.norm(B, axis=1)
    ok = norm > 0
    return float(np.max(np.abs(np.einsum("ij,ij->i", B[ok], n[ok])) / norm[ok])) if ok.any() else 0.0
