"""
Random Fourier fields with power-law spectra and their shell spectra.

Wavevectors are points of the 2 pi / L lattice, grouped into shells by the
rounded length of the integer vector.  Each selected wavevector gets a
transverse amplitude built from the circular-polarisation eigenvectors of
curl,

    h_s = (e1 + i s e2) / sqrt(2),    i k^ x h_s = s h_s,

so s = +1 (right) carries positive helicity.  Amplitude magnitudes are
|k|^-alpha times a lognormal factor of unit mean.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field as dc_field

import numpy as np
from scipy import stats

from .errors import ConfigError, UnsupportedRepresentation
from .fieldcore import FourierEnsemble, FourierMode, PeriodicBox

POLARIZATIONS = {
    "random": "random", "randomphase": "random",
    "balanced": "balanced",
    "right": "right", "rightonly": "right",
    "left": "left", "leftonly": "left",
}


def _norm_pol(p):
    key = str(p).replace("_", "").replace("-", "").lower()
    if key not in POLARIZATIONS:
        raise ConfigError(f"unknown polarization {p!r}")
    return POLARIZATIONS[key]


@dataclass(frozen=True)
class SpectrumConfig:
    """Parameters of a power-law ensemble on the box [0, L)^3."""

    alpha: float
    k_min: float
    k_max: float
    modes_per_shell: int = 32
    polarization: str = "random"
    seed: int = 0
    L: float = 2 * np.pi
    sigma: float = 0.25

    def __post_init__(self):
        object.__setattr__(self, "polarization", _norm_pol(self.polarization))
        if not (0 < self.k_min < self.k_max):
            raise ConfigError("need 0 < k_min < k_max")
        if self.modes_per_shell < 1:
            raise ConfigError("modes_per_shell must be >= 1")
        if not self.L > 0:
            raise ConfigError("box side must be positive")
        if self.sigma < 0:
            raise ConfigError("sigma must be >= 0")

    @property
    def k0(self):
        return 2 * np.pi / self.L

    def shells(self):
        """Integer shell indices s with s * 2pi/L inside [k_min, k_max]."""
        lo = int(np.ceil(self.k_min / self.k0 - 1e-9))
        hi = int(np.floor(self.k_max / self.k0 + 1e-9))
        return np.arange(max(lo, 1), hi + 1)

    def to_dict(self):
        return {"alpha": self.alpha, "k_min": self.k_min, "k_max": self.k_max,
                "modes_per_shell": self.modes_per_shell, "polarization": self.polarization,
                "seed": self.seed, "L": self.L, "sigma": self.sigma}


# ---------------------------------------------------------------------------
# helical basis


def helical_basis(k):
    """Orthonormal (e1, e2) with e1 x e2 = k^, and h_+, h_-."""
    k = np.asarray(k, float)
    kn = np.linalg.norm(k)
    if kn == 0:
        raise ConfigError("zero wavevector has no helical basis")
    kh = k / kn
    trial = np.eye(3)[int(np.argmin(np.abs(kh)))]
    e1 = trial - kh * (trial @ kh)
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(kh, e1)
    hp = (e1 + 1j * e2) / np.sqrt(2)
    hm = (e1 - 1j * e2) / np.sqrt(2)
    return e1, e2, hp, hm


def helical_coefficients(k, amplitude):
    """(c_-, c_+) with amplitude = c_- h_- + c_+ h_+ (for transverse input)."""
    _, _, hp, hm = helical_basis(k)
    a = np.asarray(amplitude, complex)
    return complex(np.vdot(hm, a)), complex(np.vdot(hp, a))


def helical_decompose(mode):
    """Left (negative) and right (positive helicity) parts of a mode's amplitude.

    Both are returned as complex 3-vectors; they sum to the (transverse)
    amplitude.
    """
    k = np.asarray(mode.k, float)
    _, _, hp, hm = helical_basis(k)
    cm, cp = helical_coefficients(k, mode.amplitude)
    return cm * hm, cp * hp


# ---------------------------------------------------------------------------
# generation


def lattice_shell(s):
    """Half-space integer vectors n with round(|n|) == s."""
    r = int(np.ceil(s + 0.5))
    g = np.arange(-r, r + 1)
    n = np.stack(np.meshgrid(g, g, g, indexing="ij"), axis=-1).reshape(-1, 3)
    half = (n[:, 2] > 0) | ((n[:, 2] == 0) & (n[:, 1] > 0)) | \
        ((n[:, 2] == 0) & (n[:, 1] == 0) & (n[:, 0] > 0))
    n = n[half]
    return n[np.rint(np.linalg.norm(n, axis=1)) == s]


def _helical_amplitude(k, b, pol, rng):
    _, _, hp, hm = helical_basis(k)
    if pol == "right":
        return b / np.sqrt(2) * np.exp(2j * np.pi * rng.random()) * hp
    if pol == "left":
        return b / np.sqrt(2) * np.exp(2j * np.pi * rng.random()) * hm
    if pol == "balanced":
        ph = np.exp(2j * np.pi * rng.random(2))
        return 0.5 * b * (ph[0] * hp + ph[1] * hm)
    c = rng.standard_normal(2) + 1j * rng.standard_normal(2)
    c *= b / np.sqrt(2) / np.linalg.norm(c)
    return c[0] * hp + c[1] * hm


def generate_ensemble(config):
    """Draw a Fourier ensemble following ``config`` (deterministic per seed).

    Per shell, ``min(modes_per_shell, shell size)`` lattice vectors are
    drawn without replacement; each carries the weight shell size / drawn
    count for shell spectra.
    """
    shells = config.shells()
    if len(shells) == 0:
        raise ConfigError("no lattice shell inside [k_min, k_max]")
    rng = np.random.default_rng(config.seed)
    kv, amp, w = [], [], []
    for s in shells:
        cand = lattice_shell(int(s))
        if len(cand) == 0:
            continue
        m = min(config.modes_per_shell, len(cand))
        idx = np.sort(rng.choice(len(cand), m, replace=False))
        for n in cand[idx]:
            k = config.k0 * n.astype(float)
            kn = np.linalg.norm(k)
            xi = np.exp(config.sigma * rng.standard_normal() - 0.5 * config.sigma**2)
            b = kn ** (-config.alpha) * xi
            kv.append(k)
            amp.append(_helical_amplitude(k, b, config.polarization, rng))
            w.append(len(cand) / m)
    return FourierEnsemble(np.array(kv), np.array(amp), PeriodicBox(config.L), np.array(w))


def single_mode(k, b, polarization="right", L=2 * np.pi, phase=0.0):
    """One helical mode with |B(x)| amplitude parameter ``b`` (energy b^2 V)."""
    k = np.asarray(k, float)
    _, _, hp, hm = helical_basis(k)
    pol = _norm_pol(polarization)
    e = np.exp(1j * phase)
    if pol == "right":
        a = b / np.sqrt(2) * e * hp
    elif pol == "left":
        a = b / np.sqrt(2) * e * hm
    elif pol == "balanced":
        a = 0.5 * b * e * (hp + hm)
    else:
        raise ConfigError("single_mode needs a deterministic polarization")
    return FourierEnsemble(k[None], a[None], PeriodicBox(L))


# ---------------------------------------------------------------------------
# shell spectra


QUANTITIES = ("energy", "helicity", "quad_main")


@dataclass
class ShellSpectrum:
    """Per-shell totals of one quantity, ordered by k."""

    k: np.ndarray
    values: np.ndarray
    quantity: str
    counts: np.ndarray = dc_field(default_factory=lambda: np.zeros(0, int))

    def __post_init__(self):
        self.k = np.asarray(self.k, float)
        self.values = np.asarray(self.values, float)
        if len(self.k) > 1 and np.any(np.diff(self.k) <= 0):
            raise ConfigError("shell wavenumbers must increase strictly")

    def __len__(self):
        return len(self.k)

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["k", "value"])
            for k, v in zip(self.k, self.values):
                w.writerow([repr(float(k)), repr(float(v))])

    @classmethod
    def from_csv(cls, path, quantity="value"):
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        return cls(data[:, 0], data[:, 1], quantity)


def mode_quantities(field):
    """Per-mode energy, helicity and diagonal quadratic term (unweighted).

    The quadratic term is the free-space integral of G^2 for a single mode,
    V |P x Q|^2 k / 32 with P = 2 Re B(k), Q = -2 Im B(k).
    """
    if not isinstance(field, FourierEnsemble):
        raise UnsupportedRepresentation("shell spectra need a Fourier ensemble")
    V = field.domain.volume
    kv, amp = field.kvecs, field.amplitudes
    kn = np.linalg.norm(kv, axis=1)
    en = 2 * V * np.real(np.einsum("ij,ij->i", amp, amp.conj()))
    apot = 1j * np.cross(kv, amp) / (kn**2)[:, None]
    hel = 2 * V * np.real(np.einsum("ij,ij->i", apot, amp.conj()))
    P = 2 * amp.real
    Q = -2 * amp.imag
    pq = np.cross(P, Q)
    quad = V * np.einsum("ij,ij->i", pq, pq) * kn / 32.0
    return kn, en, hel, quad


def shell_spectrum(field, quantity="energy"):
    """Shell totals of ``quantity`` in {energy, helicity, quad_main}.

    Mode values are multiplied by the ensemble weights so that a sampled
    shell stands for the full shell.  ``quad_main`` pairs each wavevector
    only with itself and carries the factor (k L / 2 pi)^3 that maps the
    product of two wavevector shells onto the k-line.
    """
    if quantity not in QUANTITIES:
        raise ConfigError(f"quantity must be one of {QUANTITIES}")
    kn, en, hel, quad = mode_quantities(field)
    L = field.domain.L
    k0 = 2 * np.pi / L
    if quantity == "energy":
        vals = en
    elif quantity == "helicity":
        vals = hel
    else:
        vals = quad * (kn / k0) ** 3
    vals = vals * field.weights
    shell = np.rint(kn / k0).astype(int)
    ids = np.unique(shell)
    out = np.array([vals[shell == s].sum() for s in ids])
    counts = np.array([(shell == s).sum() for s in ids])
    return ShellSpectrum(ids * k0, out, quantity, counts)


def quad_cross_diagnostic(field, n_samples=20000, seed=0):
    """Cross-wavevector share of the delta2 integral (diagnostic only).

    Monte-Carlo total of the squared kernel minus the sum of the
    single-mode diagonal terms of the ensemble as drawn.
    """
    from .helicity import delta2_bound
    total = delta2_bound(field, n_samples, seed)
    diag = float(mode_quantities(field)[3].sum())
    return {"total": total.value, "total_err": total.error, "diagonal": diag,
            "cross": total.value - diag}


@dataclass
class SlopeFit:
    """Least-squares slope in log-log coordinates; unpacks as (slope, stderr)."""

    slope: float
    stderr: float
    intercept: float
    n_used: int
    n_excluded: int

    def __iter__(self):
        return iter((self.slope, self.stderr))


def fit_slope(spectrum, k_range=None):
    """Ordinary least squares of log(value) against log(k).

    Shells with nonpositive values are excluded and counted; fewer than
    three usable shells is an error.
    """
    k = np.asarray(spectrum.k, float)
    v = np.asarray(spectrum.values, float)
    keep = np.ones(len(k), bool)
    if k_range is not None:
        keep &= (k >= k_range[0]) & (k <= k_range[1])
    pos = keep & (v > 0) & (k > 0)
    excluded = int(keep.sum() - pos.sum())
    if pos.sum() < 3:
        raise ConfigError(f"need >= 3 positive shells for a slope fit, have {int(pos.sum())}")
    res = stats.linregress(np.log(k[pos]), np.log(v[pos]))
    return SlopeFit(float(res.slope), float(res.stderr), float(res.intercept),
                    int(pos.sum()), excluded)


# ---------------------------------------------------------------------------
# sphere averages


def sphere_average(f="sin2", n=32):
    """Mean over the unit sphere of a function of the latitude theta.

    ``f`` is "sin2", "abs_sin", "one" or a callable of theta.  With
    u = sin(theta) the area element is du dphi, so the mean is half the
    integral over u in [-1, 1] (split at 0, Gauss-Legendre on each half).
    """
    named = {"sin2": lambda th: np.sin(th) ** 2,
             "abs_sin": lambda th: np.abs(np.sin(th)),
             "one": lambda th: np.ones_like(th)}
    if isinstance(f, str) and f not in named:
        raise ConfigError(f"unknown sphere-average integrand {f!r}")
    fn = named[f] if isinstance(f, str) else f
    x, w = np.polynomial.legendre.leggauss(n)
    total = 0.0
    for lo, hi in ((-1.0, 0.0), (0.0, 1.0)):
        u = 0.5 * (hi - lo) * x + 0.5 * (hi + lo)
        total += 0.5 * (hi - lo) * np.dot(w, fn(np.arcsin(u)))
    return float(0.5 * total)


__all__ = [
    "FourierMode", "SpectrumConfig", "ShellSpectrum", "SlopeFit", "fit_slope",
    "generate_ensemble", "helical_basis", "helical_coefficients", "helical_decompose",
    "lattice_shell", "mode_quantities", "quad_cross_diagnostic", "shell_spectrum",
    "single_mode", "sphere_average",
]
