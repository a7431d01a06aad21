"""
Helicity and its second moment.

Two families of estimators live here.  Spectral ones (``helicity_spectral``,
``energy``) integrate A.B and B.B exactly or by a periodic quadrature.  Pair
estimators sample start points uniformly in the domain, compute the
finite-time asymptotic linking lambda_T of the two field lines and scale
the sample moments by Vol^2:

    chi      = Vol^2 E[lambda]
    chi2     = 2 Vol^2 E[lambda^2]
    dispersion = Vol^2 E[(lambda - E lambda)^2]

``delta2_bound`` integrates the squared Gauss kernel over point pairs, and
the local-formula functions build the same integrand from derivatives of
Psi B along the flow, where Psi = |x1 - x2|^-3.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field as dc_field

import numpy as np

from .biot import kernel_values, min_image
from .errors import ConfigError, SingularityError, UnsupportedRepresentation
from .fieldcore import BeltramiField, FourierEnsemble, PeriodicBox
from .linkage import LinkingEstimate, default_dcut, linking_distribution, sample_pairs

DEFAULT_S_MAX = 2


# ---------------------------------------------------------------------------
# spectral quantities


def _box_grid(L, n):
    g = np.arange(n) * (L / n)
    return np.stack(np.meshgrid(g, g, g, indexing="ij"), axis=-1).reshape(-1, 3)


def _ball_rule(R, n):
    """Gauss-Legendre product rule in (r, cos theta) with a uniform phi grid."""
    xr, wr = np.polynomial.legendre.leggauss(n)
    r = 0.5 * R * (xr + 1)
    wr = 0.5 * R * wr * r**2
    ct, wt = np.polynomial.legendre.leggauss(n)
    ph = np.arange(2 * n) * (np.pi / n)
    wp = np.full(2 * n, np.pi / n)
    rr, cc, pp = np.meshgrid(r, ct, ph, indexing="ij")
    w = (wr[:, None, None] * wt[None, :, None] * wp[None, None, :]).ravel()
    st = np.sqrt(1 - cc**2)
    X = np.stack([rr * st * np.cos(pp), rr * st * np.sin(pp), rr * cc], axis=-1).reshape(-1, 3)
    return X, w


def _volume_integral(field, f, n):
    """Integral of f(X) over the domain: trapezoid on a box, Gauss on a ball."""
    dom = field.domain
    if isinstance(dom, PeriodicBox):
        X = _box_grid(dom.L, n)
        return float(np.mean(f(X)) * dom.volume)
    X, w = _ball_rule(dom.R, n)
    return float(np.dot(w, f(X)))


def _ensemble_sums(field):
    amp = field.amplitudes
    kv = field.kvecs
    V = field.domain.volume
    k2 = np.einsum("ij,ij->i", kv, kv)
    apot = 1j * np.cross(kv, amp) / k2[:, None]
    hel = 2 * V * np.real(np.einsum("ij,ij->i", apot, amp.conj()))
    en = 2 * V * np.real(np.einsum("ij,ij->i", amp, amp.conj()))
    return en, hel


def helicity_spectral(field, n_grid=16):
    """Integral of A.B over the domain.

    Mode sums (Parseval) for Fourier ensembles; for Beltrami fields the
    trapezoid rule on an ``n_grid``^3 grid, which is exact for the
    trigonometric integrand.
    """
    if isinstance(field, FourierEnsemble):
        return float(_ensemble_sums(field)[1].sum()) if len(field) else 0.0
    if isinstance(field, BeltramiField):
        return _volume_integral(field, lambda X: np.einsum("ij,ij->i", field.potential(X),
                                                           field(X)), n_grid)
    raise UnsupportedRepresentation(
        f"spectral helicity needs a vector potential; {type(field).__name__} has none")


def energy(field, n_grid=32):
    """U = integral of B.B (exact for ensembles, quadrature otherwise)."""
    if isinstance(field, FourierEnsemble):
        return float(_ensemble_sums(field)[0].sum()) if len(field) else 0.0
    return _volume_integral(field, lambda X: np.einsum("ij,ij->i", field(X), field(X)), n_grid)


def arnold_ratio(field, chi=None):
    """U/|chi|, or None when the helicity vanishes."""
    chi = helicity_spectral(field) if chi is None else chi
    if chi == 0:
        return None
    return energy(field) / abs(chi)


# ---------------------------------------------------------------------------
# pair estimators


def _samples(field, n_pairs, T, seed, quad_n, dcut, tol, workers, samples):
    if samples is not None:
        return samples
    if n_pairs < 2:
        raise ConfigError("n_pairs must be >= 2")
    return linking_distribution(field, n_pairs, T, seed, quad_n, dcut, tol, workers)


def _checkpoints(n):
    pts = [m for m in (2 ** np.arange(1, 31)) if m < n]
    return [int(m) for m in pts] + [n]


def _moment_estimate(vals, scale, dist, what):
    n = len(vals)
    if n == 0:
        raise ConfigError("no successful pairs to average")
    trace = [float(scale * np.mean(vals[:m])) for m in _checkpoints(n)]
    err = float(scale * np.std(vals, ddof=1) / math.sqrt(n)) if n > 1 else float("inf")
    return LinkingEstimate(trace[-1], err, trace, T=dist.T, n_samples=n,
                           meta={"quantity": what, "seed": dist.seed,
                                 "n_failed": dist.n_failed, **dist.meta})


def helicity_pairs(field, n_pairs=2000, T=200.0, seed=0, quad_n=8, dcut=None, tol=1e-8,
                   workers=1, samples=None):
    """chi as Vol^2 times the mean of lambda_T over random start pairs.

    Because the flow preserves volume the estimator is unbiased for every
    T; larger T only reduces its variance.
    """
    dist = _samples(field, n_pairs, T, seed, quad_n, dcut, tol, workers, samples)
    return _moment_estimate(dist.values, field.domain.volume**2, dist, "chi")


def quadratic_helicity_pairs(field, n_pairs=2000, T=200.0, seed=0, quad_n=8, dcut=None,
                             tol=1e-8, workers=1, samples=None):
    """chi2 = 2 Vol^2 E[lambda^2]."""
    dist = _samples(field, n_pairs, T, seed, quad_n, dcut, tol, workers, samples)
    return _moment_estimate(dist.values**2, 2 * field.domain.volume**2, dist, "chi2")


def dispersion_pairs(field, n_pairs=2000, T=200.0, seed=0, quad_n=8, dcut=None, tol=1e-8,
                     workers=1, samples=None):
    """Vol^2 E[(lambda - chi_hat/Vol^2)^2] with chi_hat from the same samples."""
    dist = _samples(field, n_pairs, T, seed, quad_n, dcut, tol, workers, samples)
    v = dist.values
    dev = (v - np.mean(v)) ** 2
    return _moment_estimate(dev, field.domain.volume**2, dist, "dispersion")


# ---------------------------------------------------------------------------
# correlation tensor and local-formula terms


def _point_pairs(field, n_samples, seed, dcut):
    if n_samples < 2:
        raise ConfigError("n_samples must be >= 2")
    dcut = default_dcut(field) if dcut is None else dcut
    P = sample_pairs(field, n_samples, seed, dcut)
    return np.ascontiguousarray(P[:, 0]), np.ascontiguousarray(P[:, 1]), dcut


def default_flow_step(field):
    """Magnetic-time step for the directional derivatives along B."""
    b = field.max_norm_estimate()
    if b <= 0:
        return 1.0
    return 1e-3 * field.domain.length_scale / b


def _flow_steps(field, X, h, m, nsub=4):
    """Positions g^{jh}(X) for j = -m..m by fixed-step RK4 (h is tiny)."""
    out = np.empty((2 * m + 1,) + X.shape)
    out[m] = X
    for sgn in (1.0, -1.0):
        Y = X.copy()
        dt = sgn * h / nsub
        for j in range(1, m + 1):
            for _ in range(nsub):
                k1 = field._eval(Y)
                k2 = field._eval(Y + 0.5 * dt * k1)
                k3 = field._eval(Y + 0.5 * dt * k2)
                k4 = field._eval(Y + dt * k3)
                Y = Y + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
            out[m + int(sgn) * j] = Y
    return out


def _fd_weights(order, m):
    """Central-difference weights for d^order/dt^order on nodes -m..m (unit step)."""
    nodes = np.arange(-m, m + 1, dtype=float)
    V = np.vander(nodes, increasing=True).T
    rhs = np.zeros(2 * m + 1)
    rhs[order] = math.factorial(order)
    return np.linalg.solve(V, rhs)


def derived_vectors(field, X1, X2, s_max, h=None):
    """B1^(i) at X1 (with X2 held fixed) for i = 0..s_max.

    B1^(i) = Psi^-1 d^i/dt^i [Psi(g^t x1, x2) B(g^t x1)] at t = 0, by central
    differences of step ``h`` in magnetic time.  The i = 0 entry is B itself.
    """
    h = default_flow_step(field) if h is None else h
    X1 = np.atleast_2d(np.asarray(X1, float))
    X2 = np.atleast_2d(np.asarray(X2, float))
    out = [field._eval(X1)]
    if s_max == 0:
        return out
    m = max(1, (s_max + 1) // 2)
    Y = _flow_steps(field, X1, h, m)
    period = field.domain.period
    d = min_image(Y - X2[None], period)
    r2 = np.einsum("...i,...i->...", d, d)
    if np.any(r2 == 0):
        raise SingularityError("derivative stencil hits the second point")
    psi = r2 ** -1.5
    F = psi[..., None] * np.stack([field._eval(y) for y in Y])
    psi0 = psi[m]
    for i in range(1, s_max + 1):
        w = _fd_weights(i, m)
        out.append(np.tensordot(w, F, axes=1) / h**i / psi0[:, None])
    return out


def _term_from_vectors(V1, V2, X1, X2, period):
    G = kernel_values(V1, X1, V2, X2, period)
    return G * G


def _mc_estimate(vals, X1, X2, field, dcut, seed, what):
    V2 = field.domain.volume**2
    n = len(vals)
    total = V2 * float(np.mean(vals))
    err = V2 * float(np.std(vals, ddof=1)) / math.sqrt(n)
    d = min_image(X1 - X2, field.domain.period)
    r = np.sqrt(np.einsum("ij,ij->i", d, d))
    near = r < 0.05 * field.domain.length_scale
    s = float(np.sum(vals))
    frac = float(np.sum(vals[near]) / s) if s > 0 else 0.0
    trace = [V2 * float(np.mean(vals[:m])) for m in _checkpoints(n)]
    return LinkingEstimate(total, err, trace, n_samples=n,
                           meta={"quantity": what, "seed": seed, "dcut": dcut,
                                 "near_diagonal_fraction": frac})


def delta2_bound(field, n_samples=20000, seed=0, dcut=None):
    """Monte-Carlo integral of the squared Gauss kernel over point pairs."""
    X1, X2, dcut = _point_pairs(field, n_samples, seed, dcut)
    B1 = field._eval(X1)
    B2 = field._eval(X2)
    vals = _term_from_vectors(B1, B2, X1, X2, field.domain.period)
    return _mc_estimate(vals, X1, X2, field, dcut, seed, "delta2_bound")


def nabla_term(field, i, j, x1, x2, h=None, s_max=DEFAULT_S_MAX):
    """Squared two-field kernel G(B1^(i) at x1, B2^(j) at x2)^2.

    For i = j = 0 this is the correlation tensor G^2 itself.
    """
    if i < 0 or j < 0 or i + j > s_max:
        raise ConfigError(f"need 0 <= i, j and i + j <= s_max={s_max}")
    x1 = np.asarray(x1, float)
    x2 = np.asarray(x2, float)
    X1, X2 = np.atleast_2d(x1), np.atleast_2d(x2)
    V1 = derived_vectors(field, X1, X2, i, h)[i]
    V2 = derived_vectors(field, X2, X1, j, h)[j]
    out = _term_from_vectors(V1, V2, X1, X2, field.domain.period)
    return float(out[0]) if x1.ndim == 1 else out


def local_formula_terms(field, s_max=DEFAULT_S_MAX, n_samples=20000, seed=0, dcut=None,
                        h=None):
    """All terms delta2(B1^(i), B2^(j)) with i + j <= s_max on one sample set."""
    if s_max < 0:
        raise ConfigError("s_max must be >= 0")
    X1, X2, dcut = _point_pairs(field, n_samples, seed, dcut)
    D1 = derived_vectors(field, X1, X2, s_max, h)
    D2 = derived_vectors(field, X2, X1, s_max, h)
    out = {}
    for s in range(s_max + 1):
        for i in range(s + 1):
            vals = _term_from_vectors(D1[i], D2[s - i], X1, X2, field.domain.period)
            out[(i, s - i)] = _mc_estimate(vals, X1, X2, field, dcut, seed,
                                           f"local_term_{i}_{s - i}")
    return out


def local_formula_term(field, i, j, n_samples=20000, seed=0, dcut=None, h=None,
                       s_max=DEFAULT_S_MAX):
    """Vol^2 times the mean of ``nabla_term`` over uniform point pairs."""
    if i < 0 or j < 0 or i + j > s_max:
        raise ConfigError(f"need 0 <= i, j and i + j <= s_max={s_max}")
    X1, X2, dcut = _point_pairs(field, n_samples, seed, dcut)
    V1 = derived_vectors(field, X1, X2, i, h)[i]
    V2 = derived_vectors(field, X2, X1, j, h)[j]
    vals = _term_from_vectors(V1, V2, X1, X2, field.domain.period)
    return _mc_estimate(vals, X1, X2, field, dcut, seed, f"local_term_{i}_{j}")


def local_formula_partial_sum(field, a, s_max=DEFAULT_S_MAX, n_samples=20000, seed=0,
                              dcut=None, h=None, terms=None):
    """Partial sums over s of (-a)^s sum_{i+j=s} term(i, j) / (i! j!).

    Returns the list of partial sums for s = 0..s_max.  ``a`` may also be a
    sequence, in which case one list per value is returned.
    """
    if np.ndim(a) > 0:
        terms = local_formula_terms(field, s_max, n_samples, seed, dcut, h) if terms is None \
            else terms
        return [local_formula_partial_sum(field, float(x), s_max, terms=terms) for x in a]
    if a < 0:
        raise ConfigError("a must be >= 0")
    if terms is None:
        terms = local_formula_terms(field, s_max, n_samples, seed, dcut, h)
    sums = []
    acc = 0.0
    for s in range(s_max + 1):
        inner = sum(terms[(i, s - i)].value / (math.factorial(i) * math.factorial(s - i))
                    for i in range(s + 1))
        acc = acc + (-a) ** s * inner if s else inner
        sums.append(acc)
    return sums


# ---------------------------------------------------------------------------
# synthetic separable kernel


def _check_period(w, T):
    if w == 0:
        return
    cycles = abs(w) * T / (2 * np.pi)
    if abs(cycles - round(cycles)) > 1e-9 * max(1.0, cycles):
        raise ConfigError("T must be a whole number of periods of every frequency")


def _cos_deriv(s, phi):
    return (np.cos, lambda p: -np.sin(p), lambda p: -np.cos(p), np.sin)[s % 4](phi)


def synthetic_kernel_terms(lam0, lam, alpha, beta, theta1, theta2, T, s_max, n_grid=None):
    """m[(D^s G)^2] for G = lam0 + lam sin(alpha t1 + theta1) sin(beta t2 + theta2).

    D is d/dt1 + d/dt2 and m is the mean over [0, T]^2, computed with the
    rectangle rule on full periods (exact for trigonometric polynomials).
    """
    if T <= 0:
        raise ConfigError("T must be positive")
    if s_max < 0:
        raise ConfigError("s_max must be >= 0")
    _check_period(alpha, T)
    _check_period(beta, T)
    cyc = (abs(alpha) + abs(beta)) * T / (2 * np.pi)
    n = int(n_grid or max(64, 4 * math.ceil(cyc) + 8))
    t = np.arange(n) * (T / n)
    t1, t2 = np.meshgrid(t, t, indexing="ij")
    pm = alpha * t1 - beta * t2 + (theta1 - theta2)
    pp = alpha * t1 + beta * t2 + (theta1 + theta2)
    terms = []
    for s in range(s_max + 1):
        f = 0.5 * lam * ((alpha - beta) ** s * _cos_deriv(s, pm)
                         - (alpha + beta) ** s * _cos_deriv(s, pp))
        if s == 0:
            terms.append(lam0 * lam0 + float(np.mean(2 * lam0 * f + f * f)))
        else:
            terms.append(float(np.mean(f * f)))
    return terms


def synthetic_kernel_check(lam0, lam, alpha, beta, theta1, theta2, T, a, s_max,
                           return_partials=False):
    """Partial sum over s of (-2a)^s / s! m[(D^s G)^2] for the separable kernel.

    For lam = 0 every derivative term vanishes and the result is lam0^2.
    """
    terms = synthetic_kernel_terms(lam0, lam, alpha, beta, theta1, theta2, T, s_max)
    partials = []
    acc = terms[0]
    partials.append(acc)
    for s in range(1, s_max + 1):
        acc = acc + (-2 * a) ** s / math.factorial(s) * terms[s]
        partials.append(acc)
    return partials if return_partials else partials[-1]


# ---------------------------------------------------------------------------
# report


@dataclass
class HelicityReport:
    """Pair and correlation-tensor estimates for one field."""

    chi: float
    chi_err: float
    chi2: float
    chi2_err: float
    dispersion: float
    dispersion_err: float
    delta2_bound: float
    delta2_bound_err: float
    energy: float
    arnold_ratio: float | None
    chi_spectral: float | None
    meta: dict = dc_field(default_factory=dict)

    def to_dict(self):
        d = asdict(self)
        d["conventions"] = {"chi2": "chi2 = 2 * integral of lambda^2 over pairs",
                            "dispersion": "Vol^2 * mean((lambda - mean lambda)^2)"}
        return d

    def to_json(self, path=None, **kw):
        text = json.dumps(self.to_dict(), indent=2, sort_keys=True, **kw)
        if path is not None:
            with open(path, "w") as fh:
                fh.write(text + "\n")
        return text


def helicity_report(field, n_pairs=200, T=50.0, seed=0, n_bound=20000, quad_n=8, dcut=None,
                    tol=1e-8, workers=1):
    """Every pair estimator on one sample set plus the delta2 bound and energy."""
    dcut = default_dcut(field) if dcut is None else dcut
    dist = linking_distribution(field, n_pairs, T, seed, quad_n, dcut, tol, workers)
    chi = helicity_pairs(field, samples=dist)
    chi2 = quadratic_helicity_pairs(field, samples=dist)
    disp = dispersion_pairs(field, samples=dist)
    bound = delta2_bound(field, n_bound, seed, dcut)
    U = energy(field)
    try:
        chi_s = helicity_spectral(field)
    except UnsupportedRepresentation:
        chi_s = None
    ref = chi_s if chi_s is not None else chi.value
    ratio = U / abs(ref) if ref != 0 else None
    meta = {"n_pairs": n_pairs, "n_ok": len(dist.values), "n_failed": dist.n_failed,
            "T": T, "seed": seed, "dcut": dcut, "quad_n": quad_n, "tol": tol,
            "n_bound": n_bound, "field": _field_desc(field)}
    return HelicityReport(chi.value, chi.error, chi2.value, chi2.error, disp.value,
                          disp.error, bound.value, bound.error, U, ratio, chi_s, meta)


def _field_desc(field):
    try:
        d = field.to_dict()
    except UnsupportedRepresentation:
        return type(field).__name__
    if d.get("type") == "ensemble":
        return {"type": "ensemble", "n_modes": len(d["modes"]), "domain": d["domain"]}
    return d


__all__ = [
    "HelicityReport", "arnold_ratio", "delta2_bound", "derived_vectors", "dispersion_pairs",
    "energy", "helicity_pairs", "helicity_report", "helicity_spectral", "local_formula_partial_sum",
    "local_formula_term", "local_formula_terms", "nabla_term", "quadratic_helicity_pairs",
    "synthetic_kernel_check", "synthetic_kernel_terms",
]
