"""Frequency estimation from Ramsey shot data by a multi-start damped-cosine fit."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import optimize, signal

from .errors import DegenerateSignal, FitFailed

N_PARAMS = 5
MAX_ITER = 200
N_PEAKS = 3
PHASE_STARTS = (0.0, math.pi / 2)
DEFAULT_OMEGA_HINT = 1.0


@dataclass(frozen=True)
class FitModel:
    """p(t) = c0 + c1 exp(-t/tau) cos(omega_hat t + phi)."""

    c0: float
    c1: float
    omega_hat: float
    phi: float
    tau: float

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        decay = np.exp(-t / self.tau) if math.isfinite(self.tau) else 1.0
        return self.c0 + self.c1 * decay * np.cos(self.omega_hat * t + self.phi)


@dataclass(frozen=True)
class FitResult:
    model: FitModel
    residual_norm: float
    converged: bool
    covariance_diag: tuple[float, ...]
    starts_tried: int
    initial_residuals: tuple[float, ...] = ()


# Internally the fit runs in x = t / t_max with parameters
# (c0, c1, w, phi, g) and model c0 + c1 exp(-g x) cos(w x + phi).


def _model(p, x):
    c0, c1, w, phi, g = p
    return c0 + c1 * np.exp(-g * x) * np.cos(w * x + phi)


def _jacobian(p, x):
    _, c1, w, phi, g = p
    e = np.exp(-g * x)
    cos = np.cos(w * x + phi)
    sin = np.sin(w * x + phi)
    return np.column_stack([np.ones_like(x), e * cos, -c1 * e * x * sin, -c1 * e * sin, -c1 * x * e * cos])


def _periodogram_peaks(x, y, n_peaks: int = N_PEAKS) -> list[float]:
    """Angular frequencies (in units of 1/x) of the strongest periodogram peaks."""
    dx = np.min(np.diff(x))
    span = x[-1] - x[0] + dx
    w_lo = 0.5 * np.pi / span
    w_hi = np.pi / dx
    grid = np.linspace(w_lo, w_hi, 4000)
    power = signal.lombscargle(x, y - y.mean(), grid)
    idx, _ = signal.find_peaks(power)
    if idx.size == 0:
        idx = np.array([int(np.argmax(power))])
    best = idx[np.argsort(power[idx])[::-1][:n_peaks]]
    return [float(grid[i]) for i in best]


def _unpack(data):
    if hasattr(data, "t") and hasattr(data, "p0_hat"):
        return np.asarray(data.t, dtype=float), np.asarray(data.p0_hat, dtype=float)
    t, y = data
    return np.asarray(t, dtype=float), np.asarray(y, dtype=float)


def fit_damped_cosine(data, omega_hint: float | None = DEFAULT_OMEGA_HINT, times=None) -> FitResult:
    """Least-squares fit of an exponentially damped cosine to survival frequencies.

    ``data`` is a RamseyDataset or a ``(t, p)`` pair.  Starting frequencies are
    the top periodogram peaks plus ``omega_hint``, each tried with phases 0 and
    pi/2.  Raises DegenerateSignal on constant data and FitFailed (with the
    best-effort result attached) if no start converges.
    """
    t, y = _unpack(data)
    if times is not None:
        t = np.asarray(times, dtype=float)
    if t.size < N_PARAMS + 1:
        raise ValueError(f"need at least {N_PARAMS + 1} points, got {t.size}")
    order = np.argsort(t)
    t, y = t[order], y[order]
    if np.ptp(y) <= 1e-12 * max(1.0, float(np.max(np.abs(y)))):
        raise DegenerateSignal("constant signal: frequency is unidentifiable")

    scale = float(t[-1])
    x = t / scale
    omegas = _periodogram_peaks(x, y)
    if omega_hint is not None and omega_hint > 0:
        omegas.append(float(omega_hint) * scale)
    c0, c1 = float(np.mean(y)), 0.5 * float(np.ptp(y))

    def resid(p):
        return _model(p, x) - y

    def jac(p):
        return _jacobian(p, x)

    lower = [-np.inf, 0.0, 0.0, -np.inf, 0.0]
    upper = [np.inf] * N_PARAMS
    runs = []
    initial = []
    for w in omegas:
        for phi in PHASE_STARTS:
            p0 = np.array([c0, c1, w, phi, 1.0])
            initial.append(float(np.linalg.norm(resid(p0))))
            res = optimize.least_squares(
                resid, p0, jac=jac, bounds=(lower, upper), method="trf",
                xtol=1e-10, gtol=1e-12, ftol=1e-15, max_nfev=MAX_ITER, x_scale="jac",
            )
            runs.append(res)

    def key(r):
        return (round(float(np.linalg.norm(r.fun)), 12), float(r.x[2]))

    best = min(runs, key=key)
    c0f, c1f, wf, phif, gf = (float(v) for v in best.x)
    # covariance from the Gauss-Newton normal matrix, mapped back to physical units
    dof = max(t.size - N_PARAMS, 1)
    s2 = 2 * best.cost / dof
    try:
        cov = np.linalg.pinv(best.jac.T @ best.jac) * s2
        var = np.diag(cov).copy()
    except np.linalg.LinAlgError:
        var = np.full(N_PARAMS, np.nan)
    tau = scale / gf if gf > 0 else math.inf
    # d tau / d g = -tau / g; written this way so tiny g overflows to inf instead of dividing by zero
    var_tau = var[4] * (tau / gf) ** 2 if gf > 0 else math.inf
    cov_diag = (var[0], var[1], var[2] / scale**2, var[3], var_tau)
    phif = math.remainder(phif, 2 * math.pi)
    model = FitModel(c0f, c1f, wf / scale, phif, tau)
    result = FitResult(
        model=model,
        residual_norm=float(np.linalg.norm(best.fun)),
        converged=any(r.status > 0 for r in runs) and best.status > 0,
        covariance_diag=tuple(float(v) for v in cov_diag),
        starts_tried=len(runs),
        initial_residuals=tuple(initial),
    )
    if not result.converged:
        raise FitFailed("no multi-start run met the convergence thresholds", best=result)
    return result


def estimate_observable(fit: FitResult, delta: float) -> float:
    """a0_hat = hbar * omega_hat - delta (hbar = 1)."""
    if not fit.converged:
        raise FitFailed("fit did not converge", best=fit)
    return fit.model.omega_hat - delta
