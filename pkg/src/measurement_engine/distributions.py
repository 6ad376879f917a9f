"""Finite-time densities of the arrow of time, work, heat and entropy change.

Starting from a thermal state, a measurement record of total duration
``T = n dt`` (in units of tau) has arrow of time ``Q = ln cosh^2 u`` with
``u = |G|``.  The densities of the work, measurement heat and entropy change
follow from that of ``Q`` through the monotone maps in :mod:`.discrete`.

Every density diverges like ``1/sqrt`` at the ``Q = 0`` end of its support.
Quadrature is therefore done in ``u``, where the integrand is a Gaussian
times ``cosh u``, and default grids are refined geometrically in ``u`` near
zero.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate, optimize, special

from .discrete import (
    entropy_change_from_arrow,
    heat_from_arrow,
    pre_feedback_length,
    work_from_arrow,
)
from .qubit import entropy_from_length

VARIABLES = ("Q", "W", "QM", "dS")


# -- the arrow of time --------------------------------------------------------

def arrow_from_u(u):
    """``Q = ln cosh^2 u``, accurate for tiny and huge ``u``."""
    u = np.abs(np.asarray(u, dtype=float))
    small = u < 1.0
    with np.errstate(over="ignore"):
        q_small = np.log1p(np.sinh(np.where(small, u, 0.0)) ** 2)
    q_large = 2.0 * (u + np.log1p(np.exp(-2.0 * u)) - math.log(2.0))
    return np.where(small, q_small, q_large)


def u_from_arrow(Q):
    """Inverse of :func:`arrow_from_u`, ``u = arccosh(e^{Q/2})``."""
    Q = np.asarray(Q, dtype=float)
    small = Q < 2.0
    with np.errstate(over="ignore", invalid="ignore"):
        u_small = np.arcsinh(np.sqrt(np.expm1(np.where(small, Q, 0.0))))
    u_large = 0.5 * Q + np.log1p(np.sqrt(-np.expm1(-np.where(small, 1.0, Q))))
    return np.where(small, u_small, u_large)


def _check_duration(t_over_tau):
    if not t_over_tau > 0:
        raise ValueError(f"total duration T/tau must be > 0, got {t_over_tau}")


def pdf_Q(Q, t_over_tau):
    """Density of the arrow of time after measuring for ``t_over_tau``."""
    _check_duration(t_over_tau)
    Q = np.asarray(Q, dtype=float)
    if np.any(~(Q > 0)):
        raise ValueError("the arrow-of-time density is defined for Q > 0 only")
    u = u_from_arrow(Q)
    # e^Q / sqrt(e^Q - 1) = e^{Q/2} / sqrt(1 - e^{-Q})
    log_p = (
        0.5 * math.log(1.0 / (2.0 * math.pi * t_over_tau))
        + 0.5 * Q
        - 0.5 * np.log(-np.expm1(-Q))
        - 0.5 * t_over_tau
        - u * u / (2.0 * t_over_tau)
    )
    return np.exp(log_p)


def cdf_u(u, t_over_tau):
    """Closed-form CDF of ``u = |G|`` with ``G ~ (N(T, T) + N(-T, T)) / 2``."""
    s = math.sqrt(t_over_tau)
    u = np.asarray(u, dtype=float)
    return 0.5 * (
        special.erf((u - t_over_tau) / (s * math.sqrt(2.0)))
        + special.erf((u + t_over_tau) / (s * math.sqrt(2.0)))
    )


def quantile_u(p, t_over_tau):
    hi = t_over_tau + 40.0 * math.sqrt(t_over_tau) + 1.0
    return optimize.brentq(lambda v: cdf_u(v, t_over_tau) - p, 0.0, hi, xtol=1e-300, rtol=1e-15)


def expectation(func, t_over_tau, epsabs=1e-13, epsrel=1e-12):
    """``<func(Q)>`` under :func:`pdf_Q`, integrated in ``u``."""
    _check_duration(t_over_tau)

    def integrand(u):
        q = arrow_from_u(u)
        if q <= 0:
            # limit of pdf_Q(Q) dQ/du as u -> 0
            p = 2.0 / math.sqrt(2.0 * math.pi * t_over_tau) * math.exp(-0.5 * t_over_tau)
            return p * func(0.0)
        return float(pdf_Q(q, t_over_tau) * 2.0 * math.tanh(u) * func(q))

    hi = t_over_tau + 40.0 * math.sqrt(t_over_tau) + 1.0
    value, _ = integrate.quad(
        integrand, 0.0, hi, points=[t_over_tau], epsabs=epsabs, epsrel=epsrel, limit=200
    )
    return value


def normalization(t_over_tau) -> float:
    return expectation(lambda q: 1.0, t_over_tau)


# -- derived variables --------------------------------------------------------

def _d_work_dQ(Q, z0):
    s = np.exp(-0.5 * Q)
    root = pre_feedback_length(Q, z0)
    return -0.25 * s * (z0 + s * (z0 * z0 - 1.0) / root)


def _d_heat_dQ(Q, z0):
    return -0.25 * z0 * np.exp(-0.5 * Q)


def _d_entropy_dQ(Q, z0):
    r = pre_feedback_length(Q, z0)
    return -np.arctanh(r) * np.exp(-Q) * (1.0 - z0 * z0) / (2.0 * r)


def arrow_from_work(w, z0, hbar_omega=1.0):
    """Invert the work map: ``e^{-Q} = (2 w z0 + sqrt(1 + 4 w^2 (z0^2 - 1)))^2``."""
    w = np.asarray(w, dtype=float) / hbar_omega
    a = 4.0 * w * w * (z0 * z0 - 1.0)
    s_minus_1 = 2.0 * w * z0 + a / (np.sqrt(1.0 + a) + 1.0)
    return -2.0 * np.log1p(s_minus_1)


def arrow_from_heat(q, z0, hbar_omega=1.0):
    """Invert the heat map: ``e^{-Q} = (2 q / z0 + 1)^2``."""
    q = np.asarray(q, dtype=float) / hbar_omega
    return -2.0 * np.log1p(2.0 * q / z0)


def arrow_from_entropy(s, z0, xtol=1e-300):
    """Invert the entropy-change map by bracketed root finding on ``Q``."""

    def solve(target):
        f = lambda q: float(entropy_change_from_arrow(q, z0)) - target
        if f(0.0) <= 0.0:
            return 0.0
        hi = 1.0
        while f(hi) > 0.0:
            hi *= 2.0
            if hi > 1e4:
                return math.inf
        return optimize.brentq(f, 0.0, hi, xtol=xtol, rtol=4 * np.finfo(float).eps)

    s = np.asarray(s, dtype=float)
    return np.vectorize(solve, otypes=[float])(s)


def _check_z0(z0):
    if not -1.0 < z0 < 0.0:
        raise ValueError(f"z0 must lie in (-1, 0), got {z0}")


def pdf_W(w, t_over_tau, z0, hbar_omega=1.0):
    """Density of the extracted work on ``[0, hbar_omega / 2)``; zero elsewhere."""
    _check_duration(t_over_tau)
    _check_z0(z0)
    w = np.asarray(w, dtype=float)
    out = np.zeros_like(w)
    inside = (w >= 0.0) & (w < 0.5 * hbar_omega)
    with np.errstate(divide="ignore"):
        Q = arrow_from_work(w[inside], z0, hbar_omega)
    out[inside] = _pushforward(Q, t_over_tau, hbar_omega * _d_work_dQ(Q, z0))
    return out


def pdf_QM(q, t_over_tau, z0, hbar_omega=1.0):
    """Density of the measurement heat on ``[0, |z0| hbar_omega / 2)``; zero elsewhere."""
    _check_duration(t_over_tau)
    _check_z0(z0)
    q = np.asarray(q, dtype=float)
    out = np.zeros_like(q)
    inside = (q >= 0.0) & (q < -0.5 * z0 * hbar_omega)
    Q = arrow_from_heat(q[inside], z0, hbar_omega)
    out[inside] = _pushforward(Q, t_over_tau, hbar_omega * _d_heat_dQ(Q, z0))
    return out


def pdf_dS(s, t_over_tau, z0):
    """Density of the measurement entropy change on ``(-S(|z0|), 0]``; zero elsewhere."""
    _check_duration(t_over_tau)
    _check_z0(z0)
    s = np.asarray(s, dtype=float)
    out = np.zeros_like(s)
    inside = (s <= 0.0) & (s > -float(entropy_from_length(abs(z0))))
    Q = arrow_from_entropy(s[inside], z0)
    out[inside] = _pushforward(Q, t_over_tau, _d_entropy_dQ(Q, z0))
    return out


def _pushforward(Q, t_over_tau, dx_dQ):
    """``P(Q) / |dx/dQ|``; infinite at ``Q = 0`` and zero for ``Q = inf``."""
    Q = np.asarray(Q, dtype=float)
    out = np.zeros_like(Q)
    zero = Q <= 0.0
    finite = ~zero & np.isfinite(Q)
    out[zero] = np.inf
    with np.errstate(under="ignore"):
        out[finite] = pdf_Q(Q[finite], t_over_tau) / np.abs(dx_dQ[finite])
    return out


def _variable_map(variable, z0, hbar_omega=1.0):
    """Forward map Q -> variable and whether it is increasing."""
    if variable == "Q":
        return (lambda q: q), True
    if variable == "W":
        return (lambda q: hbar_omega * work_from_arrow(q, z0)), True
    if variable == "QM":
        return (lambda q: hbar_omega * heat_from_arrow(q, z0)), True
    if variable == "dS":
        return (lambda q: entropy_change_from_arrow(q, z0)), False
    raise ValueError(f"unknown variable {variable!r}; expected one of {VARIABLES}")


def density(variable, x, t_over_tau, z0=None, hbar_omega=1.0):
    if variable == "Q":
        return pdf_Q(x, t_over_tau)
    if variable == "W":
        return pdf_W(x, t_over_tau, z0, hbar_omega)
    if variable == "QM":
        return pdf_QM(x, t_over_tau, z0, hbar_omega)
    if variable == "dS":
        return pdf_dS(x, t_over_tau, z0)
    raise ValueError(f"unknown variable {variable!r}; expected one of {VARIABLES}")


# -- curves, histograms and goodness of fit -----------------------------------

@dataclass
class DensityCurve:
    variable: str
    grid: np.ndarray
    density: np.ndarray
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        self.grid = np.asarray(self.grid, dtype=float)
        self.density = np.asarray(self.density, dtype=float)
        if self.grid.shape != self.density.shape or self.grid.ndim != 1:
            raise ValueError("grid and density must be 1-d arrays of equal length")
        if np.any(np.diff(self.grid) <= 0):
            raise ValueError("grid must be strictly ascending")
        if np.any(self.density < 0):
            raise ValueError("density must be non-negative")

    def cdf(self) -> np.ndarray:
        return integrate.cumulative_trapezoid(self.density, self.grid, initial=0.0)

    def total(self) -> float:
        return float(integrate.trapezoid(self.density, self.grid))


def default_u_grid(t_over_tau, n_points=512, tail=1e-7):
    """Grid in ``u`` with ``t = ln u + u / c`` uniform: geometric near 0, linear beyond ``c``."""
    u_lo = quantile_u(tail, t_over_tau)
    u_hi = quantile_u(1.0 - tail, t_over_tau)
    c = math.sqrt(t_over_tau) / 4.0
    t = np.linspace(math.log(u_lo) + u_lo / c, math.log(u_hi) + u_hi / c, n_points)
    # u = c W(e^t / c), computed as exp(t - log c) inside lambertw
    u = c * np.real(special.lambertw(np.exp(t - math.log(c))))
    u[0], u[-1] = u_lo, u_hi
    return u


def density_curve(variable, t_over_tau, z0=None, hbar_omega=1.0, grid=None, n_points=512):
    """Analytic density of ``variable`` on ``grid`` or on a default grid.

    The default grid covers all but ``1e-7`` of the probability in each tail.
    """
    _check_duration(t_over_tau)
    if variable != "Q":
        _check_z0(z0)
    forward, increasing = _variable_map(variable, z0, hbar_omega)
    if grid is None:
        grid = np.asarray(forward(arrow_from_u(default_u_grid(t_over_tau, n_points))), dtype=float)
        if not increasing:
            grid = grid[::-1]
    grid = np.asarray(grid, dtype=float)
    values = density(variable, grid, t_over_tau, z0, hbar_omega)
    params = {"t_over_tau": t_over_tau, "z0": z0, "hbar_omega": hbar_omega}
    return DensityCurve(variable, grid, values, params)


@dataclass
class Histogram:
    edges: np.ndarray
    counts: np.ndarray
    total: int

    @property
    def centers(self) -> np.ndarray:
        return 0.5 * (self.edges[1:] + self.edges[:-1])

    @property
    def density(self) -> np.ndarray:
        return self.counts / (self.total * np.diff(self.edges))


def histogram(samples, bins=100, range=None) -> Histogram:
    """Uniform-bin histogram; the range defaults to the sample extent."""
    samples = np.asarray(samples, dtype=float)
    if samples.size == 0:
        raise ValueError("no samples")
    if range is None:
        lo, hi = float(samples.min()), float(samples.max())
        if lo == hi:
            lo, hi = lo - 0.5, hi + 0.5
        range = (lo, hi)
    counts, edges = np.histogram(samples, bins=bins, range=range)
    return Histogram(edges=edges, counts=counts, total=int(counts.sum()))


def ks_distance(data, curve: DensityCurve) -> float:
    """Sup distance between an empirical CDF and the curve's trapezoidal CDF.

    ``data`` is either raw samples (at least 100) or a :class:`Histogram`, in
    which case the CDFs are compared at the bin edges.
    """
    cdf = curve.cdf()
    if isinstance(data, Histogram):
        if data.total < 100:
            raise ValueError(f"need at least 100 samples, got {data.total}")
        emp = np.concatenate([[0.0], np.cumsum(data.counts)]) / data.total
        model = np.interp(data.edges, curve.grid, cdf, left=0.0, right=cdf[-1])
        return float(np.max(np.abs(emp - model)))

    x = np.sort(np.asarray(data, dtype=float))
    n = x.size
    if n == 0:
        raise ValueError("no samples")
    if n < 100:
        raise ValueError(f"need at least 100 samples, got {n}")
    model = np.interp(x, curve.grid, cdf, left=0.0, right=cdf[-1])
    upper = np.arange(1, n + 1) / n - model
    lower = model - np.arange(0, n) / n
    return float(max(upper.max(), lower.max()))


def sample_arrow(n, t_over_tau, rng: np.random.Generator, n_nodes=20001):
    """Draw ``Q`` by inverting the numerically integrated CDF of :func:`pdf_Q`.

    The CDF is accumulated by trapezoid in ``u``, where the integrand is smooth.
    """
    hi = quantile_u(1.0 - 1e-12, t_over_tau)
    u = np.linspace(0.0, hi, n_nodes)
    q = arrow_from_u(u[1:])
    weight = np.empty_like(u)
    weight[0] = 2.0 / math.sqrt(2.0 * math.pi * t_over_tau) * math.exp(-0.5 * t_over_tau)
    weight[1:] = pdf_Q(q, t_over_tau) * 2.0 * np.tanh(u[1:])
    cdf = integrate.cumulative_trapezoid(weight, u, initial=0.0)
    cdf /= cdf[-1]
    draws = np.interp(rng.random(n), cdf, u)
    return arrow_from_u(draws)
