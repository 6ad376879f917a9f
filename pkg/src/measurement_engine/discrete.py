"""Measurement, feedback, erasure and reset cycle driven by one discrete weak measurement.

Every cycle output is a function of the arrow-of-time statistic ``Q`` and the
initial polarisation ``z0``.  The ``*_from_arrow`` helpers are vectorised and
shared with the trajectory and distribution modules.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields

import numpy as np
from scipy.special import entr

from .qubit import (
    DiscreteMeasurement,
    EngineParams,
    arrow_discrete,
    entropy_from_length,
)

LN2 = math.log(2.0)


class UndefinedEfficiencyError(ZeroDivisionError):
    pass


class UndefinedCOPError(ZeroDivisionError):
    pass


# -- closed forms in terms of the arrow of time ------------------------------

def _shrink(Q):
    """``e^{-Q/2}``, the factor by which the z polarisation shrinks."""
    return np.exp(-0.5 * np.asarray(Q, dtype=float))


def pre_feedback_length(Q, z0):
    """Bloch length ``sqrt(1 + e^{-Q} (z0^2 - 1))`` after the measurement."""
    Q = np.asarray(Q, dtype=float)
    return np.sqrt(z0 * z0 * np.exp(-Q) - np.expm1(-Q))


def measured_energy_from_arrow(Q, z0):
    return 0.5 * (1.0 + z0 * _shrink(Q))


def heat_from_arrow(Q, z0):
    """Measurement heat ``z0 (e^{-Q/2} - 1) / 2``."""
    return 0.5 * z0 * np.expm1(-0.5 * np.asarray(Q, dtype=float))


def feedback_energy_from_arrow(Q, z0):
    return 0.5 * (1.0 - pre_feedback_length(Q, z0))


def work_from_arrow(Q, z0):
    """Work extracted by the optimal feedback rotation.

    Evaluated as ``(1 - e^{-Q}) / 2 (|z_f| - z0 e^{-Q/2})``, which avoids the
    cancellation in ``(z0 e^{-Q/2} + |z_f|) / 2`` at small ``Q``.
    """
    Q = np.asarray(Q, dtype=float)
    return -0.5 * np.expm1(-Q) / (pre_feedback_length(Q, z0) - z0 * _shrink(Q))


def entropy_from_arrow(Q, z0):
    """Entropy of the post-measurement state, stable as its purity approaches one."""
    Q = np.asarray(Q, dtype=float)
    one_minus_r2 = np.exp(-Q) * (1.0 - z0 * z0)
    r = np.sqrt(1.0 - one_minus_r2)
    lam_minus = 0.5 * one_minus_r2 / (1.0 + r)
    return entr(1.0 - lam_minus) + entr(lam_minus)


def entropy_change_from_arrow(Q, z0):
    """``S(post-measurement) - S(thermal)``; decreasing in ``Q``.

    For ``Q < 1`` the difference is expanded as
    ``Q/2 - (r - r0) atanh(r) - r0 atanh((r - r0) / (1 - r r0))`` so that
    tiny changes keep their relative precision.
    """
    Q = np.asarray(Q, dtype=float)
    r0 = abs(z0)
    direct = entropy_from_arrow(Q, z0) - entropy_from_length(r0)
    small = Q < 1.0
    qs = np.where(small, Q, 0.0)
    r = pre_feedback_length(qs, z0)
    dr = -np.expm1(-qs) * (1.0 - z0 * z0) / (r + r0)
    expanded = 0.5 * qs - dr * np.arctanh(r) - r0 * np.arctanh(dr / (1.0 - r * r0))
    return np.where(small, expanded, direct)


def entropy_change_closed_form(Q, z0):
    """Boundary-term form ``(Q + g(z0) - |z_f| ln((1+|z_f|)/(1-|z_f|))) / 2``.

    Indeterminate at ``|z0| = 1``; only used as a cross-check.
    """
    Q = np.asarray(Q, dtype=float)
    zf = pre_feedback_length(Q, z0)
    gamma0 = z0 * math.log((1.0 + z0) / (1.0 - z0))
    return 0.5 * (Q + gamma0 - 2.0 * zf * np.arctanh(zf))


def efficiency_closed_form(Q, z0, erasure_work):
    root = pre_feedback_length(Q, z0)
    return 1.0 - (1.0 - root + 2.0 * erasure_work) / (1.0 + z0 * _shrink(Q))


def cop_closed_form(Q, z0, erasure_work):
    """Refrigerator COP; the heat denominator uses ``e^{-Q/2}``."""
    root = pre_feedback_length(Q, z0)
    return (z0 + root) / (z0 * np.expm1(-0.5 * np.asarray(Q, dtype=float)) + 2.0 * erasure_work)


def kappa_from_arrow(Q, branch: str = "lower"):
    """Invert ``e^{-Q} = 4 kappa (1 - kappa)``.

    The ``lower`` branch gives kappa <= 1/2; ``upper`` its mirror image.
    """
    Q = np.asarray(Q, dtype=float)
    if np.any(~(Q >= 0)):
        raise ValueError("Q must be >= 0")
    p = np.exp(-Q)
    lower = p / (2.0 * (1.0 + np.sqrt(-np.expm1(-Q))))
    if branch == "lower":
        return lower
    if branch == "upper":
        return 1.0 - lower
    raise ValueError(f"branch must be 'lower' or 'upper', got {branch!r}")


# -- cycle reports --------------------------------------------------------------

@dataclass(frozen=True)
class CycleReport:
    kappa: float
    Q: float
    E0: float
    E_M: float
    E_f: float
    Q_M: float
    W_ext: float
    W_er: float
    Q_th: float
    eta: float
    cop: float
    dS_M: float
    dS_er: float
    dS_total: float
    error: str = ""

    @classmethod
    def failed(cls, kappa: float, message: str) -> "CycleReport":
        values = {f.name: math.nan for f in fields(cls) if f.name not in ("kappa", "error")}
        return cls(kappa=kappa, error=message, **values)

    @classmethod
    def columns(cls) -> list[str]:
        return [f.name for f in fields(cls)]

    def row(self) -> list:
        return [getattr(self, name) for name in self.columns()]


def run_cycle(params: EngineParams, kappa: float) -> CycleReport:
    m = DiscreteMeasurement(kappa)
    Q = arrow_discrete(m)
    z0 = params.z0
    w_er = params.erasure_work

    # 4 kappa (1 - kappa) directly: exp(-Q) loses digits for kappa near 0 or 1
    p = 4.0 * kappa * (1.0 - kappa)
    shrink = math.sqrt(p)
    # 1 - p = (2 kappa - 1)^2 keeps |z_f| = |z0| exact at kappa = 1/2
    zf = math.sqrt(p * z0 * z0 + (2.0 * kappa - 1.0) ** 2)

    e0 = 0.5 * (1.0 + z0)
    e_m = 0.5 * (1.0 + z0 * shrink)
    e_f = 0.5 * (1.0 - zf)
    q_m = e_m - e0
    w_ext = e_m - e_f

    ds_m = float(entropy_from_length(zf) - entropy_from_length(abs(z0)))
    ds_er = LN2

    eta = (w_ext - w_er) / e_m if e_m != 0 else math.nan
    cop_den = q_m + w_er
    cop_value = (e0 - e_f) / cop_den if cop_den != 0 else math.nan

    return CycleReport(
        kappa=kappa,
        Q=Q,
        E0=e0,
        E_M=e_m,
        E_f=e_f,
        Q_M=q_m,
        W_ext=w_ext,
        W_er=w_er,
        Q_th=e0 - e_f,
        eta=eta,
        cop=cop_value,
        dS_M=ds_m,
        dS_er=ds_er,
        dS_total=ds_m + ds_er,
    )


def efficiency(report: CycleReport) -> float:
    """Net work after erasure per unit of measurement-supplied energy."""
    if report.E_M == 0:
        raise UndefinedEfficiencyError("efficiency undefined: post-measurement energy is zero")
    return (report.W_ext - report.W_er) / report.E_M


def cop(report: CycleReport) -> float:
    """Reset heat drawn from the reservoir per unit of measurement and erasure cost."""
    denom = report.E_M - report.E0 + report.W_er
    if denom == 0:
        raise UndefinedCOPError("COP undefined: measurement heat and erasure work both vanish")
    return (report.E0 - report.E_f) / denom


def entropy_change(params: EngineParams, kappa: float) -> tuple[float, float, float]:
    """Return ``(dS_M, dS_er, dS_total)`` for one cycle."""
    report = run_cycle(params, kappa)
    return report.dS_M, report.dS_er, report.dS_total


def sweep(params: EngineParams, kappas=None, arrows=None, branch: str = "lower") -> list[CycleReport]:
    """One report per grid point, in grid order.

    Exactly one of ``kappas`` or ``arrows`` (a grid of Q values) is given.
    Points outside the domain come back as failed rows instead of raising.
    """
    if (kappas is None) == (arrows is None):
        raise ValueError("give exactly one of kappas or arrows")
    if kappas is not None:
        points = [float(k) for k in kappas]
    else:
        points = []
        for q in arrows:
            try:
                points.append(float(kappa_from_arrow(float(q), branch)))
            except ValueError:
                points.append(math.nan)
    if not points:
        raise ValueError("empty grid")

    rows = []
    for kappa in points:
        try:
            rows.append(run_cycle(params, kappa))
        except ValueError as exc:
            rows.append(CycleReport.failed(kappa, str(exc)))
    return rows
