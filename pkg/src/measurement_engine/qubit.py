"""Two-level state algebra in the Bloch representation.

A qubit density matrix is written ``rho = (I + x sx + y sy + z sz) / 2``.
Energies are in units of hbar*omega0, temperatures in units of the reservoir
temperature T and entropies in units of k_B.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.special import entr

SIGMA_X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
SIGMA_Y = np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex)
SIGMA_Z = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)
IDENTITY = np.eye(2, dtype=complex)

PHYSICALITY_TOL = 1e-12
IMPOSSIBLE_PROB = 1e-300


class ImpossibleOutcomeError(ValueError):
    """Raised when a measurement outcome has vanishing probability."""


@dataclass(frozen=True)
class QubitState:
    """Bloch vector of a qubit density matrix."""

    x: float = 0.0
    y: float = 0.0
    z: float = 0.0

    def __post_init__(self):
        r2 = self.x * self.x + self.y * self.y + self.z * self.z
        if not math.isfinite(r2) or r2 > 1.0 + PHYSICALITY_TOL:
            raise ValueError(f"unphysical Bloch vector ({self.x}, {self.y}, {self.z})")

    @property
    def length(self) -> float:
        return math.sqrt(self.x * self.x + self.y * self.y + self.z * self.z)

    @property
    def eigenvalues(self) -> tuple[float, float]:
        r = min(self.length, 1.0)
        return (1.0 + r) / 2.0, (1.0 - r) / 2.0

    def density_matrix(self) -> np.ndarray:
        return 0.5 * (IDENTITY + self.x * SIGMA_X + self.y * SIGMA_Y + self.z * SIGMA_Z)

    @classmethod
    def from_density_matrix(cls, rho: np.ndarray) -> "QubitState":
        """Bloch vector of ``rho``; the trace is normalised away first."""
        rho = rho / np.trace(rho)
        return cls(
            float(np.real(np.trace(rho @ SIGMA_X))),
            float(np.real(np.trace(rho @ SIGMA_Y))),
            float(np.real(np.trace(rho @ SIGMA_Z))),
        )


@dataclass(frozen=True)
class EngineParams:
    """Reservoir and demon settings.

    ``omega0`` is hbar*omega0 / k_B T, ``t_demon`` is T_D / T.  The initial
    thermal polarisation is ``z0 = -tanh(omega0 / 2)`` unless ``z0_override``
    is given.
    """

    omega0: float = 0.1
    t_demon: float = 0.001
    z0_override: float | None = None

    def __post_init__(self):
        if not self.omega0 > 0:
            raise ValueError(f"omega0 must be > 0, got {self.omega0}")
        if not self.t_demon >= 0:
            raise ValueError(f"t_demon must be >= 0, got {self.t_demon}")
        if self.z0_override is not None and not -1.0 < self.z0_override <= 0.0:
            raise ValueError(f"z0 must lie in (-1, 0], got {self.z0_override}")
        if self.t_demon >= 1.0:
            warnings.warn(
                f"demon temperature t_demon={self.t_demon} is not small compared "
                "to the reservoir temperature",
                stacklevel=2,
            )

    @property
    def nbar(self) -> float:
        return 1.0 / math.expm1(self.omega0) if self.omega0 < 700 else 0.0

    @property
    def z0(self) -> float:
        if self.z0_override is not None:
            return float(self.z0_override)
        return -math.tanh(self.omega0 / 2.0)

    @property
    def erasure_work(self) -> float:
        """Landauer cost k_B T_D ln 2 in units of hbar*omega0."""
        return self.t_demon * math.log(2.0) / self.omega0


@dataclass(frozen=True)
class DiscreteMeasurement:
    """Two-outcome weak sigma_x measurement of strength ``kappa`` in (0, 1)."""

    kappa: float

    def __post_init__(self):
        if not 0.0 < self.kappa < 1.0:
            raise ValueError(f"kappa must lie in the open interval (0, 1), got {self.kappa}")

    @classmethod
    def from_rate(cls, rate: float, dt: float) -> "DiscreteMeasurement":
        """Strength ``1/2 - sqrt(2 rate dt)`` from a measurement rate and duration."""
        return cls(0.5 - math.sqrt(2.0 * rate * dt))

    @property
    def a(self) -> float:
        return (math.sqrt(self.kappa) + math.sqrt(1.0 - self.kappa)) / 2.0

    @property
    def b(self) -> float:
        return (math.sqrt(self.kappa) - math.sqrt(1.0 - self.kappa)) / 2.0

    def operator(self, outcome: int) -> np.ndarray:
        return self.a * IDENTITY + _sign(outcome) * self.b * SIGMA_X

    def operators(self) -> tuple[np.ndarray, np.ndarray]:
        return self.operator(+1), self.operator(-1)


def _sign(outcome) -> int:
    if outcome in (1, "+"):
        return 1
    if outcome in (-1, "-"):
        return -1
    raise ValueError(f"outcome must be +1 or -1, got {outcome!r}")


def thermal_state(params: EngineParams) -> QubitState:
    return QubitState(0.0, 0.0, params.z0)


def apply_discrete(state: QubitState, m: DiscreteMeasurement, outcome) -> tuple[QubitState, float]:
    """Update ``state`` after outcome ``+1``/``-1``; return it with the outcome probability.

    ``M rho M`` for ``M = a I + s b sx`` only shifts x and rescales y, z by
    ``a^2 - b^2 = sqrt(kappa (1 - kappa))``.
    """
    s = _sign(outcome)
    bias = s * (2.0 * m.kappa - 1.0)
    denom = 1.0 + bias * state.x
    prob = 0.5 * denom
    if prob <= IMPOSSIBLE_PROB:
        raise ImpossibleOutcomeError(f"outcome {s:+d} has probability {prob:g}")
    shrink = 2.0 * math.sqrt(m.kappa * (1.0 - m.kappa))
    post = QubitState(
        (state.x + bias) / denom,
        shrink * state.y / denom,
        shrink * state.z / denom,
    )
    return post, prob


def backward_prob(state: QubitState, m: DiscreteMeasurement, outcome) -> float:
    """Probability that the opposite outcome undoes ``outcome``.

    Uses ``M_-M_+ = sqrt(kappa (1 - kappa)) I``.
    """
    _, prob = apply_discrete(state, m, outcome)
    return m.kappa * (1.0 - m.kappa) / prob


def arrow_discrete(m: DiscreteMeasurement | float) -> float:
    """Arrow-of-time statistic of a single discrete measurement (outcome independent)."""
    kappa = m.kappa if isinstance(m, DiscreteMeasurement) else float(m)
    if not 0.0 < kappa < 1.0:
        raise ValueError(f"kappa must lie in the open interval (0, 1), got {kappa}")
    return -2.0 * math.log(2.0) - math.log(kappa * (1.0 - kappa))


def feedback_rotate(state: QubitState) -> tuple[QubitState, float]:
    """Rotate about +y so the Bloch vector lands on the negative z-axis.

    The angle is ``atan2(x, -z)``; a state on the positive z-axis gets ``pi``.
    """
    angle = math.atan2(state.x, -state.z)
    c, s = math.cos(angle), math.sin(angle)
    # x' is zero by construction of the angle
    z_new = -state.x * s + state.z * c
    return QubitState(0.0, state.y, z_new), angle


def energy(state: QubitState, params: EngineParams | None = None) -> float:
    """Mean energy ``(1 + z) / 2`` of ``H = |1><1|`` in units of hbar*omega0."""
    return 0.5 * (1.0 + state.z)


def entropy_from_length(r):
    """Von Neumann entropy of a qubit whose Bloch vector has length ``r``."""
    r = np.minimum(np.asarray(r, dtype=float), 1.0)
    return entr(0.5 * (1.0 + r)) + entr(0.5 * (1.0 - r))


def von_neumann_entropy(state: QubitState) -> float:
    return float(entropy_from_length(state.length))


def linear_entropy(state: QubitState) -> float:
    """``2 (1 - tr rho^2) = 1 - r^2``."""
    return 1.0 - (state.x * state.x + state.y * state.y + state.z * state.z)
