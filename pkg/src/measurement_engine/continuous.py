"""Sequences of time-continuous weak sigma_x measurements followed by feedback.

Each measurement step has readout density ``p(r) = p_+ N(+1, tau/dt) +
p_- N(-1, tau/dt)`` with ``p_pm = (1 +- x) / 2`` and Kraus operator
``(dt / 2 pi tau)^(1/4) exp(-dt (r - sx)^2 / 4 tau)``.  All readouts of a
trajectory commute, so from a thermal start the state after n steps only
depends on ``G = (dt/tau) sum r``.

Trajectory ``i`` of an ensemble draws its randomness from a Philox stream
whose key comes from ``master_seed`` and whose counter starts at ``i``;
ensembles are therefore bit-identical for any worker count.
"""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import expm

from . import kernels
from .qubit import (
    IDENTITY,
    SIGMA_X,
    EngineParams,
    QubitState,
    entropy_from_length,
    thermal_state,
)

# fixed block size keeps floating-point work identical for any worker count
CHUNK = 2048


@dataclass(frozen=True)
class ContinuousParams:
    dt_over_tau: float = 0.01
    n_steps: int = 15
    n_traj: int = 1
    master_seed: int = 42

    def __post_init__(self):
        if not self.dt_over_tau > 0:
            raise ValueError(f"dt_over_tau must be > 0, got {self.dt_over_tau}")
        if int(self.n_steps) != self.n_steps or self.n_steps < 0:
            raise ValueError(f"n_steps must be a non-negative integer, got {self.n_steps}")
        if int(self.n_traj) != self.n_traj or self.n_traj < 1:
            raise ValueError(f"n_traj must be a positive integer, got {self.n_traj}")
        if int(self.master_seed) != self.master_seed or not 0 <= self.master_seed < 2**64:
            raise ValueError(f"master_seed must be a 64-bit unsigned integer, got {self.master_seed}")
        if self.dt_over_tau > 0.1:
            warnings.warn(
                f"dt_over_tau={self.dt_over_tau} is outside the continuum regime (<= 0.1)",
                stacklevel=2,
            )

    @property
    def duration(self) -> float:
        """Total measurement time in units of tau."""
        return self.n_steps * self.dt_over_tau


@dataclass(frozen=True)
class TrajectoryRecord:
    index: int
    readouts: np.ndarray
    Q: float
    W_ext: float
    Q_M: float
    dS_M: float
    pre_feedback: QubitState
    final_state: QubitState
    log_likelihood: float
    states: np.ndarray | None = field(default=None, repr=False)


@dataclass
class Ensemble:
    records: list[TrajectoryRecord]
    summary: dict

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(rec, name) for rec in self.records])


# -- single-step primitives -------------------------------------------------------

def readout_from_draws(x: float, uniform: float, normal: float, dt_over_tau: float) -> float:
    """Map one uniform and one standard normal draw to a readout."""
    branch = 1.0 if uniform < 0.5 * (1.0 + x) else -1.0
    return branch + math.sqrt(1.0 / dt_over_tau) * normal


def sample_readout(state: QubitState, dt_over_tau: float, rng: np.random.Generator) -> float:
    return readout_from_draws(state.x, rng.random(), rng.standard_normal(), dt_over_tau)


def step(state: QubitState, r: float, dt_over_tau: float) -> tuple[QubitState, float]:
    """Apply the forward Kraus operator for readout ``r``.

    Returns the normalised state and ``ln tr(M rho M)``, the log density of
    ``r``.  Hyperbolic functions are evaluated scaled by ``2 e^{-|g|}``.
    """
    g = dt_over_tau * r
    ag = abs(g)
    e = math.exp(-ag)
    a = e * e
    c = 1.0 + a
    s = math.copysign(1.0 - a, g)
    d = c + state.x * s
    if not d > 0:
        raise FloatingPointError(f"non-positive normalisation {d} for readout {r}")
    scale = 2.0 * e / d
    x_new = (state.x * c + s) / d
    # renormalise rounding drift past the Bloch sphere
    new = _clip_state(x_new, state.y * scale, state.z * scale)
    logl = (
        -0.5 * math.log(2.0 * math.pi / dt_over_tau)
        - 0.5 * dt_over_tau * (r * r + 1.0)
        + ag
        - math.log(2.0)
        + math.log(d)
    )
    return new, logl


def _clip_state(x, y, z) -> QubitState:
    r2 = x * x + y * y + z * z
    if r2 > 1.0:
        k = 1.0 / math.sqrt(r2)
        x, y, z = x * k, y * k, z * k
    return QubitState(x, y, z)


def kraus_operator(r: float, dt_over_tau: float, backward: bool = False) -> np.ndarray:
    """Explicit 2x2 forward (or backward, ``r -> -r``) Kraus operator."""
    sign = -1.0 if backward else 1.0
    arg = r * IDENTITY - sign * SIGMA_X
    prefactor = (dt_over_tau / (2.0 * math.pi)) ** 0.25
    return prefactor * expm(-dt_over_tau * (arg @ arg) / 4.0)


def arrow_from_sum(G):
    """``ln cosh^2 G``, evaluated without overflow."""
    ag = np.abs(np.asarray(G, dtype=float))
    return 2.0 * (ag + np.log1p(np.exp(-2.0 * ag)) - math.log(2.0))


def arrow_operator_oracle(readouts, initial: QubitState, dt_over_tau: float) -> float:
    """``ln P_F(record | initial) - ln P_B(reversed record | final)`` from matrix products.

    Both probabilities are accumulated in the log domain, renormalising the
    density matrix after every operator.
    """
    rho = initial.density_matrix()
    log_forward = 0.0
    for r in readouts:
        m = kraus_operator(r, dt_over_tau)
        rho = m @ rho @ m.conj().T
        tr = np.real(np.trace(rho))
        log_forward += math.log(tr)
        rho = rho / tr
    log_backward = 0.0
    for r in reversed(list(readouts)):
        m = kraus_operator(r, dt_over_tau, backward=True)
        rho = m @ rho @ m.conj().T
        tr = np.real(np.trace(rho))
        log_backward += math.log(tr)
        rho = rho / tr
    return log_forward - log_backward


def arrow_continuous(readouts, initial: QubitState, dt_over_tau: float) -> float:
    """Arrow of time of a completed readout record.

    Uses ``ln cosh^2((dt/tau) sum r)`` for thermal (x = y = 0) starts and the
    operator-product route otherwise.
    """
    if initial.x != 0.0 or initial.y != 0.0:
        return arrow_operator_oracle(readouts, initial, dt_over_tau)
    G = dt_over_tau * math.fsum(readouts)
    return float(arrow_from_sum(G))


# -- trajectories ---------------------------------------------------------------------

def _stream_key(master_seed: int) -> np.ndarray:
    return np.random.SeedSequence(int(master_seed)).generate_state(2, np.uint64)


def trajectory_stream(master_seed: int, traj_index: int) -> np.random.Generator:
    """Philox stream for one trajectory.

    The key is derived from ``master_seed`` and the third counter word holds
    ``traj_index``, so streams of different trajectories never overlap.
    """
    bits = np.random.Philox(key=_stream_key(master_seed), counter=[0, 0, int(traj_index), 0])
    return np.random.Generator(bits)


def _draws(master_seed: int, indices, n_steps: int) -> tuple[np.ndarray, np.ndarray]:
    """Uniform and normal draws per trajectory, identical to :func:`trajectory_stream`.

    One bit generator is re-pointed at each trajectory's counter, which is
    much cheaper than constructing a generator per trajectory.
    """
    uniforms = np.empty((len(indices), n_steps))
    normals = np.empty((len(indices), n_steps))
    bits = np.random.Philox(key=_stream_key(master_seed))
    rng = np.random.Generator(bits)
    state = bits.state
    for row, idx in enumerate(indices):
        state["state"]["counter"][:] = (0, 0, int(idx), 0)
        state["buffer_pos"] = 4
        state["has_uint32"] = 0
        state["uinteger"] = 0
        bits.state = state
        uniforms[row] = rng.random(n_steps)
        normals[row] = rng.standard_normal(n_steps)
    return uniforms, normals


def _simulate_block(args):
    z0, cparams, start, stop, keep_states, backend = args
    indices = range(start, stop)
    uniforms, normals = _draws(cparams.master_seed, indices, cparams.n_steps)
    readouts, x, y, z, logl, path = kernels.propagate(
        0.0, 0.0, z0, uniforms, normals, cparams.dt_over_tau, keep_states, backend
    )
    G = cparams.dt_over_tau * readouts.sum(axis=1)
    return start, readouts, x, y, z, logl, G, path


def _records(z0, start, readouts, x, y, z, logl, G, path) -> list[TrajectoryRecord]:
    Q = arrow_from_sum(G)
    # optimal feedback keeps y and sends (x, z) to (0, -sqrt(x^2 + z^2))
    z_post = -np.sqrt(x * x + z * z)
    w_ext = 0.5 * (z - z_post)
    q_m = 0.5 * (z - z0)
    ds = entropy_from_length(np.sqrt(x * x + y * y + z * z)) - entropy_from_length(abs(z0))
    records = []
    for j in range(len(x)):
        pre = _clip_state(float(x[j]), float(y[j]), float(z[j]))
        records.append(
            TrajectoryRecord(
                index=start + j,
                readouts=readouts[j],
                Q=float(Q[j]),
                W_ext=float(w_ext[j]),
                Q_M=float(q_m[j]),
                dS_M=float(ds[j]),
                pre_feedback=pre,
                final_state=_clip_state(0.0, float(y[j]), float(z_post[j])),
                log_likelihood=float(logl[j]),
                states=None if path is None else path[j],
            )
        )
    return records


def run_trajectory(
    params: EngineParams,
    cparams: ContinuousParams,
    traj_index: int,
    keep_states: bool = False,
    backend: str | None = None,
) -> TrajectoryRecord:
    """Measure ``n_steps`` times from the thermal state, then apply optimal feedback."""
    if not 0 <= traj_index < cparams.n_traj:
        raise IndexError(f"traj_index {traj_index} outside [0, {cparams.n_traj})")
    z0 = thermal_state(params).z
    block = _simulate_block((z0, cparams, traj_index, traj_index + 1, keep_states, backend))
    return _records(z0, *block)[0]


def summarize(records: list[TrajectoryRecord], z0: float) -> dict:
    """Means and standard errors of the per-trajectory observables."""
    n = len(records)
    cols = {
        "Q": [r.Q for r in records],
        "W_ext": [r.W_ext for r in records],
        "Q_M": [r.Q_M for r in records],
        "dS_M": [r.dS_M for r in records],
        "z_pre": [r.pre_feedback.z for r in records],
        "exp_minus_half_Q": [math.exp(-0.5 * r.Q) for r in records],
        "exp_minus_Q": [math.exp(-r.Q) for r in records],
    }
    out = {"n_traj": n, "mean": {}, "stderr": {}}
    for name, values in cols.items():
        arr = np.asarray(values)
        out["mean"][name] = float(arr.mean())
        out["stderr"][name] = float(arr.std(ddof=1) / math.sqrt(n)) if n > 1 else math.nan
    if -1.0 < z0 < 0.0:
        sl0 = 1.0 - z0 * z0
        ft = [
            math.exp(-r.Q + math.log(sl0) - math.log(_linear_entropy(r.pre_feedback)))
            for r in records
        ]
        out["fluctuation_average"] = float(np.mean(ft))
    return out


def _linear_entropy(state: QubitState) -> float:
    return 1.0 - (state.x * state.x + state.y * state.y + state.z * state.z)


def run_ensemble(
    params: EngineParams,
    cparams: ContinuousParams,
    workers: int = 1,
    keep_states: bool = False,
    backend: str | None = None,
) -> Ensemble:
    """Simulate ``n_traj`` trajectories, optionally across worker processes.

    Work is split into fixed blocks of ``CHUNK`` trajectories and gathered in
    index order, so the result does not depend on ``workers``.
    """
    z0 = thermal_state(params).z
    jobs = [
        (z0, cparams, start, min(start + CHUNK, cparams.n_traj), keep_states, backend)
        for start in range(0, cparams.n_traj, CHUNK)
    ]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            blocks = list(pool.map(_simulate_block, jobs))
    else:
        blocks = [_simulate_block(job) for job in jobs]
    blocks.sort(key=lambda b: b[0])

    records = []
    for block in blocks:
        records.extend(_records(z0, *block))
    return Ensemble(records=records, summary=summarize(records, z0))


def expected_mean_heat(z0: float, duration: float) -> float:
    """Ensemble-mean measurement heat ``|z0| (1 - e^{-T/2}) / 2`` for total duration ``T``."""
    return 0.5 * z0 * math.expm1(-0.5 * duration)


def expected_mean_z(z0: float, duration: float) -> float:
    """Non-selective dephasing of the z component."""
    return z0 * math.exp(-0.5 * duration)
