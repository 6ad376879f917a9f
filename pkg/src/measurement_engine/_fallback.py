"""Pure numpy trajectory kernel, vectorised across trajectories.

Mirrors ``_kernels.pyx`` step for step.
"""

import math

import numpy as np

LN2 = math.log(2.0)


def propagate(x0, y0, z0, uniforms, normals, dt_over_tau, keep_path=False):
    """Run sequential continuous sigma_x measurements for a block of trajectories.

    ``uniforms`` and ``normals`` have shape ``(n_traj, n_steps)``; the uniform
    picks the readout branch, the normal adds the detector noise.

    Returns ``(readouts, x, y, z, log_likelihood, path)`` where ``path`` is
    ``None`` unless ``keep_path`` is set, in which case it has shape
    ``(n_traj, n_steps + 1, 3)``.
    """
    uniforms = np.ascontiguousarray(uniforms, dtype=np.float64)
    normals = np.ascontiguousarray(normals, dtype=np.float64)
    n_traj, n_steps = uniforms.shape
    dt = float(dt_over_tau)
    sigma = math.sqrt(1.0 / dt)
    log_norm = -0.5 * math.log(2.0 * math.pi / dt)

    x = np.full(n_traj, float(x0))
    y = np.full(n_traj, float(y0))
    z = np.full(n_traj, float(z0))
    logl = np.zeros(n_traj)
    readouts = np.empty((n_traj, n_steps))
    path = None
    if keep_path:
        path = np.empty((n_traj, n_steps + 1, 3))
        path[:, 0, 0] = x
        path[:, 0, 1] = y
        path[:, 0, 2] = z

    for k in range(n_steps):
        branch = np.where(uniforms[:, k] < 0.5 * (1.0 + x), 1.0, -1.0)
        r = branch + sigma * normals[:, k]
        readouts[:, k] = r
        g = dt * r
        ag = np.abs(g)
        # cosh/sinh scaled by 2 e^{-|g|} so large |g| cannot overflow
        e = np.exp(-ag)
        a = e * e
        c = 1.0 + a
        s = np.copysign(1.0 - a, g)
        d = c + x * s
        scale = 2.0 * e / d
        x = (x * c + s) / d
        y = y * scale
        z = z * scale
        logl += log_norm - 0.5 * dt * (r * r + 1.0) + ag - LN2 + np.log(d)
        if keep_path:
            path[:, k + 1, 0] = x
            path[:, k + 1, 1] = y
            path[:, k + 1, 2] = z

    return readouts, x, y, z, logl, path
