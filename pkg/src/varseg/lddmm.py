"""Geodesic shooting of control points with a Gaussian deformation kernel.

The velocity field is ``v(x) = sum_i exp(-|x - q_i|^2 / sigma_V^2) p_i`` and
(q, p) follow Hamilton's equations for

    H(q, p) = 1/2 sum_ij (p_i . p_j) exp(-|q_i - q_j|^2 / sigma_V^2)

integrated with fixed-step RK4 on [0, 1]. ``grad_shoot`` is the exact
reverse-mode derivative of that discrete integrator.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._fmt import csv_lines
from .errors import DivergenceError

__all__ = [
    "ShootingState",
    "DeformationParams",
    "kernel_matrix",
    "hamiltonian",
    "reg_energy",
    "shoot",
    "shoot_arrays",
    "flow_points",
    "grad_shoot",
    "adjoint_arrays",
    "grid_lattice",
    "trajectory_to_csv",
]


@dataclass(frozen=True, eq=False)
class ShootingState:
    q: np.ndarray
    p: np.ndarray

    def __post_init__(self):
        q = np.asarray(self.q, dtype=float).reshape(-1, 2)
        p = np.asarray(self.p, dtype=float).reshape(-1, 2)
        if len(q) != len(p) or len(q) < 1:
            raise ValueError("q and p must have the same nonzero length")
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "p", p)


@dataclass(frozen=True)
class DeformationParams:
    sigma_V: float
    nsteps: int = 10

    def __post_init__(self):
        if not self.sigma_V > 0:
            raise ValueError(f"sigma_V must be > 0, got {self.sigma_V}")
        if int(self.nsteps) != self.nsteps or self.nsteps < 1:
            raise ValueError(f"nsteps must be a positive integer, got {self.nsteps}")


def kernel_matrix(x, y, sigma_V):
    d = x[:, None, :] - y[None, :, :]
    return np.exp(-(d[..., 0] ** 2 + d[..., 1] ** 2) / (sigma_V * sigma_V))


def hamiltonian(s: ShootingState, d: DeformationParams) -> float:
    K = kernel_matrix(s.q, s.q, d.sigma_V)
    return 0.5 * float(np.sum(K * (s.p @ s.p.T)))


def reg_energy(s0: ShootingState, d: DeformationParams) -> float:
    """Deformation energy of the geodesic started at ``s0``; equals twice the Hamiltonian."""
    return 2.0 * hamiltonian(s0, d)


def _rhs(q, p, s2):
    diff = q[:, None, :] - q[None, :, :]
    K = np.exp(-(diff[..., 0] ** 2 + diff[..., 1] ** 2) / s2)
    dq = K @ p
    c = (2.0 / s2) * K * (p @ p.T)
    dp = np.einsum("ij,ijk->ik", c, diff)
    return dq, dp


def _rhs_vjp(q, p, a, b, s2):
    """Pull back cotangents ``(a, b)`` of ``(dq, dp)`` to cotangents of ``(q, p)``."""
    diff = q[:, None, :] - q[None, :, :]
    K = np.exp(-(diff[..., 0] ** 2 + diff[..., 1] ** 2) / s2)
    pp = p @ p.T
    # dq = K p
    gp = K @ a
    S = a @ p.T
    coef = (-2.0 / s2) * K * (S + S.T)
    # dp_i = (2/s2) sum_j pp_ij K_ij (q_i - q_j)
    B = np.einsum("ik,ijk->ij", b, diff)
    Bs = B + B.T
    gp += (2.0 / s2) * (K * Bs) @ p
    T = (2.0 / s2) * pp * K
    gq_direct = T.sum(axis=1)[:, None] * b - T @ b
    coef += (-2.0 / s2) * (2.0 / s2) * pp * K * Bs
    gq = np.einsum("ij,ijk->ik", coef, diff) + gq_direct
    return gq, gp


def _check(arrs, step):
    for a in arrs:
        if not np.all(np.isfinite(a)):
            raise DivergenceError(f"non-finite state at integration step {step} (momenta too large?)", step)


@np.errstate(over="ignore", invalid="ignore")
def shoot_arrays(q0, p0, d: DeformationParams, xs=None):
    """RK4 trajectories as arrays ``(nsteps+1, N, 2)`` for q and p.

    When passive points ``xs`` are given they ride along in the same
    integration and their trajectory is returned as a third array.
    """
    s2 = d.sigma_V * d.sigma_V
    n, h = d.nsteps, 1.0 / d.nsteps
    q, p = np.array(q0, dtype=float), np.array(p0, dtype=float)
    qs = np.empty((n + 1,) + q.shape)
    ps = np.empty((n + 1,) + p.shape)
    qs[0], ps[0] = q, p
    x = None
    if xs is not None:
        x = np.array(xs, dtype=float).reshape(-1, 2)
        xt = np.empty((n + 1,) + x.shape)
        xt[0] = x

    def vx(xc, qc, pc):
        return kernel_matrix(xc, qc, d.sigma_V) @ pc

    for step in range(n):
        k1q, k1p = _rhs(q, p, s2)
        q2, p2 = q + 0.5 * h * k1q, p + 0.5 * h * k1p
        k2q, k2p = _rhs(q2, p2, s2)
        q3, p3 = q + 0.5 * h * k2q, p + 0.5 * h * k2p
        k3q, k3p = _rhs(q3, p3, s2)
        q4, p4 = q + h * k3q, p + h * k3p
        k4q, k4p = _rhs(q4, p4, s2)
        if x is not None:
            k1x = vx(x, q, p)
            k2x = vx(x + 0.5 * h * k1x, q2, p2)
            k3x = vx(x + 0.5 * h * k2x, q3, p3)
            k4x = vx(x + h * k3x, q4, p4)
            x = x + (h / 6.0) * (k1x + 2.0 * k2x + 2.0 * k3x + k4x)
            xt[step + 1] = x
        q = q + (h / 6.0) * (k1q + 2.0 * k2q + 2.0 * k3q + k4q)
        p = p + (h / 6.0) * (k1p + 2.0 * k2p + 2.0 * k3p + k4p)
        _check((q, p) if x is None else (q, p, x), step + 1)
        qs[step + 1], ps[step + 1] = q, p
    if x is None:
        return qs, ps
    return qs, ps, xt


def shoot(s0: ShootingState, d: DeformationParams) -> list[ShootingState]:
    """Integrate Hamilton's equations; returns the ``nsteps + 1`` states including ``s0``."""
    qs, ps = shoot_arrays(s0.q, s0.p, d)
    return [ShootingState(q, p) for q, p in zip(qs, ps)]


def flow_points(trajectory, d: DeformationParams, xs, return_path: bool = False):
    """Carry passive points along the flow of a shot trajectory.

    The points are re-integrated jointly with the control points from
    ``trajectory[0]``, so no interpolation between stored states is needed.
    """
    s0 = trajectory[0]
    _, _, xt = shoot_arrays(s0.q, s0.p, d, xs=xs)
    return xt if return_path else xt[-1]


@np.errstate(over="ignore", invalid="ignore")
def adjoint_arrays(qs, ps, d: DeformationParams, gq1, gp1=None):
    """Reverse sweep through the RK4 steps stored in ``qs``, ``ps``."""
    s2 = d.sigma_V * d.sigma_V
    n, h = d.nsteps, 1.0 / d.nsteps
    gq = np.array(gq1, dtype=float)
    gp = np.zeros_like(gq) if gp1 is None else np.array(gp1, dtype=float)
    for step in range(n - 1, -1, -1):
        q, p = qs[step], ps[step]
        # recompute the stage inputs of this step
        k1q, k1p = _rhs(q, p, s2)
        q2, p2 = q + 0.5 * h * k1q, p + 0.5 * h * k1p
        k2q, k2p = _rhs(q2, p2, s2)
        q3, p3 = q + 0.5 * h * k2q, p + 0.5 * h * k2p
        k3q, k3p = _rhs(q3, p3, s2)
        q4, p4 = q + h * k3q, p + h * k3p

        bk1q, bk1p = (h / 6.0) * gq, (h / 6.0) * gp
        bk2q, bk2p = (h / 3.0) * gq, (h / 3.0) * gp
        bk3q, bk3p = (h / 3.0) * gq, (h / 3.0) * gp
        bk4q, bk4p = (h / 6.0) * gq, (h / 6.0) * gp

        yq, yp = _rhs_vjp(q4, p4, bk4q, bk4p, s2)
        gq, gp = gq + yq, gp + yp
        bk3q, bk3p = bk3q + h * yq, bk3p + h * yp

        yq, yp = _rhs_vjp(q3, p3, bk3q, bk3p, s2)
        gq, gp = gq + yq, gp + yp
        bk2q, bk2p = bk2q + 0.5 * h * yq, bk2p + 0.5 * h * yp

        yq, yp = _rhs_vjp(q2, p2, bk2q, bk2p, s2)
        gq, gp = gq + yq, gp + yp
        bk1q, bk1p = bk1q + 0.5 * h * yq, bk1p + 0.5 * h * yp

        yq, yp = _rhs_vjp(q, p, bk1q, bk1p, s2)
        gq, gp = gq + yq, gp + yp
        _check((gq, gp), step)
    return gq, gp


def grad_shoot(s0: ShootingState, d: DeformationParams, gbar_q1, gbar_p1=None):
    """Derivatives w.r.t. ``(q0, p0)`` of a scalar whose gradient w.r.t. ``q(1)`` is ``gbar_q1``."""
    qs, ps = shoot_arrays(s0.q, s0.p, d)
    return adjoint_arrays(qs, ps, d, gbar_q1, gbar_p1)


def grid_lattice(width: float, height: float, spacing: float):
    """Axis-aligned lattice on ``[0, width-1] x [0, height-1]``, corners always included.

    Returns ``(points, nx, ny)`` with points ordered row by row.
    """
    if not spacing > 0:
        raise ValueError(f"spacing must be > 0, got {spacing}")

    def axis(extent):
        hi = max(extent - 1.0, 0.0)
        ticks = list(np.arange(0.0, hi, spacing))
        if not ticks or ticks[-1] < hi or hi == 0.0:
            ticks.append(hi)
        return np.unique(np.array(ticks))

    gx, gy = axis(width), axis(height)
    X, Y = np.meshgrid(gx, gy)
    return np.column_stack([X.ravel(), Y.ravel()]), len(gx), len(gy)


def trajectory_to_csv(trajectory) -> str:
    rows = []
    for step, s in enumerate(trajectory):
        for i in range(len(s.q)):
            rows.append((step, i, s.q[i, 0], s.q[i, 1], s.p[i, 0], s.p[i, 1]))
    return csv_lines("step,particle,qx,qy,px,py", rows)
