"""Discrete varifolds, the Gaussian x Cauchy-Binet kernel metric and curve losses.

A curve enters the metric through its edges: each edge contributes an atom at
its midpoint, with the edge length as mass and the left unit normal as
direction. Gradients with respect to the curve vertices are analytic.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegeneracyError

__all__ = [
    "KernelParams",
    "PolyCurve",
    "VarifoldAtoms",
    "closed_polygon",
    "curve_to_atoms",
    "inner_product",
    "loss_L0",
    "loss_L1",
    "loss_and_grad",
    "grad_loss_L1",
    "grad_loss_L0",
]

BLOCK = 1024


@dataclass(frozen=True)
class KernelParams:
    """Product kernel ``exp(-|x-y|^2 / sigma^2) * (u.v)^2``.

    Other kernels only need to override the four scalar hooks below; the
    inner product and the gradients are written against them.
    """

    sigma: float

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError(f"kernel sigma must be > 0, got {self.sigma}")

    def position(self, d2):
        return np.exp(-d2 / (self.sigma * self.sigma))

    def position_d(self, d2, value):
        # derivative with respect to the squared distance
        return -value / (self.sigma * self.sigma)

    def direction(self, c):
        return c * c

    def direction_d(self, c):
        return 2.0 * c


@dataclass(frozen=True, eq=False)
class VarifoldAtoms:
    centers: np.ndarray
    dirs: np.ndarray
    masses: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.centers, dtype=float).reshape(-1, 2)
        d = np.asarray(self.dirs, dtype=float).reshape(-1, 2)
        m = np.asarray(self.masses, dtype=float).reshape(-1)
        if not (len(c) == len(d) == len(m)):
            raise ValueError("centers, dirs and masses must have the same length")
        if np.any(m < 0):
            raise ValueError("masses must be nonnegative")
        if len(d) and np.max(np.abs(np.hypot(d[:, 0], d[:, 1]) - 1.0)) > 1e-9:
            raise ValueError("dirs must be unit vectors")
        object.__setattr__(self, "centers", c)
        object.__setattr__(self, "dirs", d)
        object.__setattr__(self, "masses", m)

    def __len__(self):
        return len(self.masses)

    def scaled(self, beta: float) -> "VarifoldAtoms":
        return VarifoldAtoms(self.centers, self.dirs, beta * self.masses)


@dataclass(frozen=True, eq=False)
class PolyCurve:
    """Vertices ``(N, 2)`` and edges ``(M, 2)`` as vertex index pairs."""

    vertices: np.ndarray
    edges: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.vertices, dtype=float).reshape(-1, 2)
        e = np.asarray(self.edges, dtype=np.intp).reshape(-1, 2)
        if e.size and (e.min() < 0 or e.max() >= len(v)):
            raise ValueError("edge index out of range")
        v.setflags(write=False)
        e.setflags(write=False)
        object.__setattr__(self, "vertices", v)
        object.__setattr__(self, "edges", e)

    def with_vertices(self, vertices) -> "PolyCurve":
        return PolyCurve(vertices, self.edges)


def closed_polygon(vertices) -> PolyCurve:
    n = len(vertices)
    idx = np.arange(n)
    return PolyCurve(vertices, np.column_stack([idx, (idx + 1) % n]))


def _edge_geometry(curve: PolyCurve):
    V, E = curve.vertices, curve.edges
    t = V[E[:, 1]] - V[E[:, 0]]
    L = np.hypot(t[:, 0], t[:, 1])
    if np.any(L <= 0):
        bad = int(np.argmin(L))
        raise DegeneracyError(f"zero-length edge {tuple(E[bad])}")
    tau = t / L[:, None]
    centers = 0.5 * (V[E[:, 0]] + V[E[:, 1]])
    return centers, L, tau


def _rot90(u):
    # (x, y) -> (-y, x)
    return np.column_stack([-u[:, 1], u[:, 0]])


def curve_to_atoms(c: PolyCurve) -> VarifoldAtoms:
    centers, L, tau = _edge_geometry(c)
    return VarifoldAtoms(centers, _rot90(tau), L)


def _sqdist(x, y):
    d = x[:, None, :] - y[None, :, :]
    return d[..., 0] ** 2 + d[..., 1] ** 2


def inner_product(a: VarifoldAtoms, b: VarifoldAtoms, k: KernelParams) -> float:
    """Kernel inner product of two atom sets.

    Rows of ``a`` are processed in fixed blocks and the block partial sums
    are accumulated in order, so the result does not depend on memory size.
    """
    total = 0.0
    for s in range(0, len(a), BLOCK):
        sl = slice(s, s + BLOCK)
        g = k.position(_sqdist(a.centers[sl], b.centers))
        cos = a.dirs[sl] @ b.dirs.T
        w = g * k.direction(cos)
        total += float(a.masses[sl] @ (w @ b.masses))
    return total


def loss_L0(c_atoms: VarifoldAtoms, i_atoms: VarifoldAtoms, k: KernelParams, ii: float | None = None) -> float:
    """Squared kernel distance between the curve and the field."""
    if ii is None:
        ii = inner_product(i_atoms, i_atoms, k)
    return inner_product(c_atoms, c_atoms, k) + ii - 2.0 * inner_product(i_atoms, c_atoms, k)


def loss_L1(c_atoms: VarifoldAtoms, i_atoms: VarifoldAtoms, k: KernelParams,
            ii: float | None = None) -> tuple[float, float]:
    """Distance to the best nonnegative rescaling of the curve.

    Returns ``(loss, alpha)`` with ``alpha = <I,c> / <c,c>``.
    """
    cc = inner_product(c_atoms, c_atoms, k)
    if not cc > 0:
        raise DegeneracyError("curve has zero varifold norm")
    if ii is None:
        ii = inner_product(i_atoms, i_atoms, k)
    ic = inner_product(i_atoms, c_atoms, k)
    alpha = ic / cc
    return ii - ic * alpha, alpha


def _grad_pairs(centers, L, tau, ycent, ydirs, ymass, k: KernelParams):
    """Gradients of sum_ij L_i m_j rho(c_i, y_j) gamma(n_i . d_j) w.r.t. c_i and t_i.

    With the left normal, ``n_i . d_j = tau_i . w_j`` where ``w_j`` is ``d_j``
    rotated by -90 degrees.
    """
    w = -_rot90(ydirs)
    diff = centers[:, None, :] - ycent[None, :, :]
    d2 = diff[..., 0] ** 2 + diff[..., 1] ** 2
    g = k.position(d2)
    cos = tau @ w.T
    gam = k.direction(cos)
    gam_d = k.direction_d(cos)
    value = float(L @ (g * gam) @ ymass)
    # d/dc_i
    coef = 2.0 * k.position_d(d2, g) * gam * (L[:, None] * ymass[None, :])
    gc = np.einsum("ij,ijk->ik", coef, diff)
    # d/dt_i of |t| gamma(tau.w) = gamma tau + gamma' (w - (tau.w) tau)
    gm = g * ymass[None, :]
    a = gm * (gam - gam_d * cos)
    gt = a.sum(axis=1)[:, None] * tau + (gm * gam_d) @ w
    return value, gc, gt


def _scatter_to_vertices(curve: PolyCurve, gc, gt):
    E = curve.edges
    out = np.zeros_like(curve.vertices)
    np.add.at(out, E[:, 0], 0.5 * gc - gt)
    np.add.at(out, E[:, 1], 0.5 * gc + gt)
    return out


def loss_and_grad(curve: PolyCurve, i_atoms: VarifoldAtoms, k: KernelParams,
                  kind: str = "L1", ii: float | None = None):
    """Return ``(loss, alpha, dloss/dvertices)`` for ``kind`` in {"L1", "L0"}.

    For L0 ``alpha`` is reported as 1 (no rescaling).
    """
    centers, L, tau = _edge_geometry(curve)
    if ii is None:
        ii = inner_product(i_atoms, i_atoms, k)
    ic, gc_ic, gt_ic = _grad_pairs(centers, L, tau, i_atoms.centers, i_atoms.dirs, i_atoms.masses, k)
    cc, gc_cc, gt_cc = _grad_pairs(centers, L, tau, centers, _rot90(tau), L, k)
    # both indices of <c,c> move with the curve
    gc_cc, gt_cc = 2.0 * gc_cc, 2.0 * gt_cc
    if kind == "L1":
        if not cc > 0:
            raise DegeneracyError("curve has zero varifold norm")
        alpha = ic / cc
        loss = ii - ic * alpha
        a_cc, a_ic = alpha * alpha, -2.0 * alpha
    elif kind == "L0":
        alpha = 1.0
        loss = cc + ii - 2.0 * ic
        a_cc, a_ic = 1.0, -2.0
    else:
        raise ValueError(f"unknown loss kind {kind!r}")
    grad = _scatter_to_vertices(curve, a_cc * gc_cc + a_ic * gc_ic, a_cc * gt_cc + a_ic * gt_ic)
    return loss, alpha, grad


def grad_loss_L1(c: PolyCurve, i_atoms: VarifoldAtoms, k: KernelParams, ii: float | None = None) -> np.ndarray:
    return loss_and_grad(c, i_atoms, k, "L1", ii)[2]


def grad_loss_L0(c: PolyCurve, i_atoms: VarifoldAtoms, k: KernelParams, ii: float | None = None) -> np.ndarray:
    return loss_and_grad(c, i_atoms, k, "L0", ii)[2]
