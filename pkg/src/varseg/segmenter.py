"""Template initialization, total energy over initial momenta, and Adam optimization."""
from __future__ import annotations

import dataclasses
import warnings
from dataclasses import dataclass, field as dc_field

import numpy as np

from .errors import DivergenceError, EmptyFieldError, VarsegError
from .gradfield import MASS_MODES, GradientField, gradient_field
from .imageio import Image
from .lddmm import DeformationParams, adjoint_arrays, kernel_matrix, shoot_arrays
from .varifold import KernelParams, PolyCurve, closed_polygon, inner_product, loss_and_grad

__all__ = [
    "AdamParams",
    "SegmentationConfig",
    "SegmentationResult",
    "EnergyModel",
    "Adam",
    "init_ellipse",
    "total_energy",
    "grad_total_energy",
    "optimize",
    "segment",
    "is_simple_polygon",
]


@dataclass(frozen=True)
class AdamParams:
    lr: float = 0.1
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    def __post_init__(self):
        if not self.lr > 0:
            raise ValueError("adam lr must be > 0")
        if not (0 <= self.beta1 < 1 and 0 <= self.beta2 < 1):
            raise ValueError("adam betas must lie in [0, 1)")
        if not self.eps > 0:
            raise ValueError("adam eps must be > 0")


@dataclass(frozen=True)
class SegmentationConfig:
    """Hyperparameters of the whole pipeline.

    ``sigma_var`` and ``sigma_V`` may be left as ``None``; :meth:`resolve`
    then sets them from the image size (6% and 20% of the larger side).
    ``loss`` selects the reweighted loss ("L1", default) or the plain
    squared kernel distance ("L0").
    """

    sigma_var: float | None = None
    sigma_V: float | None = None
    nsteps: int = 10
    lambda_loss: float = 1.0
    threshold_rel: float = 0.2
    smooth_sigma: float = 1.0
    mass_mode: str = "unit"
    ellipse_k: float = 1.7
    n_vertices: int = 40
    adam: AdamParams = dc_field(default_factory=AdamParams)
    iterations: int = 300
    snapshot_every: int = 0
    seed: int = 0
    loss: str = "L1"

    def __post_init__(self):
        if isinstance(self.adam, dict):
            object.__setattr__(self, "adam", AdamParams(**self.adam))
        for name in ("sigma_var", "sigma_V"):
            v = getattr(self, name)
            if v is not None and not v > 0:
                raise ValueError(f"{name} must be > 0, got {v}")
        if int(self.nsteps) != self.nsteps or self.nsteps < 1:
            raise ValueError("nsteps must be a positive integer")
        if not self.lambda_loss >= 0:
            raise ValueError("lambda_loss must be >= 0")
        if not 0 <= self.threshold_rel <= 1:
            raise ValueError("threshold_rel must be in [0, 1]")
        if not self.smooth_sigma >= 0:
            raise ValueError("smooth_sigma must be >= 0")
        if self.mass_mode not in MASS_MODES:
            raise ValueError(f"mass_mode must be one of {MASS_MODES}")
        if not self.ellipse_k > 0:
            raise ValueError("ellipse_k must be > 0")
        if int(self.n_vertices) != self.n_vertices or self.n_vertices < 3:
            raise ValueError("n_vertices must be an integer >= 3")
        if int(self.iterations) != self.iterations or self.iterations < 1:
            raise ValueError("iterations must be a positive integer")
        if int(self.snapshot_every) != self.snapshot_every or self.snapshot_every < 0:
            raise ValueError("snapshot_every must be a nonnegative integer")
        if self.loss not in ("L1", "L0"):
            raise ValueError("loss must be 'L1' or 'L0'")

    def resolve(self, width: int, height: int) -> "SegmentationConfig":
        side = max(width, height)
        return dataclasses.replace(
            self,
            sigma_var=self.sigma_var if self.sigma_var is not None else 0.06 * side,
            sigma_V=self.sigma_V if self.sigma_V is not None else 0.2 * side,
        )

    def to_flat_dict(self) -> dict:
        d = dataclasses.asdict(self)
        adam = d.pop("adam")
        d.update({f"adam_{k}": v for k, v in adam.items()})
        return d


@dataclass(frozen=True, eq=False)
class SegmentationResult:
    final_curve: PolyCurve
    p0: np.ndarray
    energy_history: list
    snapshots: list
    config: SegmentationConfig | None = None
    field: GradientField | None = None
    template: PolyCurve | None = None


def init_ellipse(field: GradientField, k: float = 1.7, n_vertices: int = 40) -> PolyCurve:
    """Counter-clockwise ellipse centered on the field with semi-axes ``k * std`` (at least 5 px)."""
    if len(field) == 0:
        raise EmptyFieldError("empty gradient field: cannot place the template")
    if n_vertices < 3:
        raise ValueError("n_vertices must be >= 3")
    pts = field.points
    cx, cy = pts.mean(axis=0)
    sx, sy = pts.std(axis=0)
    a, b = max(k * sx, 5.0), max(k * sy, 5.0)
    th = 2.0 * np.pi * np.arange(n_vertices) / n_vertices
    # CCW in a y-up frame; with image y pointing down the turn is reversed,
    # which the loss does not see because the directional kernel is even
    return closed_polygon(np.column_stack([cx + a * np.cos(th), cy + b * np.sin(th)]))


class EnergyModel:
    """Total energy ``reg(p0) + lambda * loss(curve at t=1)`` for a fixed template and field.

    The field self-product is computed once.
    """

    def __init__(self, template: PolyCurve, field, cfg: SegmentationConfig):
        if cfg.sigma_var is None or cfg.sigma_V is None:
            raise ValueError("config must be resolved (sigma_var and sigma_V set)")
        self.template = template
        self.atoms = field.atoms() if hasattr(field, "atoms") else field
        self.cfg = cfg
        self.kernel = KernelParams(cfg.sigma_var)
        self.deform = DeformationParams(cfg.sigma_V, cfg.nsteps)
        self.ii = inner_product(self.atoms, self.atoms, self.kernel)
        self.K0 = kernel_matrix(template.vertices, template.vertices, cfg.sigma_V)

    def _eval(self, p0, with_grad):
        q0 = self.template.vertices
        p0 = np.asarray(p0, dtype=float).reshape(q0.shape)
        qs, ps = shoot_arrays(q0, p0, self.deform)
        reg = float(np.sum(p0 * (self.K0 @ p0)))
        curve1 = self.template.with_vertices(qs[-1])
        loss, alpha, gq1 = loss_and_grad(curve1, self.atoms, self.kernel, self.cfg.loss, self.ii)
        lam = self.cfg.lambda_loss
        total = reg + lam * loss
        if not np.isfinite(total):
            raise DivergenceError("non-finite energy")
        if not with_grad:
            return total, reg, loss, alpha, qs[-1]
        if lam != 0:
            _, gp = adjoint_arrays(qs, ps, self.deform, lam * gq1)
        else:
            gp = np.zeros_like(p0)
        grad = 2.0 * (self.K0 @ p0) + gp
        return total, reg, loss, alpha, qs[-1], grad

    def energy(self, p0):
        """``(total, reg, loss, alpha)``"""
        return self._eval(p0, False)[:4]

    def energy_and_grad(self, p0):
        total, reg, loss, alpha, q1, grad = self._eval(p0, True)
        return (total, reg, loss, alpha), grad, q1


def total_energy(p0, template: PolyCurve, field, cfg: SegmentationConfig):
    return EnergyModel(template, field, cfg).energy(p0)


def grad_total_energy(p0, template: PolyCurve, field, cfg: SegmentationConfig) -> np.ndarray:
    return EnergyModel(template, field, cfg).energy_and_grad(p0)[1]


class Adam:
    """Adam with bias-corrected moment estimates, one array of parameters."""

    def __init__(self, params: AdamParams, shape):
        self.hp = params
        self.m = np.zeros(shape)
        self.v = np.zeros(shape)
        self.t = 0

    def step(self, x, g):
        hp = self.hp
        self.t += 1
        self.m = hp.beta1 * self.m + (1.0 - hp.beta1) * g
        self.v = hp.beta2 * self.v + (1.0 - hp.beta2) * (g * g)
        mhat = self.m / (1.0 - hp.beta1 ** self.t)
        vhat = self.v / (1.0 - hp.beta2 ** self.t)
        return x - hp.lr * mhat / (np.sqrt(vhat) + hp.eps)


def optimize(template: PolyCurve, field, cfg: SegmentationConfig, callback=None, p_init=None) -> SegmentationResult:
    """Run Adam on the initial momenta, starting from zero unless ``p_init`` is given.

    ``energy_history`` holds ``(iteration, total, reg, loss, alpha)`` for
    iterations 0..cfg.iterations; snapshots are taken at multiples of
    ``snapshot_every`` (never when it is 0).
    """
    model = EnergyModel(template, field, cfg)
    p0 = np.zeros_like(template.vertices) if p_init is None else np.array(p_init, dtype=float).reshape(-1, 2)
    opt = Adam(cfg.adam, p0.shape)
    history, snapshots = [], []
    for it in range(cfg.iterations + 1):
        try:
            (total, reg, loss, alpha), grad, q1 = model.energy_and_grad(p0)
        except DivergenceError as exc:
            raise DivergenceError(f"optimizer diverged at iteration {it}: {exc}", it) from exc
        history.append((it, total, reg, loss, alpha))
        if cfg.snapshot_every and it % cfg.snapshot_every == 0:
            snapshots.append((it, template.with_vertices(q1)))
        if callback is not None:
            callback(it, history[-1])
        if it == cfg.iterations:
            break
        p0 = opt.step(p0, grad)
        if not np.all(np.isfinite(p0)):
            raise DivergenceError(f"optimizer diverged at iteration {it}: non-finite momenta", it)
    final = template.with_vertices(q1)
    if not is_simple_polygon(final):
        warnings.warn("final curve self-intersects; consider a larger sigma_V or smaller lr", RuntimeWarning,
                      stacklevel=2)
    return SegmentationResult(final, p0, history, snapshots, cfg, None, template)


def _staged(stage, fn, *args):
    try:
        return fn(*args)
    except VarsegError as exc:
        msg = f"{stage}: {exc}"
        err = type(exc)(msg)
        if isinstance(exc, DivergenceError):
            err.step = exc.step
        raise err from exc


def segment(img: Image, cfg: SegmentationConfig | None = None, callback=None) -> SegmentationResult:
    """Full pipeline: smooth, gradient field, ellipse template, optimization."""
    cfg = (cfg or SegmentationConfig()).resolve(img.width, img.height)
    field = _staged("gradfield", gradient_field, img, cfg.smooth_sigma, cfg.threshold_rel, cfg.mass_mode)
    template = _staged("template", init_ellipse, field, cfg.ellipse_k, cfg.n_vertices)
    res = _staged("optimize", optimize, template, field, cfg, callback)
    return dataclasses.replace(res, field=field)


def _segments_cross(a, b, c, d):
    def orient(p, q, r):
        return np.sign((q[0] - p[0]) * (r[1] - p[1]) - (q[1] - p[1]) * (r[0] - p[0]))

    def on_seg(p, q, r):
        return min(p[0], q[0]) <= r[0] <= max(p[0], q[0]) and min(p[1], q[1]) <= r[1] <= max(p[1], q[1])

    o1, o2, o3, o4 = orient(a, b, c), orient(a, b, d), orient(c, d, a), orient(c, d, b)
    if o1 != o2 and o3 != o4:
        return True
    return ((o1 == 0 and on_seg(a, b, c)) or (o2 == 0 and on_seg(a, b, d))
            or (o3 == 0 and on_seg(c, d, a)) or (o4 == 0 and on_seg(c, d, b)))


def is_simple_polygon(curve: PolyCurve) -> bool:
    """True when no two non-adjacent edges intersect."""
    V, E = curve.vertices, curve.edges
    m = len(E)
    for i in range(m):
        for j in range(i + 1, m):
            if set(E[i]) & set(E[j]):
                continue
            if _segments_cross(V[E[i, 0]], V[E[i, 1]], V[E[j, 0]], V[E[j, 1]]):
                return False
    return True
