"""Fitting parameterized matrices to targets, plus a small training demo.

Plain gradient descent with momentum over the free parameters.  Defaults
(momentum 0.9, learning rate 0.05 for the two-frame scheme and 0.02 for the
chain scheme) come from a coarse sweep on 16x12 rank-4 targets; they are
deliberately unsophisticated so that runs are reproducible bit for bit from
a seed.

The demo trains a two-layer network (parameterized linear, relu,
parameterized linear) on synthetic regression data whose ground-truth map
has Lipschitz constant 1.  Because every assembled layer has spectral norm
exactly 1 by construction, the per-layer norms and their product bound stay
pinned at 1 for the whole run; the demo report records them each step so
the invariant is checkable from outside.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .autodiff import (
    FrobeniusLoss,
    _penalty_floored,
    _vjp_full,
    assemble_with_tape,
    loss_value_and_grad,
    pack,
    unpack,
)
from .dense import svd_full
from .errors import DivergenceError, DomainError
from .spectral import lipschitz_bound, stable_rank_from_spectrum
from .spectrum_modes import LEARNED
from .sttp import init_sttp_params
from .svdp import init_svdp_params, rank_cap

__all__ = [
    "FitConfig",
    "FitResult",
    "fit_matrix",
    "eckart_young_optimum",
    "TrainReport",
    "demo_train",
]

SCHEMES = ("svdp", "sttp")
DEFAULT_LR = {"svdp": 0.05, "sttp": 0.02}
DIVERGENCE_LIMIT = 1e12


@dataclass(frozen=True)
class FitConfig:
    """Run configuration for :func:`fit_matrix` and :func:`demo_train`."""

    scheme: str = "svdp"
    rank: int = 4
    spectrum_mode: str = LEARNED
    lam: float = 0.0
    lr: float | None = None  # scheme default when None
    momentum: float = 0.9
    max_steps: int = 5000
    tol: float = 1e-14  # relative loss-change stopping threshold
    seed: int = 0
    init_scheme: str = "noisy_identity"
    alpha: float = 1e-4

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise DomainError(f"unknown scheme {self.scheme!r}")
        if self.lr is not None and self.lr <= 0:
            raise DomainError("learning rate must be positive")
        if not 0.0 <= self.momentum < 1.0:
            raise DomainError("momentum must lie in [0, 1)")
        if self.max_steps < 1:
            raise DomainError("need at least one step")
        if self.tol <= 0:
            raise DomainError("convergence tolerance must be positive")
        if self.lam < 0:
            raise DomainError("regularizer weight must be >= 0")

    @property
    def effective_lr(self) -> float:
        return DEFAULT_LR[self.scheme] if self.lr is None else self.lr


@dataclass
class FitResult:
    params: object
    trace: list[float]
    best_loss: float
    best_step: int

    def frobenius_error(self, target: np.ndarray) -> float:
        from .planner import decompress

        return float(np.linalg.norm(decompress(self.params) - target))


def _init_params(cfg: FitConfig, d_out: int, d_in: int):
    kwargs = dict(spectrum_mode=cfg.spectrum_mode, seed=cfg.seed,
                  init_scheme=cfg.init_scheme, alpha=cfg.alpha, lam=cfg.lam)
    if cfg.scheme == "svdp":
        return init_svdp_params(d_out, d_in, cfg.rank, **kwargs)
    return init_sttp_params(d_out, d_in, cfg.rank, **kwargs)


def fit_matrix(target: np.ndarray, cfg: FitConfig) -> FitResult:
    """Minimize ``0.5 ||W(theta) - target||_F^2`` (plus optional penalty).

    Returns the best-so-far parameters over the whole trace; stops early
    once the relative loss change drops below ``cfg.tol`` and raises
    :class:`DivergenceError` if the loss blows past ``1e12``.
    """
    target = np.asarray(target, dtype=np.float64)
    if target.ndim != 2:
        raise DomainError("fit target must be a matrix")
    if not np.all(np.isfinite(target)):
        raise DomainError("fit target must be finite")
    d_out, d_in = target.shape
    if cfg.rank > rank_cap(d_out, d_in):
        raise DomainError(
            f"rank {cfg.rank} exceeds cap {rank_cap(d_out, d_in)}"
        )
    params = _init_params(cfg, d_out, d_in)
    loss_spec = FrobeniusLoss(target, cfg.lam)
    theta = pack(params)
    velocity = np.zeros_like(theta)
    lr = cfg.effective_lr
    trace: list[float] = []
    best_loss = math.inf
    best_theta = theta.copy()
    best_step = 0
    for step in range(cfg.max_steps):
        current = unpack(params, theta)
        loss, grad, _ = loss_value_and_grad(current, loss_spec)
        trace.append(loss)
        if loss > DIVERGENCE_LIMIT:
            raise DivergenceError(
                f"loss {loss:.3e} exceeded {DIVERGENCE_LIMIT:.0e} at step "
                f"{step}; try a smaller learning rate than {lr}"
            )
        if loss < best_loss:
            best_loss, best_theta, best_step = loss, theta.copy(), step
        if step > 0 and abs(trace[-2] - loss) <= cfg.tol * max(1.0, trace[-2]):
            break
        velocity = cfg.momentum * velocity + grad
        theta = theta - lr * velocity
    return FitResult(unpack(params, best_theta), trace, best_loss, best_step)


def eckart_young_optimum(target: np.ndarray, r: int) -> float:
    """Smallest possible Frobenius error of any rank-r approximation."""
    target = np.asarray(target, dtype=np.float64)
    if r > rank_cap(*target.shape):
        raise DomainError(f"rank {r} exceeds cap {rank_cap(*target.shape)}")
    _, s, _ = svd_full(target)
    tail = s[r:]
    return float(np.sqrt(np.sum(tail * tail)))


@dataclass
class TrainReport:
    """Per-step diagnostics of the constrained training demo."""

    losses: list[float] = field(default_factory=list)
    sigma_max: list[tuple[float, float]] = field(default_factory=list)
    stable_ranks: list[tuple[float, float]] = field(default_factory=list)
    bounds: list[float] = field(default_factory=list)

    @property
    def final_loss(self) -> float:
        return self.losses[-1]


def _lipschitz_one_map(rng: np.random.Generator, d_out: int, hidden: int,
                       d_in: int):
    """A fixed random two-layer map with both factors at spectral norm 1."""
    a1 = rng.standard_normal((hidden, d_in))
    a1 /= svd_full(a1)[1][0]
    a2 = rng.standard_normal((d_out, hidden))
    a2 /= svd_full(a2)[1][0]
    return lambda x: a2 @ np.maximum(a1 @ x, 0.0)


def demo_train(cfg: FitConfig, seed: int, d_in: int = 6, hidden: int = 8,
               d_out: int = 4, n_samples: int = 64, steps: int | None = None
               ) -> TrainReport:
    """Train the two-layer demo network on synthetic regression data.

    Inputs are standard normal; targets come from a fixed random
    Lipschitz-1 map plus noise of scale 0.01.  Both linear layers are
    parameterized under ``cfg``; the report records loss, per-layer
    ``max|sigma|`` and stable ranks, and the product Lipschitz bound at
    every step.
    """
    steps = cfg.max_steps if steps is None else steps
    if cfg.rank > min(rank_cap(hidden, d_in), rank_cap(d_out, hidden)):
        raise DomainError("demo rank exceeds a layer's cap")
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((d_in, n_samples))
    truth = _lipschitz_one_map(rng, d_out, hidden, d_in)
    y = truth(x) + 0.01 * rng.standard_normal((d_out, n_samples))

    cfg1 = FitConfig(cfg.scheme, cfg.rank, cfg.spectrum_mode, cfg.lam, cfg.lr,
                     cfg.momentum, cfg.max_steps, cfg.tol, seed + 1,
                     cfg.init_scheme, cfg.alpha)
    cfg2 = FitConfig(cfg.scheme, cfg.rank, cfg.spectrum_mode, cfg.lam, cfg.lr,
                     cfg.momentum, cfg.max_steps, cfg.tol, seed + 2,
                     cfg.init_scheme, cfg.alpha)
    protos = (_init_params(cfg1, hidden, d_in),
              _init_params(cfg2, d_out, hidden))
    theta = [pack(p) for p in protos]
    velocity = [np.zeros_like(t) for t in theta]
    lr = cfg.effective_lr
    report = TrainReport()

    for step in range(steps):
        w1, tape1 = assemble_with_tape(unpack(protos[0], theta[0]))
        w2, tape2 = assemble_with_tape(unpack(protos[1], theta[1]))
        pre = w1 @ x
        h = np.maximum(pre, 0.0)
        resid = w2 @ h - y
        loss = 0.5 * float(np.sum(resid * resid)) / n_samples
        g_out = resid / n_samples
        g_w2 = g_out @ h.T
        g_w1 = (w2.T @ g_out) * (pre > 0) @ x.T
        grads = [_vjp_full(tape1, g_w1, None), _vjp_full(tape2, g_w2, None)]
        if cfg.lam > 0.0:
            for i, tape in enumerate((tape1, tape2)):
                pen, pen_grad = _penalty_floored(tape.sigma)
                loss += cfg.lam * pen / n_samples
                grads[i] = grads[i] + _vjp_full(
                    tape, np.zeros_like(tape.output),
                    cfg.lam * pen_grad / n_samples,
                )

        report.losses.append(loss)
        s1, s2 = np.abs(tape1.sigma), np.abs(tape2.sigma)
        report.sigma_max.append((float(s1.max()), float(s2.max())))
        report.stable_ranks.append((
            stable_rank_from_spectrum(tape1.sigma),
            stable_rank_from_spectrum(tape2.sigma),
        ))
        report.bounds.append(lipschitz_bound([s1.max(), s2.max()]))
        if loss > DIVERGENCE_LIMIT:
            raise DivergenceError(
                f"demo loss {loss:.3e} diverged at step {step}"
            )
        for i in range(2):
            velocity[i] = cfg.momentum * velocity[i] + grads[i]
            theta[i] = theta[i] - lr * velocity[i]
    return report
