"""Reverse-mode gradients for the parameterization pipeline.

The pipeline layout -> frames -> (core chains) -> matrix -> loss is a static
composition of a small primitive set: reflector application, frame/core
reshapes, chain matmuls, the max-magnitude spectrum normalization, and the
log-magnitude penalty.  Each primitive has a hand-written vector-Jacobian
rule; :func:`assemble_with_tape` records the forward intermediates and
:func:`vjp` transits them in reverse, producing the gradient with respect to
every free parameter (structural layout cells receive none).

Central finite differences (:func:`fd_grad`) serve as the independent
oracle, and :func:`gradcheck` compares the two.

The infinity-norm normalization is not differentiable where two spectrum
entries tie in magnitude; the rule here attributes the subgradient to the
smallest-index maximal coordinate, deterministically, and tapes flag such
points so gradcheck can skip them.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from . import householder as hh
from .errors import DomainError, NumericError, ShapeError
from .spectrum_modes import IDENTITY
from .sttp import SttpParams, core_specs
from .svdp import SvdpParams

__all__ = [
    "GradTape",
    "assemble_with_tape",
    "replay",
    "vjp",
    "pack",
    "unpack",
    "FrobeniusLoss",
    "InnerProductLoss",
    "loss_value_and_grad",
    "frame_grad",
    "fd_grad",
    "gradcheck",
    "GradcheckReport",
]

PENALTY_FLOOR = 1e-12  # optimization guard inside |sigma| before the log


def _decode_fwd(layout: hh.HouseholderLayout):
    """Forward reflector sweep, saving per-reflector intermediates."""
    mat = layout.dense()
    dp, rp = mat.shape
    q = np.eye(dp, rp)
    saves = []
    for j in range(rp - 1, -1, -1):
        h = mat[:, j]
        norm_h = np.sqrt(np.sum(h * h))
        u = h / norm_h
        saves.append((j, u, norm_h, q))
        q = q - 2.0 * u[:, None] * (u[None, :] @ q)
    return q[: layout.d, : layout.r], saves


def _decode_vjp(layout: hh.HouseholderLayout, saves, g_frame: np.ndarray
                ) -> np.ndarray:
    """Gradient of the decoded frame w.r.t. the layout's free parameters."""
    dp, rp = layout.padded_shape
    g = np.zeros((dp, rp))
    g[: layout.d, : layout.r] = g_frame
    g_canvas = np.zeros((dp, rp))
    for j, u, norm_h, x in reversed(saves):
        xu = x.T @ u
        gu = -2.0 * (g @ xu + x @ (g.T @ u))
        g_canvas[:, j] = (gu - u * (u @ gu)) / norm_h
        g = g - 2.0 * u[:, None] * (u[None, :] @ g)
    rows, cols = layout.free_cells()
    return g_canvas[rows, cols]


def _chain_fwd(frames, shapes):
    """Compose core frames left to right, saving the running blocks."""
    blocks = [frames[0]]
    b = frames[0]
    for frame, (r_left, n, r_right) in zip(frames[1:], shapes[1:]):
        b = (b @ frame.reshape(r_left, n * r_right)).reshape(-1, r_right)
        blocks.append(b)
    return b, blocks


def _chain_vjp(frames, shapes, blocks, g_total):
    """Per-frame gradients of the composed chain."""
    g_frames: list[np.ndarray | None] = [None] * len(frames)
    g = g_total
    for k in range(len(frames) - 1, 0, -1):
        r_left, n, r_right = shapes[k]
        b_prev = blocks[k - 1]
        g_flat = g.reshape(b_prev.shape[0], n * r_right)
        g_frames[k] = (b_prev.T @ g_flat).reshape(r_left * n, r_right)
        g = g_flat @ frames[k].reshape(r_left, n * r_right).T
    g_frames[0] = g
    return g_frames


def _sigma_fwd(spectrum):
    if spectrum.mode == IDENTITY:
        return spectrum.signs.copy(), None
    s = spectrum.s
    k = int(np.argmax(np.abs(s)))  # ties resolve to the smallest index
    m = abs(float(s[k]))
    if m == 0.0:
        raise DomainError("degenerate spectrum: all entries are zero")
    tie = int(np.sum(np.abs(s) == m)) > 1
    return s / m, (s, k, m, tie)


def _sigma_vjp(save, g_sigma):
    if save is None:
        return None
    s, k, m, _ = save
    gs = g_sigma / m
    gs[k] -= np.sign(s[k]) * float(g_sigma @ s) / (m * m)
    return gs


@dataclass
class GradTape:
    """Recorded forward pass of one matrix assembly.

    Replaying the stored parameters through the same forward reproduces the
    recorded output bitwise; the saved intermediates suffice for one reverse
    transit.
    """

    params: object
    output: np.ndarray
    sigma: np.ndarray
    u: np.ndarray
    v: np.ndarray
    decode_saves: tuple
    frames: tuple
    chain_blocks: tuple
    sigma_save: tuple | None

    @property
    def sigma_tied(self) -> bool:
        return self.sigma_save is not None and self.sigma_save[3]


def assemble_with_tape(params) -> tuple[np.ndarray, GradTape]:
    """Assemble the matrix while recording intermediates for :func:`vjp`."""
    sigma, sigma_save = _sigma_fwd(params.spectrum)
    if isinstance(params, SvdpParams):
        u, saves_u = _decode_fwd(params.u_layout)
        v, saves_v = _decode_fwd(params.v_layout)
        w = (u * sigma) @ v.T
        tape = GradTape(params, w, sigma, u, v, (saves_u, saves_v),
                        ((u,), (v,)), ((), ()), sigma_save)
        return w, tape
    if not isinstance(params, SttpParams):
        raise DomainError(f"unsupported parameter type {type(params)!r}")
    u_specs, v_specs = core_specs(params.out_fac, params.in_fac, params.r,
                                  params.spectrum.mode)
    u_frames, u_saves = zip(*(_decode_fwd(la) for la in params.u_layouts))
    v_frames, v_saves = zip(*(_decode_fwd(la) for la in params.v_layouts))
    u_shapes = [spec.shape for spec in u_specs]
    v_shapes = [spec.shape for spec in v_specs]
    u, u_blocks = _chain_fwd(u_frames, u_shapes)
    v, v_blocks = _chain_fwd(v_frames, v_shapes)
    w = (u * sigma) @ v.T
    tape = GradTape(params, w, sigma, u, v, (u_saves, v_saves),
                    (u_frames, v_frames), (u_blocks, v_blocks), sigma_save)
    return w, tape


def replay(tape: GradTape) -> np.ndarray:
    """Re-run the recorded forward; bitwise equal to ``tape.output``."""
    w, _ = assemble_with_tape(tape.params)
    return w


def vjp(tape: GradTape, upstream: np.ndarray) -> np.ndarray:
    """Pull an output cotangent back to all free parameters.

    ``upstream`` is the gradient with respect to the assembled matrix; the
    result is flat in :func:`pack` order and linear in ``upstream``.
    """
    return _vjp_full(tape, upstream, None)


def _vjp_full(tape: GradTape, g_w: np.ndarray, g_sigma_extra) -> np.ndarray:
    params = tape.params
    g_w = np.asarray(g_w, dtype=np.float64)
    if g_w.shape != tape.output.shape:
        raise ShapeError(
            f"upstream shape {g_w.shape} != output shape {tape.output.shape}"
        )
    u, v, sigma = tape.u, tape.v, tape.sigma
    gv_mat = g_w.T @ (u * sigma)
    gwv = g_w @ v
    gu_mat = gwv * sigma
    g_sigma = np.sum(u * gwv, axis=0)
    if g_sigma_extra is not None:
        g_sigma = g_sigma + g_sigma_extra
    gs = _sigma_vjp(tape.sigma_save, g_sigma)

    if isinstance(params, SvdpParams):
        saves_u, saves_v = tape.decode_saves
        parts = [
            _decode_vjp(params.u_layout, saves_u, gu_mat),
            _decode_vjp(params.v_layout, saves_v, gv_mat),
        ]
    else:
        u_specs, v_specs = core_specs(params.out_fac, params.in_fac, params.r,
                                      params.spectrum.mode)
        u_shapes = [spec.shape for spec in u_specs]
        v_shapes = [spec.shape for spec in v_specs]
        u_saves, v_saves = tape.decode_saves
        u_frames, v_frames = tape.frames
        u_blocks, v_blocks = tape.chain_blocks
        gu_frames = _chain_vjp(u_frames, u_shapes, u_blocks, gu_mat)
        gv_frames = _chain_vjp(v_frames, v_shapes, v_blocks, gv_mat)
        parts = [
            _decode_vjp(la, sv, gf)
            for la, sv, gf in zip(params.u_layouts, u_saves, gu_frames)
        ]
        parts.extend(
            _decode_vjp(la, sv, gf)
            for la, sv, gf in zip(params.v_layouts, v_saves, gv_frames)
        )
    if gs is not None:
        parts.append(gs)
    return np.concatenate(parts) if parts else np.zeros(0)


def frame_grad(layout: hh.HouseholderLayout, upstream: np.ndarray
               ) -> np.ndarray:
    """Gradient of a single decoded frame against its free parameters."""
    frame, saves = _decode_fwd(layout)
    if np.asarray(upstream).shape != frame.shape:
        raise ShapeError("upstream shape does not match the decoded frame")
    return _decode_vjp(layout, saves, np.asarray(upstream, dtype=np.float64))


def pack(params) -> np.ndarray:
    """Flatten all free parameters: layouts in pipeline order, then spectrum."""
    if isinstance(params, SvdpParams):
        parts = [params.u_layout.params, params.v_layout.params]
    elif isinstance(params, SttpParams):
        parts = [la.params for la in params.u_layouts]
        parts.extend(la.params for la in params.v_layouts)
    else:
        raise DomainError(f"unsupported parameter type {type(params)!r}")
    if params.spectrum.mode != IDENTITY:
        parts.append(params.spectrum.s)
    return np.concatenate(parts) if parts else np.zeros(0)


def unpack(params, theta: np.ndarray):
    """Rebuild a parameter object of the same structure from a flat vector."""
    theta = np.asarray(theta, dtype=np.float64).ravel()
    if theta.size != pack(params).size:
        raise ShapeError(
            f"expected {pack(params).size} parameters, got {theta.size}"
        )
    pos = 0

    def take(reference):
        nonlocal pos
        chunk = theta[pos: pos + reference.size]
        pos += reference.size
        return chunk

    if isinstance(params, SvdpParams):
        u_layout = params.u_layout.with_params(take(params.u_layout.params))
        v_layout = params.v_layout.with_params(take(params.v_layout.params))
        spectrum = params.spectrum
        if spectrum.mode != IDENTITY:
            spectrum = spectrum.with_s(take(spectrum.s))
        return replace(params, u_layout=u_layout, v_layout=v_layout,
                       spectrum=spectrum)
    u_layouts = tuple(la.with_params(take(la.params)) for la in params.u_layouts)
    v_layouts = tuple(la.with_params(take(la.params)) for la in params.v_layouts)
    spectrum = params.spectrum
    if spectrum.mode != IDENTITY:
        spectrum = spectrum.with_s(take(spectrum.s))
    return replace(params, u_layouts=u_layouts, v_layouts=v_layouts,
                   spectrum=spectrum)


@dataclass(frozen=True)
class FrobeniusLoss:
    """``0.5 * ||W - target||_F^2`` plus an optional spectrum penalty.

    The penalty term is ``lam * -sum log(max(|sigma_i|, floor))``; the floor
    is an optimization guard, distinct from the exact penalty definition,
    that keeps the loss finite if an entry crosses zero mid-descent.
    """

    target: np.ndarray
    lam: float = 0.0


@dataclass(frozen=True)
class InnerProductLoss:
    """``<weights, W>``, the generic linear probe."""

    weights: np.ndarray


def _penalty_floored(sigma: np.ndarray) -> tuple[float, np.ndarray]:
    mags = np.maximum(np.abs(sigma), PENALTY_FLOOR)
    value = float(-np.sum(np.log(mags)))
    grad = np.where(np.abs(sigma) > PENALTY_FLOOR, -1.0 / sigma, 0.0)
    return value, grad


def loss_value_and_grad(params, loss) -> tuple[float, np.ndarray, GradTape]:
    """Loss value and its flat analytic gradient at the given parameters."""
    w, tape = assemble_with_tape(params)
    if isinstance(loss, FrobeniusLoss):
        target = np.asarray(loss.target, dtype=np.float64)
        if target.shape != w.shape:
            raise ShapeError("target shape does not match the assembled matrix")
        resid = w - target
        value = 0.5 * float(np.sum(resid * resid))
        g_w = resid
        g_sigma_extra = None
        if loss.lam > 0.0:
            pen, pen_grad = _penalty_floored(tape.sigma)
            value += loss.lam * pen
            g_sigma_extra = loss.lam * pen_grad
        return value, _vjp_full(tape, g_w, g_sigma_extra), tape
    if isinstance(loss, InnerProductLoss):
        weights = np.asarray(loss.weights, dtype=np.float64)
        if weights.shape != w.shape:
            raise ShapeError("weights shape does not match the assembled matrix")
        value = float(np.sum(weights * w))
        return value, _vjp_full(tape, weights, None), tape
    raise DomainError(f"unknown loss spec {type(loss)!r}")


def loss_value(params, loss) -> float:
    """Loss value only, for the finite-difference oracle."""
    w, tape = assemble_with_tape(params)
    if isinstance(loss, FrobeniusLoss):
        resid = w - np.asarray(loss.target, dtype=np.float64)
        value = 0.5 * float(np.sum(resid * resid))
        if loss.lam > 0.0:
            value += loss.lam * _penalty_floored(tape.sigma)[0]
        return value
    if isinstance(loss, InnerProductLoss):
        return float(np.sum(np.asarray(loss.weights) * w))
    raise DomainError(f"unknown loss spec {type(loss)!r}")


def fd_grad(f, theta: np.ndarray, step: float = 1e-6) -> np.ndarray:
    """Central differences with ``h_i = step * max(1, |theta_i|)``."""
    theta = np.asarray(theta, dtype=np.float64)
    grad = np.empty_like(theta)
    for i in range(theta.size):
        h = step * max(1.0, abs(theta[i]))
        up = theta.copy()
        up[i] += h
        down = theta.copy()
        down[i] -= h
        f_up, f_down = f(up), f(down)
        if not (np.isfinite(f_up) and np.isfinite(f_down)):
            raise NumericError(f"non-finite loss probing coordinate {i}")
        grad[i] = (f_up - f_down) / (2.0 * h)
    return grad


@dataclass(frozen=True)
class GradcheckReport:
    max_rel_err: float
    worst_index: int
    n_params: int
    passed: bool
    sigma_tied: bool


def gradcheck(params, loss, tol: float = 1e-6) -> GradcheckReport:
    """Compare the analytic gradient against central differences.

    Errors are relative to ``max(1, ||grad||_inf)``.  Points where the
    spectrum normalization ties are flagged and reported as skipped (the
    subgradient rule is deterministic but not a derivative there).
    """
    value, grad, tape = loss_value_and_grad(params, loss)
    del value
    if tape.sigma_tied:
        return GradcheckReport(float("nan"), -1, grad.size, True, True)
    theta = pack(params)
    fd = fd_grad(lambda t: loss_value(unpack(params, t), loss), theta)
    scale = max(1.0, float(np.max(np.abs(grad))) if grad.size else 1.0)
    err = np.abs(grad - fd) / scale
    worst = int(np.argmax(err)) if err.size else 0
    max_err = float(err[worst]) if err.size else 0.0
    return GradcheckReport(max_err, worst, grad.size, max_err <= tol, False)
