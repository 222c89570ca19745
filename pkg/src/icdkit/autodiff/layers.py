"""Layer set for the note classifiers: embedding lookup, 1-D
convolution, batch normalization, GRU, pooling, per-label attention,
sigmoid outputs and binary cross-entropy.

Each op fuses its forward pass with a hand-written backward closure;
grad_check validates every one against central finite differences.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import DataError, NumericError
from .tensor import Tensor, result

PROB_CLIP = 1e-7


def _sigmoid(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def embedding_lookup(ids: np.ndarray, table: Tensor) -> Tensor:
    """Rows of `table` at `ids` (batch x L), giving batch x L x d."""
    vocab_size = table.data.shape[0]
    if ids.min(initial=0) < 0 or ids.max(initial=0) >= vocab_size:
        raise DataError(
            f"token id out of range for embedding table of {vocab_size} rows"
        )
    out = table.data[ids]

    def backward(grad: np.ndarray) -> None:
        if table.requires_grad:
            if table.grad is None:
                table.grad = np.zeros_like(table.data)
            np.add.at(table.grad, ids.ravel(), grad.reshape(-1, grad.shape[-1]))

    return result(out, (table,), backward)


def conv1d(x: Tensor, kernels: Tensor, bias: Tensor) -> Tensor:
    """Same-length 1-D convolution over the time axis (pre-activation).

    x: batch x L x d_in, kernels: k x d_in x d_out, bias: d_out.
    Symmetric zero padding: floor((k-1)/2) left, ceil((k-1)/2) right.
    """
    batch, length, d_in = x.data.shape
    k, kd_in, d_out = kernels.data.shape
    if kd_in != d_in:
        raise DataError(f"kernel d_in {kd_in} does not match input {d_in}")
    if k > length:
        raise DataError(f"kernel size {k} exceeds sequence length {length}")
    left = (k - 1) // 2
    padded = np.zeros((batch, length + k - 1, d_in))
    padded[:, left : left + length] = x.data

    out = np.tile(bias.data, (batch, length, 1))
    for j in range(k):
        out += padded[:, j : j + length] @ kernels.data[j]

    def backward(grad: np.ndarray) -> None:
        if x.requires_grad:
            dpad = np.zeros_like(padded)
            for j in range(k):
                dpad[:, j : j + length] += grad @ kernels.data[j].T
            x.accumulate(dpad[:, left : left + length])
        if kernels.requires_grad:
            dk = np.empty_like(kernels.data)
            gflat = grad.reshape(-1, d_out)
            for j in range(k):
                dk[j] = padded[:, j : j + length].reshape(-1, d_in).T @ gflat
            kernels.accumulate(dk)
        if bias.requires_grad:
            bias.accumulate(grad.sum(axis=(0, 1)))

    return result(out, (x, kernels, bias), backward)


def tanh(x: Tensor) -> Tensor:
    out = np.tanh(x.data)

    def backward(grad: np.ndarray) -> None:
        if x.requires_grad:
            x.accumulate(grad * (1.0 - out * out))

    return result(out, (x,), backward)


@dataclass
class RunningStats:
    """Exponential moving averages used by batch norm at inference."""

    mean: np.ndarray
    var: np.ndarray

    @classmethod
    def fresh(cls, channels: int) -> "RunningStats":
        return cls(mean=np.zeros(channels), var=np.ones(channels))


def batch_norm(
    x: Tensor,
    gamma: Tensor,
    beta: Tensor,
    running: RunningStats | None,
    training: bool,
    momentum: float = 0.99,
    eps: float = 1e-5,
) -> Tensor:
    """Normalize each feature channel over all other axes (batch and,
    for sequences, time), then scale by gamma and shift by beta."""
    axes = tuple(range(x.data.ndim - 1))
    if training:
        if x.data.shape[0] < 2:
            raise DataError("batch norm in train mode needs batch size >= 2")
        mean = x.data.mean(axis=axes)
        var = x.data.var(axis=axes)
        if running is not None:
            running.mean = momentum * running.mean + (1 - momentum) * mean
            running.var = momentum * running.var + (1 - momentum) * var
    else:
        if running is None:
            raise DataError("batch norm in infer mode needs running statistics")
        mean, var = running.mean, running.var

    inv_std = 1.0 / np.sqrt(var + eps)
    xhat = (x.data - mean) * inv_std
    out = gamma.data * xhat + beta.data

    def backward(grad: np.ndarray) -> None:
        if gamma.requires_grad:
            gamma.accumulate((grad * xhat).sum(axis=axes))
        if beta.requires_grad:
            beta.accumulate(grad.sum(axis=axes))
        if x.requires_grad:
            if not training:
                x.accumulate(grad * gamma.data * inv_std)
                return
            m = x.data.size // x.data.shape[-1]
            dxhat = grad * gamma.data
            centered = x.data - mean
            dvar = (dxhat * centered).sum(axis=axes) * (-0.5) * inv_std**3
            dmean = -(dxhat.sum(axis=axes)) * inv_std + dvar * (
                -2.0 * centered.sum(axis=axes) / m
            )
            x.accumulate(dxhat * inv_std + dvar * 2.0 * centered / m + dmean / m)

    return result(out, (x, gamma, beta), backward)


@dataclass
class GruWeights:
    """Input, recurrent and bias parameters for the three GRU gates."""

    w_z: Tensor
    w_r: Tensor
    w_h: Tensor
    u_z: Tensor
    u_r: Tensor
    u_h: Tensor
    b_z: Tensor
    b_r: Tensor
    b_h: Tensor

    def all(self) -> tuple[Tensor, ...]:
        return (
            self.w_z, self.w_r, self.w_h,
            self.u_z, self.u_r, self.u_h,
            self.b_z, self.b_r, self.b_h,
        )


def gru(x: Tensor, weights: GruWeights, mask: np.ndarray | None = None) -> Tensor:
    """GRU recurrence from a zero initial state, returning the full
    hidden sequence. Masked steps carry h_{t-1} forward unchanged."""
    batch, length, d_in = x.data.shape
    d_h = weights.u_z.data.shape[0]
    for w, expect in (
        (weights.w_z, (d_in, d_h)),
        (weights.u_z, (d_h, d_h)),
        (weights.b_z, (d_h,)),
    ):
        if w.data.shape != expect:
            raise DataError(f"GRU weight shape {w.data.shape} != {expect}")

    wz, wr, wh = weights.w_z.data, weights.w_r.data, weights.w_h.data
    uz, ur, uh = weights.u_z.data, weights.u_r.data, weights.u_h.data
    bz, br, bh = weights.b_z.data, weights.b_r.data, weights.b_h.data

    h_prev = np.zeros((batch, d_h))
    hs = np.empty((batch, length, d_h))
    zs = np.empty_like(hs)
    rs = np.empty_like(hs)
    hcs = np.empty_like(hs)
    h_prevs = np.empty_like(hs)
    for t in range(length):
        xt = x.data[:, t]
        z = _sigmoid(xt @ wz + h_prev @ uz + bz)
        r = _sigmoid(xt @ wr + h_prev @ ur + br)
        hc = np.tanh(xt @ wh + (r * h_prev) @ uh + bh)
        h_new = (1.0 - z) * h_prev + z * hc
        if mask is not None:
            m = mask[:, t : t + 1]
            h_new = m * h_new + (1.0 - m) * h_prev
        zs[:, t], rs[:, t], hcs[:, t], h_prevs[:, t] = z, r, hc, h_prev
        hs[:, t] = h_new
        h_prev = h_new

    def backward(grad: np.ndarray) -> None:
        dwz = np.zeros_like(wz); dwr = np.zeros_like(wr); dwh = np.zeros_like(wh)
        duz = np.zeros_like(uz); dur = np.zeros_like(ur); duh = np.zeros_like(uh)
        dbz = np.zeros_like(bz); dbr = np.zeros_like(br); dbh = np.zeros_like(bh)
        dx = np.zeros_like(x.data) if x.requires_grad else None
        carry = np.zeros((batch, d_h))
        for t in reversed(range(length)):
            g = grad[:, t] + carry
            z, r, hc, h_prev = zs[:, t], rs[:, t], hcs[:, t], h_prevs[:, t]
            if mask is not None:
                m = mask[:, t : t + 1]
                carry = g * (1.0 - m)
                g = g * m
            else:
                carry = np.zeros((batch, d_h))
            xt = x.data[:, t]
            dz = g * (hc - h_prev)
            dhc = g * z
            dh_prev = g * (1.0 - z)
            da_h = dhc * (1.0 - hc * hc)
            dwh += xt.T @ da_h
            dbh += da_h.sum(axis=0)
            duh += (r * h_prev).T @ da_h
            drh = da_h @ uh.T
            dr = drh * h_prev
            dh_prev += drh * r
            da_r = dr * r * (1.0 - r)
            dwr += xt.T @ da_r
            dur += h_prev.T @ da_r
            dbr += da_r.sum(axis=0)
            dh_prev += da_r @ ur.T
            da_z = dz * z * (1.0 - z)
            dwz += xt.T @ da_z
            duz += h_prev.T @ da_z
            dbz += da_z.sum(axis=0)
            dh_prev += da_z @ uz.T
            if dx is not None:
                dx[:, t] = da_z @ wz.T + da_r @ wr.T + da_h @ wh.T
            carry = carry + dh_prev
        if dx is not None:
            x.accumulate(dx)
        for tensor, value in (
            (weights.w_z, dwz), (weights.w_r, dwr), (weights.w_h, dwh),
            (weights.u_z, duz), (weights.u_r, dur), (weights.u_h, duh),
            (weights.b_z, dbz), (weights.b_r, dbr), (weights.b_h, dbh),
        ):
            if tensor.requires_grad:
                tensor.accumulate(value)

    return result(hs, (x, *weights.all()), backward)


def global_average_pool(x: Tensor, mask: np.ndarray | None = None) -> Tensor:
    """Mean over the time axis. Without a mask all L positions count
    (zero-padded ones included); with a mask only real positions do."""
    batch, length, _ = x.data.shape
    if mask is None:
        out = x.data.mean(axis=1)

        def backward(grad: np.ndarray) -> None:
            if x.requires_grad:
                x.accumulate(np.repeat(grad[:, None, :], length, axis=1) / length)

    else:
        counts = np.maximum(mask.sum(axis=1, keepdims=True), 1.0)
        out = (x.data * mask[:, :, None]).sum(axis=1) / counts

        def backward(grad: np.ndarray) -> None:
            if x.requires_grad:
                x.accumulate(grad[:, None, :] * mask[:, :, None] / counts[:, :, None])

    return result(out, (x,), backward)


def label_attention(h: Tensor, targets: Tensor) -> tuple[Tensor, np.ndarray]:
    """Per-label scaled dot-product attention.

    h: batch x L x d_f, targets: C x d_f. Scores H.u_c / sqrt(d_f) are
    softmaxed over positions; contexts are the weighted averages.
    Returns (contexts batch x C x d_f, weights batch x C x L).
    """
    batch, length, d_f = h.data.shape
    n_labels, td = targets.data.shape
    if td != d_f:
        raise DataError(f"attention target dim {td} does not match features {d_f}")
    scale = 1.0 / np.sqrt(d_f)
    scores = np.einsum("bld,cd->bcl", h.data, targets.data) * scale
    scores -= scores.max(axis=2, keepdims=True)
    exp = np.exp(scores)
    alpha = exp / exp.sum(axis=2, keepdims=True)
    contexts = np.einsum("bcl,bld->bcd", alpha, h.data)

    def backward(grad: np.ndarray) -> None:
        dalpha = np.einsum("bcd,bld->bcl", grad, h.data)
        dscores = alpha * (dalpha - (dalpha * alpha).sum(axis=2, keepdims=True))
        if h.requires_grad:
            dh = np.einsum("bcl,bcd->bld", alpha, grad)
            dh += np.einsum("bcl,cd->bld", dscores, targets.data) * scale
            h.accumulate(dh)
        if targets.requires_grad:
            targets.accumulate(np.einsum("bcl,bld->cd", dscores, h.data) * scale)

    return result(contexts, (h, targets), backward), alpha


def dense(x: Tensor, w: Tensor, b: Tensor) -> Tensor:
    """Affine layer batch x d_in -> batch x d_out (pre-activation)."""
    if x.data.shape[-1] != w.data.shape[0]:
        raise DataError(
            f"dense input dim {x.data.shape[-1]} does not match weights {w.data.shape}"
        )
    out = x.data @ w.data + b.data

    def backward(grad: np.ndarray) -> None:
        if x.requires_grad:
            x.accumulate(grad @ w.data.T)
        if w.requires_grad:
            w.accumulate(x.data.T @ grad)
        if b.requires_grad:
            b.accumulate(grad.sum(axis=0))

    return result(out, (x, w, b), backward)


def per_label_dense(contexts: Tensor, w: Tensor, b: Tensor) -> Tensor:
    """Per-label output: logit[b,c] = contexts[b,c,:] . w[c,:] + b[c].

    Each sigmoid unit sees only its own label's context vector.
    """
    if contexts.data.shape[1:] != w.data.shape:
        raise DataError(
            f"context shape {contexts.data.shape} does not match per-label weights {w.data.shape}"
        )
    out = np.einsum("bcd,cd->bc", contexts.data, w.data) + b.data

    def backward(grad: np.ndarray) -> None:
        if contexts.requires_grad:
            contexts.accumulate(grad[:, :, None] * w.data[None, :, :])
        if w.requires_grad:
            w.accumulate(np.einsum("bc,bcd->cd", grad, contexts.data))
        if b.requires_grad:
            b.accumulate(grad.sum(axis=0))

    return result(out, (contexts, w, b), backward)


def sigmoid(x: Tensor) -> Tensor:
    out = _sigmoid(x.data)

    def backward(grad: np.ndarray) -> None:
        if x.requires_grad:
            x.accumulate(grad * out * (1.0 - out))

    return result(out, (x,), backward)


def _check_bce_shapes(pred: np.ndarray, target: np.ndarray, weights) -> None:
    if pred.shape != target.shape:
        raise DataError(f"prediction shape {pred.shape} != target shape {target.shape}")
    if weights is not None and weights.shape != (pred.shape[0],):
        raise DataError("sample weights must be one per batch row")


def bce_loss(
    probs: Tensor, target: np.ndarray, sample_weights: np.ndarray | None = None
) -> Tensor:
    """Mean over the batch of the per-sample label-summed binary
    cross-entropy, on already-sigmoided confidences (clipped)."""
    _check_bce_shapes(probs.data, target, sample_weights)
    batch = probs.data.shape[0]
    p = np.clip(probs.data, PROB_CLIP, 1.0 - PROB_CLIP)
    per_elem = -(target * np.log(p) + (1.0 - target) * np.log1p(-p))
    w = np.ones(batch) if sample_weights is None else sample_weights
    out = np.asarray((per_elem.sum(axis=1) * w).mean())

    def backward(grad: np.ndarray) -> None:
        if probs.requires_grad:
            inner = np.where(
                (probs.data > PROB_CLIP) & (probs.data < 1.0 - PROB_CLIP),
                -target / p + (1.0 - target) / (1.0 - p),
                0.0,
            )
            probs.accumulate(grad * inner * w[:, None] / batch)

    return result(out, (probs,), backward)


def sigmoid_bce_with_logits(
    logits: Tensor, target: np.ndarray, sample_weights: np.ndarray | None = None
) -> Tensor:
    """Fused sigmoid + BCE used for training; numerically stable and
    with the exact gradient (sigma(logit) - y) / batch per element."""
    _check_bce_shapes(logits.data, target, sample_weights)
    batch = logits.data.shape[0]
    z = logits.data
    per_elem = np.maximum(z, 0.0) - z * target + np.log1p(np.exp(-np.abs(z)))
    w = np.ones(batch) if sample_weights is None else sample_weights
    out = np.asarray((per_elem.sum(axis=1) * w).mean())
    if not np.isfinite(out):
        raise NumericError("non-finite loss")

    def backward(grad: np.ndarray) -> None:
        if logits.requires_grad:
            logits.accumulate(grad * (_sigmoid(z) - target) * w[:, None] / batch)

    return result(out, (logits,), backward)
