"""Dense numeric kernel: activations, losses, Adam, and gradient checking.

Matrices are two-dimensional float64 numpy arrays in row-major layout;
:func:`as_matrix` and the JSON codec enforce the finite-entries contract
at the boundaries. Everything here is deterministic for fixed inputs,
which is what makes training runs bit-reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import IndexOutOfRange, ShapeMismatch

PROB_FLOOR = 1e-12


def as_matrix(data, rows: int | None = None, cols: int | None = None) -> np.ndarray:
    """Validate ``data`` as a finite float64 matrix.

    Accepts nested sequences or arrays; a flat sequence requires explicit
    ``rows``/``cols``. NaN or Inf entries violate the contract and raise.
    """
    a = np.asarray(data, dtype=np.float64)
    if rows is not None and cols is not None:
        if a.size != rows * cols:
            raise ShapeMismatch(f"{a.size} values cannot fill {rows}x{cols}")
        a = a.reshape(rows, cols)
    if a.ndim != 2:
        raise ShapeMismatch(f"expected 2-D matrix, got ndim={a.ndim}")
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix entries must be finite")
    return a


def matrix_to_json(a: np.ndarray) -> dict:
    """Serialize as {rows, cols, data} with row-major data."""
    a = np.asarray(a, dtype=np.float64)
    if a.ndim == 1:
        a = a.reshape(1, -1)
    return {"rows": int(a.shape[0]), "cols": int(a.shape[1]), "data": a.ravel().tolist()}


def matrix_from_json(obj: dict) -> np.ndarray:
    return as_matrix(obj["data"], rows=obj["rows"], cols=obj["cols"])


def matmul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Matrix product with an explicit shape contract."""
    if a.ndim != 2 or b.ndim != 2:
        raise ShapeMismatch("matmul operands must be 2-D")
    if a.shape[1] != b.shape[0]:
        raise ShapeMismatch(f"cannot multiply {a.shape} by {b.shape}")
    return a @ b


def sigmoid(x: np.ndarray) -> np.ndarray:
    """Elementwise logistic function, stable for |x| up to ~700.

    Uses the sign-split form so exp never sees a large positive argument.
    """
    x = np.asarray(x, dtype=np.float64)
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def tanh_act(x: np.ndarray) -> np.ndarray:
    """Elementwise hyperbolic tangent."""
    return np.tanh(np.asarray(x, dtype=np.float64))


def softmax(logits: np.ndarray) -> np.ndarray:
    """Probability vector via max-subtracted exponentials."""
    z = np.asarray(logits, dtype=np.float64)
    z = z - np.max(z)
    e = np.exp(z)
    return e / np.sum(e)


def cross_entropy(target_id: int, probs: np.ndarray) -> float:
    """Negative log-likelihood of ``target_id`` under ``probs``.

    Probabilities are floored at 1e-12 so the loss stays finite even for
    a confidently wrong model.
    """
    probs = np.asarray(probs, dtype=np.float64)
    if not 0 <= target_id < probs.shape[0]:
        raise IndexOutOfRange(f"target {target_id} outside {probs.shape[0]} classes")
    return float(-np.log(max(probs[target_id], PROB_FLOOR)))


@dataclass
class AdamState:
    """Per-parameter Adam accumulator."""

    first_moment: np.ndarray
    second_moment: np.ndarray
    step_count: int = 0
    learning_rate: float = 0.001
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8

    @classmethod
    def for_param(cls, param: np.ndarray, learning_rate: float = 0.001, **kw) -> "AdamState":
        return cls(
            first_moment=np.zeros_like(param),
            second_moment=np.zeros_like(param),
            learning_rate=learning_rate,
            **kw,
        )


def adam_step(
    param: np.ndarray, grad: np.ndarray, state: AdamState
) -> tuple[np.ndarray, AdamState]:
    """One bias-corrected Adam update; returns the new param and state."""
    if param.shape != grad.shape or param.shape != state.first_moment.shape:
        raise ShapeMismatch(
            f"param {param.shape}, grad {grad.shape}, "
            f"moments {state.first_moment.shape} must agree"
        )
    t = state.step_count + 1
    m = state.beta1 * state.first_moment + (1.0 - state.beta1) * grad
    v = state.beta2 * state.second_moment + (1.0 - state.beta2) * grad * grad
    m_hat = m / (1.0 - state.beta1**t)
    v_hat = v / (1.0 - state.beta2**t)
    new_param = param - state.learning_rate * m_hat / (np.sqrt(v_hat) + state.epsilon)
    new_state = AdamState(
        first_moment=m,
        second_moment=v,
        step_count=t,
        learning_rate=state.learning_rate,
        beta1=state.beta1,
        beta2=state.beta2,
        epsilon=state.epsilon,
    )
    return new_param, new_state


def l2_penalty(
    params: Sequence[np.ndarray], lam: float
) -> tuple[float, list[np.ndarray]]:
    """Ridge penalty: loss lam * sum ||p||^2, gradient 2 * lam * p."""
    loss = lam * float(sum(np.sum(p * p) for p in params))
    grads = [2.0 * lam * p for p in params]
    return loss, grads


def grad_check(
    loss_fn: Callable[[list[np.ndarray]], float],
    params: Sequence[np.ndarray],
    grad_fn: Callable[[list[np.ndarray]], Sequence[np.ndarray]],
    h: float = 1e-5,
) -> float:
    """Max relative error between analytic and central-difference gradients.

    Central differences are evaluated coordinate by coordinate, so keep
    the parameter count small; this is a verification harness, not a
    training tool. Relative error per coordinate is
    |a - n| / max(|a|, |n|, 1e-8).
    """
    params = [np.array(p, dtype=np.float64) for p in params]
    analytic = [np.asarray(g, dtype=np.float64) for g in grad_fn(params)]
    worst = 0.0
    for k, p in enumerate(params):
        flat = p.ravel()
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + h
            up = loss_fn(params)
            flat[i] = orig - h
            down = loss_fn(params)
            flat[i] = orig
            numeric = (up - down) / (2.0 * h)
            a = analytic[k].ravel()[i]
            err = abs(a - numeric) / max(abs(a), abs(numeric), 1e-8)
            worst = max(worst, err)
    return worst
