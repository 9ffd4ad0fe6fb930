"""Shared test utilities: the central finite-difference gradient oracle."""

from __future__ import annotations

import numpy as np

from safecast.nn import Parameter, Tape


def central_difference(f, arr: np.ndarray, h: float = 1e-5) -> np.ndarray:
    """Numerical gradient of scalar f() w.r.t. arr, mutating arr in place."""
    grad = np.zeros_like(arr)
    flat = arr.reshape(-1)
    gflat = grad.reshape(-1)
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + h
        fp = f()
        flat[i] = orig - h
        fm = f()
        flat[i] = orig
        gflat[i] = (fp - fm) / (2.0 * h)
    return grad


def gradient_mismatches(
    analytic: np.ndarray,
    numeric: np.ndarray,
    rel_tol: float,
    abs_tol: float = 1e-8,
) -> np.ndarray:
    """Boolean mask of entries where the two gradients disagree."""
    diff = np.abs(analytic - numeric)
    scale = np.maximum(np.abs(analytic), np.abs(numeric))
    return (diff > abs_tol) & (diff > rel_tol * scale)


def assert_gradients_match(
    loss_fn,
    params: list[Parameter],
    rel_tol: float = 1e-5,
    h: float = 1e-5,
    abs_tol: float = 1e-8,
    allow_fraction: float = 0.0,
) -> None:
    """Check analytic gradients of loss_fn() against central differences.

    ``loss_fn`` must rebuild the forward pass from the parameters' current
    data on every call and return a scalar Tensor. ``allow_fraction``
    tolerates a share of mismatching entries (finite differences step over
    activation kinks at random points occasionally).
    """
    for p in params:
        p.reset_grad()
    with Tape() as tape:
        loss = loss_fn()
        tape.backward(loss)
    analytic = [p.grad.copy() for p in params]

    def scalar() -> float:
        return float(loss_fn().data)

    bad_count = 0
    total = 0
    first_detail = None
    for p, an in zip(params, analytic):
        num = central_difference(scalar, p.data, h=h)
        bad = gradient_mismatches(an, num, rel_tol, abs_tol)
        total += bad.size
        bad_count += int(bad.sum())
        if bad.any() and first_detail is None:
            first_detail = (
                f"first mismatch in {p.name or 'param'}: "
                f"analytic={an[bad][:4]} numeric={num[bad][:4]}"
            )
    assert bad_count <= allow_fraction * total, (
        f"{bad_count}/{total} gradient entries mismatch; {first_detail}"
    )
