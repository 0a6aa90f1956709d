"""Central finite-difference oracle for tape gradients."""

from typing import Callable

import numpy as np

from services.autodiff.tensor import Tape, Tensor, backward


def finite_difference_check(
    f: Callable[[Tensor], Tensor],
    x: Tensor,
    h: float = 1e-6,
    kink_tol: float = 1e-3,
) -> float:
    """
    Compare the tape gradient of a scalar function against central differences.

    Args:
        f: Scalar-valued function of x, built from tensor ops
        x: Point to check at; must have requires_grad=True
        h: Finite-difference step
        kink_tol: Coordinates whose one-sided slopes disagree by more than this
            (relative) sit on a non-differentiable point and are skipped

    Returns:
        max over checked coordinates of |analytic - numeric| / max(1, |analytic|)
    """
    x.requires_grad = True
    with Tape() as tape:
        out = f(x)
    (analytic,) = backward(tape, out, [x])

    flat = x.values.reshape(-1)
    base = f(x).item()
    worst = 0.0
    for i in range(flat.size):
        original = flat[i]
        flat[i] = original + h
        up = f(x).item()
        flat[i] = original - h
        down = f(x).item()
        flat[i] = original

        forward_slope = (up - base) / h
        backward_slope = (base - down) / h
        if abs(forward_slope - backward_slope) > kink_tol * max(1.0, abs(forward_slope), abs(backward_slope)):
            continue

        numeric = (up - down) / (2 * h)
        a = analytic.reshape(-1)[i]
        worst = max(worst, abs(a - numeric) / max(1.0, abs(a)))
    return worst
