"""Conjugate gradients for the implicit diffusion solves."""

import numpy as np

from .exceptions import NumericalFailure


def batched_cg(apply, b, x0=None, rtol=1e-10, maxiter=1000):
    """Solve ``apply(x) = b`` for a batch of independent SPD systems.

    The leading axis of ``b`` indexes systems; ``apply`` must act on each
    slice independently.  A system stops updating once its residual is below
    ``rtol * ||b||`` (systems with ``b == 0`` return zero).  Returns
    ``(x, iterations)``.
    """
    b = np.asarray(b, dtype=float)
    nb = b.shape[0]
    red = tuple(range(1, b.ndim))
    expand = (slice(None),) + (None,) * (b.ndim - 1)

    x = b.copy() if x0 is None else np.array(x0, dtype=float)
    bnorm = np.sqrt(np.sum(b * b, axis=red))
    target = rtol * bnorm
    zero = bnorm == 0.0
    x[zero] = 0.0

    r = b - apply(x)
    rr = np.sum(r * r, axis=red)
    active = (np.sqrt(rr) > target) & ~zero
    p = r.copy()
    it = 0
    while active.any():
        if it >= maxiter:
            raise NumericalFailure(
                f"CG did not converge in {maxiter} iterations "
                f"(relative residuals {np.sqrt(rr[active]) / bnorm[active]})"
            )
        Ap = apply(p)
        pAp = np.sum(p * Ap, axis=red)
        alpha = np.where(active, rr / np.where(active, pAp, 1.0), 0.0)
        x += alpha[expand] * p
        r -= alpha[expand] * Ap
        rr_new = np.sum(r * r, axis=red)
        beta = np.where(active, rr_new / np.where(rr > 0, rr, 1.0), 0.0)
        p = r + beta[expand] * p
        rr = rr_new
        active &= np.sqrt(rr) > target
        it += 1
    return x, it
