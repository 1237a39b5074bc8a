"""Square-root ("pretty good") measurement."""

from __future__ import annotations

import numpy as np

from .errors import ParameterError
from .linalg import Povm, as_matrix, inv_sqrt_psd

SUPPORT_TOL = 1e-10


def build_square_root_measurement(states, tol: float = 1e-8) -> Povm:
    """POVM with effects ``S^{-1/2} ρ_i S^{-1/2}``, ``S = Σ ρ_i``.

    The inverse square root is taken on the support of ``S``; the projector
    onto its kernel is split equally over all effects so the result is
    complete.
    """
    mats = [as_matrix(s, square=True) for s in states]
    if not mats:
        raise ParameterError("square-root measurement needs at least one state")
    total = np.sum(mats, axis=0)
    if abs(np.trace(total)) <= SUPPORT_TOL:
        raise ParameterError("all input states are zero")
    r = inv_sqrt_psd(total, SUPPORT_TOL)
    effects = [r @ rho @ r for rho in mats]
    effects = [0.5 * (e + e.conj().T) for e in effects]
    leftover = np.eye(total.shape[0]) - np.sum(effects, axis=0)
    leftover = 0.5 * (leftover + leftover.conj().T) / len(effects)
    return Povm([e + leftover for e in effects], tol=tol)
