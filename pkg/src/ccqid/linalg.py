"""
Small dense complex linear algebra: Kronecker products, Hermitian
eigendecomposition by cyclic Jacobi rotations, PSD inverse square roots
and POVM / density-operator validation.

Matrices are plain ``numpy`` arrays of dtype complex128.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionLimitError, NumericalError, ShapeError, ValidationError

DEFAULT_TOL = 1e-9
DEFAULT_DIM_CAP = 4096

# Jacobi is used up to this size; larger inputs go to LAPACK (zheevd).
JACOBI_MAX_DIM = 64
JACOBI_THRESHOLD = 1e-12
JACOBI_MAX_SWEEPS = 100


def as_matrix(a, square: bool = False) -> np.ndarray:
    m = np.asarray(a, dtype=np.complex128)
    if m.ndim != 2 or m.shape[0] < 1 or m.shape[1] < 1:
        raise ShapeError(f"expected a non-empty 2-d matrix, got shape {m.shape}")
    if square and m.shape[0] != m.shape[1]:
        raise ShapeError(f"expected a square matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValidationError("matrix has non-finite entries")
    return m


def kron(a, b, cap: int = DEFAULT_DIM_CAP) -> np.ndarray:
    """Kronecker product ``a ⊗ b``; refuses results with a side longer than ``cap``."""
    a = as_matrix(a)
    b = as_matrix(b)
    rows = a.shape[0] * b.shape[0]
    cols = a.shape[1] * b.shape[1]
    if max(rows, cols) > cap:
        raise DimensionLimitError(f"kron result {rows}x{cols} exceeds dimension cap {cap}")
    return np.kron(a, b)


def kron_all(mats, cap: int = DEFAULT_DIM_CAP) -> np.ndarray:
    out = None
    for m in mats:
        out = as_matrix(m) if out is None else kron(out, m, cap=cap)
    if out is None:
        raise ShapeError("kron_all needs at least one factor")
    return out


def hermiticity_deviation(m: np.ndarray) -> float:
    return float(np.max(np.abs(m - m.conj().T)))


def _round_robin(n: int):
    """Pairings of 0..n-1 (padded to even) such that each round is a set of disjoint pairs."""
    m = n + (n % 2)
    players = list(range(m))
    rounds = []
    for _ in range(m - 1):
        pairs = [(players[i], players[m - 1 - i]) for i in range(m // 2)]
        pairs = [(min(p), max(p)) for p in pairs if max(p) < n]
        if pairs:
            p, q = zip(*pairs)
            rounds.append((np.array(p), np.array(q)))
        players = [players[0], players[-1]] + players[1:-1]
    return rounds


def _jacobi(a: np.ndarray, vectors: bool = True):
    # Cyclic Jacobi with tournament ordering: the rotations of one round act on
    # disjoint index pairs, so they commute and are applied as one unitary.
    a = a.astype(np.complex128, copy=True)
    n = a.shape[0]
    v = np.eye(n, dtype=np.complex128)
    if n == 1:
        return a.diagonal().real.copy(), v
    rounds = _round_robin(n)
    offdiag = ~np.eye(n, dtype=bool)
    scale = max(1.0, float(np.linalg.norm(a)))
    for _ in range(JACOBI_MAX_SWEEPS):
        off = float(np.linalg.norm(a[offdiag]))
        if off <= JACOBI_THRESHOLD * scale:
            return a.diagonal().real.copy(), v
        for p, q in rounds:
            apq = a[p, q]
            r = np.abs(apq)
            active = r > 1e-300
            if not active.any():
                continue
            p, q, apq, r = p[active], q[active], apq[active], r[active]
            # diag(1, conj(phase)) makes the pivot real; a real rotation then zeroes it
            phase = apq / r
            tau = (a[q, q].real - a[p, p].real) / (2.0 * r)
            t = np.where(tau < 0, -1.0, 1.0) / (np.abs(tau) + np.sqrt(1.0 + tau * tau))
            c = 1.0 / np.sqrt(1.0 + t * t)
            s = t * c
            g = np.eye(n, dtype=np.complex128)
            g[p, p] = c
            g[p, q] = s
            g[q, p] = -s * phase.conj()
            g[q, q] = c * phase.conj()
            a = g.conj().T @ a @ g
            a[p, q] = 0.0
            a[q, p] = 0.0
            if vectors:
                v = v @ g
    raise NumericalError(f"Jacobi eigensolver did not converge in {JACOBI_MAX_SWEEPS} sweeps")


def hermitian_eig(m, tol: float = DEFAULT_TOL, method: str = "auto", vectors: bool = True):
    """Eigendecomposition of a Hermitian matrix.

    Returns ``(eigenvalues, vectors)`` with eigenvalues real and sorted in
    descending order and eigenvectors as the columns of ``vectors``.

    ``method`` is ``"jacobi"``, ``"lapack"`` or ``"auto"`` (Jacobi up to
    dimension 64, LAPACK above). With ``vectors=False`` the returned vectors
    are not meaningful and Jacobi skips accumulating them.
    """
    m = as_matrix(m, square=True)
    dev = hermiticity_deviation(m)
    if dev > tol:
        raise ValidationError(f"matrix is not Hermitian (deviation {dev:.3e} > {tol:.1e})")
    h = 0.5 * (m + m.conj().T)
    n = h.shape[0]
    if method == "auto":
        method = "jacobi" if n <= JACOBI_MAX_DIM else "lapack"
    if method == "jacobi":
        w, v = _jacobi(h, vectors)
    elif method == "lapack":
        w, v = np.linalg.eigh(h)
    else:
        raise ValueError(f"unknown method {method!r}")
    order = np.argsort(-w, kind="stable")
    return w[order], v[:, order]


def eigvalsh(m, tol: float = DEFAULT_TOL) -> np.ndarray:
    return hermitian_eig(m, tol=tol, vectors=False)[0]


def inv_sqrt_psd(m, tol: float = 1e-10) -> np.ndarray:
    """Pseudo-inverse square root on the support of a PSD matrix.

    Eigenvalues at or below ``tol`` are mapped to zero, the rest to
    ``λ^{-1/2}``.
    """
    w, v = hermitian_eig(m, tol=max(tol, DEFAULT_TOL))
    if w.size and w[-1] < -tol:
        raise ValidationError(f"matrix is not PSD (smallest eigenvalue {w[-1]:.3e})")
    inv = np.zeros_like(w)
    keep = w > tol
    inv[keep] = 1.0 / np.sqrt(w[keep])
    out = (v * inv) @ v.conj().T
    return 0.5 * (out + out.conj().T)


def support_projector(m, tol: float = 1e-10) -> np.ndarray:
    w, v = hermitian_eig(m, tol=max(tol, DEFAULT_TOL))
    vs = v[:, w > tol]
    return vs @ vs.conj().T


@dataclass
class ValidationReport:
    """Outcome of a state or POVM check. ``passed`` is True iff every deviation is within ``tol``."""

    passed: bool
    tol: float
    hermiticity: list[float] = field(default_factory=list)
    positivity: list[float] = field(default_factory=list)
    completeness: float | None = None
    trace: float | None = None
    messages: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "passed": self.passed,
            "tol": self.tol,
            "max_hermiticity_deviation": max(self.hermiticity, default=0.0),
            "max_positivity_deviation": max(self.positivity, default=0.0),
            "completeness_deviation": self.completeness,
            "trace_deviation": self.trace,
            "messages": list(self.messages),
        }


def _spectrum_bounds(m: np.ndarray):
    h = 0.5 * (m + m.conj().T)
    w = hermitian_eig(h, tol=np.inf, vectors=False)[0]
    return float(w[-1]), float(w[0])


def check_density(m, tol: float = DEFAULT_TOL) -> ValidationReport:
    """Hermitian, PSD and unit-trace check for a candidate density operator."""
    m = as_matrix(m, square=True)
    herm = hermiticity_deviation(m)
    lo, _ = _spectrum_bounds(m)
    pos = max(0.0, -lo)
    tr = abs(complex(np.trace(m)) - 1.0)
    msgs = []
    if herm > tol:
        msgs.append(f"not Hermitian: {herm:.3e}")
    if pos > tol:
        msgs.append(f"negative eigenvalue: {lo:.3e}")
    if tr > tol:
        msgs.append(f"trace deviates from 1 by {tr:.3e}")
    return ValidationReport(not msgs, tol, [herm], [pos], None, tr, msgs)


def check_effect(m, tol: float = DEFAULT_TOL) -> ValidationReport:
    """Check ``0 <= E <= 1`` (and Hermiticity) for a single measurement effect."""
    m = as_matrix(m, square=True)
    herm = hermiticity_deviation(m)
    lo, hi = _spectrum_bounds(m)
    pos = max(0.0, -lo, hi - 1.0)
    msgs = []
    if herm > tol:
        msgs.append(f"not Hermitian: {herm:.3e}")
    if pos > tol:
        msgs.append(f"spectrum [{lo:.3e}, {hi:.3e}] leaves [0, 1]")
    return ValidationReport(not msgs, tol, [herm], [pos], None, None, msgs)


def validate_povm(effects, tol: float = DEFAULT_TOL) -> ValidationReport:
    effects = [as_matrix(e, square=True) for e in effects]
    if not effects:
        raise ShapeError("a POVM needs at least one effect")
    d = effects[0].shape[0]
    if any(e.shape != (d, d) for e in effects):
        raise ShapeError("POVM effects have mismatched dimensions")
    herm, pos, msgs = [], [], []
    for i, e in enumerate(effects):
        r = check_effect(e, tol)
        herm += r.hermiticity
        pos += r.positivity
        msgs += [f"effect {i}: {s}" for s in r.messages]
    comp = float(np.max(np.abs(np.sum(effects, axis=0) - np.eye(d))))
    if comp > tol:
        msgs.append(f"effects do not sum to identity: deviation {comp:.3e}")
    return ValidationReport(not msgs, tol, herm, pos, comp, None, msgs)


class Povm:
    """An ordered, validated list of measurement effects summing to the identity."""

    def __init__(self, effects, tol: float = DEFAULT_TOL):
        mats = tuple(as_matrix(e, square=True) for e in effects)
        report = validate_povm(mats, tol)
        if not report.passed:
            raise ValidationError("invalid POVM: " + "; ".join(report.messages[:5]))
        for e in mats:
            e.setflags(write=False)
        self.effects = mats
        self.dim = mats[0].shape[0]

    def __len__(self):
        return len(self.effects)

    def __getitem__(self, i):
        return self.effects[i]

    def __iter__(self):
        return iter(self.effects)


def projector(d: int, i: int) -> np.ndarray:
    p = np.zeros((d, d), dtype=np.complex128)
    p[i, i] = 1.0
    return p
