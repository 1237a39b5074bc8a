"""
Classical-classical-quantum channels: a table of output states W(x, y)
and its block extensions W^k(x^k, y^k).
"""

from __future__ import annotations

import itertools
from typing import Mapping, Sequence

import numpy as np

from .errors import DimensionLimitError, ParameterError, ShapeError, ValidationError
from .linalg import DEFAULT_DIM_CAP, DEFAULT_TOL, as_matrix, check_density, kron_all


def as_word(w, size: int, k: int | None = None) -> tuple:
    """Normalize a word to a tuple of ints and range-check its letters."""
    if isinstance(w, str):
        w = parse_word(w)
    word = tuple(int(c) for c in w)
    if k is not None and len(word) != k:
        raise ParameterError(f"word {word} has length {len(word)}, expected {k}")
    for c in word:
        if not 0 <= c < size:
            raise ParameterError(f"letter {c} out of range for alphabet of size {size}")
    return word


def parse_word(s: str) -> tuple:
    s = s.strip()
    if not s:
        raise ParameterError("empty word")
    try:
        return tuple(int(c) for c in s.split(","))
    except ValueError as exc:
        raise ParameterError(f"malformed word {s!r}") from exc


def format_word(w) -> str:
    return ",".join(str(c) for c in w)


def all_words(size: int, k: int):
    return itertools.product(range(size), repeat=k)


def word_index(w, size: int) -> int:
    """Position of ``w`` in the lexicographic order of ``all_words``."""
    idx = 0
    for c in w:
        idx = idx * size + c
    return idx


def word_from_index(idx: int, size: int, k: int) -> tuple:
    letters = []
    for _ in range(k):
        idx, c = divmod(idx, size)
        letters.append(c)
    return tuple(reversed(letters))


class CcqChannel:
    """Single-letter channel: ``states[x, y]`` is the density operator W(x, y)."""

    def __init__(self, states, tol: float = DEFAULT_TOL):
        st = np.asarray(states, dtype=np.complex128)
        if st.ndim != 4 or st.shape[2] != st.shape[3] or min(st.shape) < 1:
            raise ShapeError(f"states must have shape (nx, ny, d, d), got {st.shape}")
        nx, ny = st.shape[:2]
        for x in range(nx):
            for y in range(ny):
                rep = check_density(st[x, y], tol)
                if not rep.passed:
                    raise ValidationError(f"W({x},{y}) is not a density operator: " + "; ".join(rep.messages))
        st.setflags(write=False)
        self.states = st
        self.nx, self.ny, self.dim = nx, ny, st.shape[2]

    def __call__(self, x: int, y: int) -> np.ndarray:
        if not (0 <= x < self.nx and 0 <= y < self.ny):
            raise ParameterError(f"input pair ({x}, {y}) out of range")
        return self.states[x, y]

    def block(self, k: int, cap: int = DEFAULT_DIM_CAP) -> "MemorylessBlockChannel":
        return MemorylessBlockChannel(self, k, cap=cap)


class BlockChannel:
    """Common interface of W^k: alphabet sizes, block length, output dimension, ``evaluate``."""

    nx: int
    ny: int
    k: int
    dim: int

    def evaluate(self, xk, yk) -> np.ndarray:
        raise NotImplementedError

    def _check_words(self, xk, yk):
        return as_word(xk, self.nx, self.k), as_word(yk, self.ny, self.k)


class MemorylessBlockChannel(BlockChannel):
    """k-fold memoryless extension: W^k(x^k, y^k) = ⊗_i W(x_i, y_i)."""

    def __init__(self, base: CcqChannel, k: int, cap: int = DEFAULT_DIM_CAP):
        if k < 1:
            raise ParameterError("block length k must be >= 1")
        if base.dim ** k > cap:
            raise DimensionLimitError(f"output dimension {base.dim}^{k} exceeds cap {cap}")
        self.base, self.k, self.cap = base, k, cap
        self.nx, self.ny, self.dim = base.nx, base.ny, base.dim ** k
        self._cache: dict = {}

    def evaluate(self, xk, yk) -> np.ndarray:
        xk, yk = self._check_words(xk, yk)
        key = (xk, yk)
        out = self._cache.get(key)
        if out is None:
            out = kron_all([self.base.states[x, y] for x, y in zip(xk, yk)], cap=self.cap)
            out.setflags(write=False)
            self._cache[key] = out
        return out


class ExplicitBlockChannel(BlockChannel):
    """W^k given as a full table over (x^k, y^k); need not factorize across letters."""

    def __init__(self, nx: int, ny: int, k: int, table: Mapping, tol: float = DEFAULT_TOL):
        if min(nx, ny, k) < 1:
            raise ParameterError("alphabet sizes and k must be >= 1")
        self.nx, self.ny, self.k = nx, ny, k
        states = {}
        for (xk, yk), rho in table.items():
            key = (as_word(xk, nx, k), as_word(yk, ny, k))
            m = as_matrix(rho, square=True)
            rep = check_density(m, tol)
            if not rep.passed:
                raise ValidationError(f"W^k{key} is not a density operator: " + "; ".join(rep.messages))
            m.setflags(write=False)
            states[key] = m
        missing = [(a, b) for a in all_words(nx, k) for b in all_words(ny, k) if (a, b) not in states]
        if missing:
            raise ParameterError(f"explicit block table is missing {len(missing)} entries, e.g. {missing[0]}")
        dims = {m.shape[0] for m in states.values()}
        if len(dims) != 1:
            raise ShapeError("explicit block table mixes output dimensions")
        self.dim = dims.pop()
        self.table = states

    def evaluate(self, xk, yk) -> np.ndarray:
        return self.table[self._check_words(xk, yk)]


def block_channel(ch, k: int | None = None, cap: int = DEFAULT_DIM_CAP) -> BlockChannel:
    """Return ``ch`` as a block channel of length ``k`` (wrapping a single-letter channel if needed)."""
    if isinstance(ch, BlockChannel):
        if k is not None and ch.k != k:
            raise ParameterError(f"channel has block length {ch.k}, code needs {k}")
        return ch
    return MemorylessBlockChannel(ch, 1 if k is None else k, cap=cap)


def depolarizing_channel(p: float, nx: int, ny: int) -> CcqChannel:
    """W(x, y) = (1 - p)|x·ny + y><x·ny + y| + p·1/d with d = nx·ny."""
    if not 0.0 <= p <= 1.0:
        raise ParameterError(f"depolarizing parameter p={p} outside [0, 1]")
    if nx < 1 or ny < 1:
        raise ParameterError("alphabet sizes must be >= 1")
    d = nx * ny
    states = np.zeros((nx, ny, d, d), dtype=np.complex128)
    for x in range(nx):
        for y in range(ny):
            states[x, y] = p * np.eye(d) / d
            states[x, y, x * ny + y, x * ny + y] += 1.0 - p
    return CcqChannel(states)


def noiseless_channel(nx: int, ny: int) -> CcqChannel:
    return depolarizing_channel(0.0, nx, ny)


def classical_channel_embedding(table) -> CcqChannel:
    """Diagonal embedding of a classical MAC ``table[x][y] = distribution over z``."""
    t = np.asarray(table, dtype=float)
    if t.ndim != 3:
        raise ShapeError(f"classical table must have shape (nx, ny, nz), got {t.shape}")
    if np.any(t < 0) or np.any(np.abs(t.sum(axis=2) - 1.0) > 1e-12):
        raise ParameterError("classical channel rows must be probability distributions")
    nx, ny, nz = t.shape
    states = np.zeros((nx, ny, nz, nz), dtype=np.complex128)
    idx = np.arange(nz)
    states[:, :, idx, idx] = t
    return CcqChannel(states)


def random_density(d: int, rng: np.random.Generator, rank: int | None = None) -> np.ndarray:
    """Random density operator G G† / tr(G G†) with G a complex Ginibre d×rank matrix."""
    rank = d if rank is None else rank
    g = rng.normal(size=(d, rank)) + 1j * rng.normal(size=(d, rank))
    rho = g @ g.conj().T
    rho /= np.trace(rho).real
    return 0.5 * (rho + rho.conj().T)


def random_channel(nx: int, ny: int, d: int, seed: int) -> CcqChannel:
    rng = np.random.default_rng(seed)
    states = np.empty((nx, ny, d, d), dtype=np.complex128)
    for x in range(nx):
        for y in range(ny):
            states[x, y] = random_density(d, rng, rank=int(rng.integers(1, d + 1)))
    return CcqChannel(states)


def random_classical_table(nx: int, ny: int, nz: int, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    return rng.dirichlet(np.ones(nz), size=(nx, ny))


def evaluate_block(ch: BlockChannel, xk: Sequence[int], yk: Sequence[int]) -> np.ndarray:
    return ch.evaluate(xk, yk)
