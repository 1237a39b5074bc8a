import itertools

import numpy as np
import pytest

from ccqid.channel import (
    ExplicitBlockChannel,
    MemorylessBlockChannel,
    classical_channel_embedding,
    depolarizing_channel,
    noiseless_channel,
    random_classical_table,
)
from ccqid.codes import StochasticEncoder, StochasticTransmissionCode, DeterministicCode
from ccqid.linalg import Povm


def block_index(xk, yk, ny, d):
    """Basis index of ⊗_i |x_i*ny + y_i> for the noiseless/depolarizing embedding."""
    idx = 0
    for x, y in zip(xk, yk):
        idx = idx * d + x * ny + y
    return idx


def projector_decoder(codewords_x, codewords_y, nx, ny):
    """Projectors onto the noiseless output of each codeword pair; the complement is added to effect (0, 0)."""
    k = len(codewords_x[0])
    d = nx * ny
    D = d ** k
    effects = []
    for x in codewords_x:
        for y in codewords_y:
            e = np.zeros((D, D), dtype=complex)
            i = block_index(x, y, ny, d)
            e[i, i] = 1.0
            effects.append(e)
    effects[0] = effects[0] + np.eye(D) - np.sum(effects, axis=0)
    return Povm(effects)


def projector_code(nx, ny, k, codewords_x=None, codewords_y=None):
    """Deterministic point-mass code with a projector decoder; default: all words."""
    cx = list(codewords_x or itertools.product(range(nx), repeat=k))
    cy = list(codewords_y or itertools.product(range(ny), repeat=k))
    return DeterministicCode(k, nx, ny, cx, cy, projector_decoder(cx, cy, nx, ny))


def to_stochastic(code: DeterministicCode):
    ex = [StochasticEncoder.point_mass(w, code.nx) for w in code.codewords_x]
    ey = [StochasticEncoder.point_mass(w, code.ny) for w in code.codewords_y]
    return StochasticTransmissionCode(code.k, ex, ey, code.decoder)


# -- dense brute-force oracle -------------------------------------------------
# Sums over every (x^k, y^k) in the full product alphabet, building each block
# state with np.kron from the single-letter table. Shares no code with the
# support-restricted evaluation in ccqid.codes.

def dense_state(ch, xk, yk):
    if isinstance(ch, MemorylessBlockChannel):
        out = np.ones((1, 1), dtype=complex)
        for x, y in zip(xk, yk):
            out = np.kron(out, ch.base.states[x][y])
        return out
    if isinstance(ch, ExplicitBlockChannel):
        return ch.table[(tuple(xk), tuple(yk))]
    raise TypeError(type(ch))


def dense_acceptance(encoders_x, encoders_y, effects, ch):
    """acc[m][n][e] = Σ_{all x^k, y^k} P_m(x^k) Q_n(y^k) tr(effects[e] W^k(x^k, y^k))."""
    M, N = len(encoders_x), len(encoders_y)
    acc = np.zeros((M, N, len(effects)))
    for xk in itertools.product(range(ch.nx), repeat=ch.k):
        for yk in itertools.product(range(ch.ny), repeat=ch.k):
            rho = dense_state(ch, xk, yk)
            tr = np.array([np.trace(e @ rho).real for e in effects])
            for m in range(M):
                p = encoders_x[m].prob(xk)
                if p == 0.0:
                    continue
                for n in range(N):
                    q = encoders_y[n].prob(yk)
                    if q:
                        acc[m, n] += p * q * tr
    return acc


def dense_max_error(code, ch):
    acc = dense_acceptance(code.encoders_x, code.encoders_y, list(code.decoder), ch)
    M, N = code.M, code.N
    return max(1.0 - acc[m, n, m * N + n] for m in range(M) for n in range(N))


def dense_id_errors(id_code, ch):
    acc = dense_acceptance(id_code.encoders_x, id_code.encoders_y, list(id_code.effects), ch)
    M, N = id_code.M, id_code.N
    e1 = max(1.0 - acc[m, n, m * N + n] for m in range(M) for n in range(N))
    e2 = max(
        acc[m, n, a * N + b]
        for m in range(M) for n in range(N) for a in range(M) for b in range(N)
        if (m, n) != (a, b)
    ) if M * N > 1 else None
    return e1, e2


# -- instance families --------------------------------------------------------

def make_channel(kind, seed=0):
    if kind == "noiseless":
        return noiseless_channel(2, 2)
    if kind.startswith("depol"):
        return depolarizing_channel(float(kind[5:]), 2, 2)
    if kind == "classical":
        return classical_channel_embedding(random_classical_table(2, 2, 3, seed))
    raise ValueError(kind)


CHANNEL_KINDS = ["noiseless", "depol0.05", "depol0.2", "depol0.5", "classical"]


@pytest.fixture
def noiseless_k1():
    return MemorylessBlockChannel(noiseless_channel(2, 2), 1)
