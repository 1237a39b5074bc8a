"""
Transmission and identification codes for CCQ channels, and exact
evaluation of their error figures.

Every error is computed by summing over the supports of the encoders
(off-support terms vanish), never by sampling. Message indices in
``ErrorReport.argmax`` are 0-based.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .channel import BlockChannel, as_word, block_channel
from .errors import ParameterError, ShapeError, UndefinedQuantityError, ValidationError
from .linalg import DEFAULT_TOL, Povm, as_matrix, check_effect

PROB_TOL = 1e-12
DECOMPOSITION_TOL = 1e-12


@dataclass(frozen=True)
class StochasticEncoder:
    """A distribution over words of length ``k`` on an alphabet of ``size`` letters."""

    k: int
    size: int
    support: tuple

    def __post_init__(self):
        if self.k < 1 or self.size < 1:
            raise ParameterError("encoder needs k >= 1 and a non-empty alphabet")
        items = tuple((as_word(w, self.size, self.k), float(p)) for w, p in self.support)
        if not items:
            raise ParameterError("encoder has empty support")
        words = [w for w, _ in items]
        if len(set(words)) != len(words):
            raise ParameterError("encoder support has repeated words")
        probs = np.array([p for _, p in items])
        if np.any(probs < 0) or abs(probs.sum() - 1.0) > PROB_TOL:
            raise ParameterError(f"encoder probabilities must be >= 0 and sum to 1 (sum={probs.sum()!r})")
        object.__setattr__(self, "support", items)

    @classmethod
    def point_mass(cls, word, size: int) -> "StochasticEncoder":
        word = tuple(word)
        return cls(len(word), size, ((word, 1.0),))

    @classmethod
    def uniform(cls, words, size: int) -> "StochasticEncoder":
        words = [tuple(w) for w in words]
        return cls(len(words[0]), size, tuple((w, 1.0 / len(words)) for w in words))

    def prob(self, word) -> float:
        word = tuple(word)
        for w, p in self.support:
            if w == word:
                return p
        return 0.0

    def as_dict(self) -> dict:
        return dict(self.support)


def _decoder_size(decoder: Povm, m: int, n: int):
    if len(decoder) != m * n:
        raise ShapeError(f"decoder has {len(decoder)} effects, expected M*N = {m * n}")


def _encoders(encoders, k: int, what: str) -> tuple:
    encoders = tuple(encoders)
    if not encoders:
        raise ParameterError(f"{what}: at least one encoder needed")
    for e in encoders:
        if e.k != k:
            raise ParameterError(f"{what}: encoder block length {e.k} != {k}")
        if e.size != encoders[0].size:
            raise ParameterError(f"{what}: encoders disagree on alphabet size")
    return encoders


@dataclass(frozen=True)
class DeterministicCode:
    """Codewords ``x_1..x_M``, ``y_1..y_N`` and a decoding POVM indexed ``m * N + n``."""

    k: int
    nx: int
    ny: int
    codewords_x: tuple
    codewords_y: tuple
    decoder: Povm

    def __post_init__(self):
        object.__setattr__(self, "codewords_x", tuple(as_word(w, self.nx, self.k) for w in self.codewords_x))
        object.__setattr__(self, "codewords_y", tuple(as_word(w, self.ny, self.k) for w in self.codewords_y))
        _decoder_size(self.decoder, self.M, self.N)

    @property
    def M(self) -> int:
        return len(self.codewords_x)

    @property
    def N(self) -> int:
        return len(self.codewords_y)


@dataclass(frozen=True)
class StochasticTransmissionCode:
    k: int
    encoders_x: tuple
    encoders_y: tuple
    decoder: Povm

    def __post_init__(self):
        object.__setattr__(self, "encoders_x", _encoders(self.encoders_x, self.k, "encoders_x"))
        object.__setattr__(self, "encoders_y", _encoders(self.encoders_y, self.k, "encoders_y"))
        _decoder_size(self.decoder, self.M, self.N)

    @property
    def M(self) -> int:
        return len(self.encoders_x)

    @property
    def N(self) -> int:
        return len(self.encoders_y)

    def effect(self, m: int, n: int) -> np.ndarray:
        return self.decoder[m * self.N + n]

    def as_id_code(self) -> "IdCode":
        return IdCode(self.k, self.encoders_x, self.encoders_y, self.decoder.effects)


@dataclass(frozen=True)
class IdCode:
    """Encoders plus one test effect ``I_mn`` (index ``m * N + n``) per message pair.

    The effects need only satisfy ``0 <= I <= 1``; they need not sum to the
    identity. Pass ``validate=False`` to skip the effect check, e.g. for
    fault-injection experiments.
    """

    k: int
    encoders_x: tuple
    encoders_y: tuple
    effects: tuple
    validate: bool = field(default=True, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "encoders_x", _encoders(self.encoders_x, self.k, "encoders_x"))
        object.__setattr__(self, "encoders_y", _encoders(self.encoders_y, self.k, "encoders_y"))
        effects = tuple(as_matrix(e, square=True) for e in self.effects)
        if len(effects) != self.M * self.N:
            raise ShapeError(f"{len(effects)} effects for {self.M}x{self.N} message pairs")
        if len({e.shape for e in effects}) != 1:
            raise ShapeError("ID effects have mismatched dimensions")
        if self.validate:
            for i, e in enumerate(effects):
                rep = check_effect(e, DEFAULT_TOL)
                if not rep.passed:
                    raise ValidationError(f"effect {i} is not in [0, 1]: " + "; ".join(rep.messages))
        object.__setattr__(self, "effects", effects)

    @property
    def M(self) -> int:
        return len(self.encoders_x)

    @property
    def N(self) -> int:
        return len(self.encoders_y)

    def effect(self, m: int, n: int) -> np.ndarray:
        return self.effects[m * self.N + n]


@dataclass(frozen=True)
class SimultaneousIdCode:
    """An ID code together with the claim ``I_mn = Σ_{i∈A_m} Σ_{j∈B_n} E_ij``.

    ``underlying`` holds ``R * S`` effects indexed ``r * S + s``; subsets are
    0-based index tuples. The claim is checked by ``verify_simultaneous``,
    not at construction.
    """

    id_code: IdCode
    underlying: Povm
    R: int
    S: int
    subsets_a: tuple
    subsets_b: tuple

    def __post_init__(self):
        object.__setattr__(self, "subsets_a", tuple(tuple(int(i) for i in a) for a in self.subsets_a))
        object.__setattr__(self, "subsets_b", tuple(tuple(int(j) for j in b) for b in self.subsets_b))
        if len(self.underlying) != self.R * self.S:
            raise ShapeError(f"underlying POVM has {len(self.underlying)} effects, expected R*S = {self.R * self.S}")
        if len(self.subsets_a) != self.id_code.M or len(self.subsets_b) != self.id_code.N:
            raise ShapeError("one subset per message is required on each side")
        for a in self.subsets_a:
            if any(not 0 <= i < self.R for i in a):
                raise ParameterError(f"subset {a} not contained in [R] with R={self.R}")
        for b in self.subsets_b:
            if any(not 0 <= j < self.S for j in b):
                raise ParameterError(f"subset {b} not contained in [S] with S={self.S}")


@dataclass
class ErrorReport:
    value: float
    argmax: tuple | None
    per_pair: np.ndarray | None = None

    def to_dict(self, with_table: bool = False) -> dict:
        d = {"value": self.value, "argmax": _jsonable(self.argmax)}
        if with_table and self.per_pair is not None:
            d["per_pair"] = self.per_pair.tolist()
        return d


def _jsonable(x):
    if isinstance(x, tuple):
        return [_jsonable(v) for v in x]
    return x


def _as_stochastic(code):
    if isinstance(code, DeterministicCode):
        ex = [StochasticEncoder.point_mass(w, code.nx) for w in code.codewords_x]
        ey = [StochasticEncoder.point_mass(w, code.ny) for w in code.codewords_y]
        return StochasticTransmissionCode(code.k, ex, ey, code.decoder)
    return code


def _distribution_matrix(encoders):
    words = sorted({w for e in encoders for w, _ in e.support})
    col = {w: i for i, w in enumerate(words)}
    p = np.zeros((len(encoders), len(words)))
    for m, e in enumerate(encoders):
        for w, q in e.support:
            p[m, col[w]] = q
    return words, p


def acceptance_table(encoders_x, encoders_y, effects, ch) -> np.ndarray:
    """``T[m, n, e] = Σ_{x,y} P_m(x) Q_n(y) tr(effects[e] W^k(x, y))``.

    The sum runs over the union of the encoder supports only.
    """
    k = encoders_x[0].k
    ch = block_channel(ch, k)
    if encoders_x[0].size != ch.nx or encoders_y[0].size != ch.ny:
        raise ShapeError("encoder alphabets do not match the channel")
    eff = np.asarray(effects, dtype=np.complex128)
    if eff.shape[1:] != (ch.dim, ch.dim):
        raise ShapeError(f"effects have dimension {eff.shape[1]}, channel output has {ch.dim}")
    xs, px = _distribution_matrix(encoders_x)
    ys, qy = _distribution_matrix(encoders_y)
    d2 = ch.dim * ch.dim
    # tr(I ρ) = Σ_ij I_ij ρ_ji = <vec(I^T), vec(ρ)>
    eff_t = eff.transpose(0, 2, 1).reshape(len(eff), d2)
    g = np.empty((len(xs), len(ys), len(eff)))
    for a, x in enumerate(xs):
        rho = np.stack([ch.evaluate(x, y) for y in ys]).reshape(len(ys), d2)
        g[a] = (rho @ eff_t.T).real
    return np.einsum("mx,ny,xye->mne", px, qy, g, optimize=True)


def _check_k(code, ch) -> BlockChannel:
    return block_channel(ch, code.k)


def success_table(code, ch) -> np.ndarray:
    """Per-pair success probabilities ``tr(D_mn ρ_mn)`` of a transmission code, shape (M, N)."""
    code = _as_stochastic(code)
    ch = _check_k(code, ch)
    t = acceptance_table(code.encoders_x, code.encoders_y, code.decoder.effects, ch)
    t = t.reshape(code.M, code.N, code.M, code.N)
    return np.einsum("mnmn->mn", t)


def _argmax2(a: np.ndarray):
    idx = np.unravel_index(int(np.argmax(a)), a.shape)
    return tuple(int(i) for i in idx)


def max_error(code, ch) -> ErrorReport:
    """Maximal error ``max_{m,n} 1 - Σ P_m Q_n tr(D_mn W^k)``."""
    per = np.maximum(1.0 - success_table(code, ch), 0.0)
    return ErrorReport(float(per.max()), _argmax2(per), per)


def avg_error(code, ch) -> ErrorReport:
    """Uniform average of the per-pair error over all (m, n)."""
    per = np.maximum(1.0 - success_table(code, ch), 0.0)
    return ErrorReport(float(per.mean()), None, per)


def id_acceptance(code: IdCode, ch) -> np.ndarray:
    """``A[m, n, a, b]``: probability that test ``I_ab`` accepts when ``(m, n)`` is sent."""
    ch = _check_k(code, ch)
    t = acceptance_table(code.encoders_x, code.encoders_y, code.effects, ch)
    return t.reshape(code.M, code.N, code.M, code.N)


def id_error_first(code: IdCode, ch, acceptance: np.ndarray | None = None) -> ErrorReport:
    acc = id_acceptance(code, ch) if acceptance is None else acceptance
    per = np.maximum(1.0 - np.einsum("mnmn->mn", acc), 0.0)
    return ErrorReport(float(per.max()), _argmax2(per), per)


def id_error_second(code: IdCode, ch, acceptance: np.ndarray | None = None) -> ErrorReport:
    """Worst false acceptance ``max_{(m,n)≠(a,b)} Σ P_m Q_n tr(I_ab W^k)``.

    ``argmax`` is ``((m, n), (a, b))``: sent pair, then tested pair.
    """
    mn = code.M * code.N
    if mn < 2:
        raise UndefinedQuantityError("second-kind error needs at least two message pairs")
    acc = id_acceptance(code, ch) if acceptance is None else acceptance
    flat = np.maximum(acc.reshape(mn, mn), 0.0)
    masked = flat.copy()
    np.fill_diagonal(masked, -np.inf)
    s, t = np.unravel_index(int(np.argmax(masked)), masked.shape)
    arg = (tuple(int(i) for i in divmod(int(s), code.N)), tuple(int(i) for i in divmod(int(t), code.N)))
    per = masked.copy()
    np.fill_diagonal(per, np.nan)
    return ErrorReport(float(masked[s, t]), arg, per.reshape(acc.shape))


@dataclass
class SimultaneityReport:
    passed: bool
    completeness_deviation: float
    decomposition_deviation: float
    worst_pair: tuple | None
    messages: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "passed": self.passed,
            "completeness_deviation": self.completeness_deviation,
            "decomposition_deviation": self.decomposition_deviation,
            "worst_pair": _jsonable(self.worst_pair),
            "messages": list(self.messages),
        }


def subset_sum_effect(underlying: Povm, S: int, a, b) -> np.ndarray:
    """Σ_{i∈a} Σ_{j∈b} E_ij, summed in index order."""
    out = np.zeros((underlying.dim, underlying.dim), dtype=np.complex128)
    for i in a:
        for j in b:
            out = out + underlying[i * S + j]
    return out


def verify_simultaneous(code: SimultaneousIdCode, tol: float = DEFAULT_TOL,
                        decomposition_tol: float = DECOMPOSITION_TOL) -> SimultaneityReport:
    """Recompute every subset sum of the underlying POVM and compare entrywise with ``I_mn``."""
    d = code.underlying.dim
    comp = float(np.max(np.abs(np.sum(code.underlying.effects, axis=0) - np.eye(d))))
    worst, worst_pair = 0.0, None
    for m, a in enumerate(code.subsets_a):
        for n, b in enumerate(code.subsets_b):
            target = code.id_code.effect(m, n)
            if target.shape != (d, d):
                raise ShapeError("ID effects and underlying POVM differ in dimension")
            dev = float(np.max(np.abs(subset_sum_effect(code.underlying, code.S, a, b) - target)))
            if worst_pair is None or dev > worst:
                worst, worst_pair = dev, (m, n)
    msgs = []
    if comp > tol:
        msgs.append(f"underlying POVM incomplete: deviation {comp:.3e}")
    if worst > decomposition_tol:
        msgs.append(f"I{worst_pair} differs from its subset sum by {worst:.3e}")
    return SimultaneityReport(not msgs, comp, worst, worst_pair, msgs)
