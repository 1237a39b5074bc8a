"""
Code constructions.

* constant-weight subset families of [M] with bounded pairwise
  intersections (the combinatorial input of identification codes);
* transmission code -> simultaneous identification code, by mixing the
  encoders over a subset and summing the decoder effects over a product
  of subsets;
* deterministic code -> stochastic code, in two variants;
* rate bookkeeping in the base-2 log domain.

Subsets are stored 0-based; the JSON file format is 1-based.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from .codes import (
    DeterministicCode,
    IdCode,
    SimultaneousIdCode,
    StochasticEncoder,
    StochasticTransmissionCode,
    subset_sum_effect,
)
from .errors import ParameterError, UndefinedQuantityError

EXHAUSTIVE_LIMIT = 10**5
REJECTION_FACTOR = 50


def _check_unit_interval(name, v):
    if not 0.0 < v < 1.0:
        raise ParameterError(f"{name}={v} must lie in (0, 1)")


def lober_condition(lam: float, eps: float) -> bool:
    """Feasibility condition ``eps * log2(1/lam - 1) > 2`` of the family lemma."""
    _check_unit_interval("lambda", lam)
    _check_unit_interval("epsilon", eps)
    return eps * math.log2(1.0 / lam - 1.0) > 2.0


def family_weight(M: int, lam: float) -> int:
    return math.floor(lam * M)


def lober_bound_log2(M: int, lam: float) -> float:
    """log2 of the guaranteed family size ``2^{floor(lam M)} / M``."""
    if M < 1:
        raise ParameterError("ground set size M must be >= 1")
    return family_weight(M, lam) - math.log2(M)


@dataclass(frozen=True)
class SubsetFamily:
    """Distinct ``weight``-subsets of range(M) with pairwise intersections at most ``cap``.

    Construction verifies every invariant with integer set arithmetic and
    raises on violation.
    """

    M: int
    weight: int
    cap: float
    subsets: tuple
    shortfall: bool = False
    mode: str = "given"
    seed: int | None = None
    target: int | None = None

    def __post_init__(self):
        subsets = tuple(tuple(sorted(int(i) for i in s)) for s in self.subsets)
        object.__setattr__(self, "subsets", subsets)
        if not 1 <= self.weight <= self.M:
            raise ParameterError(f"weight {self.weight} infeasible for ground size {self.M}")
        masks = []
        for s in subsets:
            if len(set(s)) != self.weight or len(s) != self.weight:
                raise ParameterError(f"subset {s} does not have weight {self.weight}")
            if s[0] < 0 or s[-1] >= self.M:
                raise ParameterError(f"subset {s} not contained in range({self.M})")
            masks.append(_mask(s))
        if len(set(masks)) != len(masks):
            raise ParameterError("family contains repeated subsets")
        for i, j in combinations(range(len(masks)), 2):
            if (masks[i] & masks[j]).bit_count() > self.cap:
                raise ParameterError(f"subsets {subsets[i]} and {subsets[j]} intersect in more than {self.cap}")

    def __len__(self):
        return len(self.subsets)

    def max_intersection(self) -> int:
        masks = [_mask(s) for s in self.subsets]
        return max(((a & b).bit_count() for a, b in combinations(masks, 2)), default=0)


def _mask(s) -> int:
    out = 0
    for i in s:
        out |= 1 << i
    return out


def build_subset_family(M: int, lam: float, eps: float, target_count: int, seed: int = 0) -> SubsetFamily:
    """Greedy family of ``floor(lam M)``-subsets of range(M) with intersections <= ``eps * floor(lam M)``.

    When there are at most 10^5 candidate subsets, all of them are scanned
    in lexicographic order and kept first-fit, so the result cannot be
    extended by any further subset (unless ``target_count`` stopped it).
    Otherwise subsets are drawn at random with ``seed`` and kept first-fit
    until ``target_count`` is reached or ``50 * target_count`` consecutive
    draws are rejected. ``shortfall`` flags a family smaller than the target.
    """
    if M < 1:
        raise ParameterError("ground set size M must be >= 1")
    if target_count < 1:
        raise ParameterError("target_count must be >= 1")
    if lam <= 0:
        raise ParameterError(f"lambda={lam} must be positive")
    if not 0 < eps:
        raise ParameterError(f"epsilon={eps} must be positive")
    w = family_weight(M, lam)
    if not 1 <= w <= M:
        raise ParameterError(f"weight floor(lambda*M) = {w} infeasible for M = {M}")
    cap = eps * w
    kept: list[int] = []
    chosen: list[tuple] = []

    def fits(mask: int) -> bool:
        return all((mask & other).bit_count() <= cap for other in kept)

    if math.comb(M, w) <= EXHAUSTIVE_LIMIT:
        mode = "exhaustive"
        for s in combinations(range(M), w):
            if len(chosen) >= target_count:
                break
            mask = _mask(s)
            if fits(mask):
                kept.append(mask)
                chosen.append(s)
    else:
        mode = "randomized"
        rng = np.random.default_rng(seed)
        seen = set()
        rejections = 0
        while len(chosen) < target_count and rejections < REJECTION_FACTOR * target_count:
            s = tuple(sorted(int(i) for i in rng.choice(M, size=w, replace=False)))
            mask = _mask(s)
            if mask not in seen and fits(mask):
                seen.add(mask)
                kept.append(mask)
                chosen.append(s)
                rejections = 0
            else:
                rejections += 1
    return SubsetFamily(M, w, cap, tuple(chosen), len(chosen) < target_count, mode, seed, target_count)


def singleton_family(M: int) -> SubsetFamily:
    return SubsetFamily(M, 1, 0.0, tuple((i,) for i in range(M)))


def family_overlap(fam_a: SubsetFamily, fam_b: SubsetFamily) -> float:
    """``max |A_m∩A_a| |B_n∩B_b| / (|A_m| |B_n|)`` over pairs ``(m, n) != (a, b)``.

    Returns 0.0 when there is only one pair.
    """
    ia = _intersections(fam_a)
    ib = _intersections(fam_b)
    prod = np.multiply.outer(ia, ib).transpose(0, 2, 1, 3).astype(float)
    ma, mb = len(fam_a), len(fam_b)
    prod = prod.reshape(ma * mb, ma * mb) / (fam_a.weight * fam_b.weight)
    if prod.shape[0] < 2:
        return 0.0
    np.fill_diagonal(prod, -np.inf)
    return float(prod.max())


def _intersections(fam: SubsetFamily) -> np.ndarray:
    inc = np.zeros((len(fam), fam.M), dtype=np.int64)
    for i, s in enumerate(fam.subsets):
        inc[i, list(s)] = 1
    return inc @ inc.T


def mix_encoders(encoders, subset) -> StochasticEncoder:
    """Uniform mixture ``(1/|A|) Σ_{i∈A} P_i``."""
    subset = list(subset)
    if not subset:
        raise ParameterError("cannot mix over an empty subset")
    if any(not 0 <= i < len(encoders) for i in subset):
        raise ParameterError(f"subset {subset} indexes outside {len(encoders)} encoders")
    first = encoders[subset[0]]
    acc: dict = {}
    for i in subset:
        for w, p in encoders[i].support:
            acc[w] = acc.get(w, 0.0) + p
    support = tuple((w, p / len(subset)) for w, p in sorted(acc.items()))
    return StochasticEncoder(first.k, first.size, support)


def construct_sim_id_code(code: StochasticTransmissionCode, fam_a: SubsetFamily,
                          fam_b: SubsetFamily) -> SimultaneousIdCode:
    """Identification code with encoders mixed over ``A_m`` / ``B_n`` and tests ``Σ_{A_m×B_n} D_ij``."""
    if fam_a.M != code.M:
        raise ParameterError(f"family A lives on [{fam_a.M}], code has M = {code.M}")
    if fam_b.M != code.N:
        raise ParameterError(f"family B lives on [{fam_b.M}], code has N = {code.N}")
    if len(fam_a) == 0 or len(fam_b) == 0:
        raise ParameterError("subset families must be non-empty")
    ex = tuple(mix_encoders(code.encoders_x, a) for a in fam_a.subsets)
    ey = tuple(mix_encoders(code.encoders_y, b) for b in fam_b.subsets)
    effects = tuple(subset_sum_effect(code.decoder, code.N, a, b) for a in fam_a.subsets for b in fam_b.subsets)
    # effects are subset sums of a valid POVM, hence in [0, 1] up to roundoff
    id_code = IdCode(code.k, ex, ey, effects, validate=False)
    return SimultaneousIdCode(id_code, code.decoder, code.M, code.N, fam_a.subsets, fam_b.subsets)


def _distinct(words, what):
    if len(set(words)) != len(words):
        raise ParameterError(f"{what} contains duplicate codewords")


def derandomize_literal(code: DeterministicCode) -> StochasticTransmissionCode:
    """Every encoder is the uniform distribution over the whole codebook of its sender."""
    _distinct(code.codewords_x, "codewords_x")
    _distinct(code.codewords_y, "codewords_y")
    px = StochasticEncoder.uniform(code.codewords_x, code.nx)
    qy = StochasticEncoder.uniform(code.codewords_y, code.ny)
    return StochasticTransmissionCode(code.k, (px,) * code.M, (qy,) * code.N, code.decoder)


def derandomize_pointmass(code: DeterministicCode) -> StochasticTransmissionCode:
    """Encoder ``m`` is the point mass at ``x_m``."""
    _distinct(code.codewords_x, "codewords_x")
    _distinct(code.codewords_y, "codewords_y")
    ex = tuple(StochasticEncoder.point_mass(w, code.nx) for w in code.codewords_x)
    ey = tuple(StochasticEncoder.point_mass(w, code.ny) for w in code.codewords_y)
    return StochasticTransmissionCode(code.k, ex, ey, code.decoder)


@dataclass(frozen=True)
class RatePoint:
    r1: float
    r2: float
    delta: float = 0.0
    kind: str = "transmission"

    def __post_init__(self):
        if self.r1 < 0 or self.r2 < 0:
            raise ParameterError("rates must be non-negative")

    def to_dict(self) -> dict:
        return {"r1": self.r1, "r2": self.r2, "delta": self.delta, "kind": self.kind}


def transmission_rate_pair(k: int, m_count: int, n_count: int, delta: float = 0.0) -> RatePoint:
    if k < 1 or m_count < 1 or n_count < 1:
        raise ParameterError("k and message counts must be >= 1")
    return RatePoint(math.log2(m_count) / k, math.log2(n_count) / k, delta, "transmission")


def id_rate_pair(k: int, m_count: int, n_count: int, delta: float = 0.0) -> RatePoint:
    """``((1/k) log2 log2 M', (1/k) log2 log2 N')``."""
    if k < 1:
        raise ParameterError("k must be >= 1")
    if m_count < 2 or n_count < 2:
        raise UndefinedQuantityError("identification rates need at least two messages per sender")
    return RatePoint(math.log2(math.log2(m_count)) / k, math.log2(math.log2(n_count)) / k, delta, "simultaneous-id")


@dataclass
class GrowthReport:
    passed: bool
    lemma_bound_log2: float
    rate_bound_log2: float
    rate_bound_met: bool
    log2_m_prime: float
    precision_note: str | None = None
    details: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "passed": self.passed,
            "lemma_bound_log2": self.lemma_bound_log2,
            "rate_bound_log2": self.rate_bound_log2,
            "rate_bound_met": self.rate_bound_met,
            "log2_m_prime": self.log2_m_prime,
            "precision_note": self.precision_note,
        }


# float exponents beyond this are not represented exactly
_EXACT_EXP = 52
_MAX_EXP = 1000


def growth_check(k: int, rate: float, delta: float, lam: float, log2_m_prime: float,
                 log2_m: float) -> GrowthReport:
    """Check ``log2 M' >= floor(lam M) - log2 M`` and report the bound ``lam 2^{k(R-δ)} - k``.

    All sizes enter as base-2 logarithms. When ``lam * M`` leaves the range
    where floats are exact, the floor is dropped and the comparison is done
    one logarithm further down; ``precision_note`` says so.
    """
    for v in (rate, delta, lam, log2_m_prime, log2_m):
        if not math.isfinite(v):
            raise ParameterError("growth_check inputs must be finite")
    if k < 1 or lam <= 0:
        raise ParameterError("k must be >= 1 and lambda positive")
    note = None
    scale = math.log2(lam) + log2_m
    if scale <= _EXACT_EXP:
        lemma = math.floor(lam * 2.0 ** log2_m) - log2_m
        passed = log2_m_prime >= lemma
    else:
        note = f"lam*M ~ 2^{scale:.1f}: compared as log2(log2 M' + log2 M) >= log2(lam) + log2 M"
        lemma = lam * 2.0 ** log2_m - log2_m if scale < _MAX_EXP else math.inf
        passed = log2_m_prime + log2_m > 0 and math.log2(log2_m_prime + log2_m) >= scale
    exp = k * (rate - delta)
    if math.log2(lam) + exp < _MAX_EXP:
        rate_bound = lam * 2.0 ** exp - k
        rate_met = log2_m_prime >= rate_bound
    else:
        rate_bound = math.inf
        note = (note + "; " if note else "") + "rate bound overflows float range"
        rate_met = log2_m_prime + k > 0 and math.log2(log2_m_prime + k) >= math.log2(lam) + exp
    return GrowthReport(passed, lemma, rate_bound, rate_met, log2_m_prime, note,
                        {"k": k, "rate": rate, "delta": delta, "lambda": lam, "log2_m": log2_m})
