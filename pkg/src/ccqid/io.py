"""
JSON file formats: matrices, channels, codes, subset families and
simultaneous ID codes.

Matrix: ``{"rows": r, "cols": c, "data": [[re, im], ...]}`` row-major.
Words are strings of comma-separated letters, e.g. ``"0,1,1"``.
Family subsets are 1-based on disk and 0-based in memory.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .channel import (
    BlockChannel,
    CcqChannel,
    ExplicitBlockChannel,
    classical_channel_embedding,
    depolarizing_channel,
    format_word,
    noiseless_channel,
    parse_word,
)
from .codes import (
    DeterministicCode,
    IdCode,
    SimultaneousIdCode,
    StochasticEncoder,
    StochasticTransmissionCode,
)
from .construction import SubsetFamily
from .errors import ParameterError, ShapeError
from .linalg import Povm


def matrix_to_json(m) -> dict:
    m = np.asarray(m, dtype=np.complex128)
    return {
        "rows": int(m.shape[0]),
        "cols": int(m.shape[1]),
        "data": [[float(z.real), float(z.imag)] for z in m.ravel()],
    }


def matrix_from_json(d) -> np.ndarray:
    try:
        rows, cols, data = int(d["rows"]), int(d["cols"]), d["data"]
    except (KeyError, TypeError) as exc:
        raise ParameterError(f"malformed matrix object: {exc}") from exc
    if len(data) != rows * cols:
        raise ShapeError(f"matrix has {len(data)} entries, expected {rows}x{cols}")
    arr = np.array([complex(re, im) for re, im in data], dtype=np.complex128)
    return arr.reshape(rows, cols)


def load_json(path) -> dict:
    with open(path) as fh:
        return json.load(fh)


def dump_json(obj, path) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


# -- channels -----------------------------------------------------------------

def channel_from_json(d) -> CcqChannel | BlockChannel:
    kind = d.get("kind")
    if kind == "ccq":
        nx, ny, dim = int(d["nx"]), int(d["ny"]), int(d["dim"])
        states = np.zeros((nx, ny, dim, dim), dtype=np.complex128)
        seen = set()
        for key, m in d["states"].items():
            x, y = parse_word(key)
            if not (0 <= x < nx and 0 <= y < ny):
                raise ParameterError(f"state key {key!r} out of range")
            states[x, y] = matrix_from_json(m)
            seen.add((x, y))
        if len(seen) != nx * ny:
            raise ParameterError(f"channel table has {len(seen)} of {nx * ny} entries")
        return CcqChannel(states)
    if kind == "depolarizing":
        return depolarizing_channel(float(d["p"]), int(d["nx"]), int(d["ny"]))
    if kind == "noiseless":
        return noiseless_channel(int(d["nx"]), int(d["ny"]))
    if kind == "classical":
        rows = d["rows"]
        nx = 1 + max(parse_word(key)[0] for key in rows)
        ny = 1 + max(parse_word(key)[1] for key in rows)
        nz = len(next(iter(rows.values())))
        table = np.full((nx, ny, nz), np.nan)
        for key, dist in rows.items():
            x, y = parse_word(key)
            table[x, y] = dist
        if np.isnan(table).any():
            raise ParameterError("classical channel table is incomplete")
        return classical_channel_embedding(table)
    if kind == "explicit":
        nx, ny, k = int(d["nx"]), int(d["ny"]), int(d["k"])
        table = {}
        for key, m in d["states"].items():
            xs, ys = key.split(";")
            table[(parse_word(xs), parse_word(ys))] = matrix_from_json(m)
        return ExplicitBlockChannel(nx, ny, k, table)
    raise ParameterError(f"unknown channel kind {kind!r}")


def channel_to_json(ch) -> dict:
    if isinstance(ch, CcqChannel):
        return {
            "kind": "ccq",
            "nx": ch.nx,
            "ny": ch.ny,
            "dim": ch.dim,
            "states": {f"{x},{y}": matrix_to_json(ch.states[x, y]) for x in range(ch.nx) for y in range(ch.ny)},
        }
    if isinstance(ch, ExplicitBlockChannel):
        return {
            "kind": "explicit",
            "nx": ch.nx,
            "ny": ch.ny,
            "k": ch.k,
            "states": {f"{format_word(a)};{format_word(b)}": matrix_to_json(m) for (a, b), m in ch.table.items()},
        }
    raise ParameterError(f"cannot serialize channel of type {type(ch).__name__}")


# -- codes --------------------------------------------------------------------

def _encoder_to_json(e: StochasticEncoder) -> list:
    return [[format_word(w), p] for w, p in e.support]


def _encoder_from_json(items, k: int, size: int) -> StochasticEncoder:
    return StochasticEncoder(k, size, tuple((parse_word(w), float(p)) for w, p in items))


def _alphabet(d, key, words):
    if key in d:
        return int(d[key])
    return 1 + max(max(w) for w in words)


def code_to_json(code) -> dict:
    if isinstance(code, DeterministicCode):
        return {
            "k": code.k,
            "nx": code.nx,
            "ny": code.ny,
            "codewords_x": [format_word(w) for w in code.codewords_x],
            "codewords_y": [format_word(w) for w in code.codewords_y],
            "decoder": [matrix_to_json(e) for e in code.decoder],
        }
    if isinstance(code, StochasticTransmissionCode):
        return {
            "k": code.k,
            "nx": code.encoders_x[0].size,
            "ny": code.encoders_y[0].size,
            "encoders_x": [_encoder_to_json(e) for e in code.encoders_x],
            "encoders_y": [_encoder_to_json(e) for e in code.encoders_y],
            "decoder": [matrix_to_json(e) for e in code.decoder],
        }
    if isinstance(code, SimultaneousIdCode):
        ic = code.id_code
        return {
            "kind": "simultaneous-id",
            "k": ic.k,
            "nx": ic.encoders_x[0].size,
            "ny": ic.encoders_y[0].size,
            "encoders_x": [_encoder_to_json(e) for e in ic.encoders_x],
            "encoders_y": [_encoder_to_json(e) for e in ic.encoders_y],
            "effects": [matrix_to_json(e) for e in ic.effects],
            "R": code.R,
            "S": code.S,
            "underlying": [matrix_to_json(e) for e in code.underlying],
            "subsets_a": [[i + 1 for i in a] for a in code.subsets_a],
            "subsets_b": [[j + 1 for j in b] for b in code.subsets_b],
        }
    raise ParameterError(f"cannot serialize code of type {type(code).__name__}")


def code_from_json(d, tol: float = 1e-9):
    """Parse any of the three code formats (deterministic, stochastic, simultaneous ID)."""
    k = int(d["k"])
    if "codewords_x" in d:
        xs = [parse_word(w) for w in d["codewords_x"]]
        ys = [parse_word(w) for w in d["codewords_y"]]
        decoder = Povm([matrix_from_json(m) for m in d["decoder"]], tol=tol)
        return DeterministicCode(k, _alphabet(d, "nx", xs), _alphabet(d, "ny", ys), xs, ys, decoder)
    xs = [parse_word(w) for enc in d["encoders_x"] for w, _ in enc]
    ys = [parse_word(w) for enc in d["encoders_y"] for w, _ in enc]
    nx, ny = _alphabet(d, "nx", xs), _alphabet(d, "ny", ys)
    ex = [_encoder_from_json(e, k, nx) for e in d["encoders_x"]]
    ey = [_encoder_from_json(e, k, ny) for e in d["encoders_y"]]
    if "effects" in d:
        id_code = IdCode(k, ex, ey, [matrix_from_json(m) for m in d["effects"]])
        if "underlying" not in d:
            return id_code
        underlying = Povm([matrix_from_json(m) for m in d["underlying"]], tol=tol)
        return SimultaneousIdCode(
            id_code, underlying, int(d["R"]), int(d["S"]),
            [[i - 1 for i in a] for a in d["subsets_a"]],
            [[j - 1 for j in b] for b in d["subsets_b"]],
        )
    decoder = Povm([matrix_from_json(m) for m in d["decoder"]], tol=tol)
    return StochasticTransmissionCode(k, ex, ey, decoder)


# -- families -----------------------------------------------------------------

def family_to_json(fam: SubsetFamily) -> dict:
    return {
        "M": fam.M,
        "weight": fam.weight,
        "cap": fam.cap,
        "subsets": [[i + 1 for i in s] for s in fam.subsets],
        "shortfall": fam.shortfall,
        "mode": fam.mode,
        "seed": fam.seed,
        "target": fam.target,
    }


def family_from_json(d) -> SubsetFamily:
    return SubsetFamily(
        int(d["M"]), int(d["weight"]), float(d["cap"]),
        tuple(tuple(i - 1 for i in s) for s in d["subsets"]),
        bool(d.get("shortfall", False)), d.get("mode", "given"), d.get("seed"), d.get("target"),
    )
