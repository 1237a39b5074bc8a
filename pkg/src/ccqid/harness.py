"""
Experiment pipeline: channel -> transmission code -> subset families ->
simultaneous ID code -> exact errors, bound checks and rate bookkeeping.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import time
from contextlib import contextmanager
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from . import io as ccq_io
from .channel import BlockChannel, block_channel, word_from_index
from .codes import (
    DeterministicCode,
    StochasticEncoder,
    StochasticTransmissionCode,
    avg_error,
    id_acceptance,
    id_error_first,
    id_error_second,
    max_error,
    verify_simultaneous,
)
from .construction import (
    build_subset_family,
    construct_sim_id_code,
    derandomize_pointmass,
    family_overlap,
    growth_check,
    id_rate_pair,
    lober_bound_log2,
    lober_condition,
    transmission_rate_pair,
)
from .errors import ParameterError
from .measurement import build_square_root_measurement

log = logging.getLogger(__name__)

CSV_COLUMNS = [
    "k", "M", "N", "M_prime", "N_prime", "e", "e_avg", "e1", "e2", "eps_fam",
    "r1", "r2", "id_r1", "id_r2", "checks_passed", "checks_failed",
]


def average_states(encoders_x, encoders_y, ch: BlockChannel) -> np.ndarray:
    """``ρ_mn = Σ_{x,y} P_m(x) Q_n(y) W^k(x, y)``, shape (M, N, d, d)."""
    out = np.zeros((len(encoders_x), len(encoders_y), ch.dim, ch.dim), dtype=np.complex128)
    for m, px in enumerate(encoders_x):
        for n, qy in enumerate(encoders_y):
            for x, p in px.support:
                for y, q in qy.support:
                    out[m, n] += p * q * ch.evaluate(x, y)
    return out


def _random_encoders(rng, size: int, k: int, count: int, mode: str, support_size: int):
    total = size ** k
    if mode == "pointmass":
        if count > total:
            raise ParameterError(f"{count} distinct codewords requested, only {total} words of length {k}")
        picks = rng.choice(total, size=count, replace=False)
        return [StochasticEncoder.point_mass(word_from_index(int(i), size, k), size) for i in picks]
    if mode == "stochastic":
        s = min(support_size, total)
        encs = []
        for _ in range(count):
            picks = sorted(int(i) for i in rng.choice(total, size=s, replace=False))
            probs = rng.dirichlet(np.ones(s))
            probs[-1] = 1.0 - probs[:-1].sum()
            encs.append(StochasticEncoder(k, size, tuple(
                (word_from_index(i, size, k), float(p)) for i, p in zip(picks, probs))))
        return encs
    raise ParameterError(f"unknown code mode {mode!r}")


def generate_random_code(ch: BlockChannel, M: int, N: int, seed: int, mode: str = "pointmass",
                         support_size: int = 2) -> StochasticTransmissionCode:
    """Seeded random encoders with a square-root-measurement decoder for their average outputs."""
    if M < 1 or N < 1:
        raise ParameterError("M and N must be >= 1")
    rng = np.random.default_rng(seed)
    ex = _random_encoders(rng, ch.nx, ch.k, M, mode, support_size)
    ey = _random_encoders(rng, ch.ny, ch.k, N, mode, support_size)
    rho = average_states(ex, ey, ch)
    decoder = build_square_root_measurement(rho.reshape(M * N, ch.dim, ch.dim))
    return StochasticTransmissionCode(ch.k, ex, ey, decoder)


@dataclass
class ExperimentConfig:
    channel: dict
    k: int = 1
    M: int = 4
    N: int = 4
    lam: float = 0.5
    epsilon1: float = 0.5
    epsilon2: float = 0.8
    delta: float = 0.1
    seed: int = 0
    target_a: int = 16
    target_b: int = 16
    code: dict = field(default_factory=lambda: {"mode": "pointmass"})
    tol: float = 1e-9
    base_dir: str = "."

    @classmethod
    def from_dict(cls, d: dict, base_dir: str = ".") -> "ExperimentConfig":
        d = dict(d)
        if "lambda" in d:
            d["lam"] = d.pop("lambda")
        given_eps = d.pop("epsilon", None)
        known = {f.name for f in fields(cls)} - {"base_dir"}
        unknown = set(d) - known
        if unknown:
            raise ParameterError(f"unknown config keys: {sorted(unknown)}")
        if "channel" not in d or "seed" not in d:
            raise ParameterError("config needs 'channel' and 'seed'")
        cfg = cls(**d, base_dir=str(base_dir))
        cfg.check()
        # epsilon is always derived; an explicit value must agree with it
        if given_eps is not None and abs(float(given_eps) - cfg.epsilon) > 1e-12:
            raise ParameterError(f"epsilon={given_eps} disagrees with min(epsilon1, epsilon2/4) = {cfg.epsilon}")
        return cfg

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        return cls.from_dict(ccq_io.load_json(path), base_dir=str(Path(path).parent))

    def check(self):
        for name in ("epsilon1", "epsilon2", "delta"):
            v = getattr(self, name)
            if not 0.0 < v < 1.0:
                raise ParameterError(f"{name}={v} must lie in (0, 1)")
        if not 0.0 < self.lam < 1.0:
            raise ParameterError(f"lambda={self.lam} must lie in (0, 1)")
        if min(self.k, self.M, self.N, self.target_a, self.target_b) < 1:
            raise ParameterError("k, M, N and family targets must be >= 1")
        if not isinstance(self.seed, int):
            raise ParameterError("seed must be an integer")

    @property
    def epsilon(self) -> float:
        return min(self.epsilon1, self.epsilon2 / 4.0)

    def to_dict(self) -> dict:
        d = asdict(self)
        d.pop("base_dir")
        d["lambda"] = d.pop("lam")
        return d

    def _path(self, p) -> Path:
        p = Path(p)
        return p if p.is_absolute() else Path(self.base_dir) / p


class StageError(Exception):
    def __init__(self, stage: str, cause: Exception):
        super().__init__(f"stage {stage!r} failed: {cause}")
        self.stage, self.cause = stage, cause
        self.exit_code = getattr(cause, "exit_code", 3)


def _check(name, lhs, rhs, required, tol=0.0):
    lhs, rhs = float(lhs), float(rhs)
    return {
        "name": name,
        "lhs": lhs,
        "rhs": rhs,
        "tol": tol,
        "margin": rhs - lhs,
        "passed": bool(lhs <= rhs + tol),
        "required": bool(required),
    }


@contextmanager
def _stage(name: str, timings: dict):
    t0 = time.perf_counter()
    try:
        yield
    except StageError:
        raise
    except Exception as exc:
        raise StageError(name, exc) from exc
    finally:
        timings[name] = time.perf_counter() - t0


def _load_channel(cfg: ExperimentConfig):
    spec = cfg.channel
    if "file" in spec:
        spec = ccq_io.load_json(cfg._path(spec["file"]))
    return block_channel(ccq_io.channel_from_json(spec), cfg.k)


def _load_code(cfg: ExperimentConfig, ch: BlockChannel):
    spec = cfg.code
    if "file" in spec:
        code = ccq_io.code_from_json(ccq_io.load_json(cfg._path(spec["file"])))
        if isinstance(code, DeterministicCode):
            code = derandomize_pointmass(code)
        if not isinstance(code, StochasticTransmissionCode):
            raise ParameterError("config code file must hold a transmission code")
        if code.k != cfg.k:
            raise ParameterError(f"code block length {code.k} != config k {cfg.k}")
        return code
    return generate_random_code(ch, cfg.M, cfg.N, cfg.seed, spec.get("mode", "pointmass"),
                                int(spec.get("support", 2)))


def run_experiment(cfg: ExperimentConfig) -> dict:
    """Run the full pipeline and return a JSON-ready report.

    Stage failures are raised as ``StageError`` carrying the stage name.
    Timings live under the ``"timings"`` key only, so a report with that
    key removed is a deterministic function of the config.
    """
    timings: dict = {}
    report: dict = {"config": cfg.to_dict(), "warnings": []}
    eps = cfg.epsilon
    with _stage("channel", timings):
        ch = _load_channel(cfg)
    report["channel"] = {"nx": ch.nx, "ny": ch.ny, "k": ch.k, "dim": ch.dim}
    with _stage("code", timings):
        code = _load_code(cfg, ch)
        e = max_error(code, ch)
        e_avg = avg_error(code, ch)
    report["code"] = {"M": code.M, "N": code.N}

    with _stage("families", timings):
        cond = lober_condition(cfg.lam, eps)
        if not cond:
            msg = f"family condition eps*log2(1/lambda - 1) > 2 fails for lambda={cfg.lam}, eps={eps}"
            report["warnings"].append(msg)
            log.warning(msg)
        fam_a = build_subset_family(code.M, cfg.lam, eps, cfg.target_a, cfg.seed)
        fam_b = build_subset_family(code.N, cfg.lam, eps, cfg.target_b, cfg.seed + 1)
    with _stage("construction", timings):
        sim = construct_sim_id_code(code, fam_a, fam_b)
        sim_check = verify_simultaneous(sim, tol=max(cfg.tol, 1e-8))
    with _stage("id_errors", timings):
        acc = id_acceptance(sim.id_code, ch)
        e1 = id_error_first(sim.id_code, ch, acc)
        two_pairs = len(fam_a) * len(fam_b) >= 2
        e2 = id_error_second(sim.id_code, ch, acc) if two_pairs else None
        eps_fam = family_overlap(fam_a, fam_b) if two_pairs else None

    report["parameters"] = {"epsilon": eps, "lober_condition": cond}
    report["errors"] = {
        "e": e.value,
        "e_argmax": list(e.argmax),
        "e_avg": e_avg.value,
        "e1": e1.value,
        "e1_argmax": list(e1.argmax),
        "e2": None if e2 is None else e2.value,
        "e2_argmax": None if e2 is None else [list(p) for p in e2.argmax],
        "eps_fam": eps_fam,
    }
    report["families"] = {
        side: {
            "size": len(f),
            "ground_size": f.M,
            "weight": f.weight,
            "cap": f.cap,
            "max_intersection": f.max_intersection(),
            "mode": f.mode,
            "seed": f.seed,
            "target": f.target,
            "shortfall": f.shortfall,
            "lemma_bound_log2": lober_bound_log2(f.M, cfg.lam),
        }
        for side, f in (("a", fam_a), ("b", fam_b))
    }
    report["simultaneity"] = sim_check.to_dict()

    with _stage("rates", timings):
        trans = transmission_rate_pair(cfg.k, code.M, code.N, cfg.delta)
        try:
            idr = id_rate_pair(cfg.k, len(fam_a), len(fam_b), cfg.delta).to_dict()
        except ParameterError:
            idr = None
        growth = {
            "a": growth_check(cfg.k, trans.r1, cfg.delta, cfg.lam, float(np.log2(len(fam_a))), float(np.log2(code.M))),
            "b": growth_check(cfg.k, trans.r2, cfg.delta, cfg.lam, float(np.log2(len(fam_b))), float(np.log2(code.N))),
        }
    report["rates"] = {"transmission": trans.to_dict(), "id": idr}
    report["growth"] = {s: g.to_dict() for s, g in growth.items()}

    tol = cfg.tol
    applicable = e.value <= eps
    checks = [
        _check("e1 <= e", e1.value, e.value, True, tol),
        _check("e1 <= epsilon1", e1.value, cfg.epsilon1, applicable, tol),
        _check("simultaneous decomposition deviation <= 1e-12", sim_check.decomposition_deviation, 1e-12, True),
    ]
    if e2 is not None:
        checks += [
            _check("e2 <= eps_fam + 3e", e2.value, eps_fam + 3.0 * e.value, True, tol),
            _check("eps_fam <= epsilon", eps_fam, eps, False, tol),
            _check("e2 <= epsilon2", e2.value, cfg.epsilon2, applicable and eps_fam <= eps + tol, tol),
        ]
    for side, fam in (("a", fam_a), ("b", fam_b)):
        g = growth[side]
        capped = len(fam) >= fam.target
        checks.append(_check(f"growth {side}: lemma bound <= log2 family size", g.lemma_bound_log2,
                             g.log2_m_prime, cond and not capped))
        checks.append(_check(f"growth {side}: rate bound <= log2 family size", g.rate_bound_log2,
                             g.log2_m_prime, False))
    report["checks"] = checks
    failed = [c["name"] for c in checks if c["required"] and not c["passed"]]
    report["status"] = "failed" if failed else "ok"
    report["failed_checks"] = failed
    report["timings"] = timings
    return report


def recheck_report(report: dict) -> list:
    """Re-derive every check from the report's raw values; returns names that disagree."""
    err = report["errors"]
    raw = {
        "e1 <= e": (err["e1"], err["e"]),
        "e1 <= epsilon1": (err["e1"], report["config"]["epsilon1"]),
        "simultaneous decomposition deviation <= 1e-12": (report["simultaneity"]["decomposition_deviation"], 1e-12),
        "e2 <= eps_fam + 3e": (err["e2"], None if err["e2"] is None else err["eps_fam"] + 3.0 * err["e"]),
        "eps_fam <= epsilon": (err["eps_fam"], report["parameters"]["epsilon"]),
        "e2 <= epsilon2": (err["e2"], report["config"]["epsilon2"]),
    }
    for side in ("a", "b"):
        g = report["growth"][side]
        raw[f"growth {side}: lemma bound <= log2 family size"] = (g["lemma_bound_log2"], g["log2_m_prime"])
        raw[f"growth {side}: rate bound <= log2 family size"] = (g["rate_bound_log2"], g["log2_m_prime"])
    bad = []
    for c in report["checks"]:
        lhs, rhs = raw[c["name"]]
        ok = lhs == c["lhs"] and rhs == c["rhs"] and (lhs <= rhs + c["tol"]) == c["passed"]
        if not ok:
            bad.append(c["name"])
    return bad


def report_json(report: dict, include_timings: bool = True) -> str:
    r = dict(report)
    if not include_timings:
        r.pop("timings", None)
    return json.dumps(r, indent=2, sort_keys=True) + "\n"


def summary_row(report: dict) -> dict:
    err, rates = report["errors"], report["rates"]
    idr = rates["id"] or {}
    checks = report["checks"]
    return {
        "k": report["config"]["k"],
        "M": report["code"]["M"],
        "N": report["code"]["N"],
        "M_prime": report["families"]["a"]["size"],
        "N_prime": report["families"]["b"]["size"],
        "e": err["e"],
        "e_avg": err["e_avg"],
        "e1": err["e1"],
        "e2": err["e2"],
        "eps_fam": err["eps_fam"],
        "r1": rates["transmission"]["r1"],
        "r2": rates["transmission"]["r2"],
        "id_r1": idr.get("r1"),
        "id_r2": idr.get("r2"),
        "checks_passed": sum(c["passed"] for c in checks),
        "checks_failed": sum(c["required"] and not c["passed"] for c in checks),
    }


def summary_csv(reports) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=CSV_COLUMNS, lineterminator="\n")
    w.writeheader()
    for r in reports:
        w.writerow(summary_row(r))
    return buf.getvalue()


def write_outputs(report: dict, out_dir) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "report.json").write_text(report_json(report))
    (out / "summary.csv").write_text(summary_csv([report]))

