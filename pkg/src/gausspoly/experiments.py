"""Seeded batch experiments and their JSON reports.

Every trial draws its ensemble (and any auxiliary randomness) from a stream
derived from ``(config seed, trial index)``, so records do not depend on the
order in which trials finish.  Reports are written to a temporary file in
the target directory and renamed into place.
"""
from __future__ import annotations

import csv
import io
import json
import math
import os
import tempfile
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .cotype import (
    EuclideanNorm,
    PolytopeNorm,
    SupNorm,
    cotype_constant,
    spansofcomp_probe,
)
from .embedding import cleaning_preprocess, spiky_histogram_family, theoremB_probe
from .ensemble import EnsembleConfig, derive_seed, derive_stream, sample_ensemble
from .errors import (
    ConfigurationError,
    InvalidConstantError,
    PreconditionError,
    ReportIOError,
    UnknownExperimentError,
)
from .geometry import (
    event_sparse_singular,
    inradius_lower,
    inradius_upper,
    kernel_incompressibility_scan,
)
from .grassmann import decompose_projection, lattice_net, projection_tail_counts, random_subspace

DEFAULTS: dict[str, dict] = {
    "events": {"c": 0.01, "subset_budget": 100000},
    "inradius": {"budget": 256, "descent_starts": 4},
    "incompressibility": {"delta": 0.02, "rho": 0.05, "probes": 10000, "adversarial": 256},
    "grassmann": {"d": 2, "epsilon": 0.25, "m": 8},
    "projection-tails": {"d": 2, "s": 10.0, "C": 10.0},
    "cotype": {"k": 8, "q": 4.0, "oracle": "polytope", "family": "vertices", "mode": "exact", "mc_trials": 10000},
    "spansofcomp": {"k": 4, "C_floor": 0.5, "retry_cap": 50},
    "embed-probe": {"k": 4, "budget": 2, "sigma_budget": 256},
    "cleaning": {"size": 64, "alpha": 0.5, "epsilon": 0.25},
}
EXPERIMENTS = tuple(DEFAULTS)
_CHOICES = {
    "oracle": ("polytope", "sup", "euclidean"),
    "family": ("vertices", "random", "basis"),
    "mode": ("exact", "mc"),
}


@dataclass
class ExperimentConfig:
    experiment: str
    ensemble: EnsembleConfig
    constants: dict = field(default_factory=dict)
    trials: int = 1
    output: str | None = None
    workers: int = 1

    def __post_init__(self):
        if self.experiment not in DEFAULTS:
            raise UnknownExperimentError(
                f"unknown experiment {self.experiment!r}; choose from {', '.join(EXPERIMENTS)}"
            )
        if int(self.trials) != self.trials or self.trials < 0:
            raise ConfigurationError("trials must be a non-negative integer")
        merged = dict(DEFAULTS[self.experiment])
        for key, value in self.constants.items():
            if key not in merged:
                raise InvalidConstantError(f"{self.experiment} has no constant {key!r}")
            if key in _CHOICES:
                if value not in _CHOICES[key]:
                    raise InvalidConstantError(f"{key} must be one of {_CHOICES[key]}")
            elif not isinstance(value, (int, float)) or isinstance(value, bool) or not math.isfinite(value):
                raise InvalidConstantError(f"constant {key!r} must be a finite number")
            merged[key] = value
        self.constants = merged

    def as_dict(self) -> dict:
        return {
            "experiment": self.experiment,
            "ensemble": self.ensemble.as_dict(),
            "constants": dict(self.constants),
            "trials": int(self.trials),
            "output": self.output,
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "ExperimentConfig":
        try:
            ens = obj["ensemble"]
            rb = ens.get("ratio_bounds")
            ensemble = EnsembleConfig(
                int(ens["n"]), int(ens["N"]), int(ens.get("seed", 0)), tuple(rb) if rb else None
            )
            return cls(
                str(obj["experiment"]),
                ensemble,
                dict(obj.get("constants", {})),
                int(obj.get("trials", 1)),
                obj.get("output"),
                int(obj.get("workers", 1)),
            )
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, PreconditionError):
                raise
            raise ConfigurationError(f"malformed experiment config: {exc}") from exc


def _trial(config: ExperimentConfig, t: int) -> dict:
    c = config.constants
    ecfg = derive_stream(config.ensemble, t)
    aux = derive_seed(ecfg.seed, 1)
    rec: dict = {"trial": t, "seed": int(config.ensemble.seed), "stream_seed": int(ecfg.seed)}
    exp = config.experiment
    if exp == "cleaning":
        rng = np.random.default_rng(aux)
        size = int(c["size"])
        hists = spiky_histogram_family(size, ecfg.n, c["alpha"], rng)
        res = cleaning_preprocess(hists, range(size), c["alpha"], c["epsilon"], ecfg.n)
        rec.update(
            kept=len(res.L_tilde),
            r=res.r,
            p=res.p,
            max_sequence=max(len(s) for s in res.sequences.values()),
        )
        return rec
    E = sample_ensemble(ecfg)
    if exp == "events":
        rep = event_sparse_singular(E, c["c"], int(c["subset_budget"]), seed=aux)
        rec.update({f"margin_{k}": v for k, v in rep.margins.items()})
        rec.update({f"holds_{k}": v for k, v in rep.holds.items()})
        rec["all_hold"] = rep.all_hold
    elif exp == "inradius":
        lo = inradius_lower(E)
        hi = inradius_upper(E, int(c["budget"]), seed=aux, descent_starts=int(c["descent_starts"]))
        rec.update(lower=lo, upper=hi, sandwich=lo <= hi + 1e-12)
    elif exp == "incompressibility":
        rep = kernel_incompressibility_scan(
            E, c["delta"], c["rho"], int(c["probes"]), seed=aux, adversarial=int(c["adversarial"])
        )
        rec.update(
            min_distance=rep.min_distance,
            random_min=rep.random_min,
            adversarial_min=rep.adversarial_min,
            violations=rep.violations,
            clean=rep.violations == 0,
        )
    elif exp == "grassmann":
        d = int(c["d"])
        net = lattice_net(E.n, d, c["epsilon"])
        F = random_subspace(E.n, d, np.random.default_rng(aux))
        steps = decompose_projection(net, F, int(c["m"]))
        rec.update(
            final_residual=steps[-1].residual,
            max_norm_ratio=max(s.norm / s.norm_bound for s in steps),
        )
    elif exp == "projection-tails":
        F = random_subspace(E.n, int(c["d"]), np.random.default_rng(aux))
        count, bound = projection_tail_counts(E, F, c["s"], c["C"])
        rec.update(count=count, bound=bound, within=count <= bound)
    elif exp == "cotype":
        k = int(c["k"])
        rng = np.random.default_rng(aux)
        if c["family"] == "basis":
            Y = np.eye(E.n)[:k]
        elif c["family"] == "vertices":
            Y = E.At[rng.choice(E.N, size=k, replace=False)]
        else:
            Y = rng.standard_normal((k, E.n))
        oracle = {"polytope": lambda: PolytopeNorm(E), "sup": SupNorm, "euclidean": EuclideanNorm}[c["oracle"]]()
        est = cotype_constant(oracle, Y, c["q"], c["mode"], int(c["mc_trials"]), seed=aux)
        rec.update(constant=est.constant, raw_ratio=est.raw_ratio, stderr=est.stderr)
    elif exp == "spansofcomp":
        rep = spansofcomp_probe(E, int(c["k"]), c["C_floor"], 1, seed=aux, retry_cap=int(c["retry_cap"]))
        mean = rep.means[0] if rep.means else math.nan
        rec.update(mean=mean, threshold=rep.threshold, excluded=rep.excluded, above=mean >= rep.threshold)
    elif exp == "embed-probe":
        rep = theoremB_probe(E, int(c["k"]), budget=int(c["budget"]), seed=aux, sigma_budget=int(c["sigma_budget"]))
        rec.update(best_bound=rep.best_bound, best_strategy=rep.best_strategy)
    return rec


def _aggregate(records: list) -> dict:
    if not records:
        return {"empty": True}
    out: dict = {"empty": False, "count": len(records)}
    for key in records[0]:
        if key in ("trial", "seed", "stream_seed"):
            continue
        vals = [r.get(key) for r in records]
        if all(isinstance(v, bool) for v in vals):
            out[key] = {"pass_frequency": sum(vals) / len(vals)}
        elif all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in vals):
            arr = np.array(vals, dtype=np.float64)
            fin = arr[np.isfinite(arr)]
            if fin.size == 0:
                continue
            q = np.quantile(fin, [0.05, 0.5, 0.95])
            out[key] = {
                "mean": float(fin.mean()),
                "q05": float(q[0]),
                "median": float(q[1]),
                "q95": float(q[2]),
                "min": float(fin.min()),
                "max": float(fin.max()),
            }
    return out


def _jsonable(x):
    if isinstance(x, dict):
        return {k: _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (np.bool_,)):
        return bool(x)
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, (float, np.floating)):
        v = float(x)
        return v if math.isfinite(v) else str(v)
    return x


def _run_one(args):
    return _trial(*args)


def run(config: ExperimentConfig) -> dict:
    """Run all trials and return (and optionally write) the report."""
    start = time.perf_counter()
    jobs = [(config, t) for t in range(int(config.trials))]
    if config.workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            records = list(pool.map(_run_one, jobs))
    else:
        records = [_run_one(j) for j in jobs]
    report = _jsonable(
        {
            "config": config.as_dict(),
            "code_version": __version__,
            "records": records,
            "aggregates": _aggregate(records),
        }
    )
    report["wall_clock_seconds"] = time.perf_counter() - start
    if config.output:
        write_report(report, config.output)
    return report


def write_report(report: dict, path: str) -> None:
    """Write ``report`` as JSON via a temporary file and an atomic rename."""
    target = os.path.abspath(path)
    folder = os.path.dirname(target) or "."
    try:
        fd, tmp = tempfile.mkstemp(prefix=".report-", suffix=".tmp", dir=folder)
        try:
            with os.fdopen(fd, "w") as fh:
                json.dump(report, fh, indent=1, sort_keys=True)
                fh.write("\n")
                fh.flush()
                os.fsync(fh.fileno())
            os.replace(tmp, target)
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise
    except OSError as exc:
        raise ReportIOError(f"cannot write report to {path}: {exc}") from exc


class DuplicateKeyError(ConfigurationError):
    pass


class MixedExperimentError(ConfigurationError):
    pass


def report_summarize(paths) -> str:
    """Merge per-trial records of several reports into one CSV table.

    Rows are keyed and sorted by ``(seed, trial)``; a key seen twice raises
    :class:`DuplicateKeyError` and differing experiments raise
    :class:`MixedExperimentError`.
    """
    rows = {}
    experiment = None
    columns: list[str] = []
    for path in paths:
        try:
            with open(path) as fh:
                rep = json.load(fh)
        except OSError as exc:
            raise ReportIOError(f"cannot read {path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigurationError(f"{path} is not a JSON report: {exc}") from exc
        exp = rep["config"]["experiment"]
        if experiment is None:
            experiment = exp
        elif exp != experiment:
            raise MixedExperimentError(f"cannot merge {experiment!r} with {exp!r} ({path})")
        for rec in rep["records"]:
            key = (int(rec["seed"]), int(rec["trial"]))
            if key in rows:
                raise DuplicateKeyError(f"duplicate (seed, trial) = {key} in {path}")
            rows[key] = rec
            for col in rec:
                if col not in columns:
                    columns.append(col)
    head = ["seed", "trial"] + [c for c in columns if c not in ("seed", "trial")]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["experiment"] + head)
    for key in sorted(rows):
        rec = rows[key]
        w.writerow([experiment] + [rec.get(c, "") for c in head])
    return buf.getvalue()
