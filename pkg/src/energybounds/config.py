"""Experiment configuration: a TOML document with a fixed schema.

Unknown keys are errors. ``validate`` collects every violation without
building any operator.
"""

from __future__ import annotations

import sys
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path
from typing import Any

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .estimator import METHODS, OptimizerSettings
from .models import _COMPATIBLE, KINDS, SECTOR_KINDS, ModelSpec
from .states import STATE_KINDS, StateSpec

MEASUREMENT_METHODS = ("computational", "gs-opt", "obs-opt-1", "obs-opt-2", "coarse", "x-basis")
SET_MODES = ("cumulative", "each", "all")
SEED_NAMES = ("disorder", "haar", "optimizer")

_SCHEMA: dict[str, set[str]] = {
    "": {"name", "model", "sector", "states", "measurements", "time", "estimator", "run", "seeds", "output"},
    "model": {"kind", "L", "W", "J0", "alpha", "B", "omega", "energies"},
    "sector": {"kind", "n"},
    "states": {"kind", "beta", "seed", "real", "imag", "theta", "phi"},
    "measurements": {"method", "k", "delta_e", "chain"},
    "time": {"T", "points", "endpoint"},
    "estimator": {"tight", "constraint_tol", "objective_tol", "max_iter", "restarts", "method", "polish"},
    "run": {"moments", "sets", "conserved"},
    "seeds": set(SEED_NAMES),
    "output": {"path"},
}


class ConfigError(ValueError):
    def __init__(self, problems: list[str]):
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))


@dataclass(frozen=True)
class MeasurementSpec:
    method: str
    k: int = 0
    delta_e: float | None = None
    # cumulative runs add measurements progressively within each chain
    chain: str = "main"

    @property
    def label(self) -> str:
        if self.method == "coarse":
            return f"coarse(dE={self.delta_e!r})"
        if self.method in ("computational", "x-basis"):
            return self.method
        return f"{self.method}(k={self.k})"


@dataclass(frozen=True)
class TimeSpec:
    T: float = 160.0
    points: int = 401
    endpoint: bool = True


@dataclass(frozen=True)
class ExperimentConfig:
    name: str
    model: ModelSpec
    sector_kind: str
    sector_n: int | None
    states: tuple[StateSpec, ...]
    measurements: tuple[MeasurementSpec, ...]
    time: TimeSpec = TimeSpec()
    tight: bool = False
    optimizer: OptimizerSettings = OptimizerSettings()
    moments: tuple[int, ...] = (1,)
    sets: str = "cumulative"
    conserved: bool = True
    seeds: dict = field(default_factory=lambda: {"disorder": 0, "haar": 0, "optimizer": 0})
    output: str = "results"

    def with_seeds(self, overrides: dict[str, int]) -> ExperimentConfig:
        seeds = {**self.seeds, **overrides}
        return replace(self, seeds=seeds, model=replace(self.model, seed=seeds["disorder"]),
                       optimizer=replace(self.optimizer, seed=seeds["optimizer"]))


def bundled_configs() -> dict[str, Path]:
    root = resources.files("energybounds") / "configs"
    return {Path(p.name).stem: Path(str(p)) for p in root.iterdir() if p.name.endswith(".toml")}


def load_raw(source: str | Path) -> dict:
    """Read a config file, or a bundled config by name."""
    path = Path(source)
    if not path.exists():
        bundled = bundled_configs()
        if str(source) in bundled:
            path = bundled[str(source)]
        else:
            raise ConfigError([f"config {source!s} not found (bundled: {', '.join(sorted(bundled))})"])
    try:
        with open(path, "rb") as fh:
            raw = tomllib.load(fh)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError([f"{path}: {exc}"]) from None
    raw.setdefault("name", path.stem)
    return raw


def _check_keys(section: str, table: Any, problems: list[str], where: str | None = None) -> bool:
    where = where or section or "<root>"
    if not isinstance(table, dict):
        problems.append(f"{where}: expected a table")
        return False
    for key in table:
        if key not in _SCHEMA[section]:
            problems.append(f"{where}.{key}: unknown key")
    return True


def _number(value, where, problems, kind=float, minimum=None, exclusive=False):
    ok_types = (int,) if kind is int else (int, float)
    if isinstance(value, bool) or not isinstance(value, ok_types):
        problems.append(f"{where}: expected {'an integer' if kind is int else 'a number'}, got {value!r}")
        return None
    if minimum is not None and (value < minimum or (exclusive and value == minimum)):
        problems.append(f"{where}: must be {'>' if exclusive else '>='} {minimum}, got {value!r}")
        return None
    return kind(value)


def validate(raw: dict) -> list[str]:
    """Schema and cross-field checks. Returns a list of problems (empty when valid)."""
    problems: list[str] = []
    if not _check_keys("", raw, problems):
        return problems
    model = raw.get("model")
    L = None
    kind = None
    if model is None:
        problems.append("model: missing section")
    elif _check_keys("model", model, problems):
        kind = model.get("kind")
        if kind not in KINDS:
            problems.append(f"model.kind: expected one of {KINDS}, got {kind!r}")
            kind = None
        L = _number(model.get("L"), "model.L", problems, int, 1)
        if "W" in model:
            W = _number(model["W"], "model.W", problems, float, 0)
            if W and kind in ("xy", "pxp", "diagonal"):
                problems.append(f"model.W: model {kind!r} has no disorder term")
        for key in ("J0", "alpha", "B", "omega"):
            if key in model:
                _number(model[key], f"model.{key}", problems)
        if kind == "xy" and model.get("B", 0) != 0:
            problems.append("model.B: the XY field is fixed to 0")
        if kind == "diagonal":
            energies = model.get("energies")
            if not isinstance(energies, list) or L is None or len(energies) != 2**L:
                problems.append("model.energies: a diagonal model needs a list of 2**L energies")
        elif "energies" in model:
            problems.append("model.energies: only allowed for kind = 'diagonal'")

    sector = raw.get("sector", {"kind": "full"})
    sector_kind = None
    if _check_keys("sector", sector, problems):
        sector_kind = sector.get("kind", "full")
        if sector_kind not in SECTOR_KINDS:
            problems.append(f"sector.kind: expected one of {SECTOR_KINDS}, got {sector_kind!r}")
            sector_kind = None
        elif kind is not None and sector_kind not in _COMPATIBLE[kind]:
            problems.append(f"sector.kind: incompatible sector {sector_kind!r} for model {kind!r}")
        if sector_kind == "spin-z":
            n = sector.get("n", None if L is None else L // 2)
            if n is not None:
                n = _number(n, "sector.n", problems, int, 0)
                if n is not None and L is not None and n > L:
                    problems.append(f"sector.n: particle count {n} exceeds L={L}")
        elif "n" in sector:
            problems.append("sector.n: only allowed for the spin-z sector")

    states = raw.get("states")
    if not isinstance(states, list) or not states:
        problems.append("states: need at least one [[states]] entry")
    else:
        for i, st in enumerate(states):
            where = f"states[{i}]"
            if not _check_keys("states", st, problems, where):
                continue
            skind = st.get("kind")
            if skind not in STATE_KINDS:
                problems.append(f"{where}.kind: expected one of {STATE_KINDS}, got {skind!r}")
            if "beta" in st:
                _number(st["beta"], f"{where}.beta", problems, float, 0)
            if "seed" in st:
                _number(st["seed"], f"{where}.seed", problems, int, 0)
            if skind == "bloch":
                if L is not None and L != 1:
                    problems.append(f"{where}: bloch states need a single qubit (L = 1)")
                for key in ("theta", "phi"):
                    if _number(st.get(key), f"{where}.{key}", problems) is None:
                        pass
            if skind == "amplitudes":
                if not isinstance(st.get("real"), list):
                    problems.append(f"{where}.real: amplitude list required")

    meas = raw.get("measurements")
    if not isinstance(meas, list) or not meas:
        problems.append("measurements: need at least one [[measurements]] entry")
    else:
        for i, m in enumerate(meas):
            where = f"measurements[{i}]"
            if not _check_keys("measurements", m, problems, where):
                continue
            if "chain" in m and not isinstance(m["chain"], str):
                problems.append(f"{where}.chain: expected a string")
            method = m.get("method")
            if method not in MEASUREMENT_METHODS:
                problems.append(f"{where}.method: expected one of {MEASUREMENT_METHODS}, got {method!r}")
                continue
            if method in ("gs-opt", "obs-opt-1", "obs-opt-2"):
                k = _number(m.get("k"), f"{where}.k", problems, int, 0)
                if k is not None and L is not None and k > 0 and L % k:
                    problems.append(f"{where}.k: k={k} does not divide L={L}")
                if kind == "diagonal" and method != "gs-opt":
                    problems.append(f"{where}.method: {method} needs a local Hamiltonian")
            elif "k" in m:
                problems.append(f"{where}.k: only used by k-local methods")
            if method == "coarse":
                _number(m.get("delta_e"), f"{where}.delta_e", problems, float, 0, exclusive=True)
            elif "delta_e" in m:
                problems.append(f"{where}.delta_e: only used by the coarse method")

    time = raw.get("time", {})
    if _check_keys("time", time, problems):
        if "T" in time:
            _number(time["T"], "time.T", problems, float, 0)
        if "points" in time:
            _number(time["points"], "time.points", problems, int, 1)
        if "endpoint" in time and not isinstance(time["endpoint"], bool):
            problems.append("time.endpoint: expected true or false")

    est = raw.get("estimator", {})
    if _check_keys("estimator", est, problems):
        for key in ("tight", "polish"):
            if key in est and not isinstance(est[key], bool):
                problems.append(f"estimator.{key}: expected true or false")
        for key in ("constraint_tol", "objective_tol"):
            if key in est:
                _number(est[key], f"estimator.{key}", problems, float, 0, exclusive=True)
        if "max_iter" in est:
            _number(est["max_iter"], "estimator.max_iter", problems, int, 1)
        if "restarts" in est:
            _number(est["restarts"], "estimator.restarts", problems, int, 0)
        if "method" in est and est["method"] not in METHODS:
            problems.append(f"estimator.method: expected one of {METHODS}")

    run = raw.get("run", {})
    conserved = True
    if _check_keys("run", run, problems):
        moments = run.get("moments", [1])
        if not isinstance(moments, list) or not moments:
            problems.append("run.moments: expected a non-empty list of integers")
        else:
            for j, k in enumerate(moments):
                _number(k, f"run.moments[{j}]", problems, int, 1)
        if run.get("sets", "cumulative") not in SET_MODES:
            problems.append(f"run.sets: expected one of {SET_MODES}")
        conserved = run.get("conserved", True)
        if not isinstance(conserved, bool):
            problems.append("run.conserved: expected true or false")
    if conserved is False and isinstance(time, dict) and time.get("points", 401) != 1:
        problems.append("time.points: a non-conserved target allows a single measurement time only")

    seeds = raw.get("seeds", {})
    if _check_keys("seeds", seeds, problems):
        for key, value in seeds.items():
            _number(value, f"seeds.{key}", problems, int, 0)

    output = raw.get("output", {})
    if _check_keys("output", output, problems):
        if "path" in output and not isinstance(output["path"], str):
            problems.append("output.path: expected a string")
    if "name" in raw and not isinstance(raw["name"], str):
        problems.append("name: expected a string")
    return problems


def parse(raw: dict) -> ExperimentConfig:
    problems = validate(raw)
    if problems:
        raise ConfigError(problems)
    seeds = {"disorder": 0, "haar": 0, "optimizer": 0, **raw.get("seeds", {})}
    m = raw["model"]
    model = ModelSpec(kind=m["kind"], L=m["L"], W=float(m.get("W", 0.0)), seed=seeds["disorder"],
                      J0=m.get("J0"), alpha=m.get("alpha"), B=m.get("B"), omega=m.get("omega"),
                      energies=tuple(m["energies"]) if "energies" in m else None)
    sector = raw.get("sector", {"kind": "full"})
    sector_kind = sector.get("kind", "full")
    sector_n = sector.get("n", model.L // 2) if sector_kind == "spin-z" else None
    states = []
    for st in raw["states"]:
        states.append(StateSpec(kind=st["kind"], beta=st.get("beta"), seed=st.get("seed"),
                                real=tuple(st["real"]) if "real" in st else None,
                                imag=tuple(st["imag"]) if "imag" in st else None,
                                theta=st.get("theta"), phi=st.get("phi")))
    measurements = tuple(MeasurementSpec(method=mm["method"], k=int(mm.get("k", 0)), delta_e=mm.get("delta_e"),
                                         chain=mm.get("chain", "main"))
                         for mm in raw["measurements"])
    time = raw.get("time", {})
    est = dict(raw.get("estimator", {}))
    tight = est.pop("tight", False)
    optimizer = OptimizerSettings(seed=seeds["optimizer"], **est)
    run = raw.get("run", {})
    return ExperimentConfig(
        name=raw.get("name", "experiment"), model=model, sector_kind=sector_kind, sector_n=sector_n,
        states=tuple(states), measurements=measurements,
        time=TimeSpec(T=float(time.get("T", 160.0)), points=int(time.get("points", 401)),
                      endpoint=bool(time.get("endpoint", True))),
        tight=tight, optimizer=optimizer, moments=tuple(run.get("moments", [1])),
        sets=run.get("sets", "cumulative"), conserved=run.get("conserved", True), seeds=seeds,
        output=raw.get("output", {}).get("path", "results"))


def load(source: str | Path) -> ExperimentConfig:
    return parse(load_raw(source))
