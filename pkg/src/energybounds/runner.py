"""Run an experiment config: sweeps, intervals and output files.

Outputs per run, both in the output directory:

``<name>.bounds.tsv``
    tab-separated, header line, columns ``state set l E_l a_max b_min``;
    floats written with 17 significant digits.
``<name>.summary.json``
    provenance plus one record per (state, measurement set, moment).
"""

from __future__ import annotations

import json
import platform
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from importlib import metadata
from pathlib import Path

import numpy as np
import scipy

from .bounds import (MeasurementSet, ProbabilityBounds, analytic_interval, cell_bounds, collective_constraints,
                     combine_cells, moment_values, quality_factors, time_grid)
from .config import ExperimentConfig, MeasurementSpec
from .estimator import FeasibleSet, OptimizerSettings, constrained_interval
from .measurements import (Measurement, coarse_energy_povm, computational_basis, klocal_ground_state_basis,
                           klocal_observable_basis_type1, klocal_observable_basis_type2, pauli_x_basis)
from .models import build_hamiltonian, check_compatible, disorder, full_hamiltonian, sector_basis
from .numeric import InfeasibleBoundsError
from .spectral import eig_hermitian
from .states import ground_state, prepare

# slack for the nesting / containment flags recorded with every interval
NEST_TOL = 1e-6


class RunError(RuntimeError):
    """Failure while running an instance; the message names the instance."""


@dataclass
class ResultRecord:
    state: str
    set: str
    measurements: tuple[str, ...]
    moment: int
    true: float
    lo_lin: float
    hi_lin: float
    lo: float | None = None
    hi: float | None = None
    degraded: bool = False
    q1: float | None = None
    q2: float | None = None
    q1_lin: float | None = None
    q2_lin: float | None = None
    table: list = field(default_factory=list, repr=False)

    @property
    def nested(self) -> bool:
        lo = self.lo_lin if self.lo is None else self.lo
        hi = self.hi_lin if self.hi is None else self.hi
        scale = NEST_TOL * max(1.0, abs(self.hi_lin - self.lo_lin))
        return self.lo_lin - scale <= lo <= hi + scale and hi <= self.hi_lin + scale

    @property
    def contains_true(self) -> bool:
        lo = self.lo_lin if self.lo is None else self.lo
        hi = self.hi_lin if self.hi is None else self.hi
        scale = NEST_TOL * max(1.0, abs(self.hi_lin - self.lo_lin))
        return lo - scale <= self.true <= hi + scale

    def to_dict(self) -> dict:
        return {"state": self.state, "set": self.set, "measurements": list(self.measurements),
                "moment": self.moment, "true": self.true, "lin": [self.lo_lin, self.hi_lin],
                "tight": None if self.lo is None else [self.lo, self.hi], "degraded": self.degraded,
                "Q1_lin": self.q1_lin, "Q2_lin": self.q2_lin, "Q1": self.q1, "Q2": self.q2,
                "nested": self.nested, "contains_true": self.contains_true}


@dataclass
class RunResult:
    config: ExperimentConfig
    records: list[ResultRecord]
    provenance: dict
    files: tuple[Path, ...] = ()


def build_measurement(ms: MeasurementSpec, config: ExperimentConfig, ctx: dict) -> Measurement:
    model, sector, L = config.model, ctx["sector"], config.model.L
    if ms.method == "computational" or (ms.k == 0 and ms.method in ("gs-opt", "obs-opt-1", "obs-opt-2")):
        return computational_basis(sector)
    if ms.method == "gs-opt":
        return klocal_ground_state_basis(ctx["ground"], L, ms.k, sector)
    if ms.method == "obs-opt-1":
        return klocal_observable_basis_type1(model, sector, ms.k)
    if ms.method == "obs-opt-2":
        return klocal_observable_basis_type2(full_hamiltonian(model), L, ms.k, sector)
    if ms.method == "coarse":
        return coarse_energy_povm(ctx["spectrum"], ms.delta_e)
    if ms.method == "x-basis":
        return pauli_x_basis(L, sector)
    raise ValueError(f"unknown measurement method {ms.method!r}")


def measurement_sets(config: ExperimentConfig) -> list[tuple[str, tuple[int, ...]]]:
    """(label, indices into config.measurements) for every set that is evaluated."""
    specs = config.measurements
    labels = [m.label for m in specs]
    if config.sets == "each":
        return [(labels[i], (i,)) for i in range(len(specs))]
    if config.sets == "all":
        return [("+".join(labels), tuple(range(len(specs))))]
    chains: dict[str, list[int]] = {}
    for i, m in enumerate(specs):
        chains.setdefault(m.chain, []).append(i)
    out = []
    for chain, idx in chains.items():
        prefix = "" if chain == "main" else f"{chain}:"
        for j in range(len(idx)):
            out.append((prefix + "+".join(labels[i] for i in idx[: j + 1]), tuple(idx[: j + 1])))
    return out


def _state_labels(config: ExperimentConfig) -> list[str]:
    base = [s.label for s in config.states]
    return [b if base.count(b) == 1 else f"{b}{i}" for i, b in enumerate(base)]


def _versions() -> dict:
    try:
        own = metadata.version("energybounds")
    except metadata.PackageNotFoundError:
        own = "unknown"
    return {"energybounds": own, "numpy": np.__version__, "scipy": scipy.__version__,
            "python": platform.python_version()}


def run(config: ExperimentConfig, output_dir: str | Path | None = None, threads: int = 1,
        write: bool = True) -> RunResult:
    sector = sector_basis(config.model.L, config.sector_kind, config.sector_n)
    check_compatible(config.model, sector)
    H = build_hamiltonian(config.model, sector)
    spectrum = eig_hermitian(H)
    ctx = {"sector": sector, "spectrum": spectrum, "ground": ground_state(spectrum)}
    measurements = [build_measurement(m, config, ctx) for m in config.measurements]
    times = time_grid(config.time.T, config.time.points, config.time.endpoint)

    labels = _state_labels(config)
    states = []
    haar_count = 0
    for st in config.states:
        seed = None
        if st.kind == "haar":
            seed = config.seeds["haar"] + haar_count
            haar_count += 1
        states.append(prepare(st, spectrum, default_seed=seed if seed is not None else 0))

    # every (state, measurement) cell is independent; results are collected in order
    work = [(s, m) for s in range(len(states)) for m in range(len(measurements))]

    def do_cell(item):
        s, m = item
        return cell_bounds(states[s], spectrum, measurements[m], times, config.conserved)

    try:
        if threads > 1:
            with ThreadPoolExecutor(max_workers=threads) as pool:
                cells = dict(zip(work, pool.map(do_cell, work)))
        else:
            cells = {item: do_cell(item) for item in work}
    except (ValueError, InfeasibleBoundsError) as exc:
        raise RunError(f"{config.name}: {exc}") from exc

    settings = OptimizerSettings(**{**config.optimizer.__dict__, "threads": max(1, threads)})
    records: list[ResultRecord] = []
    for s, label in enumerate(labels):
        truth = spectrum.populations(states[s])
        for set_label, idx in measurement_sets(config):
            instance = f"{config.name}: state {label}, set {set_label}"
            try:
                pb: ProbabilityBounds = combine_cells([cells[(s, i)] for i in idx])
            except InfeasibleBoundsError as exc:
                raise RunError(f"{instance}: {exc}") from exc
            table = pb.table(spectrum.values)
            quads = ()
            if config.tight:
                ms = MeasurementSet.of([(measurements[i], times) for i in idx])
                quads = tuple(collective_constraints(ms, spectrum, pb))
            for k in config.moments:
                true = float(moment_values(spectrum.values, k) @ truth)
                lo_lin, hi_lin = analytic_interval(pb, spectrum.values, k)
                rec = ResultRecord(state=label, set=set_label,
                                   measurements=tuple(config.measurements[i].label for i in idx),
                                   moment=k, true=true, lo_lin=lo_lin, hi_lin=hi_lin, table=table)
                if config.tight:
                    est = constrained_interval(FeasibleSet(pb.a_max, pb.b_min, quads), spectrum.values, k, settings)
                    rec.lo, rec.hi, rec.degraded = est.lo, est.hi, est.degraded
                if k == 1 and spectrum.spread > 0:
                    rec.q1_lin, rec.q2_lin = quality_factors(lo_lin, hi_lin, spectrum)
                    if rec.lo is not None:
                        rec.q1, rec.q2 = quality_factors(rec.lo, rec.hi, spectrum)
                    else:
                        rec.q1, rec.q2 = rec.q1_lin, rec.q2_lin
                records.append(rec)

    provenance = {
        "name": config.name,
        "model": config.model.to_dict(),
        "sector": {"kind": config.sector_kind, "n": config.sector_n, "dim": sector.dim},
        "seeds": dict(sorted(config.seeds.items())),
        "grid": {"T": config.time.T, "points": config.time.points, "endpoint": config.time.endpoint},
        "disorder": disorder(config.model).tolist(),
        "tight": config.tight,
        "versions": _versions(),
    }
    result = RunResult(config=config, records=records, provenance=provenance)
    if write:
        result.files = write_outputs(result, Path(output_dir if output_dir is not None else config.output))
    return result


def write_outputs(result: RunResult, out: Path) -> tuple[Path, ...]:
    out.mkdir(parents=True, exist_ok=True)
    name = result.config.name
    tsv = out / f"{name}.bounds.tsv"
    lines = ["state\tset\tl\tE_l\ta_max\tb_min"]
    seen = set()
    for rec in result.records:
        if (rec.state, rec.set) in seen:
            continue
        seen.add((rec.state, rec.set))
        for l, e, a, b in rec.table:
            lines.append(f"{rec.state}\t{rec.set}\t{l}\t{e:.17g}\t{a:.17g}\t{b:.17g}")
    tsv.write_text("\n".join(lines) + "\n")
    summary = out / f"{name}.summary.json"
    doc = {"provenance": result.provenance, "records": [r.to_dict() for r in result.records]}
    summary.write_text(json.dumps(doc, indent=2) + "\n")
    return tsv, summary
