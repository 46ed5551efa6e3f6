"""Observational entropy of each measurement over time for one experiment config.

Low entropy marks times at which a measurement is most informative, which is a
cheap heuristic for choosing the measurement window before running a sweep.

    python3 scripts/entropy_trace.py heisenberg_small_W10 --state 2 --every 20
"""

from __future__ import annotations

import argparse

from energybounds.bounds import probability_series, time_grid
from energybounds.config import load
from energybounds.measurements import observational_entropy, volumes
from energybounds.models import build_hamiltonian, sector_basis
from energybounds.runner import build_measurement
from energybounds.spectral import eig_hermitian
from energybounds.states import ground_state, prepare


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("config", help="bundled name or TOML path")
    parser.add_argument("--state", type=int, default=0, help="index into the config's states")
    parser.add_argument("--every", type=int, default=10, help="print every n-th time sample")
    args = parser.parse_args(argv)

    config = load(args.config)
    sector = sector_basis(config.model.L, config.sector_kind, config.sector_n)
    spectrum = eig_hermitian(build_hamiltonian(config.model, sector))
    ctx = {"sector": sector, "spectrum": spectrum, "ground": ground_state(spectrum)}
    measurements = [build_measurement(m, config, ctx) for m in config.measurements]
    state = prepare(config.states[args.state], spectrum, default_seed=config.seeds["haar"])
    times = time_grid(config.time.T, config.time.points, config.time.endpoint)

    series = [probability_series(state, spectrum, m, times) for m in measurements]
    labels = [m.label for m in config.measurements]
    print("t\t" + "\t".join(labels))
    for j in range(0, times.size, max(1, args.every)):
        row = [observational_entropy(p[j], volumes(m)) for p, m in zip(series, measurements)]
        print(f"{times[j]:.4g}\t" + "\t".join(f"{s:.6f}" for s in row))
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
