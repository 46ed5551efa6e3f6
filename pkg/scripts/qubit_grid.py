"""Single-qubit check: Q1 of a sigma_z energy from x-basis measurements, over Bloch angles.

With H = diag(1, -1) and the state in the x-z plane, the x-basis probabilities
oscillate with amplitude sin(theta). On the equator (theta = pi/2) the sweep pins
<E> = 0 exactly and Q1 reaches 100%, up to the phase sampling error of the grid.
At the poles the state is stationary in the x basis and nothing is learned.
"""

from __future__ import annotations

import argparse

import numpy as np

from energybounds.bounds import MeasurementSet, analytic_interval, quality_factors, sweep, time_grid
from energybounds.measurements import pauli_x_basis
from energybounds.spectral import eig_hermitian
from energybounds.states import bloch_state


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--thetas", type=int, default=9, help="number of polar angles in [0, pi]")
    parser.add_argument("--points", type=int, default=401, help="time samples over one half period")
    args = parser.parse_args(argv)

    spec = eig_hermitian(np.diag([1.0, -1.0]))
    times = time_grid(np.pi / 2, args.points, endpoint=False)
    ms = MeasurementSet.single(pauli_x_basis(1), times)
    print(f"{'theta':>8} {'<E> true':>10} {'lo':>10} {'hi':>10} {'Q1 %':>10}")
    for theta in np.linspace(0, np.pi, args.thetas):
        psi = bloch_state(float(theta), 0.0)
        lo, hi = analytic_interval(sweep(psi, spec, ms), spec.values)
        q1, _ = quality_factors(lo, hi, spec)
        truth = float(np.cos(theta))
        print(f"{theta:8.4f} {truth:10.6f} {lo:10.6f} {hi:10.6f} {q1:10.5f}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
