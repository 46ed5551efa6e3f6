"""Numeric tolerances shared by every module."""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class NumericPolicy:
    hermiticity: float = 1e-12
    orthonormality: float = 1e-10
    norm: float = 1e-10
    trace: float = 1e-10
    positivity: float = 1e-10
    probability_sum: float = 1e-8
    probability_floor: float = 1e-12
    feasibility: float = 1e-8
    # eigenvalues closer than this (relative to the operator scale) are one level
    degeneracy: float = 1e-9
    povm_rank: float = 1e-12
    sector_drop: float = 1e-8


POLICY = NumericPolicy()


class InfeasibleBoundsError(ValueError):
    """Probability bounds admit no normalized distribution."""
