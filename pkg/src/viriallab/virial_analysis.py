"""Virial post-processing of trajectories.

Builds the report comparing centered second differences of the weighted
variance I against the identity right-hand side, evaluates the decay
inequality rhs <= 16 E + 2 eta wherever the tail mass is small enough,
selects R by the two admissibility clauses, and computes the quadratic
envelope root that bounds the contradiction time.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import weight
from .evolve import Trajectory
from .field import Field, tail_mass
from .functionals import ModelSpec, energy, kinetic_energy, mass, virial_I, virial_I_prime, virial_rhs


def a0() -> float:
    """Tail-mass smallness threshold (3/8)^{1/4}."""
    return (3.0 / 8.0) ** 0.25


INEQ_SLACK = 1e-6


@dataclass
class VirialReport:
    R: float
    times: np.ndarray
    I: np.ndarray
    Iprime_formula: np.ndarray
    Isecond_fd: np.ndarray
    rhs_formula: np.ndarray
    residual: np.ndarray
    ineq_checked: np.ndarray
    ineq_satisfied: np.ndarray
    eta: float
    eta_tilde: float

    def max_residual(self) -> float:
        return float(np.max(self.residual)) if len(self.residual) else 0.0

    def violations(self) -> int:
        bad = self.ineq_checked & ~self.ineq_satisfied
        return int(np.sum(bad))


def inequality_flags(
    snapshots, R: float, model: ModelSpec, E: float, eta_val: float
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Per-snapshot (checked, satisfied, rhs) for the decay inequality
    rhs <= 16 E + 2 eta + slack, checked only where tail_mass <= a0."""
    thresh = a0()
    bound = 16.0 * E + 2.0 * eta_val + INEQ_SLACK * (1.0 + abs(E))
    checked, satisfied, rhs = [], [], []
    for s in snapshots:
        r = virial_rhs(s, R, model)
        c = tail_mass(s, R) <= thresh
        checked.append(c)
        satisfied.append((not c) or r <= bound)
        rhs.append(r)
    return np.array(checked), np.array(satisfied), np.array(rhs)


def report(traj: Trajectory, R: float, model: ModelSpec) -> VirialReport:
    """Identity check on the interior snapshots of a uniformly spaced
    trajectory: I'' by centered differences of I against the formula rhs."""
    if R <= 0:
        raise ValueError(f"R must be positive, got {R}")
    n = len(traj.snapshots)
    if n < 3:
        raise ValueError("need at least 3 snapshots")
    dts = np.diff(traj.times)
    dt = dts[0]
    if np.max(np.abs(dts - dt)) > 1e-9 * max(1.0, dt):
        raise ValueError("snapshots are not uniformly spaced")

    I = np.array([virial_I(s, R) for s in traj.snapshots])
    Ifd = (I[2:] - 2.0 * I[1:-1] + I[:-2]) / dt**2
    E = float(traj.energy_series[0])
    eta_val = weight.eta(R, float(traj.mass_series[0]))
    interior = traj.snapshots[1:-1]
    checked, satisfied, rhs = inequality_flags(interior, R, model, E, eta_val)
    Ip = np.array([virial_I_prime(s, R, model) for s in interior])
    return VirialReport(
        R=R,
        times=np.asarray(traj.times)[1:-1],
        I=I[1:-1],
        Iprime_formula=Ip,
        Isecond_fd=Ifd,
        rhs_formula=rhs,
        residual=np.abs(Ifd - rhs),
        ineq_checked=checked,
        ineq_satisfied=satisfied,
        eta=eta_val,
        eta_tilde=-8.0 * E - eta_val,
    )


def selection_clauses(u0: Field, model: ModelSpec, R: float) -> tuple[bool, bool, float]:
    """The two admissibility clauses at a given R: eta_tilde > 0, and
    (1/R) sqrt(I(0)) sqrt(1 + 4 ||u0'||^2 / eta_tilde) <= a0 / 2.
    Returns (clause1, clause2, eta_tilde)."""
    E = energy(u0, model)
    eta_val = weight.eta(R, mass(u0))
    eta_tilde = -8.0 * E - eta_val
    if eta_tilde <= 0:
        return False, False, eta_tilde
    grad_sq = 2.0 * kinetic_energy(u0, model)
    lhs = np.sqrt(virial_I(u0, R)) / R * np.sqrt(1.0 + 4.0 * grad_sq / eta_tilde)
    return True, bool(lhs <= a0() / 2.0), eta_tilde


def find_R(u0: Field, model: ModelSpec, max_doublings: int = 60) -> tuple[float, float, float]:
    """Smallest R on the ladder 2^j satisfying both selection clauses.

    Requires negative energy; returns (R, eta, eta_tilde)."""
    E = energy(u0, model)
    if E >= 0:
        raise ValueError(
            f"energy must be negative for the blow-up argument, got {E:.6g}"
        )
    R = 1.0
    for _ in range(max_doublings + 1):
        c1, c2, eta_tilde = selection_clauses(u0, model, R)
        if c1 and c2:
            if tail_mass(u0, R) > a0() / 2.0 + 1e-12:
                raise AssertionError("tail-mass bound should follow from the clauses")
            return R, weight.eta(R, mass(u0)), eta_tilde
        R *= 2.0
    raise RuntimeError(f"no admissible R found after {max_doublings} doublings")


def envelope(I0: float, I0prime: float, eta_tilde: float) -> float:
    """Positive root of I0 + I0prime t - eta_tilde t^2 (the time by which
    the quadratic envelope forces the weighted variance negative)."""
    if eta_tilde <= 0:
        raise ValueError("eta_tilde must be positive")
    if I0 <= 0:
        raise ValueError("I0 must be positive")
    disc = I0prime**2 + 4.0 * eta_tilde * I0
    return float((I0prime + np.sqrt(disc)) / (2.0 * eta_tilde))
