"""Conserved functionals and localized virial quantities.

Covers mass, the four energies (free line, inverse-power potential, delta
potential, star graph), the vertex functional P, the weighted variance
I = int chi_R |u|^2 with its first derivative formula and the full virial
second-derivative right-hand sides, the admissibility check for general
potentials, and the endpoint interpolation inequality used as a
property-test oracle.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import weight
from .field import (
    Field,
    GraphField,
    LineField,
    derivative,
    lp_norm,
    tail_quad_weights,
)


@dataclass(frozen=True)
class VertexCondition:
    """Vertex coupling of a star-graph Laplacian.

    Named kinds expand to their (A, B) matrices on demand; "general" carries
    explicit matrices and is validated (maximal rank of (A,B), self-adjoint
    A B*), but the vertex energy P is defined only for the named kinds.
    """

    kind: str  # kirchhoff | dirac_delta | delta_prime | general
    gamma: float = 0.0
    A: np.ndarray | None = None
    B: np.ndarray | None = None

    def __post_init__(self):
        if self.kind not in ("kirchhoff", "dirac_delta", "delta_prime", "general"):
            raise ValueError(f"unknown vertex condition kind {self.kind!r}")
        if self.kind == "delta_prime" and self.gamma == 0.0:
            raise ValueError("delta_prime requires gamma != 0")
        if self.kind == "general":
            if self.A is None or self.B is None:
                raise ValueError("general vertex condition requires matrices A and B")
            A = np.asarray(self.A, dtype=complex)
            B = np.asarray(self.B, dtype=complex)
            J = A.shape[0]
            if A.shape != (J, J) or B.shape != (J, J):
                raise ValueError("A and B must be square with equal size")
            if np.linalg.matrix_rank(np.hstack([A, B])) != J:
                raise ValueError("(A, B) must have maximal rank")
            AB = A @ B.conj().T
            if np.max(np.abs(AB - AB.conj().T)) > 1e-10 * (1.0 + np.max(np.abs(AB))):
                raise ValueError("A B* must be self-adjoint")

    @property
    def is_continuity_type(self) -> bool:
        return self.kind in ("kirchhoff", "dirac_delta")

    def to_dict(self) -> dict:
        if self.kind == "general":
            raise ValueError("general vertex conditions are not serializable")
        return {"kind": self.kind, "gamma": self.gamma}

    @classmethod
    def from_dict(cls, d: dict) -> "VertexCondition":
        return cls(kind=d["kind"], gamma=float(d.get("gamma", 0.0)))

    def matrices(self, J: int) -> tuple[np.ndarray, np.ndarray]:
        """The (A, B) pair encoding the condition A f(0) + B f'(0) = 0."""
        if self.kind == "general":
            return np.asarray(self.A, dtype=complex), np.asarray(self.B, dtype=complex)
        chain = np.zeros((J, J))
        for i in range(J - 1):
            chain[i, i] = 1.0
            chain[i, i + 1] = -1.0
        ones_row = np.zeros((J, J))
        ones_row[J - 1, :] = 1.0
        if self.kind == "kirchhoff":
            return chain, ones_row
        if self.kind == "dirac_delta":
            A = chain.copy()
            A[J - 1, 0] = -self.gamma
            return A, ones_row
        # delta_prime: derivative continuity, sum of values = gamma f'(0)
        B = chain.copy()
        B[J - 1, 0] = -self.gamma
        return ones_row, B


@dataclass(frozen=True)
class ModelSpec:
    """Which equation variant is being solved."""

    variant: str  # free | inverse_power | delta | graph
    gamma: float = 0.0
    mu: float = 0.0
    vertex: VertexCondition | None = None
    nonlinearity_on: bool = True

    def __post_init__(self):
        if self.variant not in ("free", "inverse_power", "delta", "graph"):
            raise ValueError(f"unknown model variant {self.variant!r}")
        if self.variant == "inverse_power":
            if not (self.gamma > 0):
                raise ValueError("inverse_power requires gamma > 0")
            if not (0.0 < self.mu < 1.0):
                raise ValueError("inverse_power requires 0 < mu < 1")
        if self.variant == "graph" and self.vertex is None:
            raise ValueError("graph variant requires a vertex condition")

    @classmethod
    def free(cls, nonlinearity_on: bool = True) -> "ModelSpec":
        return cls("free", nonlinearity_on=nonlinearity_on)

    @classmethod
    def inverse_power(cls, gamma: float, mu: float, nonlinearity_on: bool = True) -> "ModelSpec":
        return cls("inverse_power", gamma=gamma, mu=mu, nonlinearity_on=nonlinearity_on)

    @classmethod
    def delta(cls, gamma: float, nonlinearity_on: bool = True) -> "ModelSpec":
        return cls("delta", gamma=gamma, nonlinearity_on=nonlinearity_on)

    @classmethod
    def graph(cls, vertex: VertexCondition, nonlinearity_on: bool = True) -> "ModelSpec":
        return cls("graph", vertex=vertex, nonlinearity_on=nonlinearity_on)

    def uses_spectral(self) -> bool:
        """Spectral differentiation applies to smooth periodic line problems."""
        return self.variant in ("free", "inverse_power")

    def to_dict(self) -> dict:
        d = {
            "variant": self.variant,
            "gamma": self.gamma,
            "mu": self.mu,
            "nonlinearity_on": self.nonlinearity_on,
        }
        if self.vertex is not None:
            d["vertex"] = self.vertex.to_dict()
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ModelSpec":
        vertex = VertexCondition.from_dict(d["vertex"]) if "vertex" in d else None
        return cls(
            variant=d["variant"],
            gamma=float(d.get("gamma", 0.0)),
            mu=float(d.get("mu", 0.0)),
            vertex=vertex,
            nonlinearity_on=bool(d.get("nonlinearity_on", True)),
        )


def potential_on_grid(model: ModelSpec, x: np.ndarray) -> np.ndarray:
    """Pointwise smooth-potential samples (zero except for inverse_power)."""
    if model.variant != "inverse_power":
        return np.zeros_like(np.asarray(x, dtype=float))
    ax = np.abs(np.asarray(x, dtype=float))
    if np.min(ax) == 0.0:
        raise ValueError("inverse-power potential needs a grid with no node at x = 0")
    return model.gamma / ax**model.mu


def origin_index(f: LineField) -> int:
    """Index of the node at x = 0 (required for the delta potential)."""
    i = int(np.argmin(np.abs(f.x)))
    if abs(f.x[i]) > 0.25 * f.h:
        raise ValueError("delta potential needs a grid node at x = 0 (stagger off)")
    return i


def mass(f: Field) -> float:
    return lp_norm(f, 2) ** 2


def _grad_field(f: Field, model: ModelSpec) -> Field:
    if isinstance(f, LineField):
        return derivative(f, "spectral" if model.uses_spectral() else "fd")
    return derivative(f)


def kinetic_energy(f: Field, model: ModelSpec) -> float:
    """(1/2) integral of |du|^2.

    Delta and graph variants use the piecewise-linear element form
    sum |u_{i+1} - u_i|^2 / h (with homogeneous values beyond the ends),
    which is exactly the quadratic form conserved by the Cayley scheme.
    """
    if isinstance(f, LineField):
        if model.uses_spectral():
            du = derivative(f, "spectral").values
            return 0.5 * float(np.sum(f.quad_weights * np.abs(du) ** 2))
        v = f.values
        diff = np.diff(v)
        form = (np.sum(np.abs(diff) ** 2) + np.abs(v[0]) ** 2 + np.abs(v[-1]) ** 2) / f.h
        return 0.5 * float(form)
    vals = f.full_values
    form = np.sum(np.abs(np.diff(vals, axis=1)) ** 2) / f.h
    return 0.5 * float(form)


def p_functional(f: GraphField, vc: VertexCondition) -> float:
    """Vertex energy P: 0 (Kirchhoff), gamma |f1(0)|^2 (delta),
    |sum_j f_j(0)|^2 / gamma (delta')."""
    if vc.kind == "general":
        raise ValueError("P is defined only for the named vertex conditions")
    if vc.kind == "kirchhoff":
        return 0.0
    if vc.kind == "dirac_delta":
        return float(vc.gamma * np.abs(f.vertex_values[0]) ** 2)
    if vc.gamma == 0.0:
        raise ValueError("delta_prime requires gamma != 0")
    return float(np.abs(np.sum(f.vertex_values)) ** 2 / vc.gamma)


def potential_energy(f: Field, model: ModelSpec) -> float:
    """The potential/vertex part of the energy (zero for the free model)."""
    if model.variant == "free":
        return 0.0
    if model.variant == "inverse_power":
        if not isinstance(f, LineField):
            raise ValueError("inverse_power is a line model")
        V = potential_on_grid(model, f.x)
        return 0.5 * float(np.sum(f.quad_weights * V * np.abs(f.values) ** 2))
    if model.variant == "delta":
        if not isinstance(f, LineField):
            raise ValueError("delta is a line model")
        i0 = origin_index(f)
        return 0.5 * model.gamma * float(np.abs(f.values[i0]) ** 2)
    if not isinstance(f, GraphField):
        raise ValueError("graph model needs a GraphField")
    return 0.5 * p_functional(f, model.vertex)


def energy(f: Field, model: ModelSpec) -> float:
    """Conserved energy of the given variant on the given field."""
    e = kinetic_energy(f, model) + potential_energy(f, model)
    if model.nonlinearity_on:
        e -= lp_norm(f, 6) ** 6 / 6.0
    return e


def virial_I(f: Field, R: float) -> float:
    """Weighted variance int chi_R(x) |u|^2."""
    if R <= 0:
        raise ValueError(f"R must be positive, got {R}")
    if isinstance(f, LineField):
        return float(np.sum(f.quad_weights * weight.chi_R(f.x, R, 0) * np.abs(f.values) ** 2))
    wchi = weight.chi_R(f.x_full, R, 0)
    return float(np.sum(f.quad_weights * wchi * np.abs(f.full_values) ** 2))


def virial_I_prime(f: Field, R: float, model: ModelSpec | None = None) -> float:
    """First-derivative formula 2 Im int chi_R'(x) conj(u) du."""
    if R <= 0:
        raise ValueError(f"R must be positive, got {R}")
    model = model or ModelSpec.free()
    du = _grad_field(f, model)
    if isinstance(f, LineField):
        integrand = weight.chi_R(f.x, R, 1) * np.conj(f.values) * du.values
        return 2.0 * float(np.imag(np.sum(f.quad_weights * integrand)))
    wp = weight.chi_R(f.x_full, R, 1)
    integrand = wp * np.conj(f.full_values) * du.full_values
    return 2.0 * float(np.imag(np.sum(f.quad_weights * integrand)))


def sign_condition_value(f: Field, R: float, model: ModelSpec) -> float:
    """Discrete value of the model's nonpositive virial correction.

    This is rhs(model) - rhs(free form) - 16 (E_model - E_free) on the same
    field: the term the blow-up estimates discard by sign.
    """
    if model.variant == "free" or (
        model.variant == "graph" and model.vertex.kind == "kirchhoff"
    ):
        return 0.0
    if model.variant == "inverse_power":
        V = potential_on_grid(model, f.x)
        fac = model.mu * weight.zeta_over_s(f.x / R) - 4.0
        return 2.0 * float(np.sum(f.quad_weights * fac * V * np.abs(f.values) ** 2))
    if model.variant == "delta":
        i0 = origin_index(f)
        return -4.0 * model.gamma * float(np.abs(f.values[i0]) ** 2)
    return -4.0 * p_functional(f, model.vertex)


def virial_rhs(f: Field, R: float, model: ModelSpec) -> float:
    """Right-hand side of the matching localized virial identity with
    w = chi_R: 4 int w''|du|^2 - (4/3) int w''|u|^6 - int w''''|u|^2 plus the
    variant's extra term (potential, vertex value, or vertex functional)."""
    if R <= 0:
        raise ValueError(f"R must be positive, got {R}")
    du = _grad_field(f, model)
    if isinstance(f, LineField):
        x, wq, u, dux = f.x, f.quad_weights, f.values, du.values
    else:
        x, wq, u, dux = f.x_full, f.quad_weights, f.full_values, du.full_values
    w2 = weight.chi_R(x, R, 2)
    w4 = weight.chi_R(x, R, 4)
    val = 4.0 * np.sum(wq * w2 * np.abs(dux) ** 2)
    if model.nonlinearity_on:
        val -= 4.0 / 3.0 * np.sum(wq * w2 * np.abs(u) ** 6)
    val -= np.sum(wq * w4 * np.abs(u) ** 2)
    val = float(val)

    if model.variant == "inverse_power":
        V = potential_on_grid(model, f.x)
        ratio = weight.zeta_over_s(f.x / R)  # (R/x) chi'(x/R), removable at 0
        val += 2.0 * model.mu * float(np.sum(f.quad_weights * ratio * V * np.abs(f.values) ** 2))
    elif model.variant == "delta":
        i0 = origin_index(f)
        # w''(0) = 2 for the chi_R weight
        val += 2.0 * model.gamma * 2.0 * float(np.abs(f.values[i0]) ** 2)
    elif model.variant == "graph":
        val += 2.0 * 2.0 * p_functional(f, model.vertex)
    return val


@dataclass
class ConditionReport:
    passed: bool
    worst_margin: float
    worst_x: float
    worst_index: int


def check_potential_condition(
    x: np.ndarray, Vtab: np.ndarray, Vptab: np.ndarray, R: float
) -> ConditionReport:
    """Check -R chi'(x/R) V'(x) - 4 V(x) <= 0 at every node.

    This is the admissibility condition a general potential must satisfy for
    the blow-up argument; the report carries the worst (most positive)
    value and where it occurs.
    """
    x = np.asarray(x, dtype=float)
    Vtab = np.asarray(Vtab, dtype=float)
    Vptab = np.asarray(Vptab, dtype=float)
    if not (x.shape == Vtab.shape == Vptab.shape):
        raise ValueError("x, V and V' tables must have equal length")
    if R <= 0:
        raise ValueError(f"R must be positive, got {R}")
    vals = -R * weight.zeta(x / R, 0) * Vptab - 4.0 * Vtab
    i = int(np.argmax(vals))
    return ConditionReport(
        passed=bool(vals[i] <= 1e-12),
        worst_margin=float(vals[i]),
        worst_x=float(x[i]),
        worst_index=i,
    )


def ogawa_tsutsumi_bound(
    f: LineField, g: LineField, R: float
) -> tuple[float, float]:
    """Both sides of the endpoint interpolation inequality

        ||f g||_{Linf(|x|>=R)}^2
            <= ||f||_{L2(|x|>=R)} { 2 ||g^2 df||_{L2} + ||f d(g^2)||_{L2} }

    (tail norms throughout).  Evaluation only; tests assert lhs <= rhs."""
    if R <= 0:
        raise ValueError(f"R must be positive, got {R}")
    if np.max(np.abs(np.imag(g.values))) > 0:
        raise ValueError("g must be real-valued")
    wt = tail_quad_weights(f, R)
    gv = np.real(g.values)
    in_tail = np.abs(f.x) >= R
    prod = np.abs(f.values * gv)
    lhs = float(np.max(prod[in_tail], initial=0.0) ** 2)

    df = derivative(f, "spectral").values
    dg2 = derivative(g.with_values(gv**2 + 0j), "spectral").values.real
    f_tail = float(np.sqrt(np.sum(wt * np.abs(f.values) ** 2)))
    t1 = float(np.sqrt(np.sum(wt * np.abs(gv**2 * df) ** 2)))
    t2 = float(np.sqrt(np.sum(wt * np.abs(f.values * dg2) ** 2)))
    rhs = f_tail * (2.0 * t1 + t2)
    return lhs, rhs
