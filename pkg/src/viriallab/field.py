"""Discretized complex fields on a symmetric interval and on star graphs.

Line problems live on a periodic truncation of [-L, L] with N uniform nodes
(optionally staggered by h/2 so no node sits at x = 0, which keeps
inverse-power potentials finite).  Graph problems live on J half-line edges
truncated at Ledge with a homogeneous Dirichlet far end; the vertex value at
x = 0 is stored per edge and shared (equal) for continuity-type vertex
conditions.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np


@dataclass
class LineField:
    """Complex samples on x_m = -L + (m + stagger/2) h, h = 2L/N."""

    L: float
    N: int
    values: np.ndarray
    stagger: bool = False

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=complex)
        if self.values.shape != (self.N,):
            raise ValueError(f"values shape {self.values.shape} != ({self.N},)")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("non-finite field values")
        if self.L <= 0 or self.N < 2:
            raise ValueError("need L > 0 and N >= 2")

    @property
    def h(self) -> float:
        return 2.0 * self.L / self.N

    @property
    def x(self) -> np.ndarray:
        off = 0.5 if self.stagger else 0.0
        return -self.L + (np.arange(self.N) + off) * self.h

    @property
    def quad_weights(self) -> np.ndarray:
        return np.full(self.N, self.h)

    def with_values(self, values: np.ndarray) -> "LineField":
        return replace(self, values=np.asarray(values, dtype=complex))

    def copy(self) -> "LineField":
        return replace(self, values=self.values.copy())

    @classmethod
    def from_function(cls, f, L: float, N: int, stagger: bool = False) -> "LineField":
        g = cls(L=L, N=N, values=np.zeros(N, dtype=complex), stagger=stagger)
        vals = np.asarray(f(g.x), dtype=complex)
        if not np.all(np.isfinite(vals)):
            raise ValueError("sampled function produced non-finite values")
        return g.with_values(vals)


@dataclass
class GraphField:
    """J-edge star graph field; nodes x_i = i h, i = 0..M, h = Ledge/M.

    vertex_values[j] is the value at x = 0 on edge j; edge_values[j, i-1]
    holds x_i for i = 1..M.  The far node x_M carries the Dirichlet zero.
    shared_vertex marks continuity-type conditions (Kirchhoff / Dirac delta),
    for which all vertex values must coincide.
    """

    J: int
    Ledge: float
    M: int
    vertex_values: np.ndarray
    edge_values: np.ndarray
    shared_vertex: bool = True

    def __post_init__(self):
        self.vertex_values = np.asarray(self.vertex_values, dtype=complex)
        self.edge_values = np.asarray(self.edge_values, dtype=complex)
        if self.J < 1 or self.M < 3 or self.Ledge <= 0:
            raise ValueError("need J >= 1, M >= 3, Ledge > 0")
        if self.vertex_values.shape != (self.J,):
            raise ValueError("vertex_values must have shape (J,)")
        if self.edge_values.shape != (self.J, self.M):
            raise ValueError("edge_values must have shape (J, M)")
        if not (np.all(np.isfinite(self.vertex_values)) and np.all(np.isfinite(self.edge_values))):
            raise ValueError("non-finite field values")
        if self.shared_vertex and np.max(np.abs(self.vertex_values - self.vertex_values[0])) > 1e-12 * (
            1.0 + np.max(np.abs(self.vertex_values))
        ):
            raise ValueError("shared vertex requires equal values on all edges")

    @property
    def h(self) -> float:
        return self.Ledge / self.M

    @property
    def x_full(self) -> np.ndarray:
        """Node coordinates 0..Ledge including vertex and far end."""
        return np.arange(self.M + 1) * self.h

    @property
    def full_values(self) -> np.ndarray:
        """(J, M+1) array: vertex value prepended to each edge."""
        return np.concatenate([self.vertex_values[:, None], self.edge_values], axis=1)

    @property
    def quad_weights(self) -> np.ndarray:
        """Trapezoid weights on the full nodes of one edge."""
        wq = np.full(self.M + 1, self.h)
        wq[0] = wq[-1] = self.h / 2.0
        return wq

    def with_full_values(self, vals: np.ndarray) -> "GraphField":
        vals = np.asarray(vals, dtype=complex)
        return replace(self, vertex_values=vals[:, 0].copy(), edge_values=vals[:, 1:].copy())

    def copy(self) -> "GraphField":
        return replace(
            self, vertex_values=self.vertex_values.copy(), edge_values=self.edge_values.copy()
        )

    @classmethod
    def from_function(
        cls, f, J: int, Ledge: float, M: int, shared_vertex: bool = True
    ) -> "GraphField":
        x = np.arange(M + 1) * (Ledge / M)
        prof = np.asarray(f(x), dtype=complex)
        if not np.all(np.isfinite(prof)):
            raise ValueError("sampled function produced non-finite values")
        prof = np.broadcast_to(prof, (J, M + 1)).copy()
        prof[:, -1] = 0.0
        return cls(
            J=J,
            Ledge=Ledge,
            M=M,
            vertex_values=prof[:, 0],
            edge_values=prof[:, 1:],
            shared_vertex=shared_vertex,
        )


Field = LineField | GraphField


def lp_norm(f: Field, p: float) -> float:
    """Discrete L^p norm; graphs sum p-th powers over edges."""
    if p < 1:
        raise ValueError(f"p must be >= 1, got {p}")
    if isinstance(f, LineField):
        if np.isinf(p):
            return float(np.max(np.abs(f.values), initial=0.0))
        return float(np.sum(f.quad_weights * np.abs(f.values) ** p) ** (1.0 / p))
    if np.isinf(p):
        return float(np.max(np.abs(f.full_values), initial=0.0))
    return float(np.sum(f.quad_weights * np.abs(f.full_values) ** p) ** (1.0 / p))


def _is_pow2(n: int) -> bool:
    return n >= 2 and (n & (n - 1)) == 0


def spectral_wavenumbers(f: LineField) -> np.ndarray:
    return 2.0 * np.pi * np.fft.fftfreq(f.N, d=f.h)


def derivative(f: Field, method: str = "auto") -> Field:
    """Spatial derivative: Fourier multiplier on the line, second-order
    finite differences on graphs (and on the line with method="fd")."""
    if isinstance(f, LineField):
        if method == "auto":
            method = "spectral" if _is_pow2(f.N) else "fd"
        if method == "spectral":
            if not _is_pow2(f.N):
                raise ValueError("spectral derivative needs N a power of two")
            k = spectral_wavenumbers(f)
            ik = 1j * k
            if f.N % 2 == 0:
                ik[f.N // 2] = 0.0  # drop the unpaired Nyquist mode
            return f.with_values(np.fft.ifft(ik * np.fft.fft(f.values)))
        return f.with_values(np.gradient(f.values, f.h, edge_order=2))
    vals = f.full_values
    if vals.shape[1] < 3:
        raise ValueError("graph derivative needs at least 3 nodes per edge")
    dvals = np.gradient(vals, f.h, axis=1, edge_order=2)
    return replace(
        f,
        vertex_values=dvals[:, 0],
        edge_values=dvals[:, 1:],
        shared_vertex=False,
    )


def _tail_fraction(lo: np.ndarray, hi: np.ndarray, R: float, symmetric: bool) -> np.ndarray:
    """Width of each node cell [lo, hi] lying in the tail region
    {|x| >= R} (symmetric) or {x >= R}."""
    if symmetric:
        right = np.clip(hi - np.maximum(lo, R), 0.0, None)
        left = np.clip(np.minimum(hi, -R) - lo, 0.0, None)
        inside = right + left
    else:
        inside = np.clip(hi - np.maximum(lo, R), 0.0, None)
    return np.minimum(inside, hi - lo)


def tail_quad_weights(f: Field, R: float) -> np.ndarray:
    """Quadrature weights of the region beyond R (line: |x| >= R).

    The node cells are the midpoint cells of the quadrature rule; the cell
    containing the cut contributes the fraction of its width in the tail, so
    the result is continuous and monotone in R.
    """
    if R < 0:
        raise ValueError(f"R must be nonnegative, got {R}")
    if isinstance(f, LineField):
        x, h = f.x, f.h
        return _tail_fraction(x - h / 2.0, x + h / 2.0, R, symmetric=True)
    x, h = f.x_full, f.h
    lo = np.clip(x - h / 2.0, 0.0, f.Ledge)
    hi = np.clip(x + h / 2.0, 0.0, f.Ledge)
    return _tail_fraction(lo, hi, R, symmetric=False)


def tail_mass(f: Field, R: float) -> float:
    """L^2 norm of the field restricted to the region beyond R."""
    wt = tail_quad_weights(f, R)
    if isinstance(f, LineField):
        return float(np.sqrt(np.sum(wt * np.abs(f.values) ** 2)))
    return float(np.sqrt(np.sum(wt * np.abs(f.full_values) ** 2)))
