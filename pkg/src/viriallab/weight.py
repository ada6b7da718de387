"""Cutoff profile for the localized virial weight.

The weight is built from an odd cutoff ``zeta``:

    zeta(s) = 2s                  on [0, 1],
    zeta(s) = 2[s - (s-1)^3]      on [1, 1 + 1/sqrt(3)],
    quintic Hermite tail          on [1 + 1/sqrt(3), 2],
    zeta(s) = 0                   for s >= 2,

extended oddly to s < 0.  The tail is the unique quintic matching value,
first and second derivative of the cubic branch at s1 = 1 + 1/sqrt(3) and
vanishing to second order at s = 2, so zeta is C^2 with zeta''' in L^inf.

From zeta we get chi(x) = int_0^x zeta, the scaled weight
chi_R(x) = R^2 chi(x/R) (equal to x^2 on |x| <= R, constant beyond 2R),
the quartic-root factor g_R = (2 - zeta'(x/R))^(1/4), and the tail-penalty
constant eta(R, m) entering the decay estimate for the localized variance.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

S1 = 1.0 + 1.0 / np.sqrt(3.0)

# value/derivatives of the cubic branch at s1 (interpolation data for the tail)
_V0 = 2.0 + 4.0 / (3.0 * np.sqrt(3.0))  # zeta(s1)
_D1 = 0.0                               # zeta'(s1)
_D2 = -4.0 * np.sqrt(3.0)               # zeta''(s1)


def _hermite_tail_coeffs() -> np.ndarray:
    """Quintic tail p(t) = sum c_k t^k on t = s - s1 in [0, 2 - s1].

    p matches (value, d1, d2) = (_V0, 0, _D2) at t = 0 and (0, 0, 0) at
    t = 2 - s1.
    """
    tau = 2.0 - S1
    c = np.zeros(6)
    c[0] = _V0
    c[1] = _D1
    c[2] = _D2 / 2.0
    # remaining three conditions at t = tau
    A = np.array(
        [
            [tau**3, tau**4, tau**5],
            [3 * tau**2, 4 * tau**3, 5 * tau**4],
            [6 * tau, 12 * tau**2, 20 * tau**3],
        ]
    )
    b = -np.array(
        [
            c[0] + c[1] * tau + c[2] * tau**2,
            c[1] + 2 * c[2] * tau,
            2 * c[2],
        ]
    )
    c[3:] = np.linalg.solve(A, b)
    return c


def _poly_derivs(coeffs: np.ndarray) -> list[np.ndarray]:
    """Coefficient arrays (ascending) of p, p', p'', p'''."""
    out = [np.asarray(coeffs, dtype=float)]
    for _ in range(3):
        p = out[-1]
        out.append(p[1:] * np.arange(1, len(p)))
    return out


def _poly_abs_max(coeffs: np.ndarray, lo: float, hi: float) -> tuple[float, float]:
    """Max of |p| over [lo, hi] via critical points of p'. Returns (max, loc)."""
    p = np.asarray(coeffs, dtype=float)
    dp = p[1:] * np.arange(1, len(p))
    cand = [lo, hi]
    if len(dp) > 1:
        roots = np.roots(dp[::-1])
        for r in roots:
            if abs(r.imag) < 1e-12 and lo <= r.real <= hi:
                cand.append(float(r.real))
    vals = [abs(float(np.polyval(p[::-1], t))) for t in cand]
    i = int(np.argmax(vals))
    return vals[i], cand[i]


@dataclass(frozen=True)
class WeightProfile:
    """Certified cutoff data: tail interpolant plus the sup-norm constants.

    z2 = ||zeta''||_inf over the tail interval [s1, 2];
    z3 = ||zeta'''||_inf over [1, 2].  Both feed eta().
    """

    s1: float
    tail_coeffs: np.ndarray
    z2: float
    z3: float
    chi_plateau: float = field(default=0.0)

    @classmethod
    def default(cls) -> "WeightProfile":
        coeffs = _hermite_tail_coeffs()
        tau = 2.0 - S1
        _, d1, d2, d3 = _poly_derivs(coeffs)
        z2, _ = _poly_abs_max(d2, 0.0, tau)
        # |zeta'''| = 12 on the cubic branch [1, s1]
        z3_tail, _ = _poly_abs_max(d3, 0.0, tau)
        z3 = max(12.0, z3_tail)
        # chi value at s1 and on the plateau s >= 2
        anti = np.concatenate(([0.0], coeffs / np.arange(1, 7)))
        chi_s1 = S1**2 - (S1 - 1.0) ** 4 / 2.0
        plateau = chi_s1 + float(np.polyval(anti[::-1], tau))
        return cls(s1=S1, tail_coeffs=coeffs, z2=z2, z3=z3, chi_plateau=plateau)


_DEFAULT: WeightProfile | None = None


def default_profile() -> WeightProfile:
    global _DEFAULT
    if _DEFAULT is None:
        _DEFAULT = WeightProfile.default()
    return _DEFAULT


def _tail_eval(profile: WeightProfile, t, order: int):
    derivs = _poly_derivs(profile.tail_coeffs)
    return np.polyval(derivs[order][::-1], t)


def zeta(s, order: int = 0, profile: WeightProfile | None = None):
    """Evaluate zeta or one of its first three derivatives.

    At the knots, derivative orders >= 2 take the one-sided value from the
    branch nearer the interior of the bump: the cubic branch at s = 1, the
    tail at s = s1 and s = 2.  Those values only ever enter sup-norms.
    """
    if order not in (0, 1, 2, 3):
        raise ValueError(f"order must be in {{0,1,2,3}}, got {order}")
    if profile is None:
        profile = default_profile()
    s = np.asarray(s, dtype=float)
    if not np.all(np.isfinite(s)):
        raise ValueError("non-finite input to zeta")
    a = np.abs(s)
    s1 = profile.s1

    m_lin = a < 1.0
    m_cub = (a >= 1.0) & (a < s1)
    m_tail = (a >= s1) & (a <= 2.0)

    out = np.zeros_like(a)
    if order == 0:
        out = np.where(m_lin, 2.0 * a, out)
        out = np.where(m_cub, 2.0 * (a - (a - 1.0) ** 3), out)
    elif order == 1:
        out = np.where(m_lin, 2.0, out)
        out = np.where(m_cub, 2.0 * (1.0 - 3.0 * (a - 1.0) ** 2), out)
    elif order == 2:
        out = np.where(m_cub, -12.0 * (a - 1.0), out)
    else:
        out = np.where(m_cub, -12.0, out)
    if np.any(m_tail):
        out = np.where(m_tail, _tail_eval(profile, a - s1, order), out)

    # odd function: even-order derivatives are odd, odd-order ones even
    if order % 2 == 0:
        out = out * np.sign(s)
    return out if out.ndim else float(out)


def chi(x, profile: WeightProfile | None = None):
    """chi(x) = int_0^x zeta, evaluated from branch antiderivatives."""
    if profile is None:
        profile = default_profile()
    x = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(x)):
        raise ValueError("non-finite input to chi")
    a = np.abs(x)
    s1 = profile.s1
    chi_s1 = s1**2 - (s1 - 1.0) ** 4 / 2.0
    anti = np.concatenate(([0.0], profile.tail_coeffs / np.arange(1, 7)))

    out = np.where(a < 1.0, a**2, 0.0)
    m_cub = (a >= 1.0) & (a < s1)
    out = np.where(m_cub, a**2 - (a - 1.0) ** 4 / 2.0, out)
    m_tail = (a >= s1) & (a <= 2.0)
    if np.any(m_tail):
        out = np.where(m_tail, chi_s1 + np.polyval(anti[::-1], a - s1), out)
    out = np.where(a > 2.0, profile.chi_plateau, out)
    return out if out.ndim else float(out)


def chi_R(x, R: float, order: int = 0, profile: WeightProfile | None = None):
    """Scaled weight chi_R = R^2 chi(x/R) and its derivatives.

    order 0 -> chi_R, 1 -> R zeta(x/R), 2 -> zeta'(x/R),
    order 4 -> zeta'''(x/R) / R^2.  Order 3 is never needed and rejected.
    """
    if R <= 0:
        raise ValueError(f"R must be positive, got {R}")
    if order == 0:
        return np.multiply(R**2, chi(np.asarray(x) / R, profile))
    if order == 1:
        return np.multiply(R, zeta(np.asarray(x) / R, 0, profile))
    if order == 2:
        return zeta(np.asarray(x) / R, 1, profile)
    if order == 4:
        return np.multiply(1.0 / R**2, zeta(np.asarray(x) / R, 3, profile))
    raise ValueError(f"unsupported chi_R derivative order {order}")


def g_R(x, R: float, profile: WeightProfile | None = None):
    """(2 - zeta'(x/R))^(1/4): zero on |x| <= R, 2^(1/4) beyond 2R."""
    if R <= 0:
        raise ValueError(f"R must be positive, got {R}")
    val = 2.0 - zeta(np.asarray(x) / R, 1, profile)
    return np.clip(val, 0.0, None) ** 0.25


def zeta_over_s(s, profile: WeightProfile | None = None):
    """zeta(s)/s with the removable singularity (value 2 on |s| <= 1)."""
    s = np.asarray(s, dtype=float)
    safe = np.where(np.abs(s) <= 1.0, 1.0, s)
    out = np.where(np.abs(s) <= 1.0, 2.0, zeta(safe, 0, profile) / safe)
    return out if out.ndim else float(out)


def eta(R: float, mass2: float, profile: WeightProfile | None = None) -> float:
    """Tail penalty: (4/(3R^2))(sqrt6 + z2/2)^2 m^3 + z3 m / (2R^2).

    mass2 is the squared L^2 norm of the initial data.
    """
    if R <= 0:
        raise ValueError(f"R must be positive, got {R}")
    if mass2 < 0:
        raise ValueError(f"mass2 must be nonnegative, got {mass2}")
    if profile is None:
        profile = default_profile()
    term1 = 4.0 / (3.0 * R**2) * (np.sqrt(6.0) + profile.z2 / 2.0) ** 2 * mass2**3
    term2 = profile.z3 / (2.0 * R**2) * mass2
    return term1 + term2


@dataclass
class CheckResult:
    name: str
    passed: bool
    margin: float
    location: float

    def as_dict(self) -> dict:
        return {
            "name": self.name,
            "passed": bool(self.passed),
            "margin": float(self.margin),
            "location": float(self.location),
        }


@dataclass
class ProfileReport:
    checks: list[CheckResult]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def failed_names(self) -> list[str]:
        return [c.name for c in self.checks if not c.passed]

    def as_dict(self) -> dict:
        return {"passed": self.passed, "checks": [c.as_dict() for c in self.checks]}


def verify_profile(samples: int = 100_000, profile: WeightProfile | None = None) -> ProfileReport:
    """Certify every inequality the weight construction relies on.

    Dense sampling on [-3, 3] with per-check worst margin and location.
    The margin is the distance to violation (negative when violated).
    """
    if samples < 1000:
        raise ValueError(f"samples must be >= 1000, got {samples}")
    if profile is None:
        profile = default_profile()
    s1 = profile.s1
    checks: list[CheckResult] = []

    def add(name, margins, locs):
        margins = np.atleast_1d(np.asarray(margins, dtype=float))
        locs = np.atleast_1d(np.asarray(locs, dtype=float))
        i = int(np.argmin(margins))
        checks.append(
            CheckResult(name, bool(margins[i] >= 0.0), float(margins[i]), float(locs[i]))
        )

    s = np.linspace(-3.0, 3.0, samples)
    z0 = zeta(s, 0, profile)
    z1 = zeta(s, 1, profile)

    add("oddness", 1e-12 - np.abs(zeta(-s, 0, profile) + z0), s)

    lin = s[np.abs(s) <= 1.0]
    add("linear_branch", 1e-12 - np.abs(zeta(lin, 0, profile) - 2.0 * lin), lin)
    far = s[np.abs(s) >= 2.0]
    add("zero_beyond_2", 1e-12 - np.abs(zeta(far, 0, profile)), far)

    # one-sided knot values from the closed-form branches
    tau = 2.0 - s1
    derivs = _poly_derivs(profile.tail_coeffs)
    knot_jumps = {
        1.0: (2.0 * 1.0 - 2.0 * (1.0 - 0.0), 2.0 - 2.0 * (1.0 - 0.0)),
        s1: (
            2.0 * (s1 - (s1 - 1.0) ** 3) - float(np.polyval(derivs[0][::-1], 0.0)),
            2.0 * (1.0 - 3.0 * (s1 - 1.0) ** 2) - float(np.polyval(derivs[1][::-1], 0.0)),
        ),
        2.0: (
            float(np.polyval(derivs[0][::-1], tau)),
            float(np.polyval(derivs[1][::-1], tau)),
        ),
    }
    jump0 = [abs(v[0]) for v in knot_jumps.values()]
    jump1 = [abs(v[1]) for v in knot_jumps.values()]
    add("knot_continuity_zeta", 1e-10 - np.asarray(jump0), list(knot_jumps))
    add("knot_continuity_zeta_prime", 1e-10 - np.asarray(jump1), list(knot_jumps))

    add("zeta_prime_le_2", 2.0 - z1, s)
    pos = s[s >= 0.0]
    add("zeta_nonneg", zeta(pos, 0, profile), pos)

    interior = np.linspace(s1 + 1e-9, 2.0 - 1e-9, samples // 2)
    add("zeta_prime_negative_on_tail", -zeta(interior, 1, profile), interior)

    nz = s[np.abs(s) > 1e-9]
    add("sup_zeta_over_s_le_2", 2.0 - zeta_over_s(nz, profile) + 1e-12, nz)

    c = chi(s, profile)
    add("chi_prime_sq_le_4chi", 4.0 * c - z0**2 + 1e-12, s)

    outer = s[np.abs(s) >= 1.0]
    add("chi_ge_1_outside", chi(outer, profile) - 1.0 + 1e-12, outer)

    # |d/dx g_R^2| table (R = 1; scales as 1/R)
    def dgsq(ss):
        val = np.clip(2.0 - zeta(ss, 1, profile), 0.0, None)
        with np.errstate(divide="ignore", invalid="ignore"):
            d = np.where(val > 0, -zeta(ss, 2, profile) / (2.0 * np.sqrt(val)), 0.0)
        return np.abs(d)

    flat = s[(np.abs(s) < 1.0 - 1e-9) | (np.abs(s) > 2.0 + 1e-9)]
    add("g_sq_deriv_zero_off_bump", 1e-12 - dgsq(flat), flat)
    # exact equality sqrt(6) on the cubic branch; slack covers the 0/0-type
    # cancellation noise of evaluating the ratio near s = 1
    mid = np.linspace(1.0 + 1e-5, s1 - 1e-7, samples // 2)
    add("g_sq_deriv_le_sqrt6", np.sqrt(6.0) + 1e-6 - dgsq(mid), mid)
    tail_s = np.linspace(s1 + 1e-7, 2.0 - 1e-7, samples // 2)
    add("g_sq_deriv_le_z2_half", profile.z2 / 2.0 + 1e-9 - dgsq(tail_s), tail_s)

    # sampled sup-norms must agree with the stored analytic constants
    t_grid = np.linspace(0.0, tau, samples)
    z2_s = float(np.max(np.abs(np.polyval(derivs[2][::-1], t_grid))))
    z3_s = max(12.0, float(np.max(np.abs(np.polyval(derivs[3][::-1], t_grid)))))
    add("z2_positive_finite", profile.z2 if np.isfinite(profile.z2) else -1.0, s1)
    add("z3_positive_finite", profile.z3 if np.isfinite(profile.z3) else -1.0, 1.0)
    # sampling underestimates the sup by at most (max slope) * grid spacing
    d4 = derivs[3][1:] * np.arange(1, len(derivs[3]))
    z4, _ = _poly_abs_max(d4, 0.0, tau)
    dt = tau / max(samples - 1, 1)
    add("z2_matches_sampled", profile.z3 * dt + 1e-8 - abs(profile.z2 - z2_s), s1)
    add("z3_matches_sampled", z4 * dt + 1e-8 - abs(profile.z3 - z3_s), 1.0)

    return ProfileReport(checks=checks)
