"""Semi-analytic reference solutions for concentric-circle geometry.

Everything here is discretization-free in angle: the mode-0 radial problem is
solved exactly in terms of Bessel/Hankel functions with interface matching,
and the scalar constants (flux balance constant, coupling constant, effective
permeability) come out in closed form.  This module is the independent truth
source the finite element solvers are validated against, so it evaluates its
own special functions (power series up to z = 12, Hankel's asymptotic
expansion beyond) instead of reusing any machinery from the FEM path.

Restrictions: real wavenumber, real positive per-layer permittivities, and a
radially symmetric annular source.  Off-center sources and complex wavenumber
are covered by invariant tests elsewhere, not by oracle comparison.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.optimize import brentq

from .errors import DomainError, ResonantDopant, SingularMatch

_EULER_GAMMA = 0.5772156649015328606
_SERIES_CUTOFF = 12.0
_Z_MAX = 200.0


# ---------------------------------------------------------------------------
# Bessel functions J0, J1, Y0, Y1 and the outgoing Hankel combinations


def _check_domain(z: float, allow_zero: bool) -> float:
    z = float(z)
    if math.isnan(z) or z < 0.0 or z > _Z_MAX or (z == 0.0 and not allow_zero):
        raise DomainError(f"argument {z!r} outside supported range (0, {_Z_MAX}]")
    return z


def _j0_series(z: float) -> float:
    q = 0.25 * z * z
    term, total = 1.0, 1.0
    for m in range(1, 200):
        term *= -q / (m * m)
        total += term
        if abs(term) < 1e-18 * max(1.0, abs(total)):
            break
    return total


def _j1_series(z: float) -> float:
    q = 0.25 * z * z
    term, total = 1.0, 1.0
    for m in range(1, 200):
        term *= -q / (m * (m + 1))
        total += term
        if abs(term) < 1e-18 * max(1.0, abs(total)):
            break
    return 0.5 * z * total


def _y0_series(z: float) -> float:
    q = 0.25 * z * z
    term, total, harm = 1.0, 0.0, 0.0
    for m in range(1, 200):
        term *= -q / (m * m)
        harm += 1.0 / m
        total += -term * harm
        if abs(term) < 1e-18:
            break
    return (2.0 / math.pi) * ((math.log(0.5 * z) + _EULER_GAMMA) * _j0_series(z) + total)


def _y1_series(z: float) -> float:
    q = 0.25 * z * z
    term = 1.0          # (z/2)^{2m} series core for m = 0
    total = 1.0         # H_0 + H_1 = 1 at m = 0
    h_m, h_m1 = 0.0, 1.0
    for m in range(1, 200):
        term *= -q / (m * (m + 1))
        h_m += 1.0 / m
        h_m1 += 1.0 / (m + 1)
        total += term * (h_m + h_m1)
        if abs(term) < 1e-18:
            break
    return ((2.0 / math.pi) * (math.log(0.5 * z) + _EULER_GAMMA) * _j1_series(z)
            - 2.0 / (math.pi * z) - (0.5 * z / math.pi) * total)


def _hankel_asymptotic(n: int, z: float) -> tuple[float, float]:
    """(J_n, Y_n) by Hankel's large-argument expansion with optimal truncation."""
    mu = 4.0 * n * n
    a = [1.0]
    for m in range(1, 40):
        a.append(a[-1] * (mu - (2 * m - 1) ** 2) / (8.0 * m))
    p_sum, q_sum = 0.0, 0.0
    best = math.inf
    for m in range(40):
        term = a[m] / z**m
        if abs(term) > best:   # asymptotic tail started growing
            break
        best = abs(term)
        half, rem = divmod(m, 2)
        sgn = -1.0 if half % 2 == 1 else 1.0
        if rem == 0:
            p_sum += sgn * term
        else:
            q_sum += sgn * term
    omega = z - (2 * n + 1) * math.pi / 4.0
    amp = math.sqrt(2.0 / (math.pi * z))
    jn = amp * (p_sum * math.cos(omega) - q_sum * math.sin(omega))
    yn = amp * (p_sum * math.sin(omega) + q_sum * math.cos(omega))
    return jn, yn


def _j0(z: float) -> float:
    z = _check_domain(z, allow_zero=True)
    if z <= _SERIES_CUTOFF:
        return _j0_series(z)
    return _hankel_asymptotic(0, z)[0]


def _j1(z: float) -> float:
    z = _check_domain(z, allow_zero=True)
    if z <= _SERIES_CUTOFF:
        return _j1_series(z)
    return _hankel_asymptotic(1, z)[0]


def _y0(z: float) -> float:
    z = _check_domain(z, allow_zero=False)
    if z <= _SERIES_CUTOFF:
        return _y0_series(z)
    return _hankel_asymptotic(0, z)[1]


def _y1(z: float) -> float:
    z = _check_domain(z, allow_zero=False)
    if z <= _SERIES_CUTOFF:
        return _y1_series(z)
    return _hankel_asymptotic(1, z)[1]


_KINDS = {
    "J0": _j0, "J1": _j1, "Y0": _y0, "Y1": _y1,
    "H1_0": lambda z: complex(_j0(z), _y0(z)),
    "H1_1": lambda z: complex(_j1(z), _y1(z)),
}


def bessel(kind: str, z):
    """Evaluate J0/J1/Y0/Y1 or the outgoing Hankel functions H1_0/H1_1.

    Absolute accuracy 1e-10 on (0, 200]; J kinds also accept z = 0.
    Accepts scalars or arrays.
    """
    if kind not in _KINDS:
        raise DomainError(f"unknown Bessel kind {kind!r}")
    fn = _KINDS[kind]
    arr = np.asarray(z, dtype=float)
    if arr.ndim == 0:
        return fn(float(arr))
    out = np.array([fn(float(v)) for v in arr.ravel()])
    return out.reshape(arr.shape)


def j0_zero(n: int) -> float:
    """n-th positive zero of J0 (n >= 1), via bisection on this module."""
    return _bessel_zero(_j0, n)


def j1_zero(n: int) -> float:
    """n-th positive zero of J1 (n >= 1, excluding z = 0)."""
    return _bessel_zero(_j1, n)


@lru_cache(maxsize=None)
def _zero_grid(fn_name: str) -> np.ndarray:
    fn = {"j0": _j0, "j1": _j1}[fn_name]
    z = np.arange(0.5, _Z_MAX, 0.05)
    vals = np.array([fn(v) for v in z])
    flips = np.where(np.sign(vals[:-1]) * np.sign(vals[1:]) < 0)[0]
    return np.array([brentq(fn, z[i], z[i + 1], xtol=1e-13) for i in flips])


def _bessel_zero(fn, n: int) -> float:
    if n < 1:
        raise DomainError("zero index must be >= 1")
    name = "j0" if fn is _j0 else "j1"
    zeros = _zero_grid(name)
    if n > len(zeros):
        raise DomainError(f"only {len(zeros)} zeros tabulated below z = {_Z_MAX}")
    return float(zeros[n - 1])


# ---------------------------------------------------------------------------
# mode-0 layered solution


@dataclass(frozen=True)
class RadialLayers:
    """Concentric three-layer medium with an annular ring source.

    ``a < b`` are the dopant and scatterer radii, ``c`` the profile extent.
    ``eps_*`` are the real positive per-layer permittivities (the PDE
    coefficient is 1/eps).  The source has uniform amplitude on
    ``r1 <= r <= r2`` with ``b < r1 < r2 <= c``.
    """

    a: float
    b: float
    c: float
    eps_dopant: float = 1.0
    eps_enz: float = 1.0
    eps_exterior: float = 1.0
    source_r1: float = 0.0
    source_r2: float = 0.0
    amplitude: complex = 0.0

    def __post_init__(self):
        if not (0 < self.a < self.b < self.c):
            raise DomainError("layer radii must satisfy 0 < a < b < c")
        for e in (self.eps_dopant, self.eps_enz, self.eps_exterior):
            if not (np.isreal(e) and e > 0):
                raise DomainError("oracle permittivities must be real and positive")
        if self.amplitude != 0 and not (self.b < self.source_r1 < self.source_r2 <= self.c):
            raise DomainError("source annulus must satisfy b < r1 < r2 <= c")


class RadialSolution:
    """Evaluated mode-0 field with its layer coefficients and scalars."""

    def __init__(self, layers: RadialLayers, k: float, coeffs, particular, scalars):
        self.layers = layers
        self.k = k
        self._c = coeffs          # (A_d, A_z, B_z, A_e, B_e)
        self._part = particular   # (F, r1, r2) or None
        self.scalars = scalars

    def _u_particular(self, r: np.ndarray) -> np.ndarray:
        if self._part is None:
            return np.zeros_like(r, dtype=complex)
        F, r1, r2 = self._part
        k = self.k
        out = np.zeros_like(r, dtype=complex)
        act = r > r1
        if not act.any():
            return out
        rr = np.minimum(r[act], r2)
        i_j = (rr * bessel("J1", k * rr) - r1 * _j1(k * r1)) / k
        i_y = (rr * bessel("Y1", k * rr) - r1 * _y1(k * r1)) / k
        out[act] = -F * (math.pi / 2.0) * (bessel("Y0", k * r[act]) * i_j
                                           - bessel("J0", k * r[act]) * i_y)
        return out

    def __call__(self, r) -> np.ndarray:
        r = np.atleast_1d(np.asarray(r, dtype=float))
        L, k = self.layers, self.k
        a_d, a_z, b_z, a_e, b_e = self._c
        kd = k * math.sqrt(L.eps_dopant)
        kz = k * math.sqrt(L.eps_enz)
        out = np.empty(r.shape, dtype=complex)
        dop = r <= L.a
        enz = (r > L.a) & (r <= L.b)
        ext = r > L.b
        out[dop] = a_d * bessel("J0", kd * r[dop])
        out[enz] = a_z * bessel("J0", kz * r[enz]) + b_z * bessel("Y0", kz * r[enz])
        out[ext] = (a_e * bessel("J0", k * r[ext]) + b_e * bessel("Y0", k * r[ext])
                    + self._u_particular(r[ext]))
        return out

    def source_field(self, r) -> np.ndarray:
        """Exterior field with zero trace on the scatterer circle (r >= b)."""
        r = np.atleast_1d(np.asarray(r, dtype=float))
        a_s, b_s = self.scalars["s_coeffs"]
        k = self.k
        return (a_s * bessel("J0", k * r) + b_s * bessel("Y0", k * r)
                + self._u_particular(r))

    def derivative(self, r) -> np.ndarray:
        r = np.atleast_1d(np.asarray(r, dtype=float))
        eps = 1e-6 * max(1.0, float(np.max(r)))
        return (self(r + eps) - self(r - eps)) / (2 * eps)

    def disk_integral(self, rho: float, n_quad: int = 200) -> complex:
        """2*pi * int_0^rho u(r) r dr by composite Gauss quadrature."""
        L = self.layers
        cuts = [0.0, L.a, L.b]
        if self._part is not None:
            cuts += [self._part[1], self._part[2]]
        cuts = sorted({c for c in cuts if c < rho}) + [rho]
        x, w = np.polynomial.legendre.leggauss(n_quad)
        total = 0.0 + 0.0j
        for lo, hi in zip(cuts[:-1], cuts[1:]):
            rr = 0.5 * (hi - lo) * x + 0.5 * (hi + lo)
            total += 0.5 * (hi - lo) * np.sum(w * rr * self(rr))
        return 2.0 * math.pi * total


def _scalar_constants(layers: RadialLayers, k: float, mu: complex) -> dict:
    a, b = layers.a, layers.b
    j0a, j1a = _j0(k * a), _j1(k * a)
    if abs(j0a) < 1e-10:
        raise ResonantDopant(f"J0(k*a) = {j0a:.2e}: dopant resonance")
    h0b = complex(_j0(k * b), _y0(k * b))
    h1b = complex(_j1(k * b), _y1(k * b))
    flux_psi_e = -2.0 * math.pi * b * k * h1b / h0b
    flux_psi_d = -2.0 * math.pi * a * k * j1a / j0a
    int_psi_d = 2.0 * math.pi * a * j1a / (k * j0a)
    area_enz = math.pi * (b * b - a * a)
    beta = k * k * area_enz + flux_psi_e - flux_psi_d
    mu_eff = mu * (area_enz + int_psi_d) / (math.pi * b * b)
    out = {"beta": beta, "flux_psi_e": flux_psi_e, "flux_psi_d": flux_psi_d,
           "int_psi_d": int_psi_d, "mu_eff": mu_eff, "flux_s": 0.0 + 0.0j,
           "c_star": 0.0 + 0.0j, "s_coeffs": (0.0 + 0.0j, 0.0 + 0.0j)}
    if layers.amplitude != 0:
        F, r1, r2 = layers.amplitude, layers.source_r1, layers.source_r2
        i_j = (r2 * _j1(k * r2) - r1 * _j1(k * r1)) / k
        i_y = (r2 * _y1(k * r2) - r1 * _y1(k * r1)) / k
        p_j = F * (math.pi / 2.0) * i_y
        p_y = -F * (math.pi / 2.0) * i_j
        y0b = _y0(k * b)
        a_s = (p_y - 1j * p_j) * y0b / h0b
        b_s = 1j * a_s + 1j * p_j - p_y
        flux_s = 2.0 * math.pi * b * k * (-a_s * _j1(k * b) - b_s * _y1(k * b))
        out["flux_s"] = flux_s
        out["c_star"] = -flux_s / beta
        out["s_coeffs"] = (a_s, b_s)
    return out


def axisym_solution(layers: RadialLayers, k: float, mu: complex = 1.0) -> RadialSolution:
    """Solve the mode-0 transmission problem exactly.

    Matches ``u`` and ``(1/eps) du/dr`` at both interfaces, imposes
    regularity at the origin and the outgoing condition at infinity, and
    attaches the closed-form scalars (flux balance constant, coupling
    constant, effective permeability, auxiliary fluxes).
    """
    if k <= 0 or k != float(k):
        raise DomainError("oracle requires a real positive wavenumber")
    L = layers
    kd = k * math.sqrt(L.eps_dopant)
    kz = k * math.sqrt(L.eps_enz)
    id_, iz, ie = 1.0 / L.eps_dopant, 1.0 / L.eps_enz, 1.0 / L.eps_exterior
    if L.eps_exterior != 1.0:
        raise DomainError("exterior permittivity must be 1 for the radiation condition")
    scalars = _scalar_constants(L, k, mu)

    if L.amplitude == 0:
        sol = RadialSolution(L, k, (0j, 0j, 0j, 0j, 0j), None, scalars)
        return sol
    F, r1, r2 = L.amplitude, L.source_r1, L.source_r2
    i_j = (r2 * _j1(k * r2) - r1 * _j1(k * r1)) / k
    i_y = (r2 * _y1(k * r2) - r1 * _y1(k * r1)) / k
    p_j = F * (math.pi / 2.0) * i_y
    p_y = -F * (math.pi / 2.0) * i_j

    # unknowns: A_d, A_z, B_z, A_e, B_e
    A = np.zeros((5, 5), dtype=complex)
    rhs = np.zeros(5, dtype=complex)
    A[0] = [_j0(kd * L.a), -_j0(kz * L.a), -_y0(kz * L.a), 0, 0]
    A[1] = [-id_ * kd * _j1(kd * L.a), iz * kz * _j1(kz * L.a),
            iz * kz * _y1(kz * L.a), 0, 0]
    A[2] = [0, _j0(kz * L.b), _y0(kz * L.b), -_j0(k * L.b), -_y0(k * L.b)]
    A[3] = [0, -iz * kz * _j1(kz * L.b), -iz * kz * _y1(kz * L.b),
            ie * k * _j1(k * L.b), ie * k * _y1(k * L.b)]
    A[4] = [0, 0, 0, -1j, 1.0]
    rhs[4] = 1j * p_j - p_y
    cond = np.linalg.cond(A)
    if not np.isfinite(cond) or cond > 1e12:
        raise SingularMatch(f"interface matching system condition {cond:.2e}")
    coeffs = np.linalg.solve(A, rhs)
    sol = RadialSolution(L, k, tuple(coeffs), (F, r1, r2), scalars)

    # interface matching residuals must sit at solver precision
    for r0 in (L.a, L.b):
        lo, hi = sol(np.array([r0 * (1 - 1e-12)])), sol(np.array([r0 * (1 + 1e-12)]))
        if abs(lo - hi) > 1e-9 * max(1.0, abs(hi)):
            raise SingularMatch("interface continuity residual above tolerance")
    return sol
