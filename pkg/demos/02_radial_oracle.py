"""The semi-analytic radial oracle: exact constants for concentric geometry.

For concentric circles the whole transmission problem separates in angular
modes, and the axisymmetric mode is solvable in closed form with Bessel and
Hankel functions.  The oracle is the truth source every finite element
quantity is checked against.  It also shows the defining ENZ effect: as the
shell permittivity shrinks, the field inside the shell locks onto a single
complex constant.
"""

import numpy as np

from enzlab import RadialLayers, axisym_solution, bessel, j0_zero

print("special functions: first zero of J0 =", j0_zero(1))
z = np.linspace(0.5, 50, 5)
w = bessel("J0", z) * bessel("Y1", z) - bessel("J1", z) * bessel("Y0", z)
print("Wronskian defect on a sample grid:", np.abs(w + 2 / (np.pi * z)).max())

print("\nshell field versus the coupling constant c*")
print(f"{'delta':>8} {'c*':>24} {'max |u_shell - c*|':>20}")
for delta in (1e-1, 1e-2, 1e-3, 1e-4):
    layers = RadialLayers(a=0.3, b=1.0, c=4.0, eps_enz=delta,
                          source_r1=2.3, source_r2=2.7, amplitude=1.0)
    sol = axisym_solution(layers, k=1.0)
    c_star = sol.scalars["c_star"]
    r = np.linspace(0.35, 0.95, 25)
    gap = np.abs(sol(r) - c_star).max()
    print(f"{delta:8.0e} {c_star.real:+.6f}{c_star.imag:+.6f}j {gap:20.3e}")

sol = axisym_solution(RadialLayers(a=0.3, b=1.0, c=4.0, eps_enz=1e-2,
                                   source_r1=2.3, source_r2=2.7, amplitude=1.0),
                      k=1.0)
s = sol.scalars
print("\nclosed-form constants at delta = 1e-2, k = 1:")
for key in ("beta", "c_star", "mu_eff", "int_psi_d"):
    print(f"  {key:10s} = {s[key]:+.8f}")
