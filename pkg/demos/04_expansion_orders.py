"""Truncated expansions versus the direct transmission solve.

The corrector hierarchy turns the shell permittivity delta into an expansion
parameter: the order-J truncation differs from the direct solve by
O(delta^(J+1)) in the windowed H1 norm, and both sides share the mesh so the
measured slopes are exact integers up to fitting noise.  The same holds with
delta rotated into the lossy and gain half-planes.
"""

import dataclasses

import numpy as np

from enzlab import (Circle, CorrectorEngine, DomainSpec, PhysicsConfig,
                    SourceRing, SourceSpec, build_mesh, compare_fields,
                    solve_transmission)

spec = DomainSpec(outer=Circle((0.0, 0.0), 1.0), dopant=Circle((0.0, 0.0), 0.3),
                  truncation_radius=4.0, pml_thickness=1.0)
cfg = PhysicsConfig(omega=1.0, mu=1.0, delta=1e-2,
                    sources=SourceSpec((SourceRing(2.3, 2.7, 1.0),)))
mesh = build_mesh(spec, 0.1)
engine = CorrectorEngine(mesh, cfg)
hier = engine.build_hierarchy(6)

print("coupling-constant corrections e_j:")
for j, e in enumerate(hier.e[:5]):
    print(f"  e_{j} = {e:+.6e}")

deltas = 10.0 ** (-np.arange(1.0, 3.01, 0.25))
for label, rot in (("real delta", 1.0), ("lossy delta (x i)", 1j)):
    errs = {j: [] for j in (0, 1, 2)}
    for d in deltas:
        u = solve_transmission(mesh, dataclasses.replace(cfg, delta=rot * d))
        for j in errs:
            v = engine.assemble_expansion(hier, rot * d, order=j)
            errs[j].append(compare_fields(u, v).h1_error)
    print(f"\n{label}: windowed H1 error against the direct solve")
    print(f"{'|delta|':>9} " + " ".join(f"{'J=' + str(j):>12}" for j in errs))
    for i, d in enumerate(deltas):
        print(f"{d:9.2e} " + " ".join(f"{errs[j][i]:12.3e}" for j in errs))
    for j in errs:
        slope = np.polyfit(np.log10(deltas), np.log10(errs[j]), 1)[0]
        print(f"  J={j}: slope {slope:+.3f} (expected {j + 1})")
