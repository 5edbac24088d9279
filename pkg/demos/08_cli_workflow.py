"""End-to-end command-line workflow.

Writes a configuration file, drives a few subcommands through the CLI entry
point, and lists the artifacts.  Every run is byte-reproducible under a
fixed configuration.
"""

import json
import tempfile
from pathlib import Path

from enzlab.cli import main

CONFIG = """
[domain]
outer = circle 0 0 1
dopant = circle 0 0 0.3
truncation_radius = 4
pml_thickness = 1
h = 0.15

[physics]
omega = 1
mu = 1,0
delta = 0.01,0
sources = ring 2.3 2.7 1,0
radiation = pml

[run]
order = 2
rho_iters = 12
seed = 0
"""

with tempfile.TemporaryDirectory() as tmp:
    cfg = Path(tmp) / "run.cfg"
    cfg.write_text(CONFIG)
    out = Path(tmp) / "out"

    for cmd in (["aux", str(cfg), "--out", str(out)],
                ["oracle-check", str(cfg), "--out", str(out)],
                ["radius", str(cfg), "--out", str(out)],
                ["sweep-delta", str(cfg), "--out", str(out),
                 "--deltas", "0.1,0 0.01,0 0.001,0"]):
        code = main(cmd)
        print(f"enzlab {' '.join(cmd[:1])}: exit {code}")

    print("\nartifacts:")
    for p in sorted(out.iterdir()):
        print(f"  {p.name:24s} {p.stat().st_size:7d} bytes")

    print("\naux.csv:")
    print((out / "aux.csv").read_text().strip())
    print("\nradius.json:")
    print(json.dumps(json.loads((out / "radius.json").read_text()), indent=2))
