"""Command-line experiment runner.

Every subcommand reads one configuration file, writes UTF-8 CSV artifacts
(with header rows) plus a JSON run manifest into the output directory, and
exits with a distinct nonzero code per error class.  Identical inputs produce
byte-identical CSVs; timing information lives only in the manifest.  The
environment variable ``ENZ_THREADS`` caps the worker count of sweep loops.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import math
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .errors import EnzLabError, ValidationError
from .auxiliary import rellich_residual, solve_auxiliary_set
from .config import parse_config
from .correctors import CorrectorEngine
from .direct import compare_fields, solve_transmission
from .fem import ScalarField
from .fields import compute_poynting, ideal_fluid_residuals, poynting_limit
from .geometry import Circle, Region, build_mesh, region_measures
from .oracle import RadialLayers, axisym_solution
from .resonance import gamma_sweep
from .auxiliary import PhysicsConfig

_FMT = "{:.12e}"


def _fmt(x) -> str:
    return _FMT.format(float(x))


def _workers() -> int:
    try:
        return max(1, int(os.environ.get("ENZ_THREADS", "1")))
    except ValueError:
        return 1


def _write_csv(path: Path, header: list, rows: list) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(",".join(header) + "\n")
        for row in rows:
            f.write(",".join(_fmt(v) for v in row) + "\n")


def _write_field_csv(path: Path, field: ScalarField) -> None:
    mesh = field.mesh
    rows = [(int(n), mesh.nodes[n, 0], mesh.nodes[n, 1], v.real, v.imag)
            for n, v in zip(field.nodes, field.values)]
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write("node_index,x,y,re,im\n")
        for n, x, y, re, im in rows:
            f.write(f"{n},{_fmt(x)},{_fmt(y)},{_fmt(re)},{_fmt(im)}\n")


def _manifest(outdir: Path, name: str, spec, cfg, opts, timings: dict) -> None:
    data = {
        "subcommand": name,
        "version": __version__,
        "numpy": np.__version__,
        "domain": repr(spec),
        "physics": {
            "omega": cfg.omega, "mu": [cfg.mu.real, cfg.mu.imag],
            "delta": [complex(cfg.delta).real, complex(cfg.delta).imag],
            "k": [complex(cfg.k).real, complex(cfg.k).imag],
            "radiation": cfg.radiation.mode,
        },
        "run": dataclasses.asdict(opts),
        "timings_s": timings,
    }
    with open(outdir / "manifest.json", "w", encoding="utf-8") as f:
        json.dump(data, f, indent=2, default=str)


def _require_concentric(spec, cfg):
    outer, dopant = spec.outer, spec.dopant
    if not (isinstance(outer, Circle) and isinstance(dopant, Circle)
            and outer.center == (0.0, 0.0) and dopant.center == (0.0, 0.0)):
        raise ValidationError("oracle comparison requires concentric circles at the origin")
    k = complex(cfg.k)
    if abs(k.imag) > 0 or k.real <= 0:
        raise ValidationError("oracle comparison requires a real positive wavenumber")
    ring = [s for s in cfg.sources.disks if hasattr(s, "r1")]
    if len(cfg.sources.disks) != len(ring):
        raise ValidationError("oracle comparison requires ring sources only")
    return ring


def _oracle_reference(spec, cfg):
    ring = _require_concentric(spec, cfg)
    delta = complex(cfg.delta)
    if abs(delta.imag) > 0 or delta.real <= 0:
        raise ValidationError("oracle comparison requires real positive delta")
    kwargs = dict(a=spec.dopant.radius, b=spec.outer.radius,
                  c=spec.truncation_radius, eps_enz=delta.real)
    if ring:
        kwargs.update(source_r1=ring[0].r1, source_r2=ring[0].r2,
                      amplitude=ring[0].amplitude)
    return axisym_solution(RadialLayers(**kwargs), k=complex(cfg.k).real,
                           mu=complex(cfg.mu))


# ---------------------------------------------------------------------------
# subcommands


def run_aux(spec, cfg, opts, outdir: Path) -> None:
    t0 = time.perf_counter()
    mesh = build_mesh(spec, opts.h)
    aux = solve_auxiliary_set(mesh, cfg)
    rres = rellich_residual(mesh, cfg, aux.psi_e, aux.flux_psi_e)
    k, d = complex(cfg.k), complex(cfg.delta)
    _write_csv(outdir / "aux.csv",
               ["k_re", "k_im", "delta_re", "delta_im", "beta_re", "beta_im",
                "cstar_re", "cstar_im", "mueff_re", "mueff_im", "rellich_residual"],
               [(k.real, k.imag, d.real, d.imag, aux.beta.real, aux.beta.imag,
                 aux.c_star.real, aux.c_star.imag, aux.mu_eff.real,
                 aux.mu_eff.imag, rres)])
    _manifest(outdir, "aux", spec, cfg, opts, {"total": time.perf_counter() - t0})


def run_expand(spec, cfg, opts, outdir: Path, order=None, delta=None) -> None:
    t0 = time.perf_counter()
    order = opts.order if order is None else order
    delta = complex(cfg.delta) if delta is None else delta
    mesh = build_mesh(spec, opts.h)
    engine = CorrectorEngine(mesh, cfg)
    hier = engine.build_hierarchy(max(order, 1))
    rho = engine.estimate_radius(iters=opts.rho_iters, seed=opts.seed)
    field = engine.assemble_expansion(hier, delta, order=order)
    _write_field_csv(outdir / "expand_field.csv", field)
    summary = {
        "c_star": [hier.c_star.real, hier.c_star.imag],
        "e": [[v.real, v.imag] for v in hier.e],
        "rho_hat": rho,
        "c_delta": [hier.c_delta(delta, order - 1).real,
                    hier.c_delta(delta, order - 1).imag],
    }
    with open(outdir / "expand_summary.json", "w", encoding="utf-8") as f:
        json.dump(summary, f, indent=2)
    _manifest(outdir, "expand", spec, cfg, opts, {"total": time.perf_counter() - t0})


def run_direct(spec, cfg, opts, outdir: Path) -> None:
    t0 = time.perf_counter()
    if complex(cfg.delta) == 0:
        raise ValidationError("delta must be nonzero for a direct run")
    mesh = build_mesh(spec, opts.h)
    u = solve_transmission(mesh, cfg)
    _write_field_csv(outdir / "direct_field.csv", u)
    _manifest(outdir, "direct", spec, cfg, opts, {"total": time.perf_counter() - t0})


def run_sweep_delta(spec, cfg, opts, outdir: Path, deltas=None, order=None,
                    window=None) -> None:
    t0 = time.perf_counter()
    deltas = tuple(deltas if deltas is not None else opts.deltas)
    if not deltas:
        raise ValidationError("sweep needs a nonempty deltas list")
    order = opts.order if order is None else order
    window = opts.window if window is None else window
    mesh = build_mesh(spec, opts.h)
    engine = CorrectorEngine(mesh, cfg)
    hier = engine.build_hierarchy(max(order, 2))

    def one(delta):
        cfg_d = dataclasses.replace(cfg, delta=complex(delta))
        u = solve_transmission(mesh, cfg_d)
        errs = []
        for j in (0, 1, 2):
            v = engine.assemble_expansion(hier, complex(delta), order=j)
            errs.append(compare_fields(u, v, window=window).h1_error)
        d = complex(delta)
        return (abs(d), math.atan2(d.imag, d.real), errs[0], errs[1], errs[2])

    with ThreadPoolExecutor(max_workers=_workers()) as pool:
        rows = list(pool.map(one, deltas))
    _write_csv(outdir / "sweep_delta.csv",
               ["delta_abs", "delta_arg", "h1_err_J0", "h1_err_J1", "h1_err_J2"],
               rows)
    _manifest(outdir, "sweep-delta", spec, cfg, opts,
              {"total": time.perf_counter() - t0})


def run_oracle_check(spec, cfg, opts, outdir: Path) -> None:
    t0 = time.perf_counter()
    sol = _oracle_reference(spec, cfg)
    radii = np.linspace(1e-3, spec.truncation_radius - spec.pml_thickness, 400)
    vals = sol(radii)
    _write_csv(outdir / "oracle_profile.csv", ["r", "u_re", "u_im"],
               [(r, v.real, v.imag) for r, v in zip(radii, vals)])
    s = sol.scalars
    summary = {key: [s[key].real, s[key].imag] if isinstance(s[key], complex)
               else s[key] for key in ("beta", "c_star", "mu_eff", "flux_psi_e",
                                       "flux_psi_d", "int_psi_d", "flux_s")}
    with open(outdir / "oracle_summary.json", "w", encoding="utf-8") as f:
        json.dump(summary, f, indent=2, default=lambda z: [z.real, z.imag])
    _manifest(outdir, "oracle-check", spec, cfg, opts,
              {"total": time.perf_counter() - t0})


def run_radius(spec, cfg, opts, outdir: Path) -> None:
    t0 = time.perf_counter()
    mesh = build_mesh(spec, opts.h)
    engine = CorrectorEngine(mesh, cfg)
    rho = engine.estimate_radius(iters=opts.rho_iters, seed=opts.seed)
    with open(outdir / "radius.json", "w", encoding="utf-8") as f:
        json.dump({"rho_hat": rho, "convergence_radius": 1.0 / rho,
                   "iters": opts.rho_iters, "seed": opts.seed}, f, indent=2)
    _manifest(outdir, "radius", spec, cfg, opts, {"total": time.perf_counter() - t0})


def run_resonance_sweep(spec, cfg, opts, outdir: Path) -> None:
    t0 = time.perf_counter()
    mesh = build_mesh(spec, opts.h)
    if opts.resonance_target is not None:
        target = opts.resonance_target
    else:
        if not isinstance(spec.dopant, Circle):
            raise ValidationError("resonance_target is required for non-circular dopants")
        from .oracle import j0_zero
        target = (j0_zero(1) / spec.dopant.radius) ** 2
    gammas = opts.gammas or tuple(10.0 ** (-x) for x in np.arange(1.0, 3.1, 0.25))
    study = gamma_sweep(mesh, cfg, target, gammas)
    rows = [(r.gamma.real, r.gamma.imag, abs(r.c_star), abs(r.mu_eff), r.phi_gap)
            for r in study.records]
    _write_csv(outdir / "resonance_sweep.csv",
               ["gamma_re", "gamma_im", "cstar_abs", "mueff_abs", "phi_gap_h1"],
               rows)
    summary = {
        "lambda_star": study.lambda_star,
        "classification": study.classification,
        "c_bar": [study.c_bar.real, study.c_bar.imag],
        "c_bar_extrapolated": [study.c_bar_extrapolated.real,
                               study.c_bar_extrapolated.imag],
        "cluster_size": len(study.cluster),
    }
    with open(outdir / "resonance_summary.json", "w", encoding="utf-8") as f:
        json.dump(summary, f, indent=2)
    _manifest(outdir, "resonance-sweep", spec, cfg, opts,
              {"total": time.perf_counter() - t0})


def run_poynting(spec, cfg, opts, outdir: Path) -> None:
    t0 = time.perf_counter()
    if complex(cfg.delta) == 0:
        raise ValidationError("delta must be nonzero for a Poynting run")
    mesh = build_mesh(spec, opts.h)
    u = solve_transmission(mesh, cfg)
    s = compute_poynting(u, cfg)
    cen = mesh.tri_centroids[s.tri_index]
    rows = [(cen[i, 0], cen[i, 1], s.vectors[i, 0].real, s.vectors[i, 0].imag,
             s.vectors[i, 1].real, s.vectors[i, 1].imag, int(s.region[i]))
            for i in range(len(s.tri_index))]
    _write_csv(outdir / "poynting.csv",
               ["tri_centroid_x", "tri_centroid_y", "S1_re", "S1_im",
                "S2_re", "S2_im", "region"], rows)
    _manifest(outdir, "poynting", spec, cfg, opts,
              {"total": time.perf_counter() - t0})


def run_convergence_table(spec, cfg, opts, outdir: Path) -> None:
    t0 = time.perf_counter()
    sol = _oracle_reference(spec, cfg)
    ref = sol.scalars
    hs = [opts.h * 2.0, opts.h, opts.h / 2.0]
    rows = []
    for h in hs:
        mesh = build_mesh(spec, h)
        aux = solve_auxiliary_set(mesh, cfg)
        rows.append((h,
                     abs(aux.beta - ref["beta"]) / abs(ref["beta"]),
                     abs(aux.c_star - ref["c_star"]) / max(abs(ref["c_star"]), 1e-300),
                     abs(aux.mu_eff - ref["mu_eff"]) / abs(ref["mu_eff"])))
    out = []
    for i, row in enumerate(rows):
        rates = [math.log2(rows[i - 1][j] / row[j]) if i > 0 and row[j] > 0 else float("nan")
                 for j in (1, 2, 3)]
        out.append(row + tuple(rates))
    _write_csv(outdir / "convergence_table.csv",
               ["h", "beta_rel_err", "cstar_rel_err", "mueff_rel_err",
                "beta_rate", "cstar_rate", "mueff_rate"], out)
    _manifest(outdir, "convergence-table", spec, cfg, opts,
              {"total": time.perf_counter() - t0})


_SUBCOMMANDS = {
    "aux": run_aux,
    "expand": run_expand,
    "direct": run_direct,
    "sweep-delta": run_sweep_delta,
    "oracle-check": run_oracle_check,
    "radius": run_radius,
    "resonance-sweep": run_resonance_sweep,
    "poynting": run_poynting,
    "convergence-table": run_convergence_table,
}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="enzlab",
        description="Doped ENZ scatterer laboratory: direct solves, "
                    "expansions, oracles, and sweeps.")
    sub = parser.add_subparsers(dest="subcommand", required=True)
    for name in _SUBCOMMANDS:
        p = sub.add_parser(name)
        p.add_argument("config", help="configuration file")
        p.add_argument("--out", help="output directory (overrides [run] out)")
        if name == "expand":
            p.add_argument("--order", type=int, default=None)
            p.add_argument("--delta", type=str, default=None,
                           help="complex value as RE,IM")
        if name == "sweep-delta":
            p.add_argument("--deltas", type=str, default=None,
                           help="space-separated list of RE,IM values")
            p.add_argument("--order", type=int, default=None)
            p.add_argument("--window", type=str, default=None,
                           help="disk:cx,cy,r")
    return parser


def _parse_cli_complex(text: str) -> complex:
    parts = text.split(",")
    if len(parts) == 1:
        return complex(float(parts[0]), 0.0)
    return complex(float(parts[0]), float(parts[1]))


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        spec, cfg, opts = parse_config(args.config)
        outdir = Path(args.out or opts.out)
        outdir.mkdir(parents=True, exist_ok=True)
        kwargs = {}
        if args.subcommand == "expand":
            if args.order is not None:
                kwargs["order"] = args.order
            if args.delta is not None:
                kwargs["delta"] = _parse_cli_complex(args.delta)
        if args.subcommand == "sweep-delta":
            if args.deltas is not None:
                kwargs["deltas"] = tuple(_parse_cli_complex(v)
                                         for v in args.deltas.split())
            if args.order is not None:
                kwargs["order"] = args.order
            if args.window is not None:
                body = args.window.split(":", 1)[-1]
                cx, cy, r = (float(v) for v in body.split(","))
                kwargs["window"] = (cx, cy, r)
        _SUBCOMMANDS[args.subcommand](spec, cfg, opts, outdir, **kwargs)
    except EnzLabError as exc:
        print(f"error [{exc.name}]: {exc}", file=sys.stderr)
        return exc.exit_code
    return 0


if __name__ == "__main__":
    sys.exit(main())
