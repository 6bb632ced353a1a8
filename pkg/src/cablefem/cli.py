"""Command-line entry point: run a cable simulation from a JSON config.

One process runs one configuration end to end (mesh -> spaces ->
assembly -> solve -> post-processing) and writes every artifact into the
output directory.  Everything physical lives in the config; the only
flags are ``--dry-run``, ``--output`` and ``--verbose``.  Reruns with an
identical config produce byte-identical artifacts except for the
wall-time fields of the solve report.

Exit codes: 0 success, 10 config error, 20 mesh error, 30 singular
system, 40 solver tolerance not reached.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import sys
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from .assembly import Excitation, assemble
from .errors import (CableFemError, ConfigError, MeshError,
                     SingularSystemError, SolverToleranceError)
from .helicoid import NU0, MaterialSpec, TwistMap
from .mesh import DiskMeshSpec, generate_disk_mesh, parse_msh
from .post import (Solution, compute_losses, export_loss_csv,
                   export_loss_json, export_probe_csv, export_vtk,
                   line_probe)
from .solve import DEFAULT_TOL, solve
from .spaces import build_dof_map, build_spanning_tree


def _require_keys(obj, allowed, required, path):
    if not isinstance(obj, dict):
        raise ConfigError(f"{path}: expected an object")
    unknown = set(obj) - set(allowed)
    if unknown:
        raise ConfigError(f"{path}: unknown keys {sorted(unknown)}")
    missing = set(required) - set(obj)
    if missing:
        raise ConfigError(f"{path}: missing keys {sorted(missing)}")


def _number(obj, path, minimum=None, strict_min=False):
    if not isinstance(obj, (int, float)) or isinstance(obj, bool):
        raise ConfigError(f"{path}: expected a number")
    v = float(obj)
    if not np.isfinite(v):
        raise ConfigError(f"{path}: must be finite")
    if minimum is not None:
        if strict_min and v <= minimum:
            raise ConfigError(f"{path}: must be > {minimum}")
        if not strict_min and v < minimum:
            raise ConfigError(f"{path}: must be >= {minimum}")
    return v


class RunConfig:
    """Validated run configuration (see README for the schema)."""

    def __init__(self, raw):
        _require_keys(raw, ["mesh", "twist", "materials", "excitation",
                            "gauge", "solver", "probes", "output"],
                      ["mesh", "twist", "materials", "excitation"], "config")
        self.raw = raw

        mesh_cfg = raw["mesh"]
        _require_keys(mesh_cfg, ["builtin", "msh"], [], "mesh")
        if ("builtin" in mesh_cfg) == ("msh" in mesh_cfg):
            raise ConfigError("mesh: exactly one of 'builtin' or 'msh' required")
        if "builtin" in mesh_cfg:
            b = mesh_cfg["builtin"]
            _require_keys(b, ["shield_radius", "strands", "h"],
                          ["shield_radius", "strands", "h"], "mesh.builtin")
            strands = b["strands"]
            if not isinstance(strands, list) or not strands:
                raise ConfigError("mesh.builtin.strands: non-empty list required")
            parsed = []
            for k, s in enumerate(strands):
                if not isinstance(s, list) or len(s) != 3:
                    raise ConfigError(
                        f"mesh.builtin.strands[{k}]: expected [center_u, center_v, radius]")
                parsed.append(tuple(_number(v, f"mesh.builtin.strands[{k}][{i}]")
                                    for i, v in enumerate(s)))
            self.mesh_source = "builtin"
            self.disk_spec_args = {
                "shield_radius": _number(b["shield_radius"], "mesh.builtin.shield_radius",
                                         0.0, strict_min=True),
                "strands": tuple(parsed),
                "h": _number(b["h"], "mesh.builtin.h", 0.0, strict_min=True),
            }
            self.n_conductors_hint = len(parsed)
        else:
            m = mesh_cfg["msh"]
            _require_keys(m, ["path", "tags"], ["path", "tags"], "mesh.msh")
            if not isinstance(m["path"], str):
                raise ConfigError("mesh.msh.path: expected a string")
            if not isinstance(m["tags"], dict) or not m["tags"]:
                raise ConfigError("mesh.msh.tags: non-empty object required")
            self.mesh_source = "msh"
            self.msh_path = m["path"]
            try:
                self.msh_tags = {int(k): v for k, v in m["tags"].items()}
            except ValueError:
                raise ConfigError("mesh.msh.tags: keys must be integers")
            self.n_conductors_hint = None

        t = raw["twist"]
        _require_keys(t, ["alpha", "beta"], ["alpha", "beta"], "twist")
        self.alpha = _number(t["alpha"], "twist.alpha")
        self.beta = _number(t["beta"], "twist.beta", 0.0, strict_min=True)

        m = raw["materials"]
        _require_keys(m, ["conductor_sigma", "conductor_mu_r", "conductor_nu",
                          "insulation_mu_r", "insulation_nu"],
                      ["conductor_sigma"], "materials")
        if "conductor_mu_r" in m and "conductor_nu" in m:
            raise ConfigError("materials: give conductor_mu_r or conductor_nu, not both")
        if "insulation_mu_r" in m and "insulation_nu" in m:
            raise ConfigError("materials: give insulation_mu_r or insulation_nu, not both")
        sig = m["conductor_sigma"]
        if isinstance(sig, list):
            self.conductor_sigma = [
                _number(v, f"materials.conductor_sigma[{i}]", 0.0, strict_min=True)
                for i, v in enumerate(sig)]
        else:
            self.conductor_sigma = _number(sig, "materials.conductor_sigma",
                                           0.0, strict_min=True)
        if "conductor_nu" in m:
            self.conductor_nu = _number(m["conductor_nu"], "materials.conductor_nu",
                                        0.0, strict_min=True)
        else:
            mu_r = _number(m.get("conductor_mu_r", 1.0), "materials.conductor_mu_r",
                           0.0, strict_min=True)
            self.conductor_nu = NU0 / mu_r
        if "insulation_nu" in m:
            self.insulation_nu = _number(m["insulation_nu"], "materials.insulation_nu",
                                         0.0, strict_min=True)
        else:
            mu_r = _number(m.get("insulation_mu_r", 1.0), "materials.insulation_mu_r",
                           0.0, strict_min=True)
            self.insulation_nu = NU0 / mu_r

        e = raw["excitation"]
        _require_keys(e, ["frequency", "currents"], ["frequency", "currents"],
                      "excitation")
        self.frequency = _number(e["frequency"], "excitation.frequency", 0.0)
        cur = e["currents"]
        if not isinstance(cur, list) or not cur:
            raise ConfigError("excitation.currents: non-empty list required")
        parsed = []
        for i, c in enumerate(cur):
            if isinstance(c, list):
                if len(c) != 2:
                    raise ConfigError(
                        f"excitation.currents[{i}]: expected [re, im] or a number")
                parsed.append(complex(_number(c[0], f"excitation.currents[{i}][0]"),
                                      _number(c[1], f"excitation.currents[{i}][1]")))
            else:
                parsed.append(complex(_number(c, f"excitation.currents[{i}]")))
        self.currents = np.array(parsed, dtype=complex)

        g = raw.get("gauge", {})
        _require_keys(g, ["constrain_boundary_edges", "seed"], [], "gauge")
        self.constrain_boundary = bool(g.get("constrain_boundary_edges", True))
        seed = g.get("seed", 0)
        if not isinstance(seed, int) or isinstance(seed, bool):
            raise ConfigError("gauge.seed: expected an integer")
        self.gauge_seed = seed

        s = raw.get("solver", {})
        _require_keys(s, ["tol", "method"], [], "solver")
        self.solver_tol = _number(s.get("tol", DEFAULT_TOL), "solver.tol",
                                  0.0, strict_min=True)
        if self.solver_tol > 1e-3:
            raise ConfigError("solver.tol: must be <= 1e-3")
        self.solver_method = s.get("method", "direct")
        if self.solver_method not in ("direct", "iterative"):
            raise ConfigError("solver.method: 'direct' or 'iterative'")

        self.probes = []
        for i, p in enumerate(raw.get("probes", [])):
            _require_keys(p, ["name", "start", "end", "samples"],
                          ["name", "start", "end", "samples"], f"probes[{i}]")
            if not isinstance(p["name"], str) or not p["name"].isidentifier():
                raise ConfigError(f"probes[{i}].name: expected an identifier-like name")
            for key in ("start", "end"):
                pt = p[key]
                if not isinstance(pt, list) or len(pt) not in (2, 3):
                    raise ConfigError(f"probes[{i}].{key}: expected [x, y] or [x, y, z]")
            n = p["samples"]
            if not isinstance(n, int) or isinstance(n, bool) or n < 2:
                raise ConfigError(f"probes[{i}].samples: integer >= 2 required")
            self.probes.append({
                "name": p["name"],
                "start": [_number(v, f"probes[{i}].start") for v in p["start"]],
                "end": [_number(v, f"probes[{i}].end") for v in p["end"]],
                "samples": n,
            })

        o = raw.get("output", {})
        _require_keys(o, ["directory", "vtk"], [], "output")
        self.output_dir = o.get("directory", "out")
        if not isinstance(self.output_dir, str):
            raise ConfigError("output.directory: expected a string")
        self.write_vtk = bool(o.get("vtk", False))

        if len(set(p["name"] for p in self.probes)) != len(self.probes):
            raise ConfigError("probes: names must be unique")
        if (self.n_conductors_hint is not None
                and len(self.currents) != self.n_conductors_hint):
            raise ConfigError(
                f"excitation.currents has {len(self.currents)} entries but the "
                f"builtin mesh defines {self.n_conductors_hint} strands")

    @classmethod
    def from_file(cls, path):
        try:
            with open(path, "r", encoding="utf-8") as f:
                raw = json.load(f)
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}")
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}")
        return cls(raw)

    def config_hash(self):
        canon = json.dumps(self.raw, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canon.encode()).hexdigest()


def _json_dump(obj, path):
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        json.dump(obj, f, indent=2, sort_keys=True)
        f.write("\n")


def _build_mesh(cfg):
    if cfg.mesh_source == "builtin":
        return generate_disk_mesh(DiskMeshSpec(**cfg.disk_spec_args))
    return parse_msh(cfg.msh_path, cfg.msh_tags)


def run(cfg, output_dir=None, dry_run=False, verbose=False):
    """Execute a validated configuration; returns the exit code."""
    out = Path(output_dir if output_dir is not None else cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)

    def log(msg):
        if verbose:
            print(msg, file=sys.stderr)

    twist = TwistMap(alpha=cfg.alpha, beta=cfg.beta)
    log(f"twist rate tau = {twist.tau:.6g} rad/m")

    mesh = _build_mesh(cfg)
    log(f"mesh: {mesh.n_nodes} nodes, {mesh.n_triangles} triangles, "
        f"{mesh.n_conductors} conductors")
    if len(cfg.currents) != mesh.n_conductors:
        raise ConfigError(
            f"excitation.currents has {len(cfg.currents)} entries but the mesh "
            f"defines {mesh.n_conductors} conductors")

    sigma = cfg.conductor_sigma
    if not isinstance(sigma, list):
        sigma = [sigma] * mesh.n_conductors
    elif len(sigma) != mesh.n_conductors:
        raise ConfigError(
            f"materials.conductor_sigma has {len(sigma)} entries but the mesh "
            f"defines {mesh.n_conductors} conductors")
    mat = MaterialSpec(conductor_sigma=tuple(sigma),
                       conductor_nu=(cfg.conductor_nu,) * mesh.n_conductors,
                       insulation_nu=cfg.insulation_nu)
    exc = Excitation(currents=cfg.currents, frequency=cfg.frequency)

    static = exc.omega == 0.0
    tree = build_spanning_tree(mesh, seed=cfg.gauge_seed,
                               constrain_boundary=cfg.constrain_boundary,
                               span_conductors=static)
    dofmap = build_dof_map(mesh, tree)

    mesh_summary = {
        "nodes": mesh.n_nodes,
        "triangles": mesh.n_triangles,
        "edges": mesh.n_edges,
        "conductors": mesh.n_conductors,
        "total_area_m2": float(mesh.areas().sum()),
        "region_areas_m2": {str(i): mesh.region_area(i)
                            for i in range(mesh.n_conductors + 1)},
        "euler_characteristic": mesh.n_nodes - mesh.n_edges + mesh.n_triangles,
    }
    _json_dump(mesh_summary, out / "mesh_summary.json")
    _json_dump(dofmap.counts(), out / "dof_summary.json")

    manifest = {
        "config_sha256": cfg.config_hash(),
        "cablefem_version": __version__,
        "numpy_version": np.__version__,
        "scipy_version": scipy.__version__,
        "twist": {"alpha_rad": cfg.alpha, "beta_m": cfg.beta,
                  "tau_rad_per_m": twist.tau},
        "mesh_source": cfg.mesh_source,
        "geometry_assumptions": (cfg.disk_spec_args["strands"]
                                 if cfg.mesh_source == "builtin"
                                 else cfg.msh_path),
        "materials": {"conductor_sigma_S_per_m": sigma,
                      "conductor_nu_m_per_H": cfg.conductor_nu,
                      "insulation_nu_m_per_H": cfg.insulation_nu},
        "excitation": {"frequency_Hz": cfg.frequency,
                       "currents_A_re": [c.real for c in cfg.currents],
                       "currents_A_im": [c.imag for c in cfg.currents]},
        "gauge": {"constrain_boundary_edges": cfg.constrain_boundary,
                  "seed": cfg.gauge_seed, "static": static},
        "solver": {"tol": cfg.solver_tol, "method": cfg.solver_method},
        "dof_total": dofmap.size,
    }
    _json_dump(manifest, out / "manifest.json")

    if dry_run:
        print(json.dumps(dofmap.counts(), indent=2, sort_keys=True))
        return 0

    system = assemble(mesh, dofmap, twist, mat, exc)
    log(f"assembled {system.size} x {system.size}, nnz = {system.matrix.nnz}")
    x, report = solve(system, tol=cfg.solver_tol, method=cfg.solver_method)
    log(f"solved: residual {report.residual:.3e} in {report.wall_seconds:.2f} s")
    _json_dump({
        "residual": report.residual,
        "tolerance": report.tolerance,
        "method": report.method,
        "size": report.size,
        "nnz": report.nnz,
        "iterations": report.iterations,
        "wall_seconds": report.wall_seconds,
    }, out / "solve_report.json")

    sol = Solution.from_system(system, x, mesh, twist, mat, exc)
    losses = compute_losses(sol)
    export_loss_json(losses, out / "loss_report.json")
    export_loss_csv(losses, out / "loss_report.csv")
    log(f"total loss {losses.total:.6e} W/m")

    for p in cfg.probes:
        probe = line_probe(sol, p["start"], p["end"], p["samples"])
        export_probe_csv(probe, out / f"probe_{p['name']}.csv")

    if cfg.write_vtk:
        export_vtk(sol, out / "fields.vtk")
    return 0


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="cablefem",
        description="2-D eddy-current solver for twisted power-cable "
                    "cross-sections")
    sub = parser.add_subparsers(dest="command", required=True)
    runp = sub.add_parser("run", help="execute a JSON run configuration")
    runp.add_argument("config", help="path to the run configuration (JSON)")
    runp.add_argument("--dry-run", action="store_true",
                      help="validate config and mesh, print the DOF summary, "
                           "skip assembly and solve")
    runp.add_argument("--output", default=None, metavar="DIR",
                      help="override the output directory")
    runp.add_argument("--verbose", action="store_true",
                      help="progress messages on stderr")
    args = parser.parse_args(argv)

    try:
        cfg = RunConfig.from_file(args.config)
        return run(cfg, output_dir=args.output, dry_run=args.dry_run,
                   verbose=args.verbose)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return ConfigError.exit_code
    except MeshError as exc:
        print(f"mesh error: {exc}", file=sys.stderr)
        return MeshError.exit_code
    except SingularSystemError as exc:
        print(f"singular system: {exc}", file=sys.stderr)
        return SingularSystemError.exit_code
    except SolverToleranceError as exc:
        print(f"solver tolerance: {exc}", file=sys.stderr)
        return SolverToleranceError.exit_code
    except CableFemError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
