"""Command-line front end.

Subcommands: ``teig run <config>``, ``teig check <config>`` (dry-run
validation), ``teig mesh-info <meshfile>``, ``teig refine <meshfile>
<levels>``.  Exit codes: 0 success, 2 configuration error, 3 solver
failure.

Config files are line-oriented ``key = value`` under the sections
[domain], [coefficient], [discretization], [solver], [output]; unknown
sections or keys are hard errors so a typo cannot silently change an
experiment.
"""

import argparse
import json
import os
import sys
import time

import numpy as np

from . import mesh as meshmod, multilevel
from .coefficient import CoefficientParseError, parse_coefficient
from .eigensolver import ConvergenceError, ShiftError, verify_conjugate_closure
from .estimator import TransmissionEigenSolver

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_SOLVER = 3


class ConfigError(Exception):
    pass


_SCHEMA = {
    "domain": {"kind", "h0", "path", "vertices"},
    "coefficient": {"n", "n_s", "n_b", "case"},
    "discretization": {"m", "sigma_degree", "levels"},
    "solver": {"k", "shift", "tol", "seed", "mode", "max_restart"},
    "output": {"dir"},
}


def parse_config_text(text, origin="<config>"):
    """Parse the sectioned key=value format into nested dicts of strings."""
    sections = {}
    current = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("[") and line.endswith("]"):
            name = line[1:-1].strip()
            if name not in _SCHEMA:
                raise ConfigError("%s:%d: unknown section [%s]"
                                  % (origin, lineno, name))
            current = name
            sections.setdefault(name, {})
            continue
        if "=" not in line:
            raise ConfigError("%s:%d: expected 'key = value'" % (origin, lineno))
        if current is None:
            raise ConfigError("%s:%d: key outside any section" % (origin, lineno))
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in _SCHEMA[current]:
            raise ConfigError("%s:%d: unknown key %r in [%s]"
                              % (origin, lineno, key, current))
        if key in sections[current]:
            raise ConfigError("%s:%d: duplicate key %r" % (origin, lineno, key))
        sections[current][key] = value
    return sections


def _get(sections, section, key, default=None):
    return sections.get(section, {}).get(key, default)


def _parse_vertices(text):
    pts = []
    for chunk in text.split(";"):
        chunk = chunk.strip()
        if not chunk:
            continue
        parts = chunk.split(",")
        if len(parts) != 2:
            raise ConfigError("vertices: expected 'x,y' pairs separated by ';'")
        pts.append((float(parts[0]), float(parts[1])))
    return pts


class RunConfig:
    """Validated run configuration."""

    def __init__(self, sections, base_dir="."):
        try:
            self.m = int(_get(sections, "discretization", "m", "2"))
        except ValueError:
            raise ConfigError("discretization.m must be an integer")
        if self.m not in (2, 3):
            raise ConfigError("discretization.m must be 2 or 3")
        sd = _get(sections, "discretization", "sigma_degree")
        self.sigma_degree = int(sd) if sd is not None else None
        self.levels = int(_get(sections, "discretization", "levels", "1"))
        if self.levels < 1:
            raise ConfigError("levels must be >= 1")

        self.kind = _get(sections, "domain", "kind", "unit_square")
        default_h0 = 1.0 / 8.0 if self.m == 2 else 1.0 / 4.0
        self.h0 = float(_get(sections, "domain", "h0", repr(default_h0)))
        self.mesh_path = _get(sections, "domain", "path")
        vertices = _get(sections, "domain", "vertices")
        self.vertices = _parse_vertices(vertices) if vertices else None
        if self.kind == "file" and not self.mesh_path:
            raise ConfigError("domain.kind=file requires domain.path")
        if self.kind == "polygon" and not self.vertices:
            raise ConfigError("domain.kind=polygon requires domain.vertices")
        if self.mesh_path and not os.path.isabs(self.mesh_path):
            self.mesh_path = os.path.join(base_dir, self.mesh_path)

        self.n_expression = _get(sections, "coefficient", "n", "16")
        try:
            coeff = parse_coefficient(self.n_expression)
        except CoefficientParseError as exc:
            raise ConfigError("coefficient.n: %s" % exc)
        ns = _get(sections, "coefficient", "n_s")
        nb = _get(sections, "coefficient", "n_b")
        if ns is None and nb is None and coeff.is_constant:
            ns = nb = str(coeff.ast[1])
        if ns is None or nb is None:
            raise ConfigError("declare coefficient.n_s and n_b for "
                              "non-constant n")
        self.n_s, self.n_b = float(ns), float(nb)
        if not (0 < self.n_s <= self.n_b):
            raise ConfigError("bounds must satisfy 0 < n_s <= n_b")
        self.case = _get(sections, "coefficient", "case", "auto")
        if self.case not in ("auto", "I", "II"):
            raise ConfigError("case must be auto, I or II")
        if self.case == "I" and self.n_s <= 1:
            raise ConfigError("Case I requires n_s > 1")
        if self.case == "II" and self.n_b >= 1:
            raise ConfigError("Case II requires n_b < 1")
        if self.case == "auto" and not (self.n_s > 1 or self.n_b < 1):
            raise ConfigError("bounds straddle 1; no case applies")

        self.k = int(_get(sections, "solver", "k", "6"))
        self.shift = float(_get(sections, "solver", "shift", "0.5"))
        self.tol = float(_get(sections, "solver", "tol", "1e-9"))
        self.seed = int(_get(sections, "solver", "seed", "0"))
        self.max_restart = int(_get(sections, "solver", "max_restart", "300"))
        self.mode = _get(sections, "solver", "mode", "single")
        if self.mode not in ("single", "multi", "both"):
            raise ConfigError("mode must be single, multi or both")
        if self.k < 1:
            raise ConfigError("k must be >= 1")

        self.output_dir = _get(sections, "output", "dir", "teig-out")
        if not os.path.isabs(self.output_dir):
            self.output_dir = os.path.join(base_dir, self.output_dir)

    def build_mesh(self):
        if self.kind == "file":
            return meshmod.load_mesh(self.mesh_path)
        return meshmod.build_builtin_domain(self.kind, self.h0,
                                            polygon_vertices=self.vertices)

    def echo(self):
        return {
            "domain": {"kind": self.kind, "h0": self.h0,
                       "path": self.mesh_path,
                       "vertices": self.vertices},
            "coefficient": {"n": self.n_expression, "n_s": self.n_s,
                            "n_b": self.n_b, "case": self.case},
            "discretization": {"m": self.m, "sigma_degree": self.sigma_degree,
                               "levels": self.levels},
            "solver": {"k": self.k, "shift": self.shift, "tol": self.tol,
                       "seed": self.seed, "mode": self.mode,
                       "max_restart": self.max_restart},
            "output": {"dir": self.output_dir},
        }


def load_config(path):
    with open(path) as f:
        text = f.read()
    sections = parse_config_text(text, origin=path)
    return RunConfig(sections, base_dir=os.path.dirname(os.path.abspath(path)))


def _fmt(x):
    return "%.12g" % x


def write_eigenvalue_csv(path, rows):
    with open(path, "w") as f:
        f.write("mode,level,index,re_lambda,im_lambda,residual\n")
        for mode, level, index, lam, res in rows:
            f.write("%s,%d,%d,%s,%s,%s\n"
                    % (mode, level, index, _fmt(lam.real), _fmt(lam.imag),
                       _fmt(res)))


def write_orders_csv(path, report):
    with open(path, "w") as f:
        f.write("track,quantity,step,order\n")
        for j in range(len(report.tracks)):
            for name, orders in (("lambda", report.lambda_orders[j]),
                                 ("u_h1", report.u_orders[j]),
                                 ("phi_h1", report.phi_orders[j])):
                for i, order in enumerate(orders, start=1):
                    f.write("%d,%s,%d,%s\n"
                            % (j, name, i,
                               "undefined" if order is None else _fmt(order)))


def write_plotdata(dirpath, report, h_sizes):
    os.makedirs(dirpath, exist_ok=True)
    for j, lams in enumerate(report.tracks):
        ref = lams[-1]
        with open(os.path.join(dirpath, "eigenvalue_%02d.dat" % j), "w") as f:
            f.write("# h abs(lambda_i - lambda_finest)\n")
            for i in range(len(lams) - 1):
                f.write("%s %s\n" % (_fmt(h_sizes[i]), _fmt(abs(lams[i] - ref))))


def print_table(pairs, out=None):
    """Human-readable eigenvalue table (same content as the CSV)."""
    out = out if out is not None else sys.stdout
    out.write("%-4s %-28s %-12s\n" % ("idx", "lambda", "residual"))
    for i, p in enumerate(pairs, start=1):
        lam = complex(p.value)
        if lam.imag == 0:
            text = _fmt(lam.real)
        else:
            text = "%s %s %si" % (_fmt(lam.real),
                                  "+" if lam.imag >= 0 else "-",
                                  _fmt(abs(lam.imag)))
        out.write("%-4d %-28s %-12s\n" % (i, text, _fmt(p.residual)))


def _solver_for(config, method):
    return TransmissionEigenSolver(
        n=config.n_expression, n_s=config.n_s, n_b=config.n_b,
        case=config.case, degree=config.m, sigma_degree=config.sigma_degree,
        levels=config.levels, k=config.k, method=method,
        shift=config.shift, tol=config.tol, seed=config.seed)


def run(config):
    """Execute a validated RunConfig; returns the exit code."""
    os.makedirs(config.output_dir, exist_ok=True)
    started = time.time()
    warnings = []
    rows = []
    meta = {"config": config.echo(), "warnings": warnings, "timings": {}}
    status = EXIT_OK

    mesh0 = config.build_mesh()
    modes = ["single", "multi"] if config.mode == "both" else [config.mode]
    report = None
    results = {}
    try:
        for method in modes:
            t0 = time.time()
            solver = _solver_for(config, method).fit(mesh0)
            meta["timings"][method] = time.time() - t0
            results[method] = solver
            h = solver.hierarchy_
            meta["dof_counts"] = [s.total_dim for s in h.spaces]
            meta["mesh_sizes"] = [meshmod.mesh_size(m) for m in h.meshes]
            if solver.conjugate_violations_:
                warnings.append("%s: conjugate closure violated: %s"
                                % (method, solver.conjugate_violations_))

            if method == "multi" and solver.run_ is not None:
                for res in solver.run_.levels:
                    for idx, p in enumerate(res.pairs, start=1):
                        rows.append((method, res.level, idx, p.value,
                                     p.residual))
                warnings.extend(solver.run_.warnings)
                if config.levels >= 3:
                    per_level = [res.pairs for res in solver.run_.levels]
                    report = multilevel.build_convergence_report(
                        h, per_level, k=config.k)
            else:
                for idx, p in enumerate(solver.eigenpairs_, start=1):
                    rows.append((method, config.levels - 1, idx, p.value,
                                 p.residual))

        if config.mode == "both":
            a = results["single"].eigenvalues_
            b = results["multi"].eigenvalues_
            n = min(len(a), len(b))
            rel = np.abs(a[:n] - b[:n]) / np.maximum(np.abs(a[:n]), 1e-300)
            meta["single_vs_multi_max_rel_diff"] = float(rel.max())
    except (ShiftError, ConvergenceError) as exc:
        warnings.append("solver failure: %s" % exc)
        status = EXIT_SOLVER

    write_eigenvalue_csv(os.path.join(config.output_dir, "eigenvalues.csv"),
                         rows)
    if report is not None:
        write_orders_csv(os.path.join(config.output_dir, "orders.csv"), report)
        write_plotdata(os.path.join(config.output_dir, "plotdata"), report,
                       meta.get("mesh_sizes", []))
        meta["soft_checks"] = {
            "real_eigenvalue_monotone": report.monotone_flags,
            "complex_pair_persistence": report.complex_persistence,
        }
    meta["timings"]["total"] = time.time() - started
    meta["status"] = status
    with open(os.path.join(config.output_dir, "run.json"), "w") as f:
        json.dump(meta, f, indent=2, default=str)

    final = results.get("multi") or results.get("single")
    if final is not None and hasattr(final, "eigenpairs_"):
        print_table(final.eigenpairs_)
    return status


def main(argv=None):
    parser = argparse.ArgumentParser(prog="teig",
                                     description="Transmission eigenvalue "
                                                 "solver")
    sub = parser.add_subparsers(dest="command", required=True)
    p_run = sub.add_parser("run", help="run an experiment from a config file")
    p_run.add_argument("config")
    p_check = sub.add_parser("check", help="validate a config without solving")
    p_check.add_argument("config")
    p_info = sub.add_parser("mesh-info", help="report mesh statistics")
    p_info.add_argument("meshfile")
    p_refine = sub.add_parser("refine", help="uniformly refine a mesh file")
    p_refine.add_argument("meshfile")
    p_refine.add_argument("levels", type=int)

    args = parser.parse_args(argv)
    try:
        if args.command in ("run", "check"):
            config = load_config(args.config)
            if args.command == "check":
                print("config ok")
                return EXIT_OK
            return run(config)
        if args.command == "mesh-info":
            m = meshmod.load_mesh(args.meshfile)
            problems = meshmod.validate(m)
            print("vertices:  %d" % m.num_vertices)
            print("triangles: %d" % m.num_triangles)
            print("boundary:  %d edges" % m.boundary_edges.shape[0])
            print("h:         %.6g" % meshmod.mesh_size(m))
            if problems:
                for p in problems:
                    print("invalid: %s" % p)
                return EXIT_CONFIG
            return EXIT_OK
        if args.command == "refine":
            m = meshmod.load_mesh(args.meshfile)
            for _ in range(args.levels):
                m = meshmod.refine_red(m)
            out = args.meshfile + ".refined"
            meshmod.save_mesh(m, out)
            print("wrote %s (h = %.6g)" % (out, meshmod.mesh_size(m)))
            return EXIT_OK
    except (ConfigError, meshmod.MeshError, ValueError, OSError) as exc:
        print("error: %s" % exc, file=sys.stderr)
        return EXIT_CONFIG
    except (ShiftError, ConvergenceError) as exc:
        print("solver error: %s" % exc, file=sys.stderr)
        return EXIT_SOLVER
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
