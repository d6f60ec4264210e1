"""Batch command-line interface.

Subcommands map one-to-one onto the library modules; every run writes its
artifacts plus a manifest.json echoing the fully resolved configuration and
the package version.  Outputs are deterministic given (configuration, seed):
no timestamps are embedded, JSON keys are sorted, floats serialize with
Python's shortest round-trip repr, and CSV numbers carry 17 significant
digits.

Exit codes: 0 success, 1 validation error, 2 numeric failure,
3 non-convergence.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys

import numpy as np

from . import annulus as an
from . import bubbles as bb
from . import calibration as cal
from . import radial_core as rc
from . import sobolev as sb
from . import symmetry as sym
from ._version import __version__
from .errors import DomainError, NonConvergenceError, NumericError

COMMANDS = ("sobolev", "annulus", "curve", "calibrate", "thresholds",
            "orbit", "bubbles", "verify-all")
OUTPUT_DIR_ENV = "PLAPLAB_OUTPUT_DIR"
DEFAULT_OUTPUT_DIR = "plaplab-out"


class RunConfig:
    """Resolved invocation: command, parameter map, output dir, seed."""

    def __init__(self, command: str, parameters: dict, output_dir: str,
                 seed: int = 0):
        if command not in COMMANDS:
            raise DomainError(f"unknown command {command!r}; choose from "
                              + ", ".join(COMMANDS))
        if int(seed) != seed:
            raise DomainError(f"seed must be an integer, got {seed!r}")
        self.command = command
        self.parameters = dict(parameters)
        self.output_dir = str(output_dir)
        self.seed = int(seed)

    def to_json_dict(self) -> dict:
        return {
            "command": self.command,
            "parameters": self.parameters,
            "output_dir": self.output_dir,
            "seed": self.seed,
            "version": __version__,
        }


def _write_json(path: str, obj) -> None:
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _write_rows_csv(path: str, header: str, rows) -> None:
    with open(path, "w") as fh:
        fh.write(header + "\n")
        for row in rows:
            fh.write(",".join(f"{float(v):.17g}" for v in row) + "\n")


def _require(params: dict, names, command: str) -> None:
    missing = [n for n in names if params.get(n) is None]
    if missing:
        raise DomainError(
            f"{command}: missing required parameter(s): " + ", ".join(missing)
        )


def _load_json_file(path: str, what: str) -> dict:
    try:
        with open(path) as fh:
            payload = json.load(fh)
    except ValueError as exc:
        raise DomainError(f"{what}: invalid JSON in {path}: {exc}") from exc
    if not isinstance(payload, dict):
        raise DomainError(f"{what}: {path} must contain a JSON object")
    return payload


def _need(payload: dict, key: str, what: str):
    if key not in payload:
        raise DomainError(f"{what}: missing required key '{key}'")
    return payload[key]


def _floats_list(value) -> list[float]:
    if isinstance(value, str):
        parts = [s for s in value.split(",") if s.strip()]
        return [float(s) for s in parts]
    return [float(v) for v in value]


# ---------------------------------------------------------------------------
# subcommand handlers: each returns a list of artifact filenames
# ---------------------------------------------------------------------------

def _cmd_sobolev(params: dict, outdir: str, seed: int) -> list[str]:
    _require(params, ("N", "p"), "sobolev")
    N, p = int(params["N"]), float(params["p"])
    M = int(params.get("M") or 2048)
    truncation = params.get("truncation")
    report = sb.sobolev_constant(N, p,
                                 None if truncation is None else float(truncation),
                                 M)
    _write_json(os.path.join(outdir, "sobolev.json"), report.to_json_dict())
    return ["sobolev.json"]


def _cmd_annulus(params: dict, outdir: str, seed: int) -> list[str]:
    _require(params, ("R1", "R2", "N", "p"), "annulus")
    spec = rc.AnnulusSpec(float(params["R1"]), float(params["R2"]),
                          int(params["N"]), float(params["p"]))
    method = params.get("method") or "descent"
    if method == "descent":
        u, report = an.minimize_annulus(spec, int(params.get("M") or 1024))
    elif method == "shooting":
        u, report = an.shoot_annulus(spec, M_out=int(params.get("M") or 2048))
    else:
        raise DomainError(f"annulus: unknown method {method!r}")
    if not report.converged:
        raise NonConvergenceError(
            f"annulus solve did not converge (residual {report.residual:.3e})"
        )
    rc.write_csv(u, os.path.join(outdir, "solution.csv"))
    _write_json(os.path.join(outdir, "annulus.json"), report.to_json_dict())
    return ["annulus.json", "solution.csv"]


def _cmd_curve(params: dict, outdir: str, seed: int) -> list[str]:
    _require(params, ("N", "p", "radii"), "curve")
    N, p = int(params["N"]), float(params["p"])
    radii = _floats_list(params["radii"])
    rows = an.c_curve(N, p, radii, M=int(params.get("M") or 2048))
    _write_rows_csv(os.path.join(outdir, "curve.csv"),
                    "R,c,c_minus_c_infty", rows)
    return ["curve.csv"]


def _cmd_calibrate(params: dict, outdir: str, seed: int) -> list[str]:
    _require(params, ("R1", "R2", "m", "N", "p"), "calibrate")
    spec = rc.AnnulusSpec(float(params["R1"]), float(params["R2"]),
                          int(params["N"]), float(params["p"]))
    m = int(params["m"])
    family = cal.build_family(spec, m, int(params.get("M") or 1024))
    artifacts = []
    for i, omega in enumerate(family.omegas, start=1):
        name = f"omega_{i}.csv"
        rc.write_csv(omega, os.path.join(outdir, name))
        artifacts.append(name)
    candidate = cal.sign_changing_candidate(family)
    rc.write_csv(candidate, os.path.join(outdir, "sign_changing.csv"))
    artifacts.append("sign_changing.csv")
    _write_json(os.path.join(outdir, "family.json"), {
        "radii": [float(r) for r in family.radii],
        "ratio": family.ratio,
        "m": family.m,
        "common_level": family.common_level,
        "levels": [rep.level for rep in family.reports],
        "iterations": [rep.iterations for rep in family.reports],
    })
    artifacts.append("family.json")
    return artifacts


def _cmd_thresholds(params: dict, outdir: str, seed: int) -> list[str]:
    _require(params, ("R1", "R2", "m", "N", "p"), "thresholds")
    R1, R2 = float(params["R1"]), float(params["R2"])
    N, p = int(params["N"]), float(params["p"])
    m = int(params["m"])
    M = int(params.get("M") or 1024)
    _write_json(os.path.join(outdir, "thresholds.json"), {
        "R1": R1, "R2": R2, "N": N, "p": p, "m": m,
        "l0": cal.threshold_l0(R1, R2, N, p, M),
        "l0_multi": cal.threshold_l0_multi(R1, R2, m, N, p, M),
        "c_infty": sb.cached_quantum(N, p),
    })
    return ["thresholds.json"]


def _load_group(params: dict) -> sym.GroupClosure:
    path = params.get("group")
    if path is None:
        raise DomainError("orbit: missing required parameter(s): group")
    payload = _load_json_file(path, "orbit group file")
    spec = sym.GroupSpec(dim=int(_need(payload, "dim", "orbit group file")),
                         generators=tuple(np.asarray(g, dtype=float)
                                          for g in _need(payload, "generators",
                                                         "orbit group file")))
    return sym.close_group(spec, int(params.get("max_order") or sym.DEFAULT_MAX_ORDER))


def _cmd_orbit(params: dict, outdir: str, seed: int) -> list[str]:
    closure = _load_group(params)
    report = sym.min_orbit_card(closure, seed=seed)
    payload = {
        "group_order": closure.order,
        "complete": closure.complete,
        **report.to_json_dict(),
    }
    have_domain = all(params.get(k) is not None for k in ("R1", "R2", "N", "p"))
    if have_domain:
        N, p = int(params["N"]), float(params["p"])
        if N != closure.dim:
            raise DomainError(
                f"orbit: N={N} does not match group dimension {closure.dim}"
            )
        sampler = sym.annulus_sampler(float(params["R1"]), float(params["R2"]),
                                      closure.dim)
        c_inf = sb.cached_quantum(N, p)
        payload["c_infty"] = c_inf
        payload["mu"] = sym.mu_G(closure, sampler, c_inf, seed=seed)
    _write_json(os.path.join(outdir, "orbit.json"), payload)
    return ["orbit.json"]


def _bubble_config_from_spec(payload: dict) -> bb.BubbleConfig:
    what = "bubbles spec file"
    prof = _need(payload, "profile", what)
    if not isinstance(prof, dict):
        raise DomainError(f"{what}: 'profile' must be an object")
    profile = sb.calibrate_talenti(int(_need(prof, "N", what)),
                                   float(_need(prof, "p", what)),
                                   float(prof.get("alpha", 1.0)))
    pairs = []
    for entry in payload.get("bubbles", ()):
        closure = None
        if entry.get("group") is not None:
            g = entry["group"]
            closure = sym.close_group(sym.GroupSpec(
                dim=int(_need(g, "dim", what)),
                generators=tuple(np.asarray(m, dtype=float)
                                 for m in _need(g, "generators", what)),
            ))
        bubble = bb.TalentiBubble(
            center=np.asarray(_need(entry, "center", what), dtype=float),
            scale=float(_need(entry, "scale", what)), profile=profile)
        pairs.append((bubble, closure))
    base = None
    if payload.get("base") is not None:
        base = rc.read_csv(payload["base"], profile.dim, profile.exponent)
    return bb.BubbleConfig(base=base, bubbles=pairs)


def _cmd_bubbles(params: dict, outdir: str, seed: int) -> list[str]:
    _require(params, ("spec",), "bubbles")
    payload = _load_json_file(params["spec"], "bubbles spec file")
    cfg = _bubble_config_from_spec(payload)
    mc = bb.MCParams(samples=int(params.get("samples") or bb.DEFAULT_MC_SAMPLES),
                     seed=seed)
    norm = bb.config_norm_p(cfg, mc)
    result = {
        "norm": norm.to_json_dict(),
        "separation_ratio": (None if math.isinf(cfg.separation_ratio)
                             else cfg.separation_ratio),
        "separation_warning": cfg.separation_warning,
    }
    if cfg.expanded:
        result["additivity"] = bb.additivity_check(cfg, mc).to_json_dict()
    _write_json(os.path.join(outdir, "bubbles.json"), result)
    return ["bubbles.json"]


# ---------------------------------------------------------------------------
# verify-all: fast invariant battery
# ---------------------------------------------------------------------------

def _verify_checks(seed: int):
    rng = np.random.default_rng(seed)

    def random_dirichlet(grid):
        vals = rng.standard_normal(grid.M + 1)
        vals[0] = vals[-1] = 0.0
        return rc.RadialFunction(grid=grid, values=vals, dirichlet=True)

    def check_volume():
        spec = rc.AnnulusSpec(1.0, 2.0, 3, 2.0)
        grid = rc.make_grid(spec, 2000, "uniform")
        vol = rc.sphere_measure(3) * float(np.sum(grid.node_weights))
        exact = 4.0 * math.pi * (2.0 ** 3 - 1.0 ** 3) / 3.0
        err = abs(vol - exact) / exact
        return err <= 1e-6, f"annulus volume rel err {err:.3e}"

    def check_nehari_identity():
        grid = rc.make_grid(rc.AnnulusSpec(0.1, 1.0, 4, 2.0), 256)
        u = random_dirichlet(grid)
        proj = sb.nehari_project(u)
        level = rc.energy_J(proj)
        ident = rc.rayleigh_Q(u) ** (grid.dim / grid.exponent) / grid.dim
        err = abs(level - ident) / abs(level)
        return err <= 1e-10, f"|J(Pu) - Q^(N/p)/N|/J = {err:.3e}"

    def check_dilation():
        grid = rc.make_grid(rc.AnnulusSpec(0.5, 1.0, 3, 2.0), 128)
        u = sb.nehari_project(random_dirichlet(grid))
        err = abs(rc.energy_J(sb.dilate(u, 10.0)) - rc.energy_J(u)) / rc.energy_J(u)
        return err <= 1e-12, f"dilation rel err {err:.3e}"

    def check_projection_optimal():
        grid = rc.make_grid(rc.AnnulusSpec(0.2, 1.0, 4, 2.0), 128)
        u = random_dirichlet(grid)
        proj = sb.nehari_project(u)
        level = rc.energy_J(proj)
        peak = max(rc.energy_J(t * proj) for t in np.linspace(0.5, 2.0, 401))
        ok = peak <= level + 1e-12 and peak >= level - 1e-3 * abs(level)
        return ok, f"J(Pu) = {level:.6g} vs t-scan peak {peak:.6g}"

    def check_calibration():
        profile = sb.calibrate_talenti(4, 2.0)
        res = sb.sampled_residual(profile)
        return res <= 1e-6, f"sampled residual {res:.3e}"

    def check_calibration_balance():
        profile = sb.calibrate_talenti(4, 2.0)
        a_u, b_u = sb.talenti_integrals(profile)
        err = abs(a_u - b_u) / a_u
        return err <= 1e-9, f"|A-B|/A = {err:.3e}"

    def check_annulus_solve():
        u, rep = an.minimize_annulus(rc.AnnulusSpec(0.5, 1.0, 4, 2.0), 128)
        ident = rc.rayleigh_Q(u) ** 2.0 / 4.0
        err = abs(rep.level - ident) / rep.level
        ok = rep.converged and err <= 1e-10 and float(np.min(u.values)) >= 0.0
        return ok, (f"converged={rep.converged}, identity err {err:.3e}, "
                    f"iters {rep.iterations}")

    def check_extension():
        big = rc.make_grid(rc.AnnulusSpec(0.25, 1.0, 3, 2.0), 128)
        lo = big.M // 4
        sub_nodes = big.nodes[lo:lo + 33]
        sub = rc.RadialGrid(nodes=sub_nodes, dim=3, exponent=2.0,
                            spacing="logarithmic")
        u = random_dirichlet(sub)
        ext = rc.extend_by_zero(u, big)
        err = abs(rc.grad_norm_p(ext) - rc.grad_norm_p(u))
        return err == 0.0, f"norm defect {err:.3e}"

    def check_group():
        closure = sym.close_group(sym.GroupSpec(dim=3, generators=(-np.eye(3),)))
        report = sym.min_orbit_card(closure)
        ok = closure.order == 2 and closure.complete and report.l == 2
        return ok, f"order {closure.order}, l = {report.l}"

    def check_orbit_separation():
        gen = sym.rotation_generator(2, 0, 1, 2.0 * math.pi / 3.0)
        closure = sym.close_group(sym.GroupSpec(dim=2, generators=(gen,)))
        sep = sym.orbit_separation(np.array([1.0, 0.0]), closure)
        err = abs(sep - math.sqrt(3.0))
        return err <= 1e-9, f"chord error {err:.3e}"

    def check_csv_roundtrip(tmpdir="."):
        grid = rc.make_grid(rc.AnnulusSpec(0.3, 1.0, 4, 3.0), 32)
        u = random_dirichlet(grid)
        path = os.path.join(tmpdir, "_roundtrip.csv")
        rc.write_csv(u, path)
        back = rc.read_csv(path, 4, 3.0)
        os.remove(path)
        ok = np.array_equal(back.values, u.values) and np.array_equal(
            back.grid.nodes, u.grid.nodes)
        return ok, "17g round-trip exact" if ok else "round-trip mismatch"

    def check_backends():
        from . import _kernels_py
        try:
            from . import _kernels as ext
        except ImportError:
            return True, "compiled backend absent; python backend only"
        grid = rc.make_grid(rc.AnnulusSpec(0.1, 1.0, 4, 2.9), 256)
        vals = rng.standard_normal(grid.M + 1)
        vals[0] = vals[-1] = 0.0
        ps = grid.pstar
        a_py, b_py = _kernels_py.energy_terms(vals, grid.h, grid.cell_weights,
                                              grid.node_weights, 2.9, ps)
        a_cy, b_cy = ext.energy_terms(vals, grid.h, grid.cell_weights,
                                      grid.node_weights, 2.9, ps)
        err = max(abs(a_py - a_cy) / abs(a_py), abs(b_py - b_cy) / abs(b_py))
        return err <= 1e-13, f"backend rel diff {err:.3e}"

    return [
        ("quadrature-volume", check_volume),
        ("nehari-identity", check_nehari_identity),
        ("dilation-invariance", check_dilation),
        ("projection-optimality", check_projection_optimal),
        ("calibration-residual", check_calibration),
        ("calibration-balance", check_calibration_balance),
        ("annulus-solve", check_annulus_solve),
        ("extension-by-zero", check_extension),
        ("group-closure", check_group),
        ("orbit-separation", check_orbit_separation),
        ("csv-roundtrip", check_csv_roundtrip),
        ("kernel-backends", check_backends),
    ]


def _cmd_verify_all(params: dict, outdir: str, seed: int) -> list[str]:
    results = []
    all_ok = True
    for name, fn in _verify_checks(seed):
        try:
            ok, detail = fn()
        except Exception as exc:  # a crashed check is a failed check
            ok, detail = False, f"raised {type(exc).__name__}: {exc}"
        results.append({"name": name, "passed": bool(ok), "detail": detail})
        all_ok &= bool(ok)
        print(f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}")
    _write_json(os.path.join(outdir, "verify.json"),
                {"checks": results, "all_passed": all_ok})
    if not all_ok:
        raise NumericError("verify-all: at least one invariant check failed")
    return ["verify.json"]


_HANDLERS = {
    "sobolev": _cmd_sobolev,
    "annulus": _cmd_annulus,
    "curve": _cmd_curve,
    "calibrate": _cmd_calibrate,
    "thresholds": _cmd_thresholds,
    "orbit": _cmd_orbit,
    "bubbles": _cmd_bubbles,
    "verify-all": _cmd_verify_all,
}


def run(config: RunConfig) -> int:
    """Execute the command; write artifacts and manifest.json."""
    os.makedirs(config.output_dir, exist_ok=True)
    artifacts = _HANDLERS[config.command](config.parameters,
                                          config.output_dir, config.seed)
    manifest = config.to_json_dict()
    manifest["outputs"] = sorted(artifacts)
    _write_json(os.path.join(config.output_dir, "manifest.json"), manifest)
    return 0


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------

def _build_parser() -> argparse.ArgumentParser:
    # SUPPRESS keeps subparser defaults from clobbering values parsed at the
    # root position (the subparser copies its whole namespace back)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", default=argparse.SUPPRESS,
                        help="JSON file with command/parameters/"
                             "output_dir/seed")
    common.add_argument("--output-dir", default=argparse.SUPPRESS,
                        help=f"artifact directory (default: "
                             f"${OUTPUT_DIR_ENV} or ./{DEFAULT_OUTPUT_DIR})")
    common.add_argument("--seed", type=int, default=argparse.SUPPRESS,
                        help="RNG seed (default 0)")
    parser = argparse.ArgumentParser(
        prog="plaplab",
        parents=[common],
        description="Variational laboratory for the critical p-Laplacian "
                    "on annuli: energy levels, Sobolev constant, calibrated "
                    "families, orbit thresholds, bubble additivity.",
    )
    sub = parser.add_subparsers(dest="command",
                                parser_class=lambda **kw: argparse.ArgumentParser(
                                    parents=[common], **kw))

    sp = sub.add_parser("sobolev", help="Sobolev constant and energy quantum")
    sp.add_argument("--N", type=int)
    sp.add_argument("--p", type=float)
    sp.add_argument("--truncation", type=float)
    sp.add_argument("--M", type=int)

    sp = sub.add_parser("annulus", help="single annulus level solve")
    sp.add_argument("--R1", type=float)
    sp.add_argument("--R2", type=float)
    sp.add_argument("--N", type=int)
    sp.add_argument("--p", type=float)
    sp.add_argument("--M", type=int)
    sp.add_argument("--method", choices=("descent", "shooting"))

    sp = sub.add_parser("curve", help="c(R,1) sweep over hole ratios")
    sp.add_argument("--N", type=int)
    sp.add_argument("--p", type=float)
    sp.add_argument("--radii", help="comma-separated hole ratios in (0,1)")
    sp.add_argument("--M", type=int)

    sp = sub.add_parser("calibrate", help="equal-energy disjoint family")
    sp.add_argument("--R1", type=float)
    sp.add_argument("--R2", type=float)
    sp.add_argument("--m", type=int)
    sp.add_argument("--N", type=int)
    sp.add_argument("--p", type=float)
    sp.add_argument("--M", type=int)

    sp = sub.add_parser("thresholds", help="compactness thresholds l0")
    sp.add_argument("--R1", type=float)
    sp.add_argument("--R2", type=float)
    sp.add_argument("--m", type=int)
    sp.add_argument("--N", type=int)
    sp.add_argument("--p", type=float)
    sp.add_argument("--M", type=int)

    sp = sub.add_parser("orbit", help="group closure and orbit quantities")
    sp.add_argument("--group", help="JSON file: {dim, generators}")
    sp.add_argument("--max-order", dest="max_order", type=int)
    sp.add_argument("--R1", type=float)
    sp.add_argument("--R2", type=float)
    sp.add_argument("--N", type=int)
    sp.add_argument("--p", type=float)

    sp = sub.add_parser("bubbles", help="multi-bubble Monte Carlo checks")
    sp.add_argument("--spec", help="JSON file: {profile, bubbles, base}")
    sp.add_argument("--samples", type=int)

    sub.add_parser("verify-all", help="run the full invariant battery")
    return parser


def _resolve(ns: argparse.Namespace) -> RunConfig:
    file_cfg = {}
    config_path = getattr(ns, "config", None)
    if config_path:
        file_cfg = _load_json_file(config_path, "config file")
    command = ns.command or file_cfg.get("command")
    if command is None:
        raise DomainError("no command given (pass a subcommand or --config "
                          "with a 'command' key)")
    parameters = dict(file_cfg.get("parameters", {}))
    for key, value in vars(ns).items():
        if key in ("command", "config", "output_dir", "seed"):
            continue
        if value is not None:
            parameters[key] = value
    cli_outdir = getattr(ns, "output_dir", None)
    output_dir = (cli_outdir or file_cfg.get("output_dir")
                  or os.environ.get(OUTPUT_DIR_ENV) or DEFAULT_OUTPUT_DIR)
    cli_seed = getattr(ns, "seed", None)
    seed = cli_seed if cli_seed is not None else file_cfg.get("seed", 0)
    return RunConfig(command=command, parameters=parameters,
                     output_dir=output_dir, seed=seed)


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        code = exc.code if isinstance(exc.code, int) else 1
        return 0 if code == 0 else 1
    try:
        config = _resolve(ns)
        return run(config)
    except DomainError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except NonConvergenceError as exc:
        print(f"non-convergence: {exc}", file=sys.stderr)
        return 3
    except NumericError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def console_main() -> None:
    sys.exit(main())


if __name__ == "__main__":
    console_main()
