"""Command-line entry point.

Every subcommand writes machine-readable artifacts into ``--out`` and echoes
the effective configuration into each JSON report.  Exit codes::

    0   success
    2   an algebraic identity did not close
    3   the fixed-point iteration did not converge
    4   the independent oracle disagrees, or a residual bound is missed
    64  bad usage or invalid configuration
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .domain import DomainError, Parameters, Sector, make_ray_grid
from .picard import NonContractionError, RemainderSolution, picard_solve, sigma_residual_samples
from .sigma import SigmaError, sigma_residual, sigma_terms

EXIT_OK = 0
EXIT_IDENTITY = 2
EXIT_NONCONVERGENCE = 3
EXIT_ORACLE = 4
EXIT_USAGE = 64

ORACLE_TOL = 1e-6
RESIDUAL_TOL = 1e-8
SLOPE_WINDOW = (1e3, 1e4)

SOLUTION_HEADER = ["t_re", "t_im", "delta1_re", "delta1_im", "delta2_re", "delta2_im",
                   "u_re", "u_im", "residual_abs"]


class UsageError(Exception):
    """Invalid command line or configuration."""


# ---------------------------------------------------------------------------
# configuration


def _default_outputs() -> dict:
    return {"solution": "solution.csv", "convergence": "convergence.json",
            "certificate": "certificate.json", "report": "report.json",
            "sweep": "sweep.csv", "sweep_report": "sweep.json", "residual": "residual.csv",
            "contraction": "contraction.json", "identities": "identities.json"}


@dataclass
class RunConfig:
    """Everything a run depends on; serializes losslessly to JSON."""

    parameters: Parameters = field(default_factory=lambda: Parameters(1, 1, 1, 1))
    grid: dict = field(default_factory=lambda: {"rho": 50.0, "theta": 0.0, "t_max": None,
                                                "n": 4096, "grading": "geometric"})
    sector: dict | None = None
    tol: float = 1e-12
    max_iter: int = 50
    seed: int = 0
    samples: int = 32
    t_start: float = 1e6
    workers: int = 1
    C_list: list = field(default_factory=list)
    outputs: dict = field(default_factory=_default_outputs)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["parameters"] = self.parameters.to_dict()
        d["C_list"] = [[complex(c).real, complex(c).imag] for c in self.C_list]
        return d

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        base = cls()
        known = set(base.to_dict())
        extra = set(data) - known
        if extra:
            raise UsageError(f"unknown config keys: {sorted(extra)}")
        cfg = cls(**{k: v for k, v in data.items() if k not in ("parameters", "grid", "outputs", "C_list")})
        if "parameters" in data:
            cfg.parameters = Parameters.from_dict(data["parameters"])
        cfg.grid = {**base.grid, **data.get("grid", {})}
        cfg.outputs = {**base.outputs, **data.get("outputs", {})}
        cfg.C_list = [_complex(c) for c in data.get("C_list", [])]
        return cfg

    def effective(self) -> "RunConfig":
        """Copy with derived defaults filled in (``t_max``, sector)."""
        cfg = RunConfig.from_dict(self.to_dict())
        g = cfg.grid
        g["rho"], g["theta"], g["n"] = float(g["rho"]), float(g["theta"]), int(g["n"])
        if g["t_max"] is None:
            g["t_max"] = 1e4 * g["rho"]
        if cfg.sector is None:
            s = Sector.around(g["theta"], g["rho"])
            cfg.sector = {"angle_lo": s.angle_lo, "angle_hi": s.angle_hi}
        return cfg

    def make_grid(self, rho_scale: float = 1.0):
        g = self.grid
        rho = g["rho"] * rho_scale
        sector = Sector(self.sector["angle_lo"], self.sector["angle_hi"], rho)
        return make_ray_grid(sector, g["theta"], g["t_max"] * rho_scale, g["n"], g["grading"])


def _complex(v) -> complex:
    if isinstance(v, (list, tuple)):
        return complex(float(v[0]), float(v[1]))
    if isinstance(v, str):
        return complex(v.replace(" ", "").replace("i", "j"))
    return complex(v)


def load_config(args) -> RunConfig:
    """Defaults, then the config file, then command-line flags."""
    data = {}
    if getattr(args, "config", None):
        try:
            data = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config {args.config}: {exc}") from None
    try:
        cfg = RunConfig.from_dict(data)
    except (TypeError, ValueError) as exc:
        raise UsageError(f"invalid config: {exc}") from None
    for name in ("tol", "seed", "workers"):
        val = getattr(args, name, None)
        if val is not None:
            setattr(cfg, name, val)
    if getattr(args, "C", None):
        cfg.C_list = [_complex(c) for c in args.C.split(",")]
    try:
        return cfg.effective()
    except (DomainError, TypeError, ValueError, KeyError) as exc:
        raise UsageError(f"invalid config: {exc}") from None


# ---------------------------------------------------------------------------
# output helpers


def _clean(obj):
    """JSON-safe copy: complex to ``[re, im]``, non-finite floats to None."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (complex, np.complexfloating)):
        return [_clean(float(obj.real)), _clean(float(obj.imag))]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return float(obj) if math.isfinite(obj) else None
    return obj


def dumps(obj) -> str:
    return json.dumps(_clean(obj), sort_keys=True, indent=2) + "\n"


def _write(out: Path, name: str, text: str) -> Path:
    path = out / name
    path.write_text(text)
    return path


def _echo(report: dict, keys) -> None:
    for k in keys:
        if k in report:
            print(f"{k}: {json.dumps(_clean(report[k]))}")


# ---------------------------------------------------------------------------
# solve


def slope_fit(sol: RemainderSolution, window=SLOPE_WINDOW) -> float:
    """Log-log slope of ``|D|`` against ``|t|`` over the window."""
    r = sol.grid.moduli
    a = np.abs(sol.delta1)
    sel = (r >= window[0]) & (r <= window[1]) & (a > 0)
    if sel.sum() < 2:
        return math.nan
    return float(np.polyfit(np.log(r[sel]), np.log(a[sel]), 1)[0])


def _oracle(p: Parameters, sol: RemainderSolution, t_start: float, tol: float) -> dict:
    from .inward import IntegrationError, integrate_inward

    if p.C == 0:
        return {"method": "exact", "max_rel_diff": 0.0}
    theta = sol.grid.theta
    t0 = max(t_start, sol.grid.t_max)
    try:
        rk = integrate_inward(p, t0 * np.exp(1j * theta), sol.grid.rho * np.exp(1j * theta),
                              init="series", tol=tol, grid=sol.grid)
    except (IntegrationError, SigmaError) as exc:
        return {"method": "DOP853", "error": str(exc), "max_rel_diff": math.inf}
    scale = np.abs(rk.delta1)
    # rk samples a subset of the same nodes, so the interpolation is exact
    diff = np.abs(rk.delta1 - np.interp(rk.grid.moduli, sol.grid.moduli, sol.delta1))
    rel = float(np.max(diff / np.where(scale > 0, scale, 1)))
    return {"method": "DOP853", "t_start": t0, "max_rel_diff": rel, "nodes": rk.grid.n}


def solve_run(cfg: RunConfig, with_oracle: bool = True, with_certificate: bool = True):
    """One solve; returns ``(exit_code, report, solution, residual profile)``."""
    from .bounds import certify

    p = cfg.parameters
    report = {"config": cfg.to_dict()}
    try:
        grid = cfg.make_grid()
        sol = picard_solve(p, grid, tol=cfg.tol, max_iter=cfg.max_iter, residual_stride=None)
    except (NonContractionError, SigmaError) as exc:
        msg = str(exc) if "increase" in str(exc) else f"{exc}; increase rho"
        report.update(status="nonconvergence", message=msg, exit_code=EXIT_NONCONVERGENCE)
        return EXIT_NONCONVERGENCE, report, None, None
    t, res, scale = sigma_residual_samples(p, sol)
    rel = np.where(scale > 0, res / np.where(scale > 0, scale, 1), res)
    sol.certificates["sigma_residual_max"] = float(np.max(rel))
    report["convergence"] = sol.metadata()
    report["slope_fit"] = slope_fit(sol)
    code = EXIT_OK
    if not sol.converged:
        code = EXIT_NONCONVERGENCE
    if with_oracle:
        report["oracle"] = _oracle(p, sol, cfg.t_start, cfg.tol)
        if code == EXIT_OK and not report["oracle"]["max_rel_diff"] <= ORACLE_TOL:
            code = EXIT_ORACLE
    if code == EXIT_OK and not sol.certificates["sigma_residual_max"] <= RESIDUAL_TOL:
        code = EXIT_ORACLE
    if with_certificate and sol.converged:
        report["certificate"] = certify(p, sol, samples=cfg.samples, seed=cfg.seed).to_dict()
    report["status"] = {EXIT_OK: "ok", EXIT_NONCONVERGENCE: "nonconvergence", EXIT_ORACLE: "oracle_disagreement"}[code]
    report["exit_code"] = code
    return code, report, sol, res


def _solution_rows(p: Parameters, sol: RemainderSolution, res: np.ndarray):
    n1 = p.nu1
    w = sol.grid.power(-2 * n1)
    u = -n1 ** 2 * sol.grid.nodes + (n1 ** 2 + p.nu3 * p.nu4) / 2 + p.C * w + sol.delta1
    for k in range(sol.grid.n):
        t = sol.grid.nodes[k]
        yield [repr(float(v)) for v in (t.real, t.imag, sol.delta1[k].real, sol.delta1[k].imag,
                                       sol.delta2[k].real, sol.delta2[k].imag, u[k].real, u[k].imag,
                                       res[k])]


def write_solution_csv(path: Path, p: Parameters, sol: RemainderSolution, res: np.ndarray) -> None:
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(SOLUTION_HEADER)
        wr.writerows(_solution_rows(p, sol, res))


def cmd_solve(cfg: RunConfig, out: Path) -> int:
    code, report, sol, res = solve_run(cfg)
    o = cfg.outputs
    if sol is not None:
        write_solution_csv(out / o["solution"], cfg.parameters, sol, res)
        _write(out, o["convergence"], dumps({"config": cfg.to_dict(), **report["convergence"]}))
        if "certificate" in report:
            _write(out, o["certificate"], dumps({"config": cfg.to_dict(), **report["certificate"]}))
    _write(out, o["report"], dumps(report))
    _echo(report, ("status", "message", "slope_fit", "exit_code"))
    if sol is not None:
        print(f"iterations: {sol.iterations}")
        print(f"sigma_residual_max: {sol.certificates['sigma_residual_max']!r}")
        print(f"oracle.max_rel_diff: {report['oracle']['max_rel_diff']!r}")
    return code


# ---------------------------------------------------------------------------
# sweep


def _sweep_row(args):
    cfg_dict, C = args
    cfg = RunConfig.from_dict(cfg_dict)
    cfg.parameters = cfg.parameters.with_C(C)
    try:
        code, report, sol, _ = solve_run(cfg, with_oracle=False, with_certificate=False)
    except Exception as exc:  # a failed row must not stop the sweep
        return {"C": C, "status": "error", "message": str(exc), "exit_code": EXIT_NONCONVERGENCE}
    row = {"C": C, "status": report["status"], "exit_code": code}
    if sol is None:
        row["message"] = report.get("message", "")
        return row
    row.update(final_norm=sol.final_norm, iterations=sol.iterations,
               residual_max=sol.certificates["sigma_residual_max"], slope_fit=report["slope_fit"])
    return row


def cmd_sweep(cfg: RunConfig, out: Path) -> int:
    if not cfg.C_list:
        raise UsageError("sweep needs C values (--C or C_list in the config)")
    if not all(math.isfinite(c.real) and math.isfinite(c.imag) for c in cfg.C_list):
        raise UsageError("C values must be finite")
    jobs = [(cfg.to_dict(), c) for c in cfg.C_list]
    if cfg.workers > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as ex:
            rows = list(ex.map(_sweep_row, jobs))
    else:
        rows = [_sweep_row(j) for j in jobs]
    header = ["C_re", "C_im", "status", "final_norm", "iterations", "residual_max", "slope_fit"]
    with open(out / cfg.outputs["sweep"], "w", newline="") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(header)
        for r in rows:
            vals = [r.get(k) for k in ("final_norm", "iterations", "residual_max", "slope_fit")]
            wr.writerow([repr(r["C"].real), repr(r["C"].imag), r["status"]]
                        + ["" if v is None else repr(v) for v in vals])
    report = {"config": cfg.to_dict(), "rows": rows,
              "failed": sum(r["exit_code"] != EXIT_OK for r in rows)}
    _write(out, cfg.outputs["sweep_report"], dumps(report))
    for r in rows:
        print(f"C={r['C']}: status={r['status']} iterations={r.get('iterations')} "
              f"final_norm={r.get('final_norm')} slope_fit={r.get('slope_fit')}")
    print(f"failed: {report['failed']}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# residual of a user-supplied table


RESIDUAL_INPUT = ["t_re", "t_im", "u_re", "u_im", "up_re", "up_im", "upp_re", "upp_im"]


def cmd_residual(cfg: RunConfig, out: Path, input_path: str | None) -> int:
    if not input_path:
        raise UsageError("residual needs --input CSV with columns " + ",".join(RESIDUAL_INPUT))
    try:
        with open(input_path, newline="") as fh:
            rows = list(csv.DictReader(fh))
    except OSError as exc:
        raise UsageError(str(exc)) from None
    if not rows or any(c not in rows[0] for c in RESIDUAL_INPUT):
        raise UsageError("input CSV must have columns " + ",".join(RESIDUAL_INPUT))
    p = cfg.parameters

    def col(name):
        return np.array([float(r[name + "_re"]) + 1j * float(r[name + "_im"]) for r in rows])

    t, u, up, upp = col("t"), col("u"), col("up"), col("upp")
    res = np.abs(sigma_residual(p, t, u, up, upp))
    a, b, r = sigma_terms(p, t, u, up, upp)
    scale = np.maximum(np.maximum(np.abs(a), np.abs(b)), np.abs(r))
    rel = np.where(scale > 0, res / np.where(scale > 0, scale, 1), res)
    with open(out / cfg.outputs["residual"], "w", newline="") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(["t_re", "t_im", "residual_abs", "residual_rel"])
        for k in range(t.size):
            wr.writerow([repr(float(t[k].real)), repr(float(t[k].imag)), repr(float(res[k])), repr(float(rel[k]))])
    print(f"points: {t.size}")
    print(f"residual_rel_max: {float(rel.max())!r}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# contraction report


def cmd_contraction_report(cfg: RunConfig, out: Path) -> int:
    from .bounds import certify

    p = cfg.parameters
    report = {"config": cfg.to_dict(), "runs": []}
    for scale in (1.0, 4.0):
        try:
            sol = picard_solve(p, cfg.make_grid(scale), tol=cfg.tol, max_iter=cfg.max_iter,
                               escalate=False, residual_stride=None)
        except (NonContractionError, SigmaError) as exc:
            report["runs"].append({"rho": cfg.grid["rho"] * scale, "error": str(exc)})
            report["exit_code"] = EXIT_NONCONVERGENCE
            _write(out, cfg.outputs["contraction"], dumps(report))
            print(f"error: {exc}")
            return EXIT_NONCONVERGENCE
        cert = certify(p, sol, samples=cfg.samples, seed=cfg.seed)
        report["runs"].append({"rho": sol.grid.rho, "iterations": sol.iterations,
                               "certificate": cert.to_dict()})
    r0 = report["runs"][0]["certificate"]["contraction_ratio"]
    r1 = report["runs"][1]["certificate"]["contraction_ratio"]
    report["ratio_4rho_over_rho"] = r1 / r0 if r0 else math.nan
    report["law_holds"] = bool(r0 > 0 and 1 / 8 <= r1 / r0 <= 1 / 2) if p.C != 0 else True
    contracts = all(r["certificate"]["contraction_ratio"] < 1 for r in report["runs"])
    report["exit_code"] = EXIT_OK if contracts else EXIT_NONCONVERGENCE
    _write(out, cfg.outputs["contraction"], dumps(report))
    for r in report["runs"]:
        c = r["certificate"]
        print(f"rho={r['rho']!r}: contraction_ratio={c['contraction_ratio']!r} M={c['M']!r} "
              f"ball_mapped={c['ball_mapped']} ball_mapped_empirical={c['ball_mapped_empirical']}")
    _echo(report, ("ratio_4rho_over_rho", "law_holds", "exit_code"))
    return report["exit_code"]


# ---------------------------------------------------------------------------
# identities


def cmd_verify_identities(out: Path, source_dir: str | None = None, outputs: dict | None = None) -> int:
    from .algebra.verify import run_verification

    rep = run_verification(Path(source_dir) if source_dir else None)
    report = rep.to_dict()
    code = EXIT_OK if rep.ok else EXIT_IDENTITY
    report["exit_code"] = code
    name = (outputs or _default_outputs())["identities"]
    _write(out, name, dumps(report))
    for r in rep.results:
        line = f"{r.name}: {r.status}"
        if r.convention:
            line += f" ({r.convention})"
        print(line)
        if not r.ok:
            for m in r.residual[:5]:
                print(f"  residual: {m}")
    _echo(report, ("leading_constants", "exit_code"))
    return code


# ---------------------------------------------------------------------------
# argument parsing


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        sys.exit(EXIT_USAGE)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    # SUPPRESS keeps a flag given before the subcommand from being reset
    common.add_argument("--config", metavar="PATH", default=argparse.SUPPRESS, help="JSON run configuration")
    common.add_argument("--out", metavar="DIR", default=argparse.SUPPRESS, help="output directory")
    common.add_argument("--tol", type=float, default=argparse.SUPPRESS, help="Picard tolerance")
    common.add_argument("--seed", type=int, default=argparse.SUPPRESS, help="certificate sampling seed")
    common.add_argument("--workers", type=int, default=argparse.SUPPRESS, help="parallel solves in a sweep")

    parser = _Parser(prog="painleve-sigma", parents=[common],
                     description="Large-t solutions of the sigma-form equation with a free constant C.")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    sp = sub.add_parser("verify-identities", parents=[common], help="exact algebraic checks")
    sp.add_argument("--source-dir", default=None, help="directory of transcribed .expr files to check")
    sub.add_parser("solve", parents=[common], help="solve, cross-check and certify one configuration")
    sp = sub.add_parser("sweep", parents=[common], help="solve for a list of C values")
    sp.add_argument("--C", default=None, help="comma-separated C values, e.g. 1,1j,-1")
    sp = sub.add_parser("residual", parents=[common], help="sigma-form residual of a CSV of (t, u, u', u'')")
    sp.add_argument("--input", default=None, help="CSV with columns " + ",".join(RESIDUAL_INPUT))
    sub.add_parser("contraction-report", parents=[common], help="contraction ratios at rho and 4 rho")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if not args.command:
        parser.print_usage(sys.stderr)
        return EXIT_USAGE
    out = Path(getattr(args, "out", "."))
    try:
        out.mkdir(parents=True, exist_ok=True)
        if args.command == "verify-identities":
            return cmd_verify_identities(out, args.source_dir)
        cfg = load_config(args)
        if args.command == "solve":
            return cmd_solve(cfg, out)
        if args.command == "sweep":
            return cmd_sweep(cfg, out)
        if args.command == "residual":
            return cmd_residual(cfg, out, args.input)
        return cmd_contraction_report(cfg, out)
    except (UsageError, DomainError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
