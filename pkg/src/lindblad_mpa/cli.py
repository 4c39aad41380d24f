"""Command-line front end.

Exit codes: 0 pass, 1 check failure, 2 usage/validation error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import itertools
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from . import __version__, mpa, xxx
from .lindblad import (
    DegenerateKernelError,
    NonConvergenceError,
    gauge_shift_check,
    local_current,
    random_density_matrix,
    steady_state,
)
from .mpa import ZeroContractionError
from .spinspace import embed, pauli
from .xxx import XxxParams

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2, 3
COMPARE_TOL = 1e-8
DEFAULT_SEED = 20160901


class UsageError(ValueError):
    pass


@dataclass
class RunConfig:
    command: str
    N: list = field(default_factory=lambda: [6])
    gamma: list = field(default_factory=lambda: [1.0])
    theta: list = field(default_factory=lambda: [np.pi / 2])
    M: int | None = None
    tol_identity: float = 1e-12
    tol_solve: float = 1e-10
    format: str = "json"
    output: str | None = None
    jobs: int = 1
    seed: int = DEFAULT_SEED
    source: str = "mpa"

    def validate(self, N_max: int = 200, N_min: int = 2):
        for g in self.gamma:
            if not g > 0:
                raise UsageError(f"gamma must be positive, got {g}")
        for t in self.theta:
            if not 0 < t <= np.pi:
                raise UsageError(f"theta must lie in (0, pi], got {t}")
        for n in self.N:
            if n < N_min:
                raise UsageError(f"N must be >= {N_min}, got {n}")
            if n > N_max:
                raise UsageError(f"N={n} exceeds the limit {N_max} for '{self.command}'")
            if self.M is not None and self.M < n + 1:
                raise UsageError(f"M={self.M} must be at least N+1={n + 1}")
        if self.jobs < 1:
            raise UsageError("--jobs must be >= 1")

    def single(self):
        if len(self.N) * len(self.gamma) * len(self.theta) != 1:
            raise UsageError(f"'{self.command}' takes a single N, gamma and theta")
        return self.N[0], self.gamma[0], self.theta[0]

    def meta(self) -> dict:
        d = asdict(self)
        d.pop("output")
        return {"tool": "lindblad-mpa", "version": __version__, **d}


# --- subcommands -----------------------------------------------------------------------


def _entry(res, tol):
    return {"residual": float(res), "tolerance": tol, "pass": bool(res <= tol)}


def cmd_verify(cfg: RunConfig) -> tuple[dict, int]:
    cfg.validate()
    N, G, th = cfg.single()
    tid, tsolve = cfg.tol_identity, cfg.tol_solve
    params = XxxParams(N, G, th, cfg.M)
    rep = xxx.xxx_rep(params)
    report = {}
    report["ldc"] = _entry(mpa.check_ldc(rep, xxx.heisenberg_coupling()).interior, tid)
    DL, DR = xxx.mpa_dissipators(G, th)
    left, right = mpa.check_lbmc(rep, None, None, DL, DR, N, seed=cfg.seed)
    report["lbmc_left"] = _entry(left.interior, tsolve)
    report["lbmc_right"] = _entry(right.interior, tsolve)
    cub = xxx.check_cubic(XxxParams(N, G, th, max(12, params.trunc)))
    report["cubic"] = _entry(max(cub.values()), tid)
    report["cubic"]["per_axis"] = {str(k): v for k, v in cub.items()}
    Ng = N if N <= 4 else 3
    rng = np.random.default_rng(cfg.seed)
    spec = xxx.xxx_chain_spec(Ng, G, th)
    shifts = rng.standard_normal(2) + 1j * rng.standard_normal(2)
    rho = random_density_matrix(2**Ng, rng)
    report["gauge_shift"] = _entry(gauge_shift_check(spec, shifts, rho), tid)
    report["gauge_shift"]["N"] = Ng
    g = xxx.gl2_rep(params.p, params.trunc)
    report["gl2_commutators"] = _entry(xxx.gl2_commutator_residual(g), tid)
    ok = bool(all(v["pass"] for v in report.values()))
    return {"meta": cfg.meta(), "checks": report, "pass": ok}, EXIT_OK if ok else EXIT_FAIL


def compare_oracle(N: int, G: float, th: float, tol_solve: float = 1e-10) -> dict:
    """Max deviations between MPA and the dense oracle for one parameter point."""
    params = XxxParams(N, G, th)
    rho = steady_state(xxx.xxx_chain_spec(N, G, th), tol=tol_solve)
    one = two = cur = 0.0
    for k in range(1, N + 1):
        for a in (1, 2, 3):
            ref = rho.expect(embed(pauli(a), k, N)).real
            one = max(one, abs(xxx.lab_pauli_expectation(params, [(k, a)]) - ref))
    for k in range(1, N):
        for a, b in itertools.product((1, 2, 3), repeat=2):
            op = embed(pauli(a), k, N) @ embed(pauli(b), k + 1, N)
            ref = rho.expect(op)
            two = max(two, abs(xxx.lab_pauli_expectation(params, [(k, a), (k + 1, b)]) - ref))
    j = xxx.currents(params)
    for k in range(1, N):
        for a in (1, 2, 3):
            cur = max(cur, abs(j[a - 1] - local_current(rho, k, a)))
    return {"N": N, "gamma": G, "theta": th, "one_point": one, "two_point": two, "currents": cur}


def cmd_compare_oracle(cfg: RunConfig) -> tuple[dict, int]:
    cfg.validate(N_max=6)
    points = list(itertools.product(cfg.N, cfg.gamma, cfg.theta))
    rows = _map(cfg.jobs, _compare_point, [(n, g, t, cfg.tol_solve) for n, g, t in points])
    worst = float(max(max(r["one_point"], r["two_point"], r["currents"]) for r in rows))
    ok = bool(worst <= COMPARE_TOL)
    return {
        "meta": cfg.meta(),
        "tolerance": COMPARE_TOL,
        "rows": rows,
        "max_deviation": worst,
        "pass": ok,
    }, EXIT_OK if ok else EXIT_FAIL


def _compare_point(args):
    return compare_oracle(*args)


def profile_rows(N: int, G: float, th: float) -> list[dict]:
    prof = xxx.magnetization_profile(XxxParams(N, G, th))
    hx, hy, _ = xxx.helix_reference(prof[:, 0] / N, th)
    rows = []
    for (k, mx, my, mz), ax, ay in zip(prof, hx, hy):
        dev = max(abs(mx - ax), abs(my - ay), abs(mz))
        rows.append({"k": int(k), "mx": mx, "my": my, "mz": mz,
                     "helix_mx": ax, "helix_my": ay, "deviation": dev})
    return rows


def cmd_profile(cfg: RunConfig) -> tuple[list, int]:
    cfg.validate()
    return profile_rows(*cfg.single()), EXIT_OK


def current_row(N: int, G: float, th: float) -> dict:
    params = XxxParams(N, G, th)
    jx, jy, jz = xxx.currents(params)
    m, lg = xxx.partition_value(params)
    c = 1 / np.tan(th / 2) if th < np.pi else 0.0
    return {"N": N, "gamma": G, "theta": th, "jx": jx, "jy": jy, "jz": jz,
            "jy_over_jx": jy / jx if jx else float("nan"), "minus_cot_half_theta": -c,
            "scaled_Z": G**2 / 4 * m * np.exp(lg) if lg < 700 else float("inf")}


def _current_point(args):
    return current_row(*args)


def cmd_currents(cfg: RunConfig) -> tuple[list, int]:
    cfg.validate()
    points = list(itertools.product(cfg.N, cfg.gamma, cfg.theta))
    return _map(cfg.jobs, _current_point, points), EXIT_OK


def cmd_scan(cfg: RunConfig) -> tuple[list, int]:
    cfg.validate()
    N, G, th = cfg.single()
    target = th**2 / 4
    return [{"N": int(n), "ratio": r, "target": target, "deviation": r - target}
            for n, r in xxx.z_ratio_scan(G, th, N)], EXIT_OK


def cmd_steady_state(cfg: RunConfig) -> tuple[dict, int]:
    cfg.validate(N_max=5)
    N, G, th = cfg.single()
    if cfg.source == "oracle":
        rho = steady_state(xxx.xxx_chain_spec(N, G, th), tol=cfg.tol_solve).entries
    else:
        rho = xxx.density_matrix(XxxParams(N, G, th))
    return {"meta": cfg.meta(), "source": cfg.source, "dim": rho.shape[0],
            "real": rho.real.tolist(), "imag": rho.imag.tolist()}, EXIT_OK


COMMANDS = {
    "verify": cmd_verify,
    "compare-oracle": cmd_compare_oracle,
    "profile": cmd_profile,
    "currents": cmd_currents,
    "scan": cmd_scan,
    "steady-state": cmd_steady_state,
}
TABLE_COMMANDS = {"profile", "currents", "scan"}


def _map(jobs, fn, items):
    if jobs > 1 and len(items) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            return list(ex.map(fn, items))
    return [fn(x) for x in items]


# --- output ----------------------------------------------------------------------------


def render(result, cfg: RunConfig, table: bool) -> str:
    """CSV for row tables (metadata in '# ' comment lines), JSON otherwise."""
    if table:
        result = {"meta": cfg.meta(), "rows": result}
    if cfg.format == "csv" and "rows" in result:
        buf = io.StringIO()
        summary = {k: v for k, v in result.items() if k != "rows"}
        buf.write("# " + json.dumps(summary, default=float) + "\n")
        rows = result["rows"]
        if rows:
            w = csv.DictWriter(buf, fieldnames=list(rows[0]))
            w.writeheader()
            for row in rows:
                w.writerow({k: repr(float(v)) if isinstance(v, float) else v for k, v in row.items()})
        return buf.getvalue()
    return json.dumps(result, indent=2, default=float) + "\n"


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--N", type=int, nargs="+", default=None)
    common.add_argument("--gamma", type=float, nargs="+", default=[1.0])
    common.add_argument("--theta", type=float, nargs="+", default=[np.pi / 2], help="radians")
    common.add_argument("--M", type=int, default=None, help="auxiliary truncation override")
    common.add_argument("--tol-identity", type=float, default=1e-12)
    common.add_argument("--tol-solve", type=float, default=1e-10)
    common.add_argument("--format", choices=("csv", "json"), default=None)
    common.add_argument("--output", default=None)
    common.add_argument("--jobs", type=int, default=1)
    common.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p = argparse.ArgumentParser(prog="lindblad-mpa", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)
    defaults_N = {"verify": 6, "compare-oracle": 3, "profile": 50, "currents": 10,
                  "scan": 100, "steady-state": 3}
    for name in COMMANDS:
        sp = sub.add_parser(name, parents=[common])
        sp.set_defaults(default_N=defaults_N[name])
        if name == "steady-state":
            sp.add_argument("--source", choices=("mpa", "oracle"), default="mpa")
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    table = args.command in TABLE_COMMANDS
    cfg = RunConfig(
        command=args.command,
        N=args.N or [args.default_N],
        gamma=args.gamma,
        theta=args.theta,
        M=args.M,
        tol_identity=args.tol_identity,
        tol_solve=args.tol_solve,
        format=args.format or ("csv" if table else "json"),
        output=args.output,
        jobs=args.jobs,
        seed=args.seed,
        source=getattr(args, "source", "mpa"),
    )
    try:
        result, code = COMMANDS[args.command](cfg)
    except UsageError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (NonConvergenceError, DegenerateKernelError, ZeroContractionError, ArithmeticError,
            OverflowError) as e:
        print(f"numerical failure: {e}", file=sys.stderr)
        return EXIT_NUMERIC
    text = render(result, cfg, table)
    if cfg.output:
        with open(cfg.output, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
