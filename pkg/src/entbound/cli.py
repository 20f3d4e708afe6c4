"""Command-line front end: figure data, audits, phase optimization, bounds for a state file.

Exit codes: 0 success, 2 configuration error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import os
import sys
import tempfile
from concurrent.futures import ThreadPoolExecutor
from contextlib import contextmanager
from dataclasses import dataclass, field

import numpy as np

from . import hubbard, spin1, verify
from .bounds import basis_bounds
from .measurement import Measurement
from .qmath import DensityOperator, PureStateVector, StateError, fourier_matrix

THREADS_ENV = "ENTBOUND_THREADS"
EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    command: str
    params: dict = field(default_factory=dict)
    seed: int = 0
    output: str = "-"
    threads: int = 1

    def metadata(self) -> str:
        # thread count is left out so output files do not depend on it
        items = [f"command={self.command}", f"seed={self.seed}"]
        items += [f"{k}={_fmt_meta(v)}" for k, v in sorted(self.params.items())]
        return "# entbound " + " ".join(items)


def _fmt_meta(v) -> str:
    if isinstance(v, (list, tuple)):
        return ",".join(_fmt_meta(x) for x in v)
    if isinstance(v, float):
        return format(v, ".17g")
    return str(v)


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    return str(v)


def render_csv(cfg: RunConfig, columns, rows) -> str:
    lines = [cfg.metadata(), ",".join(columns)]
    lines += [",".join(_fmt(v) for v in row) for row in rows]
    return "\n".join(lines) + "\n"


def write_output(path: str, text: str) -> None:
    if path == "-":
        sys.stdout.write(text)
        return
    d = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".entbound-", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.remove(tmp)
        raise


@contextmanager
def _mapper(threads: int):
    if threads <= 1:
        yield map
        return
    with ThreadPoolExecutor(max_workers=threads) as ex:
        yield ex.map


def _positive(name, v, allow_zero=False):
    if v is None:
        return
    if (v < 0) if allow_zero else (v <= 0):
        raise ConfigError(f"--{name.replace('_', '-')} must be {'nonnegative' if allow_zero else 'positive'}")


def _int_list(s: str) -> list[int]:
    try:
        return [int(v) for v in s.split(",") if v.strip()]
    except ValueError as exc:
        raise ConfigError(f"expected comma-separated integers, got {s!r}") from exc


def _float_list(s: str) -> list[float]:
    try:
        return [float(v) for v in s.split(",") if v.strip()]
    except ValueError as exc:
        raise ConfigError(f"expected comma-separated numbers, got {s!r}") from exc


def _dims(s: str) -> tuple[int, int]:
    try:
        a, b = s.lower().split("x")
        return int(a), int(b)
    except ValueError as exc:
        raise ConfigError(f"--dims must look like 3x3, got {s!r}") from exc


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="entbound", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, seed=True):
        sp.add_argument("-o", "--output", default="-", help="CSV path, '-' for stdout")
        sp.add_argument("--threads", type=int, default=None,
                        help=f"worker threads (default ${THREADS_ENV} or 1)")
        if seed:
            sp.add_argument("--seed", type=int, default=0)

    for name in ("fig1", "fig2", "fig3", "fig4", "fig5"):
        if name == "fig3":
            sp = sub.add_parser(name, help="histogram of overlap elements")
            sp.add_argument("--L", dest="L", type=int, default=30)
            sp.add_argument("--t-over-l", type=float, default=0.5)
            sp.add_argument("--bins", type=int, default=50)
            common(sp)
            continue
        sp = sub.add_parser(name, help=f"lattice data for {name}")
        sp.add_argument("--lmin", type=int, default=2)
        sp.add_argument("--lmax", type=int, default=30)
        sp.add_argument("--L", dest="L_list", default=None, help="comma-separated site counts")
        sp.add_argument("--u-over-j", type=float, default=hubbard.DEFAULT_U_OVER_J)
        if name != "fig1":
            sp.add_argument("--n-times", type=int, default=hubbard.N_TIME_POINTS)
        common(sp)

    for name in ("fig6", "fig7"):
        sp = sub.add_parser(name, help=f"squeezed-state data for {name}")
        sp.add_argument("--n", type=int, default=15)
        sp.add_argument("--g", type=float, default=1.0)
        sp.add_argument("--r-max", type=float, default=2.5)
        sp.add_argument("--r-points", type=int, default=40)
        if name == "fig6":
            sp.add_argument("--phases", default=None, help="phi1,phi0,phi-1 in radians; skips optimization")
            sp.add_argument("--optimize-n", type=int, default=15)
            sp.add_argument("--optimize-r", type=float, default=0.5)
            sp.add_argument("--restarts", type=int, default=spin1.N_RESTARTS)
        common(sp)
    sp = sub.add_parser("fig8", help="ground-state sweep")
    sp.add_argument("--n", type=int, default=50)
    sp.add_argument("--g", type=float, default=-1.0)
    sp.add_argument("--q-min", type=float, default=-2.0)
    sp.add_argument("--q-max", type=float, default=2.0)
    sp.add_argument("--q-points", type=int, default=41)
    common(sp)

    sp = sub.add_parser("audit", help="randomized audit of one relation")
    sp.add_argument("--relation", required=True)
    sp.add_argument("--dims", default="2x2")
    sp.add_argument("--trials", type=int, default=1000)
    common(sp)

    sp = sub.add_parser("optimize", help="optimize measurement phases for a squeezed state")
    sp.add_argument("--n", type=int, default=15)
    sp.add_argument("--r", type=float, default=0.5)
    sp.add_argument("--g", type=float, default=1.0)
    sp.add_argument("--objective", default="entropy-sum", choices=("entropy-sum", "fsd-bound"))
    sp.add_argument("--restarts", type=int, default=spin1.N_RESTARTS)
    common(sp)

    sp = sub.add_parser("bound", help="bounds on -H(A|B) for a state file")
    sp.add_argument("state", help="state file")
    for flag, default in (("--xa", "computational"), ("--za", "fourier"),
                          ("--xb", "computational"), ("--zb", "fourier-conj")):
        sp.add_argument(flag, default=default, choices=NAMED_BASES)
    common(sp, seed=False)
    return p


NAMED_BASES = ("computational", "fourier", "fourier-conj")


def named_basis(name: str, d: int) -> Measurement:
    if name == "computational":
        return Measurement.computational(d)
    if name == "fourier":
        return Measurement.basis(fourier_matrix(d))
    if name == "fourier-conj":
        return Measurement.basis(fourier_matrix(d).conj())
    raise ConfigError(f"unknown basis {name!r}")


def read_state(path: str):
    """Parse ``dims dA dB`` then ``re im`` lines, or ``densematrix`` then ``d*d`` lines."""
    try:
        with open(path) as fh:
            lines = [ln.split("#")[0].strip() for ln in fh]
    except OSError as exc:
        raise ConfigError(f"cannot read state file: {exc}") from exc
    lines = [ln for ln in lines if ln]
    if not lines or lines[0].split()[0] != "dims":
        raise ConfigError("state file must start with 'dims d_A d_B'")
    try:
        da, db = (int(v) for v in lines[0].split()[1:3])
        dense = len(lines) > 1 and lines[1] == "densematrix"
        body = lines[2:] if dense else lines[1:]
        vals = np.array([complex(float(a), float(b)) for a, b in (ln.split()[:2] for ln in body)])
    except (ValueError, IndexError) as exc:
        raise ConfigError(f"malformed state file: {exc}") from exc
    d = da * db
    try:
        if dense:
            if len(vals) != d * d:
                raise ConfigError(f"expected {d * d} matrix entries, got {len(vals)}")
            return DensityOperator(vals.reshape(d, d), (da, db))
        if len(vals) != d:
            raise ConfigError(f"expected {d} amplitudes, got {len(vals)}")
        return PureStateVector(vals, (da, db))
    except StateError as exc:
        raise ConfigError(str(exc)) from exc


def make_config(args) -> RunConfig:
    threads = args.threads
    if threads is None:
        env = os.environ.get(THREADS_ENV, "1")
        try:
            threads = int(env)
        except ValueError as exc:
            raise ConfigError(f"${THREADS_ENV} must be an integer, got {env!r}") from exc
    _positive("threads", threads)
    params = {k: v for k, v in vars(args).items() if k not in ("command", "output", "threads", "seed")}
    for k in ("lmin", "lmax", "n_times", "bins", "n", "r_points", "q_points", "trials", "restarts",
              "optimize_n", "L"):
        if isinstance(params.get(k), int):
            _positive(k, params[k])
    for k in ("r_max", "r", "optimize_r"):
        _positive(k, params.get(k), allow_zero=True)
    if params.get("lmin") is not None and params["lmin"] < 2:
        raise ConfigError("--lmin must be at least 2")
    if params.get("L") is not None and params["L"] < 2:
        raise ConfigError("--L must be at least 2")
    if params.get("lmax") is not None and params["lmax"] < params.get("lmin", 2):
        raise ConfigError("--lmax must not be below --lmin")
    if args.command in ("fig6", "fig7", "optimize") and params["g"] == 0:
        raise ConfigError("--g must be nonzero for squeezing runs")
    if args.command == "fig8" and not params["g"] < 0:
        raise ConfigError("--g must be negative for the ground-state sweep")
    if args.command == "audit" and params["relation"] not in verify.AUDITS:
        raise ConfigError(f"--relation must be one of {', '.join(verify.AUDITS)}")
    for k in ("t_over_l",):
        if k in params and not 0 < params[k]:
            raise ConfigError("--t-over-l must be positive")
    return RunConfig(args.command, params, getattr(args, "seed", 0), args.output, threads)


def _lattice_sizes(p) -> list[int]:
    if p.get("L_list"):
        sizes = _int_list(p["L_list"])
        if any(L < 2 for L in sizes):
            raise ConfigError("--L entries must be at least 2")
        return sizes
    return list(range(p["lmin"], p["lmax"] + 1))


def execute(cfg: RunConfig):
    """Compute ``(columns, rows)`` for a validated configuration."""
    p = cfg.params
    cmd = cfg.command
    with _mapper(cfg.threads) as mapper:
        if cmd in ("fig1", "fig2", "fig4", "fig5"):
            rows = hubbard.fig_data(cmd, L_values=_lattice_sizes(p), U_over_J=p["u_over_j"],
                                    n_times=p.get("n_times", hubbard.N_TIME_POINTS), mapper=mapper)
            return hubbard.FIG_COLUMNS[cmd], rows
        if cmd == "fig3":
            rows = hubbard.fig_data("fig3", L_values=[p["L"]], t_over_L=p["t_over_l"], bins=p["bins"])
            return hubbard.FIG_COLUMNS[cmd], rows
        if cmd in ("fig6", "fig7"):
            grid = np.linspace(0.0, p["r_max"], p["r_points"])
            kw = dict(N=p["n"], r_grid=grid, g=p["g"], seed=cfg.seed, mapper=mapper)
            if cmd == "fig6":
                phases = None
                if p["phases"]:
                    phases = _float_list(p["phases"])
                    if len(phases) != 3:
                        raise ConfigError("--phases needs three values")
                kw.update(phases=phases, optimize_N=p["optimize_n"], optimize_r=p["optimize_r"],
                          restarts=p["restarts"])
            return spin1.FIG_COLUMNS[cmd], spin1.fig_data(cmd, **kw)
        if cmd == "fig8":
            grid = np.round(np.linspace(p["q_min"], p["q_max"], p["q_points"]), 12)
            return spin1.FIG_COLUMNS[cmd], spin1.fig_data("fig8", N=p["n"], q_over_qc=grid, g=p["g"], mapper=mapper)
        if cmd == "audit":
            rep = verify.audit_relation(p["relation"], _dims(p["dims"]), p["trials"], cfg.seed, mapper)
            return verify.AUDIT_COLUMNS, [rep.row()]
        if cmd == "optimize":
            state = spin1.squeezed_state(p["n"], p["r"], p["g"])
            opt = spin1.optimize_phases(state, p["objective"], p["restarts"], cfg.seed)
            b = opt.bounds
            return (("phi_1", "phi_0", "phi_m1", "objective", "converged", "bound_pn", "bound_c", "bound_fsd"),
                    [(*opt.phases, opt.value, opt.converged, b.bound("pn"), b.bound("c"), b.bound("fsd"))])
        if cmd == "bound":
            return bound_table(p)
    raise ConfigError(f"unknown command {cmd!r}")


BOUND_COLUMNS = ("kind", "orientation", "q", "H_X", "H_Z", "bound", "exact_negHAB", "certifies")


def bound_table(p):
    state = read_state(p["state"])
    da, db = state.dims
    meas = [named_basis(p[k], d) for k, d in (("xa", da), ("za", da), ("xb", db), ("zb", db))]
    reports = basis_bounds(state, *meas)
    rows = [(r.kind, r.orientation, r.q, r.h_x, r.h_z, r.bound, r.exact, r.certifies)
            for r in reports.values()]
    return BOUND_COLUMNS, rows


def _print_bounds(rows, stream) -> None:
    hx_label, hz_label = "H(X|X')", "H(Z|Z')"
    stream.write(f"{'relation':<9}{'q':>10}{hx_label:>11}{hz_label:>11}{'bound':>10}{'exact':>10}\n")
    for kind, orient, q, hx, hz, b, ex, cert in rows:
        flag = "  certifies entanglement" if cert else ""
        stream.write(f"{kind + '/' + orient:<9}{q:>10.5f}{hx:>11.5f}{hz:>11.5f}{b:>10.5f}{ex:>10.5f}{flag}\n")


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        cfg = make_config(args)
        columns, rows = execute(cfg)
        if cfg.command == "bound":
            _print_bounds(rows, sys.stdout if cfg.output != "-" else sys.stderr)
        write_output(cfg.output, render_csv(cfg, columns, rows))
    except ConfigError as exc:
        print(f"entbound: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (np.linalg.LinAlgError, FloatingPointError, ArithmeticError, StateError) as exc:
        print(f"entbound: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
