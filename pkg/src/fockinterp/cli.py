"""Batch experiment runner.

Usage::

    fockinterp certify|converge|diverge|contour-dump|norms CONFIG [--out DIR] [--threads N]

``CONFIG`` is a key=value file (``#`` starts a comment).  Every CSV written
starts with ``#`` lines echoing the code version, the config file verbatim
and the fully resolved configuration, then a header row and the data.
Files are written to a temporary name in the output directory and renamed
into place.
"""

from __future__ import annotations

import argparse
import csv
import logging
import os
import sys
import tempfile
import time
from concurrent.futures import ThreadPoolExecutor
from contextlib import contextmanager
from dataclasses import dataclass, fields

import numpy as np

from . import __version__

log = logging.getLogger("fockinterp")

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class ConfigError(ValueError):
    pass


def _floats(s):
    return tuple(float(x) for x in s.replace(",", " ").split())


def _ints(s):
    return tuple(int(x) for x in s.replace(",", " ").split())


def _bool(s):
    v = s.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


@dataclass(frozen=True)
class ExperimentConfig:
    weight: str = "2"  # power a, or "logsquare"
    gamma: int = 0  # 0: sigma on the critical lattice, 1: sigma(z)/z
    betas: tuple | None = None  # per-command default when unset
    n_schedule: tuple = (25, 50, 100, 200, 400)
    function: str = "kernel"  # kernel | monomial
    kernel_w: complex = 1 + 0.5j
    monomial_n: int = 3
    shells: int = 3
    r_inner: float = 1.0
    r_outer: float = 12.0
    n_annuli: int = 11
    n_radii: int = 8
    n_angles: int = 128
    bound: float = 50.0
    certify_gamma: float | None = None  # gamma used in the ratio; defaults to the nominal one
    panels_per_rho: float = 2.0
    gl_order: int = 8
    rtol: float = 1e-6
    contour_n: tuple = (5, 13, 29)
    norm_index: int = 1
    norm_radii: tuple = (10.0, 15.0, 20.0, 25.0, 30.0)
    lattice_radius: float | None = None
    seed: int = 0
    timing: bool = False
    gnuplot: bool = False

    @property
    def a(self) -> float | None:
        return None if self.weight == "logsquare" else float(self.weight)

    def resolved_lines(self):
        return [f"{f.name} = {_fmt(getattr(self, f.name))}" for f in fields(self)]


def _fmt(v):
    if isinstance(v, tuple):
        return ",".join(_fmt(x) for x in v)
    if isinstance(v, complex):
        return f"{v.real:g}{v.imag:+g}j"
    return str(v)


_PARSERS = {
    "weight": str,
    "gamma": int,
    "betas": _floats,
    "n_schedule": _ints,
    "function": str,
    "kernel_w": lambda s: complex(s.replace(" ", "").replace("i", "j")),
    "monomial_n": int,
    "shells": int,
    "r_inner": float,
    "r_outer": float,
    "n_annuli": int,
    "n_radii": int,
    "n_angles": int,
    "bound": float,
    "certify_gamma": float,
    "panels_per_rho": float,
    "gl_order": int,
    "rtol": float,
    "contour_n": _ints,
    "norm_index": int,
    "norm_radii": _floats,
    "lattice_radius": float,
    "seed": int,
    "timing": _bool,
    "gnuplot": _bool,
}


def parse_config(text: str) -> ExperimentConfig:
    values = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value")
        key, val = (x.strip() for x in line.split("=", 1))
        if key not in _PARSERS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        try:
            values[key] = _PARSERS[key](val)
        except ValueError as exc:
            raise ConfigError(f"line {lineno}: bad value for {key}: {exc}") from None
    cfg = ExperimentConfig(**values)
    _validate(cfg)
    return cfg


def _validate(cfg: ExperimentConfig):
    if cfg.weight != "logsquare":
        try:
            a = float(cfg.weight)
        except ValueError:
            raise ConfigError("weight must be a number in (0, 2] or 'logsquare'") from None
        if not 0 < a <= 2:
            raise ConfigError("weight power must lie in (0, 2]")
    if cfg.gamma not in (0, 1):
        raise ConfigError("gamma must be 0 or 1")
    if cfg.function not in ("kernel", "monomial"):
        raise ConfigError("function must be 'kernel' or 'monomial'")
    if cfg.betas is not None and any(b < 0 for b in cfg.betas):
        raise ConfigError("betas must be >= 0")
    if any(n < 1 for n in cfg.n_schedule) or any(n < 1 for n in cfg.contour_n):
        raise ConfigError("N values must be >= 1")
    if cfg.shells < 1:
        raise ConfigError("shells must be >= 1")
    if cfg.rtol <= 0 or cfg.panels_per_rho <= 0 or cfg.gl_order < 1:
        raise ConfigError("quadrature resolutions must be positive")


# ---------------------------------------------------------------------------
# output


class Output:
    def __init__(self, out_dir: str, cfg: ExperimentConfig, config_text: str, command: str):
        self.dir = out_dir
        self.cfg = cfg
        os.makedirs(out_dir, exist_ok=True)
        lines = [f"fockinterp {__version__}", f"command: {command}", "config file:"]
        lines += ["  " + l for l in config_text.splitlines()]
        lines += ["resolved:"] + ["  " + l for l in cfg.resolved_lines()]
        self.header = "".join(f"# {l}\n" for l in lines)
        self.written: list = []

    @contextmanager
    def atomic(self, name: str):
        """Yield a temporary path; it is renamed to ``name`` on success."""
        final = os.path.join(self.dir, name)
        fd, tmp = tempfile.mkstemp(prefix=f".{name}.", dir=self.dir)
        os.close(fd)
        try:
            yield tmp
            os.replace(tmp, final)
            self.written.append(final)
        finally:
            if os.path.exists(tmp):
                os.remove(tmp)

    def table(self, name: str, columns, rows):
        with self.atomic(name) as tmp:
            with open(tmp, "w", newline="") as fh:
                fh.write(self.header)
                w = csv.writer(fh)
                w.writerow(columns)
                w.writerows(rows)

    def gnuplot(self, name: str, csv_name: str, x: int, ys, logx=False, logy=False, title=""):
        if not self.cfg.gnuplot:
            return
        with self.atomic(name) as tmp:
            with open(tmp, "w") as fh:
                fh.write(self.header)
                fh.write("set datafile separator ','\nset key autotitle columnhead\n")
                if logx:
                    fh.write("set logscale x\n")
                if logy:
                    fh.write("set logscale y\n")
                if title:
                    fh.write(f"set title '{title}'\n")
                plots = ", ".join(f"'{csv_name}' using {x}:{y} with linespoints" for y in ys)
                fh.write(f"plot {plots}\n")


def _g(x):
    return f"{x:.12g}"


# ---------------------------------------------------------------------------
# shared builders


def _require_power_two(cfg):
    if cfg.a != 2.0:
        raise ConfigError("sine-type functions are only available for the weight r**2 (weight = 2)")


def _sine_type(cfg, radius):
    from .genfun import sigma_lattice, sigma_over_linear

    _require_power_two(cfg)
    R = cfg.lattice_radius or radius
    return sigma_lattice(R) if cfg.gamma == 0 else sigma_over_linear(R)


def _quad_spec(cfg, **kw):
    from .quadrature import QuadratureSpec

    kw = {"panels_per_rho": cfg.panels_per_rho, "gl_order": cfg.gl_order, "rtol": cfg.rtol, **kw}
    return QuadratureSpec(**kw)


def _map(fn, jobs, threads):
    if threads <= 1 or len(jobs) <= 1:
        return [fn(j) for j in jobs]
    with ThreadPoolExecutor(max_workers=threads) as ex:
        return list(ex.map(fn, jobs))


# ---------------------------------------------------------------------------
# commands


def cmd_certify(cfg, out: Output, threads: int = 1) -> int:
    from .genfun import AnnularGrid, certify_sinetype

    grid = AnnularGrid(cfg.r_inner, cfg.r_outer, cfg.n_annuli, cfg.n_radii, cfg.n_angles)
    s = _sine_type(cfg, cfg.r_outer + 6.0)
    cert = certify_sinetype(s, grid, gamma=cfg.certify_gamma, bound=cfg.bound)
    with out.atomic("certify.csv") as tmp:
        cert.to_csv(tmp, header=out.header)
    out.gnuplot("certify.gp", "certify.csv", 1, [3, 4], title="certification ratio per annulus")
    slope = cert.radial_slope()
    print(f"c_min={cert.c_min:.6g} c_max={cert.c_max:.6g} ratio={cert.ratio:.6g} bound={cfg.bound:g} "
          f"radial_slope={slope:.4g} excluded={cert.n_excluded}")
    if not cert.passed:
        print(f"certification FAILED: ratio {cert.ratio:.4g} exceeds {cfg.bound:g}", file=sys.stderr)
        return EXIT_FAIL
    print("certification passed")
    return EXIT_OK


def convergence_condition_holds(a: float, beta: float) -> bool:
    """``r**(1 - 2 beta) = O(rho(r))`` with ``rho ~ r**(1 - a/2)``, i.e. ``beta >= a/4``."""
    return 1 - 2 * beta <= 1 - a / 2 + 1e-12


def _test_function(cfg, s):
    from .interp import kernel_function, monomial_function

    if cfg.function == "kernel":
        return kernel_function(cfg.kernel_w, cfg.a)
    return monomial_function(cfg.monomial_n, cfg.a)


def cmd_converge(cfg, out: Output, threads: int = 1) -> int:
    from .interp import InterpolationProblem, residual_norm

    _require_power_two(cfg)
    betas = cfg.betas or (0.75,)
    for b in betas:
        if not convergence_condition_holds(cfg.a, b):
            print(f"warning: beta={b:g}: condition r^(1-2beta)=O(rho(r)) violated; convergence is not guaranteed",
                  file=sys.stderr)
    n_max = max(cfg.n_schedule)
    R_needed = np.sqrt(n_max / 2.0)  # one zero per cell of area pi/2
    s = _sine_type(cfg, max(40.0, 2.5 * R_needed + 6.0))
    f = _test_function(cfg, s)
    problems = {b: InterpolationProblem(s, f, b) for b in betas}
    for p in problems.values():
        if n_max > p.k_max:
            raise ConfigError(f"N={n_max} exceeds the {p.k_max} zeros available; raise lattice_radius")
        p.log_coeffs  # build the S' cache once, before any threads start
    spec = _quad_spec(cfg)

    def job(arg):
        b, N = arg
        t0 = time.perf_counter()
        val = residual_norm(problems[b], N, spec)
        return val, 1e3 * (time.perf_counter() - t0)

    jobs = [(b, N) for b in betas for N in cfg.n_schedule]
    results = _map(job, jobs, threads)
    rows = []
    for (b, N), (val, ms) in zip(jobs, results):
        rows.append([N, _g(b), cfg.gamma, f"{val:.10e}", f"{ms:.0f}" if cfg.timing else "NA"])
        print(f"beta={b:g} N={N} residual={val:.6e}")
    out.table("converge.csv", ["N", "beta", "gamma", "residual_norm", "wall_time_ms"], rows)
    out.gnuplot("converge.gp", "converge.csv", 1, [4], logx=True, logy=True, title="residual norm")
    return EXIT_OK


def cmd_diverge(cfg, out: Output, threads: int = 1) -> int:
    from .counterexample import A_k, build_witness, loglog_slope, predicted_slope

    _require_power_two(cfg)
    betas = cfg.betas or (0.25,)
    for b in betas:
        if not b < cfg.a / 4:
            print(f"refusing beta={b:g}: the divergence construction requires beta < a/4 = {cfg.a / 4:g}",
                  file=sys.stderr)
            return EXIT_USAGE
    s = _sine_type(cfg, cfg.lattice_radius or 2.0 ** (cfg.shells + 2) + 8.0)
    spec = _quad_spec(cfg, rtol=max(cfg.rtol, 1e-4))
    rows, wrows = [], []
    status = EXIT_OK
    for b in betas:
        bw = build_witness(s, b, cfg.gamma, cfg.shells)
        for d in bw.diagnostics:
            print(f"shell selection: {d}", file=sys.stderr)
        if len(bw.shells) < cfg.shells:
            print(f"only {len(bw.shells)} of {cfg.shells} shells could be built", file=sys.stderr)
            status = EXIT_FAIL
        res = _map(lambda k: A_k(bw, k, spec=spec, seed=cfg.seed), list(range(1, len(bw.shells) + 1)), threads)
        for r in res:
            rows.append([r.k, _g(r.R), r.N, f"{r.A:.10e}", _g(b)])
            print(f"beta={b:g} k={r.k} R_k={r.R:.6g} N_k={r.N} A_k={r.A:.6e}")
        for k, sh in enumerate(bw.shells, 1):
            lm = sh.coeffs.logmag - bw.kappa * np.log(sh.R)
            for n, l, ph in zip(sh.n, lm, sh.coeffs.phase):
                wrows.append([_g(b), k, int(n), f"{l:.15g}", f"{ph:.15g}"])
        print(f"beta={b:g} eps={bw.eps:g} kappa={bw.kappa:g}")
        if len(res) >= 2:
            sl = loglog_slope([r.R for r in res], [r.A for r in res])
            print(f"beta={b:g} log A_k vs log R_k slope={sl:.4g} (predicted {predicted_slope(b, cfg.gamma, bw.kappa):.4g})")
    out.table("diverge.csv", ["k", "R_k", "N_k", "A_k", "beta"], rows)
    out.table("witness.csv", ["beta", "shell", "n", "logmag", "phase"], wrows)
    out.gnuplot("diverge.gp", "diverge.csv", 2, [4], logx=True, logy=True, title="A_k")
    return status


def cmd_contour_dump(cfg, out: Output, threads: int = 1) -> int:
    from .contours import build_contour, verify_contour
    from .lattice import square_lattice, CRITICAL_OMEGA
    from .weights import RadialWeight

    _require_power_two(cfg)
    n_max = max(cfg.contour_n)
    R = cfg.lattice_radius or 2 * np.sqrt(n_max / 2.0) + 6.0
    zs = square_lattice(CRITICAL_OMEGA, R, RadialWeight.power(2.0))

    def job(N):
        c = build_contour(zs, N)
        return c, verify_contour(c, zs, N)

    summary = []
    for N, (c, rep) in zip(cfg.contour_n, _map(job, list(cfg.contour_n), threads)):
        name = f"contour_N{N}.csv"
        with out.atomic(name) as tmp:
            c.to_csv(tmp, header=out.header + f"# N={N} R_N={c.R:.15g} delta={c.delta:.6g} bumps={c.centers.size}\n")
        summary.append([N, _g(c.R), _g(c.delta), c.centers.size, _g(rep.K_emp), _g(rep.eps_emp), rep.inside_count,
                        int(rep.annulus_ok)])
        print(f"N={N} R_N={c.R:.6g} K={rep.K_emp:.4g} eps={rep.eps_emp:.4g} inside={rep.inside_count}")
    out.table("contours.csv", ["N", "R_N", "delta", "bumps", "K_emp", "eps_emp", "inside_count", "annulus_ok"], summary)
    if cfg.contour_n:
        out.gnuplot("contour.gp", f"contour_N{cfg.contour_n[0]}.csv", 1, [2], title="radial profile")
    return EXIT_OK


def cmd_norms(cfg, out: Output, threads: int = 1) -> int:
    from .interp import flambda_norm_growth

    _require_power_two(cfg)
    radii = sorted(cfg.norm_radii)
    s = _sine_type(cfg, max(radii) + 8.0)
    vals = flambda_norm_growth(s, cfg.norm_index, radii, _quad_spec(cfg))
    rows = [[_g(R), f"{v:.12e}"] for R, v in zip(radii, vals)]
    for R, v in zip(radii, vals):
        print(f"R={R:g} partial_norm_sq={v:.8g}")
    out.table("norms.csv", ["R", "partial_norm_sq"], rows)
    out.gnuplot("norms.gp", "norms.csv", 1, [2], logx=True, title="truncated norm of f_lambda")
    return EXIT_OK


COMMANDS = {
    "certify": cmd_certify,
    "converge": cmd_converge,
    "diverge": cmd_diverge,
    "contour-dump": cmd_contour_dump,
    "norms": cmd_norms,
}


def build_parser():
    ap = argparse.ArgumentParser(prog="fockinterp", description="Lagrange interpolation experiments in Fock spaces")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    ap.add_argument("command", choices=sorted(COMMANDS))
    ap.add_argument("config", help="key=value configuration file")
    ap.add_argument("--out", default=".", help="output directory (default: current)")
    ap.add_argument("--threads", type=int, default=1, help="maximum worker threads")
    ap.add_argument("-v", "--verbose", action="store_true")
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    if args.threads < 1:
        print("--threads must be >= 1", file=sys.stderr)
        return EXIT_USAGE
    try:
        with open(args.config) as fh:
            text = fh.read()
        cfg = parse_config(text)
        out = Output(args.out, cfg, text, args.command)
        return COMMANDS[args.command](cfg, out, args.threads)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ValueError as exc:
        print(f"invalid parameters: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except RuntimeError as exc:
        print(f"failed: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
