"""Command-line front end: one subcommand per checkable claim.

Examples::

    quenchlab schedule --ell pow2 --kmax 6
    quenchlab drift --ell pow2 --kmax 2 --k 2
    quenchlab quenched --family iid --n 10000 --reps 10000 --format json
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, fields
from typing import Optional

from . import counterexample as cx
from . import families, harness, reports
from .innovations import LatticeError, make_lattice
from .schedule import (
    ScheduleError,
    build_schedule,
    check_summability,
    enumerate_block_moments,
    exact_block_moments,
    pow2_ell,
)

COMMANDS = (
    "schedule", "moments", "telescope", "drift", "heyde",
    "hannan", "mcleish", "quenched", "ergodic",
)
# Fixed descriptive KS thresholds reported alongside the quenched comparison.
KS_TO_NORMAL_MAX = 0.05
KS_QUENCHED_ANNEALED_MAX = 0.03
FAMILIES = ("iid", "gaussian", "three_point", "linear", "counterexample", "perturbed")


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    command: str
    ell: str = "pow2"
    kmax: int = 2
    seed: int = 0
    n: Optional[int] = None
    grid: Optional[str] = None
    reps: Optional[int] = None
    family: str = "iid"
    k: Optional[int] = None
    coeffs: str = "geometric"
    mscale: float = 1.0
    eps: float = 0.5
    lam: float = 2.0
    sign: int = 1
    out: Optional[str] = None
    cdf_out: Optional[str] = None
    format: str = "csv"
    workers: Optional[int] = None

    def validate(self):
        if self.command not in COMMANDS:
            raise ConfigError(f"unknown command {self.command!r}")
        for name in ("kmax", "n", "reps", "k", "workers"):
            v = getattr(self, name)
            if v is not None and v < 1:
                raise ConfigError(f"--{name} must be positive")
        if self.seed < 0:
            raise ConfigError("--seed must be non-negative")
        for name in ("eps", "lam"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"--{name} must be positive")
        if self.mscale < 0:
            raise ConfigError("--mscale must be non-negative")
        if self.family not in FAMILIES:
            raise ConfigError(f"--family must be one of {FAMILIES}")
        if self.format not in ("csv", "json"):
            raise ConfigError("--format must be csv or json")
        if self.sign not in (1, -1):
            raise ConfigError("--sign must be 1 or -1")
        return self

    @classmethod
    def merge_file(cls, cfg: "RunConfig", path: str) -> "RunConfig":
        with open(path) as fh:
            data = json.load(fh)
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        for key, value in data.items():
            setattr(cfg, key, value)
        return cfg


def _schedule(cfg: RunConfig):
    if cfg.ell == "pow2":
        ell = pow2_ell(cfg.kmax)
    else:
        ell = tuple(int(x) for x in str(cfg.ell).split(","))
    return build_schedule(ell, min(cfg.kmax, len(ell)))


def _grid(cfg: RunConfig, default):
    if cfg.grid is None:
        return list(default)
    return [int(x) for x in str(cfg.grid).split(",")]


def _family(cfg: RunConfig):
    fam = cfg.family
    if fam == "iid":
        return families.iid()
    if fam == "gaussian":
        return families.iid("gaussian")
    if fam == "three_point":
        return families.iid("three_point", _schedule(cfg), law_block=1)
    if fam == "linear":
        if cfg.coeffs == "geometric":
            a = [2.0 ** -i for i in range(21)]
        elif cfg.coeffs == "harmonic":
            a = [1.0 / (i + 1) for i in range(families.MAX_SUPPORT + 1)]
        else:
            a = [float(x) for x in cfg.coeffs.split(",")]
        return families.linear(a)
    if fam == "counterexample":
        return families.counterexample(_schedule(cfg))
    return families.perturbed(_schedule(cfg), cfg.mscale)


def cmd_schedule(cfg):
    s = _schedule(cfg)
    rep = check_summability(s)
    rows = []
    for k in range(1, s.k_max + 1):
        a, b = rep.log_summands[k - 1]
        rows.append({
            "k": k, "ell": s.ell_k(k), "M": s.M_k(k), "N": s.N_k(k),
            "term": rep.terms[k - 1], "partial_sum": rep.partial_sums[k - 1],
            "log_first": a, "log_second": b,
        })
    cols = ["k", "ell", "M", "N", "term", "partial_sum", "log_first", "log_second"]
    return rows, cols, {"tail_bound": rep.tail_marker if rep.tail_bound is not None else "unbounded"}


def cmd_moments(cfg):
    s = _schedule(cfg)
    rows = []
    for k in range(1, s.k_max + 1):
        m = exact_block_moments(s, k)
        row = {"k": k, "ell": s.ell_k(k), "e_l1": m.e_l1, "e_l2_sq": m.e_l2_sq,
               "f_l2_sq": m.f_l2_sq, "g_l1_bound": m.g_l1_bound}
        if s.ell_k(k) <= 3:
            e = enumerate_block_moments(s, k)
            row.update(enum_e_l2_sq=e.e_l2_sq, enum_f_l2_sq=e.f_l2_sq, enum_g_l1=e.g_l1)
        rows.append(row)
    cols = ["k", "ell", "e_l1", "e_l2_sq", "f_l2_sq", "g_l1_bound", "enum_e_l2_sq", "enum_f_l2_sq", "enum_g_l1"]
    return rows, cols, None


def cmd_telescope(cfg):
    s = _schedule(cfg)
    n_max = cfg.n or 200
    seeds = cfg.reps or 100
    rows = []
    for seed in range(cfg.seed, cfg.seed + seeds):
        lat = make_lattice(seed, s)
        d = cx.partial_sums(lat, n_max, "direct")
        t = cx.partial_sums(lat, n_max, "telescoped")
        rows.append({"seed": seed, "n_max": n_max, "max_abs_diff": float(abs(d - t).max()),
                     "max_abs_sum": float(abs(d).max())})
    return rows, ["seed", "n_max", "max_abs_diff", "max_abs_sum"], None


def cmd_drift(cfg):
    s = _schedule(cfg)
    k = cfg.k or s.k_max
    r = cx.drift_on_forced_event(s, k, cfg.n, sign=cfg.sign)
    row = {"k": r.k, "n": r.n, "I_value": r.I_value, "II_value": r.II_value, "nu": r.nu,
           "ratio": r.ratio, "truncated": r.truncated, "sign": r.sign,
           "bonferroni_bound": cx.bonferroni_bound(s, k)}
    return [row], list(row), None


def cmd_heyde(cfg):
    s = _schedule(cfg)
    grid = _grid(cfg, [2 ** j for j in range(4, 15)])
    rows = [{"n": r.n, "k": r.k, "variance_over_n": r.variance_over_n, "p0_norm": r.p0_norm}
            for r in cx.heyde_report(s, grid)]
    return rows, ["n", "k", "variance_over_n", "p0_norm"], None


def cmd_hannan(cfg):
    cfg.family = "linear"
    spec = _family(cfg)
    i_max = cfg.n or min(spec.d, 1000)
    rep = families.hannan_partial_sums(spec, i_max)
    step = max(1, i_max // 20)
    idx = sorted(set(range(0, i_max + 1, step)) | {i_max})
    rows = [{"i": i, "partial_sum": float(rep.partial_sums[i])} for i in idx]
    return rows, ["i", "partial_sum"], {"verdict": rep.verdict, "decay_exponent": rep.decay_exponent}


def cmd_mcleish(cfg):
    spec = _family(cfg)
    grid = _grid(cfg, [cfg.n or 100])
    rep = harness.mcleish_report(spec, grid, cfg.reps or 1000, eps=cfg.eps, seed=cfg.seed, workers=cfg.workers)
    rows = []
    for r in rep.rows:
        for name in ("sum_sq", "max_tail", "max_sq", "max_abs"):
            est = getattr(r, name)
            rows.append({"n": r.n, "mode": name, "estimate": est.value, "se": est.se, "bound": float("nan")})
    return rows, ["n", "mode", "estimate", "se", "bound"], None


def cmd_quenched(cfg):
    spec = _family(cfg)
    n = cfg.n or 1000
    R = cfg.reps or 1000
    sigma2 = families.limit_variance(spec)
    q = harness.simulate(spec, n, R, "quenched", seed=cfg.seed, workers=cfg.workers)
    a = harness.simulate(spec, n, R, "annealed", seed=cfg.seed + 1, workers=cfg.workers)
    if cfg.cdf_out:
        for sim in (q, a):
            with open(f"{cfg.cdf_out}_{sim.mode}.csv", "w", newline="") as fh:
                reports.write_cdf(sim.cdf, fh)
    rows = [
        {"n": n, "mode": "quenched", "estimate": harness.ks_to_normal(q.cdf, sigma2), "se": float("nan"), "bound": KS_TO_NORMAL_MAX},
        {"n": n, "mode": "annealed", "estimate": harness.ks_to_normal(a.cdf, sigma2), "se": float("nan"), "bound": KS_TO_NORMAL_MAX},
        {"n": n, "mode": "quenched_vs_annealed", "estimate": harness.ks_two_sample(q.cdf, a.cdf),
         "se": float("nan"), "bound": KS_QUENCHED_ANNEALED_MAX},
        {"n": n, "mode": "quenched_nu", "estimate": float(q.nu.mean()), "se": 0.0, "bound": float("nan")},
    ]
    return rows, ["n", "mode", "estimate", "se", "bound"], {"sigma2": sigma2, "reps": R}


def cmd_ergodic(cfg):
    spec = _family(cfg)
    grid = _grid(cfg, [cfg.n or 10000])
    rows = [{"n": n, "mode": "ergodic", "estimate": harness.ergodic_average(spec, n, seed=cfg.seed),
             "se": float("nan"), "bound": families.f_l2_sq(spec)} for n in grid]
    return rows, ["n", "mode", "estimate", "se", "bound"], None


HANDLERS = {name: globals()[f"cmd_{name}"] for name in COMMANDS}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--ell", default=argparse.SUPPRESS, help="pow2 or a comma list of block lengths")
    common.add_argument("--kmax", type=int, default=argparse.SUPPRESS)
    common.add_argument("--seed", type=int, default=argparse.SUPPRESS)
    common.add_argument("--n", type=int, default=argparse.SUPPRESS)
    common.add_argument("--grid", default=argparse.SUPPRESS, help="comma list of n values")
    common.add_argument("--reps", type=int, default=argparse.SUPPRESS)
    common.add_argument("--family", choices=FAMILIES, default=argparse.SUPPRESS)
    common.add_argument("--k", type=int, default=argparse.SUPPRESS)
    common.add_argument("--coeffs", default=argparse.SUPPRESS, help="geometric, harmonic or a comma list")
    common.add_argument("--mscale", type=float, default=argparse.SUPPRESS)
    common.add_argument("--eps", type=float, default=argparse.SUPPRESS)
    common.add_argument("--lam", type=float, default=argparse.SUPPRESS)
    common.add_argument("--sign", type=int, choices=(1, -1), default=argparse.SUPPRESS)
    common.add_argument("--workers", type=int, default=argparse.SUPPRESS)
    common.add_argument("--out", default=argparse.SUPPRESS)
    common.add_argument("--cdf-out", dest="cdf_out", default=argparse.SUPPRESS,
                        help="prefix for two-column CDF files (quenched only)")
    common.add_argument("--format", choices=("csv", "json"), default=argparse.SUPPRESS)
    common.add_argument("--config", default=None, help="JSON file; its keys override flags")

    parser = argparse.ArgumentParser(prog="quenchlab", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sub.add_parser(name, parents=[common])
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = vars(parser.parse_args(argv))
    config_path = args.pop("config", None)
    try:
        cfg = RunConfig(**args)
        if config_path:
            cfg = RunConfig.merge_file(cfg, config_path)
        cfg.validate()
        rows, cols, meta = HANDLERS[cfg.command](cfg)
    except (ConfigError, ScheduleError) as exc:
        parser.error(str(exc))
    except (cx.WindowError, LatticeError) as exc:
        print(f"quenchlab: infeasible window: {exc}", file=sys.stderr)
        return 3
    if cfg.out:
        with open(cfg.out, "w", newline="") as fh:
            reports.write(rows, cols, fh, cfg.format, meta)
    else:
        reports.write(rows, cols, sys.stdout, cfg.format, meta)
        if meta and cfg.format == "csv":
            for key, value in meta.items():
                print(f"# {key}: {reports.format_value(value)}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
