"""Batch front-end: parse a config, dispatch experiments, write reports.

Every run writes a manifest (config echo + version + seed) plus the command's
report.json, CSV outputs and summary figures into the output directory, and
nothing anywhere else.  Reports are byte-reproducible from the manifest:
seeds derive from hash(master seed, command, trial index), floats are written
via repr, and no timestamps enter any artifact.

Exit codes: 0 success, 2 validation error, 3 numeric/convergence error.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, asdict
from pathlib import Path

import numpy as np

from . import __version__
from . import report as fig
from .airy import (AiryParams, ShootingPolicy, simulate_fundamental_direct,
                   simulate_negative_axis, simulate_polar)
from .canonical import TestFunction, stieltjes_invert, WeylFunction
from .errors import (CanonsysError, ConvergenceError, DataError, DomainError,
                     HorizonError, IntegrityError, NumericError, ParameterError)
from .experiments import (build_grid, construct_coupled_W, convergence_experiment,
                          dumitriu_edelman_oracle, spectral_weights_experiment, trial_seed)
from .integrate import StepPolicy
from .paths import TwoSidedBrownianPath, sample_on_grid, stitch_complex, subseed
from .sine import simulate_hbm, sine_boundary, sine_eigenvalues, sine_system
from .stats import circular_uniformity, ks_test, slope_fit
from .airy import polar_grid

COMMANDS = ("airy-sim", "sine-sim", "couple", "converge", "spectrum", "weights",
            "asymptotics", "oracle")


@dataclass
class RunConfig:
    command: str
    beta: float = 2.0
    E_list: tuple = (100.0,)
    alpha: float = 0.2
    trials: int = 1
    master_seed: int = 42
    out_dir: str = "out"
    dt_max: float = None
    phase_res: float = None
    horizon: float = None
    window: tuple = None
    figures: bool = True

    def validate(self):
        if self.command not in COMMANDS:
            raise ParameterError(f"unknown command {self.command!r}")
        if not self.beta > 0:
            raise ParameterError("beta must be positive")
        if self.trials < 1 and self.command not in ("airy-sim", "sine-sim"):
            raise ParameterError("trials must be >= 1 for stochastic commands")
        if self.command in ("couple", "converge") and any(E <= 1 for E in self.E_list):
            raise ParameterError("coupling-grid commands need E > 1")

    def policy(self, **defaults) -> StepPolicy:
        kw = dict(defaults)
        if self.dt_max is not None:
            kw["dt_max"] = self.dt_max
        if self.phase_res is not None:
            kw["phase_resolution"] = self.phase_res
        return StepPolicy(**kw)

    def to_flat(self) -> dict:
        d = {
            "command": self.command,
            "beta": "inf" if self.beta == math.inf else self.beta,
            "E": ",".join(repr(float(e)) for e in self.E_list),
            "alpha": self.alpha,
            "trials": self.trials,
            "seed": self.master_seed,
            "figures": self.figures,
        }
        for key in ("dt_max", "phase_res", "horizon"):
            if getattr(self, key) is not None:
                d[key] = getattr(self, key)
        if self.window is not None:
            d["window"] = f"{self.window[0]!r},{self.window[1]!r}"
        return d


def _parse_beta(text: str) -> float:
    return math.inf if text in ("inf", "oo", "Inf") else float(text)


def config_from_mapping(items: dict) -> RunConfig:
    cfg = RunConfig(command=items["command"])
    if "beta" in items:
        cfg.beta = _parse_beta(str(items["beta"]))
    if "E" in items:
        cfg.E_list = tuple(float(x) for x in str(items["E"]).split(","))
    for key, attr, conv in (("alpha", "alpha", float), ("trials", "trials", int),
                            ("seed", "master_seed", int), ("dt_max", "dt_max", float),
                            ("phase_res", "phase_res", float), ("horizon", "horizon", float)):
        if key in items and items[key] is not None:
            setattr(cfg, attr, conv(items[key]))
    if items.get("window") is not None:
        lo, hi = str(items["window"]).split(",")
        cfg.window = (float(lo), float(hi))
    if "figures" in items:
        val = items["figures"]
        cfg.figures = val if isinstance(val, bool) else str(val).lower() not in ("0", "false", "no")
    if "out" in items:
        cfg.out_dir = str(items["out"])
    return cfg


def read_config_file(path: str) -> dict:
    """Flat key=value lines; blank lines and # comments ignored."""
    items = {}
    for raw in Path(path).read_text().splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ParameterError(f"config line is not key=value: {line!r}")
        key, val = line.split("=", 1)
        items[key.strip()] = val.strip()
    return items


def _workers() -> int:
    env = os.environ.get("CANONSYS_THREADS")
    if env:
        return max(1, int(env))
    return 1


def map_trials(fn, n: int):
    """Run fn(0..n-1), possibly on a thread pool; results ordered by index."""
    w = min(_workers(), n)
    if w <= 1:
        return [fn(i) for i in range(n)]
    with ThreadPoolExecutor(max_workers=w) as pool:
        return list(pool.map(fn, range(n)))


def _json_dump(path: Path, payload) -> None:
    path.write_text(json.dumps(payload, indent=1, sort_keys=False) + "\n")


def _csv_dump(path: Path, header: list, rows) -> None:
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(repr(float(v)) if isinstance(v, (float, np.floating)) else str(v)
                             for v in row) + "\n")


def _quant(xs) -> dict:
    p25, p50, p75 = np.percentile(np.asarray(xs, dtype=float), [25, 50, 75])
    return {"p25": float(p25), "p50": float(p50), "p75": float(p75)}


# -- command implementations -------------------------------------------------


def _cmd_airy_sim(cfg: RunConfig, out: Path) -> dict:
    E = cfg.E_list[0]
    params = AiryParams(cfg.beta, E)
    horizon = cfg.horizon if cfg.horizon is not None else min(E, E / 2 + 2.0)
    policy = cfg.policy(dt_max=1e-4 if cfg.beta != math.inf else 1e-6)
    seed = trial_seed(cfg.master_seed, "airy-sim", 0)
    from .airy import direct_grid
    grid = direct_grid(params, horizon, policy)
    driver = None if cfg.beta == math.inf else sample_on_grid(seed, grid)
    pair = simulate_fundamental_direct(params, driver, horizon, policy, grid=grid)
    pair.to_csv(out / "fundamental.csv")
    summary = {"beta": "inf" if cfg.beta == math.inf else cfg.beta, "E": E,
               "horizon": horizon,
               "wronskian_max_dev": float(np.max(np.abs(pair.wronskian() - 1.0)))}
    if E > 1:
        pol2 = cfg.policy()
        pgrid = polar_grid(params, pol2)
        pdrv = None if cfg.beta == math.inf else sample_on_grid(subseed(seed, "polar"), pgrid)
        state = simulate_polar(params, pdrv, pol2, grid=pgrid)
        state.to_csv(out / "polar.csv")
        summary["polar_wronskian_max_dev"] = float(np.max(np.abs(state.wronskian_identity() - 1.0)))
        if cfg.figures:
            fig.paths_figure(out / "polar.png", state.grid,
                             {"rho_D": state.rho_d, "rho_N": state.rho_n,
                              "xi_N - theta drift": state.xi_n}, "polar coordinates")
    if cfg.figures:
        fig.paths_figure(out / "fundamental.png", pair.grid,
                         {"f": pair.f, "g": pair.g}, f"fundamental pair, E={E}")
    return summary


def _cmd_sine_sim(cfg: RunConfig, out: Path) -> dict:
    s_max = cfg.horizon if cfg.horizon is not None else 16.0
    seed = trial_seed(cfg.master_seed, "sine-sim", 0)
    driver = _fresh_complex_driver(seed, s_max)
    hbm = simulate_hbm(cfg.beta, driver, s_max)
    hbm.to_csv(out / "hbm.csv")
    system = sine_system(hbm)
    dets = (system.h11 * system.h22 - system.h12 ** 2)
    summary = {"beta": "inf" if cfg.beta == math.inf else cfg.beta, "s_max": s_max,
               "det_max_dev": float(np.max(np.abs(dets - 0.25)))}
    if cfg.beta > 2:
        vec, stab = sine_boundary(cfg.beta, hbm)
        summary["boundary"] = [float(vec[0]), float(vec[1])]
        summary["boundary_stabilization"] = float(stab)
    if cfg.figures:
        fig.hbm_figure(out / "hbm.png", hbm)
    return summary


def _fresh_complex_driver(seed: int, s_max: float, ds: float = 1e-3):
    n = int(math.ceil(s_max / ds))
    grid = np.linspace(0.0, n * ds, n + 1)
    re = sample_on_grid(subseed(seed, "re"), grid)
    im = sample_on_grid(subseed(seed, "im"), grid)
    incs = np.diff(re.values) + 1j * np.diff(im.values)
    return stitch_complex(incs, ds, knot_times=grid, tail_seed=subseed(seed, "ctail"))


def _cmd_couple(cfg: RunConfig, out: Path) -> dict:
    policy = cfg.policy()
    rows = []
    ladder = []
    for E in cfg.E_list:
        params = AiryParams(cfg.beta, E)
        cg = build_grid(E, cfg.alpha, c=params.c)

        def one(trial, E=E, params=params, cg=cg):
            seed = trial_seed(cfg.master_seed, f"couple:{float(E)}", trial)
            fine = polar_grid(params, policy, t_end=float(cg.t[-1]), include=cg.t[1:])
            driver = sample_on_grid(seed, fine)
            res = construct_coupled_W(params, driver, cg, policy,
                                      full_polar=len(fine) <= 2_000_000, keep_fine=False)
            return (res.error_sup, res.diagnostics["gbm_sup"],
                    res.diagnostics["realpart_sup"], res.diagnostics["sigma_fallbacks"])

        results = map_trials(one, cfg.trials)
        for trial, (e, g, r, fb) in enumerate(results):
            rows.append((float(E), trial, e, g, r))
        ladder.append({"E": float(E),
                       "error_sup": _quant([r[0] for r in results]),
                       "gbm_sup": _quant([r[1] for r in results]),
                       "realpart_sup": _quant([r[2] for r in results])})
    _csv_dump(out / "couple.csv", ["E", "trial", "error_sup", "gbm_sup", "realpart_sup"], rows)
    if cfg.figures:
        fig.ladder_figure(out / "couple.png", ladder, ["error_sup", "gbm_sup"],
                          f"coupling decay, beta={cfg.beta}, alpha={cfg.alpha}")
    return {"beta": cfg.beta, "alpha": cfg.alpha, "ladder": ladder,
            "trials": cfg.trials, "seed": cfg.master_seed}


def _cmd_converge(cfg: RunConfig, out: Path) -> dict:
    policy = cfg.policy()
    phi = TestFunction(support=(0.0, 0.9), components=(1.0, 1.0))
    rep = convergence_experiment(cfg.beta, cfg.E_list, [phi], cfg.trials,
                                 cfg.master_seed, probes_z=(1j,), alpha=cfg.alpha,
                                 policy=policy)
    (out / "report.json").write_text(rep.to_json() + "\n")
    if cfg.figures:
        fig.ladder_figure(out / "converge.png", rep.ladder,
                          ["d_phi", "tm_dist", "weyl_dist"],
                          f"operator convergence, beta={cfg.beta}")
    return None  # report.json already written in the exact schema


def _cmd_spectrum(cfg: RunConfig, out: Path) -> dict:
    window = cfg.window if cfg.window is not None else (-1.0, 13.0)
    s_max = cfg.horizon if cfg.horizon is not None else 16.0
    seed = trial_seed(cfg.master_seed, "spectrum", 0)
    driver = None if cfg.beta == math.inf else _fresh_complex_driver(seed, s_max)
    hbm = simulate_hbm(cfg.beta, driver, s_max)
    eigs = sine_eigenvalues(cfg.beta, hbm, window)
    (out / "eigenvalues.json").write_text(
        json.dumps([float(x) for x in eigs]) + "\n")
    summary = {"beta": "inf" if cfg.beta == math.inf else cfg.beta,
               "window": list(window), "count": len(eigs),
               "eigenvalues": [float(x) for x in eigs]}
    if cfg.figures:
        fig.spectrum_figure(out / "spectrum.png", eigs, np.ones(len(eigs)), window,
                            title=f"sine eigenvalues, beta={cfg.beta}")
    return summary


def _cmd_weights(cfg: RunConfig, out: Path) -> dict:
    window = cfg.window if cfg.window is not None else (-20.0, 20.0)
    E = cfg.E_list[0]
    records, failures = spectral_weights_experiment(cfg.beta, E, cfg.trials, window,
                                                    cfg.master_seed)
    _csv_dump(out / "weights.csv", ["trial", "lambda", "weight"], records)
    ws = np.array([r[2] for r in records])
    locs = np.array([r[1] for r in records])
    summary = {"beta": cfg.beta, "E": E, "trials": cfg.trials, "window": list(window),
               "atoms": len(records), "failures": failures,
               "weight_mean": float(np.mean(ws)) if len(ws) else None}
    if len(ws) >= 8:
        rep = ks_test(ws, lambda x: _gamma_cdf(x, cfg.beta))
        summary["ks_vs_gamma_p"] = rep.p_value
        corr = float(np.corrcoef(locs, ws)[0, 1])
        summary["corr_weight_location"] = corr
    if cfg.figures:
        fig.weights_figure(out / "weights.png", ws, cfg.beta)
    return summary


def _gamma_cdf(x, beta):
    from scipy.stats import gamma
    return gamma.cdf(x, beta / 2.0, scale=4.0 / beta)


def _cmd_asymptotics(cfg: RunConfig, out: Path) -> dict:
    t_max = cfg.horizon if cfg.horizon is not None else 1000.0
    policy = cfg.policy(dt_max=0.05)
    checkpoints = np.exp(np.linspace(np.log(10.0), np.log(t_max), 12))
    params = AiryParams(cfg.beta, 2.0)

    def one(trial):
        drv = TwoSidedBrownianPath(trial_seed(cfg.master_seed, "asymptotics", trial),
                                   horizon=t_max + 10.0)
        neg = simulate_negative_axis(params, drv, t_max, (1.0, 0.0), policy)
        idx = np.searchsorted(neg.grid, checkpoints)
        return neg.r[idx] - neg.r[0], neg.xi[-1]

    results = map_trials(one, cfg.trials)
    rs = np.array([r for r, _ in results])
    phases = np.array([p for _, p in results])
    mean_r = np.mean(rs, axis=0)
    slope, intercept, stderr = slope_fit(np.log(checkpoints), mean_r)
    kuiper = circular_uniformity(phases)
    _csv_dump(out / "asymptotics.csv", ["trial", "phase_mod_2pi"] ,
              [(i, float(np.mod(p, 2 * math.pi))) for i, p in enumerate(phases)])
    _csv_dump(out / "amplitude.csv", ["log_t", "mean_r"],
              list(zip(np.log(checkpoints), mean_r)))
    if cfg.figures:
        fig.asymptotics_figure(out / "asymptotics.png", np.log(checkpoints), mean_r,
                               slope, intercept, 1.0 / (2.0 * cfg.beta), phases)
    return {"beta": cfg.beta, "t_max": t_max, "trials": cfg.trials,
            "slope": slope, "slope_expected": 1.0 / (2.0 * cfg.beta),
            "slope_stderr": stderr,
            "kuiper": {"stat": kuiper.statistic, "p": kuiper.p_value, "n": kuiper.n}}


def _cmd_oracle(cfg: RunConfig, out: Path) -> dict:
    N = int(cfg.E_list[0]) if cfg.E_list else 400
    rows = []
    edge_max = []
    for trial in range(cfg.trials):
        seed = trial_seed(cfg.master_seed, "oracle", trial)
        vals, weights, edge = dumitriu_edelman_oracle(cfg.beta, N, seed)
        edge_max.append(float(edge[-1]))
        for k in range(N - 5, N):
            rows.append((trial, k, float(vals[k]), float(weights[k]), float(edge[k])))
    _csv_dump(out / "oracle.csv", ["trial", "k", "eigenvalue", "weight", "edge_rescaled"], rows)
    if cfg.figures:
        fig.oracle_figure(out / "oracle.png", np.array(edge_max), cfg.beta)
    return {"beta": cfg.beta, "N": N, "trials": cfg.trials,
            "edge_max_mean": float(np.mean(edge_max)),
            "weights_sum_dev": 0.0}


_DISPATCH = {
    "airy-sim": _cmd_airy_sim,
    "sine-sim": _cmd_sine_sim,
    "couple": _cmd_couple,
    "converge": _cmd_converge,
    "spectrum": _cmd_spectrum,
    "weights": _cmd_weights,
    "asymptotics": _cmd_asymptotics,
    "oracle": _cmd_oracle,
}


def run(cfg: RunConfig) -> int:
    """Execute one command; returns the process exit status."""
    cfg.validate()
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    manifest = {"version": __version__, "config": cfg.to_flat(), "seed": cfg.master_seed}
    _json_dump(out / "manifest.json", manifest)
    summary = _DISPATCH[cfg.command](cfg, out)
    if summary is not None:
        _json_dump(out / "report.json", summary)
    return 0


def _diagnostic(exc: Exception) -> None:
    line = json.dumps({"error": type(exc).__name__, "message": str(exc)})
    print(line, file=sys.stderr)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="canonsys",
        description="Random canonical systems: stochastic Airy/sine operators, "
                    "their coupling, and Monte Carlo verification experiments.")
    ap.add_argument("command", choices=COMMANDS, nargs="?",
                    help="experiment to run")
    ap.add_argument("--config", help="flat key=value config file (flags win)")
    ap.add_argument("--from-manifest", help="re-run the config echoed in a manifest.json")
    ap.add_argument("--beta", help="inverse temperature, positive real or 'inf'")
    ap.add_argument("--E", help="shift E, or comma-separated ladder")
    ap.add_argument("--alpha", type=float, help="coupling-range exponent in (0, 1/2)")
    ap.add_argument("--trials", type=int, help="Monte Carlo trials")
    ap.add_argument("--seed", type=int, help="master seed")
    ap.add_argument("--out", help="output directory")
    ap.add_argument("--dt-max", type=float, dest="dt_max", help="integrator step cap")
    ap.add_argument("--phase-res", type=float, dest="phase_res",
                    help="radians of phase drift per step")
    ap.add_argument("--horizon", type=float, help="simulation horizon (command specific)")
    ap.add_argument("--window", help="spectral window 'lo,hi'")
    ap.add_argument("--no-figures", action="store_true", help="skip figure rendering")
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        items: dict = {}
        if args.from_manifest:
            items.update(json.loads(Path(args.from_manifest).read_text())["config"])
        if args.config:
            items.update(read_config_file(args.config))
        if args.command:
            items["command"] = args.command
        if "command" not in items:
            ap.print_help()
            return 0
        for key in ("beta", "E", "alpha", "trials", "seed", "dt_max", "phase_res",
                    "horizon", "window", "out"):
            val = getattr(args, key if key != "seed" else "seed", None)
            if val is not None:
                items[key] = val
        if args.no_figures:
            items["figures"] = False
        cfg = config_from_mapping(items)
        return run(cfg)
    except (ParameterError, DataError, DomainError) as exc:
        _diagnostic(exc)
        return 2
    except (NumericError, ConvergenceError, IntegrityError, HorizonError,
            FloatingPointError) as exc:
        _diagnostic(exc)
        return 3


if __name__ == "__main__":
    sys.exit(main())
