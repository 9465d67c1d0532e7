"""Command-line front end: verify | reduced | simulate | shoot."""

from __future__ import annotations

import argparse
import dataclasses
import os
import sys
from importlib import resources

import numpy as np

from . import artifacts
from .config import RunConfig, dump_run_config, load_run_config, run_config_from_dict
from .diagnostics import gauges, inequality_monitors
from .grid import make_grid
from .modulation import track
from .pde import build_initial_data
from .reduced import (
    ReducedState,
    integrate_centers,
    reduced_config,
    reference_centers,
)
from .shooting import ball_to_params, params_to_ball, search
from .solitons import alternating_params
from .verify import format_table, run_checks


def default_config_path() -> str:
    return str(resources.files("multisoliton.data") / "demo_zeta0_0.json")


def _load_config(args) -> RunConfig:
    if args.config:
        cfg = load_run_config(args.config)
    else:
        cfg = load_run_config(default_config_path())
    problem = cfg.problem
    sim = cfg.sim
    shooting = cfg.shooting
    if args.n is not None:
        sim = dataclasses.replace(sim, n=args.n)
    if args.s0 is not None:
        problem = dataclasses.replace(problem, s0=args.s0)
    if args.horizon is not None:
        cfg = dataclasses.replace(cfg, horizon=args.horizon)
    threads = args.threads
    env = os.environ.get("MULTISOLITON_THREADS")
    if env is not None:
        threads = int(env)
    if threads is not None:
        shooting = dataclasses.replace(shooting, threads=threads)
    cfg = dataclasses.replace(cfg, problem=problem, sim=sim, shooting=shooting)
    if args.out is not None:
        cfg = dataclasses.replace(cfg, out_dir=args.out)
    return cfg


def cmd_verify(cfg: RunConfig) -> int:
    results = run_checks(cfg)
    print(format_table(results))
    failed = [r for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} checks passed")
    return 1 if failed else 0


def cmd_reduced(cfg: RunConfig) -> int:
    rc = reduced_config(cfg.problem)
    s0 = cfg.problem.s0
    horizon = cfg.horizon if cfg.horizon is not None else 10 * s0
    out = cfg.out_dir
    header = (
        ["s"]
        + [f"zeta_{i}" for i in range(1, rc.k + 1)]
        + [f"xi_{i}" for i in range(1, rc.k + 1)]
        + [f"phi_{i}" for i in range(1, rc.k + 1)]
    )
    csv_path = os.path.join(out, "reduced_trajectory.csv")
    if horizon <= s0:
        artifacts.write_csv(csv_path, header, [])
        dump_run_config(cfg, os.path.join(out, "effective_config.json"))
        print(f"wrote header-only {csv_path} (zero-length horizon)")
        return 0
    z0 = reference_centers(rc, s0) + rc.zeta0
    traj = integrate_centers(rc, ReducedState(s0, z0), horizon)
    xi = traj.xi()
    phi = traj.phi()
    rows = [
        [traj.s[j], *traj.zeta[j], *xi[j], *phi[j]]
        for j in range(len(traj.s))
    ]
    artifacts.write_csv(csv_path, header, rows)
    series = [(f"zeta_{i + 1}", traj.zeta[:, i]) for i in range(rc.k)]
    refs = np.array([reference_centers(rc, s) + rc.zeta0 for s in traj.s])
    series += [(f"ref_{i + 1}", refs[:, i]) for i in range(rc.k)]
    artifacts.line_plot_svg(
        os.path.join(out, "reduced_centers.svg"),
        traj.s,
        series,
        "soliton centers vs reference",
        "s",
        "zeta",
    )
    dump_run_config(cfg, os.path.join(out, "effective_config.json"))
    print(f"wrote {csv_path}")
    return 0


def _demo_point(cfg: RunConfig) -> tuple[np.ndarray, float]:
    if cfg.nu0 is not None and cfg.phi10 is not None:
        return np.asarray(cfg.nu0, dtype=float), float(cfg.phi10)
    return np.zeros(cfg.problem.k), 0.0


def cmd_simulate(cfg: RunConfig) -> int:
    prob = cfg.problem
    out = cfg.out_dir
    g = make_grid(cfg.sim.n, prob.p)
    s0 = prob.s0
    horizon = cfg.horizon if cfg.horizon is not None else cfg.shooting.s_max
    nu0, phi10 = _demo_point(cfg)
    st0 = build_initial_data(prob, g, s0, nu0, phi10, cfg.shooting.delta)
    rc = reduced_config(prob)
    shift = prob.zeta0 + ((prob.p - 1) / 2) * phi10
    d_hat = -np.tanh(reference_centers(rc, s0) + shift)
    guess = alternating_params(d_hat, nu0)
    traj = track(
        prob, g, st0, s0, horizon, guess,
        mod=cfg.modulation, sim=cfg.sim, delta=cfg.shooting.delta,
    )
    if traj.failure is not None:
        print(f"tracking ended early: {traj.failure[0]} after s={traj.failure[1]:.4f}")

    k = prob.k
    s = np.asarray(traj.s)
    xi = traj.xi()
    phi = traj.phi()
    J, Jbar = traj.gap_sums()
    N = traj.shrink_norms()
    header = ["s", "normH_q"]
    for i in range(1, k + 1):
        header += [f"d_{i}", f"nu_{i}", f"zeta_{i}", f"xi_{i}", f"phi_{i}"]
    header += ["J", "Jbar", "N"]
    rows = []
    for j in range(len(s)):
        row = [s[j], traj.normq[j]]
        for i in range(k):
            row += [traj.d[j, i], traj.nu[j, i], traj.zeta[j, i], xi[j, i], phi[j, i]]
        row += [J[j], Jbar[j], N[j]]
        rows.append(row)
    artifacts.write_csv(os.path.join(out, "modulated_trajectory.csv"), header, rows)

    gheader = ["s", "J", "Jbar", "Jstar", "Jhat_star", "normH_q"] + [
        f"nu_over_{i}" for i in range(1, k + 1)
    ]
    grows = []
    for dec in traj.decs:
        gg = gauges(prob, dec)
        grows.append([dec.s, gg.J, gg.Jbar, gg.Jstar, gg.Jhat_star, gg.normq, *gg.nu_over])
    artifacts.write_csv(os.path.join(out, "gauges.csv"), gheader, grows)

    if len(traj.s) >= 5:
        reports = inequality_monitors(prob, traj, cfg.shooting.delta)
        rep_json = {
            r.name: {
                "fitted_c": r.fitted_c,
                "trend_slope": r.trend_slope,
                "trend_tstat": r.trend_tstat,
                "passed": r.passed,
                "dominant_term": r.dominant_term,
            }
            for r in reports
        }
        artifacts.write_json(os.path.join(out, "inequality_monitors.json"), rep_json)
        for r in reports:
            artifacts.write_csv(
                os.path.join(out, f"monitor_{r.name}.csv"),
                ["s", "lhs", "rhs", "ratio"],
                zip(r.s, r.lhs, r.rhs, r.ratio),
            )

    final = traj.decs[-1]
    artifacts.write_json(
        os.path.join(out, "final_snapshot.json"),
        {
            "s": final.s,
            "nodes": g.nodes,
            "w1": (final.q + _soliton_total(g, final)).w1,
            "w2": (final.q + _soliton_total(g, final)).w2,
        },
    )

    artifacts.line_plot_svg(
        os.path.join(out, "remainder_norm.svg"), s, [("|q|_H", traj.normq)],
        "remainder norm", "s", "|q|_H", logy=False,
    )
    zser = [(f"zeta_{i + 1}", traj.zeta[:, i]) for i in range(k)]
    refs = np.array([reference_centers(rc, sv) + rc.zeta0 for sv in s])
    zser += [(f"ref_{i + 1}", refs[:, i]) for i in range(k)]
    artifacts.line_plot_svg(
        os.path.join(out, "centers_overlay.svg"), s, zser,
        "centers vs reference", "s", "zeta",
    )
    artifacts.line_plot_svg(
        os.path.join(out, "shrink_norm.svg"), s, [("N", N)],
        "shrinking-set gauge", "s", "N", hlines=[("exit", 1.0)],
    )
    com = traj.zeta.mean(axis=1)
    artifacts.line_plot_svg(
        os.path.join(out, "center_of_mass.svg"), s, [("mean zeta", com)],
        "center of mass", "s", "mean zeta", hlines=[("target", prob.zeta0)],
    )
    dump_run_config(cfg, os.path.join(out, "effective_config.json"))
    print(f"wrote run artifacts to {out}")
    return 0


def _soliton_total(g, dec):
    from .solitons import soliton_sum

    return soliton_sum(g, dec.params)


def cmd_shoot(cfg: RunConfig) -> int:
    prob = cfg.problem
    out = cfg.out_dir
    g = make_grid(cfg.sim.n, prob.p)
    result = search(prob, g, cfg.shooting, sim=cfg.sim, mod=cfg.modulation)
    levels = []
    for lv in result.levels:
        levels.append(
            {
                "level": lv.level,
                "kept_index": list(lv.kept_index),
                "kept_coords": lv.kept_coords,
                "best_exit_s": lv.best_exit_s,
                "best_survived": lv.best_survived,
                "cells": [
                    {
                        "index": list(c.index),
                        "coords": c.coords,
                        "exit_s": c.point.exit_s,
                        "exit_axis": c.point.exit_label(),
                        "outgoing": c.point.outgoing,
                    }
                    for c in lv.cells
                ],
            }
        )
    best = result.best
    report = {
        "levels": levels,
        "monotone": result.monotone,
        "best": {
            "ball_coords": best.ball_coords,
            "nu0": best.nu0,
            "phi10": best.phi10,
            "exit_s": best.exit_s,
            "survived": best.survived,
            "exit_axis": best.exit_label(),
        },
    }
    artifacts.write_json(os.path.join(out, "shooting_report.json"), report)
    hist = [lv.best_exit_s for lv in result.levels]
    artifacts.line_plot_svg(
        os.path.join(out, "search_progress.svg"),
        np.arange(len(hist)),
        [("best exit s", np.array(hist))],
        "subdivision search progress", "level", "best exit s",
    )
    dump_run_config(cfg, os.path.join(out, "effective_config.json"))
    print(
        f"best point: coords={np.round(best.ball_coords, 6).tolist()} "
        f"exit_s={best.exit_s:.4f} axis={best.exit_label()}"
    )
    return 0


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(
        prog="multisoliton",
        description="numerical lab for multi-soliton blow-up dynamics in similarity variables",
    )
    ap.add_argument("command", choices=["verify", "reduced", "simulate", "shoot"])
    ap.add_argument("--config", default=None, help="path to a run-config JSON")
    ap.add_argument("--out", default=None, help="output directory")
    ap.add_argument("--n", type=int, default=None, help="grid resolution override")
    ap.add_argument("--s0", type=float, default=None, help="initial time override")
    ap.add_argument("--horizon", type=float, default=None, help="final time override")
    ap.add_argument("--threads", type=int, default=None,
                    help="parallel scan width (env MULTISOLITON_THREADS overrides)")
    args = ap.parse_args(argv)
    cfg = _load_config(args)
    if args.command == "verify":
        return cmd_verify(cfg)
    if args.command == "reduced":
        return cmd_reduced(cfg)
    if args.command == "simulate":
        return cmd_simulate(cfg)
    return cmd_shoot(cfg)


if __name__ == "__main__":
    sys.exit(main())
