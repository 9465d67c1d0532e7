#!/usr/bin/env python3
"""Offline subdivision-search driver.

Runs the parameter-ball search for one demo configuration, replays the best
point, and prints the values to bake into the shipped config. Slow (minutes);
run once per target center of mass.
"""

import argparse
import json
import time

import numpy as np

from multisoliton.config import load_run_config
from multisoliton.grid import make_grid
from multisoliton.modulation import track
from multisoliton.pde import build_initial_data
from multisoliton.reduced import reduced_config, reference_centers
from multisoliton.shooting import search
from multisoliton.solitons import alternating_params


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--config", required=True)
    ap.add_argument("--report", default=None, help="optional JSON report path")
    args = ap.parse_args()

    cfg = load_run_config(args.config)
    prob = cfg.problem
    g = make_grid(cfg.sim.n, prob.p)

    t0 = time.time()
    result = search(prob, g, cfg.shooting, sim=cfg.sim, mod=cfg.modulation)
    dt = time.time() - t0
    print(f"search finished in {dt:.0f}s over {len(result.levels)} levels")
    for lv in result.levels:
        print(
            f"  level {lv.level}: kept {lv.kept_index} at {np.round(lv.kept_coords, 4)} "
            f"best_exit={lv.best_exit_s:.4f} survived={lv.best_survived}"
        )
    best = result.best
    print(f"monotone: {result.monotone}")
    print(f"best ball coords: {best.ball_coords.tolist()}")
    print(f"best nu0: {best.nu0.tolist()}  phi10: {best.phi10}")
    print(f"exit_s: {best.exit_s}  survived: {best.survived}  axis: {best.exit_label()}")

    # replay the winner and check the reference-band and center-of-mass drift
    s0 = prob.s0
    st0 = build_initial_data(prob, g, s0, best.nu0, best.phi10, cfg.shooting.delta)
    rc = reduced_config(prob)
    shift = prob.zeta0 + ((prob.p - 1) / 2) * best.phi10
    guess = alternating_params(-np.tanh(reference_centers(rc, s0) + shift), best.nu0)
    horizon = best.exit_s if not best.survived else cfg.shooting.s_max
    traj = track(prob, g, st0, s0, horizon, guess, mod=cfg.modulation,
                 sim=cfg.sim, delta=cfg.shooting.delta)
    xi = traj.xi()
    band = (prob.p - 1) / 2 * np.abs(xi).max(axis=1)
    com = traj.zeta.mean(axis=1)
    print(f"replay window [{traj.s[0]:.2f}, {traj.s[-1]:.2f}]")
    print(f"max |zeta_i - ref_i - zeta0| = {band.max():.4f}")
    print(f"max |center of mass - zeta0| = {np.abs(com - prob.zeta0).max():.4f}")

    if args.report:
        data = {
            "config": args.config,
            "seconds": dt,
            "levels": [
                {
                    "level": lv.level,
                    "kept_index": list(lv.kept_index),
                    "kept_coords": lv.kept_coords.tolist(),
                    "best_exit_s": lv.best_exit_s,
                    "best_survived": lv.best_survived,
                    "n_cells": len(lv.cells),
                }
                for lv in result.levels
            ],
            "monotone": result.monotone,
            "best": {
                "ball_coords": best.ball_coords.tolist(),
                "nu0": best.nu0.tolist(),
                "phi10": best.phi10,
                "exit_s": best.exit_s,
                "survived": best.survived,
                "exit_axis": best.exit_label(),
            },
            "replay": {
                "band_max": float(band.max()),
                "com_dev_max": float(np.abs(com - prob.zeta0).max()),
                "window": [float(traj.s[0]), float(traj.s[-1])],
            },
        }
        with open(args.report, "w", encoding="utf-8") as fh:
            json.dump(data, fh, indent=2)
        print(f"wrote {args.report}")


if __name__ == "__main__":
    main()
