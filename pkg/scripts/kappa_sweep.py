"""Sweep the coefficient-boost scale across all three coefficient shapes.

Runs the Monte Carlo harness for every (shape, scale) pair on the day-care cost model
and writes one CSV with a row per (shape, scale, method).

Usage:
    python scripts/kappa_sweep.py \
        --kappa 0,0.5,1,2,4 \
        --reps 50 \
        --out outputs/kappa_sweep.csv
"""

from __future__ import annotations

import argparse
from pathlib import Path

from dotenv import load_dotenv

load_dotenv()


def sweep(kappas: list[float], reps: int, seed: int, cost: str, threads: int | None):
    """One Monte Carlo table per coefficient shape and scale."""
    import pandas as pd

    from surveyopt.core.config import Settings
    from surveyopt.cost.presets import preset
    from surveyopt.sim.designs import CoefficientSpec, SimConfig
    from surveyopt.sim.harness import run_mc

    settings = Settings(**({"threads": threads} if threads else {}))
    chosen = preset(cost)
    frames = []
    for spec in CoefficientSpec:
        for kappa in kappas:
            config = SimConfig(
                spec=spec,
                kappa=kappa,
                n_covariates=chosen.model.n_covariates,
                replications=reps,
                seed=seed,
                include_experiment=True,
            )
            table = run_mc(config, chosen.model, chosen.budget, settings=settings)
            frame = table.to_frame()
            frame.insert(0, "spec", spec.value)
            frames.append(frame)
            print(f"  {spec.value:<10} kappa={kappa:<6g} done")
    return pd.concat(frames, ignore_index=True)


def main():
    parser = argparse.ArgumentParser(
        description="Monte Carlo sweep over coefficient shapes and boost scales"
    )
    parser.add_argument("--kappa", default="0,1,2,4", help="Comma-separated boost scales")
    parser.add_argument("--reps", type=int, default=100, help="Replications per scale")
    parser.add_argument("--seed", type=int, default=0, help="Random seed")
    parser.add_argument("--cost", default="daycare", help="Cost preset name")
    parser.add_argument("--threads", type=int, default=None, help="Worker threads")
    parser.add_argument("--out", default="outputs/kappa_sweep.csv", help="Output CSV path")
    args = parser.parse_args()

    kappas = [float(k) for k in args.kappa.split(",") if k.strip()]
    if not kappas:
        print("No scales given.")
        return

    print(f"Sweeping {len(kappas)} scale(s) x 3 shapes, {args.reps} replications each...")
    frame = sweep(kappas, args.reps, args.seed, args.cost, args.threads)

    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(out, index=False, float_format="%.10g")

    print(f"\n{'=' * 50}")
    print("Mean relative EQB by method (rows with an EQB):")
    with_eqb = frame.dropna(subset=["eqb"])
    reference = with_eqb[with_eqb["method"] == "experiment"].set_index(["spec", "scale"])["eqb"]
    for method, rows in with_eqb[with_eqb["method"] != "experiment"].groupby("method"):
        ratio = rows.set_index(["spec", "scale"])["eqb"] / reference
        print(f"  {method:<12} {ratio.mean():.3f}")
    print(f"\nSaved: {out}")


if __name__ == "__main__":
    main()
