#!/usr/bin/env python3
"""Search for a 3-state instance whose optimal scheme breaks under action-merging.

Samples random CVaR instances, solves the active-facet LP, merges same-action
signals into one posterior, and keeps the first instance where the merged
recommendation has IC regret above the target. The winner is frozen as
fixtures/merge_failure3.json; rerunning with the same seed reproduces it.
"""

import argparse
import sys

import numpy as np

sys.path.insert(0, "src")

from cvarbp import (
    CvarRisk,
    PersuasionInstance,
    ic_regret,
    save_instance,
    solve_exact,
    validate_instance,
)

TARGET_REGRET = 1e-3


def random_instance(rng: np.random.Generator) -> PersuasionInstance:
    m, n = 3, 2
    prior = rng.dirichlet(np.ones(m) * 2.0)
    prior = np.maximum(prior, 0.05)
    prior = prior / prior.sum()
    return PersuasionInstance(
        states=tuple(f"s{i}" for i in range(m)),
        actions=tuple(f"a{j}" for j in range(n)),
        prior=prior,
        receiver_payoff=rng.uniform(0.0, 1.0, size=(m, n)).round(3),
        sender_payoff=rng.uniform(0.0, 1.0, size=(m, n)).round(3),
        risk=CvarRisk(r=float(rng.choice([0.2, 0.3, 0.4, 0.5]))),
    )


def merged_regret(inst, scheme) -> float:
    worst = 0.0
    for a in range(inst.n_actions):
        group = [s for s in scheme if s.action == a]
        if len(group) < 2:
            continue
        p = sum(s.probability for s in group)
        merged = sum(s.probability * s.posterior for s in group) / p
        worst = max(worst, ic_regret(inst, merged, a))
    return worst


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--seed", type=int, default=20240901)
    ap.add_argument("--trials", type=int, default=20000)
    ap.add_argument("--out", default="src/cvarbp/fixtures/merge_failure3.json")
    args = ap.parse_args()

    rng = np.random.default_rng(args.seed)
    for trial in range(args.trials):
        inst = random_instance(rng)
        if validate_instance(inst):
            continue
        try:
            res = solve_exact(inst)
        except Exception:
            continue
        reg = merged_regret(inst, res.scheme)
        if reg > TARGET_REGRET:
            print(f"trial {trial}: merged regret {reg:.6f}, value {res.value:.6f}")
            print(f"prior={inst.prior}, r={inst.risk.r}")
            print(f"u=\n{inst.receiver_payoff}\nv=\n{inst.sender_payoff}")
            save_instance(inst, args.out)
            print(f"saved to {args.out}")
            return 0
    print("no instance found; increase --trials")
    return 1


if __name__ == "__main__":
    raise SystemExit(main())
