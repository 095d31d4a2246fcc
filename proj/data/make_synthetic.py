#!/usr/bin/env python3
"""Regenerates the committed synthetic price panel.

Eight weekly series over 120 Fridays: three low-volatility steady growers
(a2, a5, a7) and five volatile decliners tied to a common market factor.
The mix keeps the cross-asset mean return small enough that a
cardinality-constrained portfolio of the stable names can clear a
return target set at twice that mean even in its worst in-sample weeks,
which keeps every rolling window of the shipped configuration solvable.
Deterministic: running this script always reproduces
data/synthetic_8asset_120w.csv.
"""

from datetime import date, timedelta
import random

ASSETS = ["a1", "a2", "a3", "a4", "a5", "a6", "a7", "a8"]
WEEKS = 120
SEED = 20240514

STABLE = {"a2", "a5", "a7"}
DRIFT = {True: [0.0058, 0.0061, 0.0064], False: [-0.0034, -0.0026, -0.0031, -0.0029, -0.0036]}
VOL = {True: [0.0008, 0.0007, 0.0009], False: [0.019, 0.024, 0.021, 0.028, 0.022]}
BETA = {True: [0.02, 0.015, 0.025], False: [0.9, 1.2, 1.0, 1.3, 0.8]}


def main() -> None:
    rng = random.Random(SEED)
    start = date(2015, 1, 2)  # a Friday
    dates = [start + timedelta(weeks=k) for k in range(WEEKS)]

    roles = [(a in STABLE) for a in ASSETS]
    drift, vol, beta = [], [], []
    counters = {True: 0, False: 0}
    for stable in roles:
        k = counters[stable]
        counters[stable] += 1
        drift.append(DRIFT[stable][k])
        vol.append(VOL[stable][k])
        beta.append(BETA[stable][k])

    prices = [[100.0 * (1 + 0.1 * i)] for i in range(len(ASSETS))]
    for _ in range(1, WEEKS):
        market = rng.gauss(0.0, 0.011)
        for i in range(len(ASSETS)):
            shock = beta[i] * market + rng.gauss(drift[i], vol[i])
            prices[i].append(prices[i][-1] * (1.0 + shock))

    with open("data/synthetic_8asset_120w.csv", "w", encoding="ascii", newline="\n") as out:
        out.write("date," + ",".join(ASSETS) + "\n")
        for t, d in enumerate(dates):
            row = [d.isoformat()] + [f"{prices[i][t]:.4f}" for i in range(len(ASSETS))]
            out.write(",".join(row) + "\n")


if __name__ == "__main__":
    main()
