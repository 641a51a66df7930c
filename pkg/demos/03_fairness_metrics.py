"""The four wealth metrics, on hand-picked distributions.

Run:  python demos/03_fairness_metrics.py
"""

import numpy as np

from contractgame.metrics import aie, one_minus_gini, rawlsian, welfare


def report(label, wealths):
    w = np.asarray(wealths, dtype=float)
    g = one_minus_gini(w)
    W = welfare(w)
    print(f"{label:<28} wealths={np.round(w, 2).tolist()}")
    print(f"{'':<28} 1-Gini={g:.3f}  welfare={W:.1f}  rawlsian={rawlsian(w):.1f}  aie={aie(g, W):.1f}")


def main():
    report("perfect three-way split", [15.1, 15.1, 15.1])
    report("fixed-contract style", [17.0, 11.0, 16.9])
    report("exploited agents", [0.9, 0.4, 7.3])
    report("two parties, one broke", [0.0, 10.0])

    print("\nNon-positive mean wealth leaves the Gini undefined (NaN sentinel):")
    print("  one_minus_gini([-2, 1]) ->", one_minus_gini(np.array([-2.0, 1.0])))

    print("\nScale invariance: equality does not depend on units.")
    w = np.array([3.0, 7.0, 11.0])
    print(f"  1-Gini(w)      = {one_minus_gini(w):.6f}")
    print(f"  1-Gini(1000*w) = {one_minus_gini(1000 * w):.6f}")


if __name__ == "__main__":
    main()
