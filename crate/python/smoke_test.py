"""Smoke test for the pychordlab extension module.

Build and copy the module next to this script first:

    cargo build -p chordlab-py --release --features extension-module
    cp target/release/libpychordlab.so python/pychordlab.so
    python3 python/smoke_test.py
"""
import math
import os
import sys

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

import pychordlab as cl  # noqa: E402


def check(name, ok):
    print(f"{'ok' if ok else 'FAILED'}  {name}")
    return ok


def main():
    results = []
    a = cl.Chord(0.0, math.pi / 2)
    b = cl.Chord(math.pi / 2, 0.96)
    results.append(check("perpendicular chords cross", cl.crosses(a, b) and cl.crosses_cartesian(a, b)))
    results.append(check("two crossing chords make 4 regions", cl.count_regions([a, b]) == 4))

    four = [cl.Chord(0.0, math.pi / 2), cl.Chord(1.0, 1.2), cl.Chord(2.0, 1.3), cl.Chord(4.8, 0.2)]
    results.append(check("V, E, F = 11, 18, 8", cl.euler_counts(four) == (11, 18, 8)))

    m = cl.moments("sine", n=100)
    results.append(check("E[A12] = 1/2", abs(m["e_a12"] - 0.5) < 1e-9))
    results.append(check("E[A12 A13] = 8/(3 pi^2)", abs(m["e_a12a13"] - 8 / (3 * math.pi**2)) < 1e-8))
    results.append(check("mean 2576, sigma 144.3", m["mean_f"] == 2576 and abs(m["sigma"] - 144.31) < 0.06))

    sim = cl.simulate(100, 1000, "sine", 42)
    results.append(check("simulated mean within 2576 +- 14", abs(sim["mean"] - 2576) <= 14))
    results.append(check("F = R + n + 1 per repetition", all(f == r + 101 for r, f in zip(sim["r_n"], sim["f_n"]))))

    stat, p = cl.ks_simulated(100, 1000, "sine", 7)
    results.append(check(f"KS statistic {stat:.3f}, p {p:.3f}", stat < 0.06 and p > 0.01))
    results.append(check("smooth bound n=100", abs(cl.smooth_function_bound(100, m["sigma"]) - 95.36) < 0.1))
    results.append(check("Kolmogorov bound n=100", abs(cl.kolmogorov_bound(100, m["sigma"]) - 465.8) < 0.5))

    try:
        from scipy.stats import kstwobign

        lam = (math.sqrt(400) + 0.12 + 0.11 / math.sqrt(400)) * 0.05
        results.append(check("KS p-value matches scipy", abs(cl.ks_pvalue(0.05, 400) - kstwobign.sf(lam)) < 1e-10))
    except ImportError:
        print("skip  scipy comparison")

    rate, violations, _ = cl.oracle_check(100, 8, 3)
    results.append(check("oracle agrees", rate >= 0.995 and violations == 0))

    try:
        cl.Chord(0.0, 2.0)
        results.append(check("invalid chord rejected", False))
    except ValueError:
        results.append(check("invalid chord rejected", True))

    print(f"{sum(results)}/{len(results)} checks passed")
    return 0 if all(results) else 1


if __name__ == "__main__":
    sys.exit(main())
