"""
Track a 1 Hz sine on the second-order test plant, first with the evolving
controller, then with the committed PID baseline, and compare the errors.

The evolving controller starts with no rules and no consequent knowledge.
Watch the error column: most of it is spent in the first second, while the
sliding parameters ramp up and the consequents adapt.

    python demos/sine_vs_pid.py
"""

from pathlib import Path

import numpy as np

from gcontrol import load_config, run_scenario

SCENARIOS = Path(__file__).resolve().parents[1] / "scenarios"


def windowed_rmse(res, edges):
    t, e = res.column("t"), res.column("e")
    out = []
    for a, b in zip(edges[:-1], edges[1:]):
        m = (t >= a) & (t < b)
        out.append(float(np.sqrt(np.mean(e[m] ** 2))))
    return out


def main():
    g = run_scenario(load_config(SCENARIOS / "lti_sine_a1_f1.ini"))
    pid = run_scenario(load_config(SCENARIOS / "lti_sine_a1_f1_pid.ini"))

    edges = [0, 1, 2, 5, 10, 50, 100]
    print("window [s]    G rmse     PID rmse")
    for (a, b), eg, ep in zip(zip(edges[:-1], edges[1:]), windowed_rmse(g, edges),
                              windowed_rmse(pid, edges)):
        print(f"{a:4d}-{b:<4d}   {eg:9.5f}   {ep:9.5f}")
    print(f"\nwhole run: G {g.summary['rmse']:.4f}  PID {pid.summary['rmse']:.4f}")
    print(f"rules at the end: {g.summary['final_rule_count']}, "
          f"largest |u|: G {g.summary['max_abs_u']:.1f}  PID {pid.summary['max_abs_u']:.1f}")

    # the sliding parameters ramp from tiny initial values to their targets
    a1 = g.column("a1")
    t = g.column("t")
    reached = t[np.argmax(a1 >= a1[-1])]
    print(f"alpha_1 reached its target {a1[-1]:g} at t = {reached:.2f} s")


if __name__ == "__main__":
    main()
