"""
Follow the rule base while the controller tracks a fast square wave.

Every reference jump throws the (error, error rate) sample far from the
existing rules.  Some jumps create rules, Case III shrinks oversized ones,
and rules whose volume share and consequents become negligible are pruned.
The script prints the structural events in the first few periods and the
rule count over time.

    python demos/rule_evolution.py
"""

from collections import Counter
from pathlib import Path

from gcontrol import emit, load_config, run_scenario

SCENARIOS = Path(__file__).resolve().parents[1] / "scenarios"


def main(out_dir="results"):
    res = run_scenario(load_config(SCENARIOS / "lti_square_a4_f1.ini"))
    t, rules = res.column("t"), res.column("rules")
    events = res.column("event")

    print("structural events during the first 3 s:")
    for ti, ev in zip(t, events):
        if ti >= 3.0:
            break
        for item in ev.split(";"):
            if item.startswith(("grow", "prune")):
                print(f"  t = {ti:5.2f}  {item}")

    kinds = Counter(item.split(":")[0] for ev in events for item in ev.split(";") if item)
    print("\nevent totals:", dict(sorted(kinds.items())))

    print("\nrule count every 10 s:")
    for mark in range(0, 100, 10):
        i = int(mark / 0.01)
        print(f"  t = {mark:3d} s  rules = {int(rules[i])}")
    print(f"max rules {int(rules.max())}, final {int(rules[-1])}")

    paths = emit(res, out_dir)
    print(f"\nrule-count series for plotting: {paths['rules']}")


if __name__ == "__main__":
    main()
