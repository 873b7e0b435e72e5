"""
Hold the hexacopter surrogate at 10 m while a 40 m/s gust hits at t = 2 s.

The run is repeated without the gust.  The two traces are identical until
the gust starts, and the controller pulls the altitude back into the 2 %
band well before the climb would have settled anyway.

    python demos/gust_rejection.py
"""

from pathlib import Path

import numpy as np

from gcontrol import load_config, run_scenario

SCENARIOS = Path(__file__).resolve().parents[1] / "scenarios"


def main():
    cfg = load_config(SCENARIOS / "hexa_constant_10_gust.ini")
    windy = run_scenario(cfg)
    calm = run_scenario(load_config(SCENARIOS / "hexa_constant_10.ini"))
    t = windy.column("t")
    dy = windy.column("y") - calm.column("y")

    first = t[np.argmax(np.abs(dy) > 0)]
    print(f"traces first differ at t = {first:.2f} s (gust onset {cfg.gust.onset_time} s)")
    i = int(np.argmax(np.abs(dy)))
    print(f"largest altitude difference {dy[i]:+.4f} m at t = {t[i]:.2f} s")

    print("\n   t [s]   calm y    windy y    windy u")
    for mark in (1.0, 2.0, 2.5, 3.0, 4.0, 5.0, 8.0, 20.0):
        j = int(round(mark / cfg.dt))
        print(f"{mark:7.1f}  {calm.column('y')[j]:8.4f}  {windy.column('y')[j]:8.4f}  "
              f"{windy.column('u')[j]:9.3f}")

    for name, res in (("calm", calm), ("gust", windy)):
        s = res.summary
        print(f"{name}: rmse {s['rmse']:.4f}, settling {s['settling_time_s']:.2f} s, "
              f"rules {s['final_rule_count']}")


if __name__ == "__main__":
    main()
