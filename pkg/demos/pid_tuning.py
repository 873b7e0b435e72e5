"""
Where the committed PID gains come from.

For the plant K / (s^2 + 2 zeta wn s + wn^2), internal-model tuning with a
first-order closed-loop target 1 / (lambda s + 1) gives

    kp = 2 zeta wn / (K lambda),  ki = wn^2 / (K lambda),  kd = 1 / (K lambda)

The proportional kick on a 10 m step is kp * 10, so the smallest lambda that
keeps it inside a 30-unit actuator limit is lambda = 2 zeta wn * 10 / (30 K).
The script prints the gains, then sweeps lambda to show the speed/effort
trade-off on the step and sine scenarios.

    python demos/pid_tuning.py
"""

from dataclasses import replace
from pathlib import Path

from gcontrol import PidGains, load_config, run_scenario

SCENARIOS = Path(__file__).resolve().parents[1] / "scenarios"


def imc_gains(zeta, wn, k, lam, limit=30.0):
    return PidGains(kp=2 * zeta * wn / (k * lam), ki=wn ** 2 / (k * lam), kd=1 / (k * lam),
                    u_min=-limit, u_max=limit, i_min=-50.0, i_max=50.0)


def main():
    step_cfg = load_config(SCENARIOS / "lti_step_0_10_pid.ini")
    sine_cfg = load_config(SCENARIOS / "lti_sine_a1_f1_pid.ini")
    p = step_cfg.lti
    lam = 2 * p.zeta * p.wn * 10.0 / (30.0 * p.gain)
    g = imc_gains(p.zeta, p.wn, p.gain, lam)
    print(f"lambda = {lam:.6f} s -> kp = {g.kp:.6g}, ki = {g.ki:.6g}, kd = {g.kd:.6g}")
    print(f"committed: kp = {step_cfg.pid.kp:.6g}, ki = {step_cfg.pid.ki:.6g}, "
          f"kd = {step_cfg.pid.kd:.6g}\n")

    print(" lambda   step settle [s]   step max|u|   sine rmse")
    for scale in (4.0, 2.0, 1.0, 0.5, 0.25):
        gains = imc_gains(p.zeta, p.wn, p.gain, lam * scale)
        step = run_scenario(replace(step_cfg, pid=gains)).summary
        sine = run_scenario(replace(sine_cfg, pid=gains)).summary
        settle = step["settling_time_s"]
        print(f"{lam * scale:7.4f}   {settle if settle is not None else float('nan'):15.2f}"
              f"   {step['max_abs_u']:11.1f}   {sine['rmse']:9.4f}")
    print("\nBelow the committed lambda the step saturates the actuator; the sine improves,")
    print("so the PID ranking depends on how much actuator effort the tuning may use.")


if __name__ == "__main__":
    main()
