"""
Sliding-mode consequent adaptation.

The stacked consequent vector ``omega`` and its gain matrix ``G`` follow

    d(omega)/dt = -alpha_1 * G psi s_H
    dG/dt       = -G psi psi^T G

with the sliding variable ``s_H = e + (alpha_2/alpha_1) de/dt
+ (alpha_3/alpha_1) int(e)``.  The control is ``u = sat(alpha_1 s_H) - psi^T omega``.
"""

from __future__ import annotations

import math

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .exceptions import ContractViolation

ALPHA_INIT = (1e-2, 1e-3, 0.0)
ALPHA_TARGET = (0.5, 0.05, 0.001)
ALPHA_RATE = (0.05, 0.005, 0.0001)


@dataclass(frozen=True)
class SmcState:
    omega: np.ndarray
    gain: np.ndarray
    alpha: np.ndarray = field(default_factory=lambda: np.array(ALPHA_INIT))
    alpha_target: np.ndarray = field(default_factory=lambda: np.array(ALPHA_TARGET))
    alpha_rate: np.ndarray = field(default_factory=lambda: np.array(ALPHA_RATE))
    alpha_floor: float = ALPHA_INIT[0]
    err_integral: float = 0.0
    sat_bound: float = 5.0
    g0: float = 1000.0
    recoveries: int = 0

    @classmethod
    def initial(cls, block: int, rules: int = 1, g0: float = 1000.0,
                alpha=ALPHA_INIT, alpha_target=ALPHA_TARGET, alpha_rate=ALPHA_RATE,
                sat_bound: float = 5.0) -> "SmcState":
        """Fresh state for ``rules`` rules with ``block`` consequent terms each."""
        n = block * rules
        alpha = np.array(alpha, dtype=float)
        return cls(np.zeros(n), g0 * np.eye(n), alpha,
                   np.array(alpha_target, dtype=float), np.array(alpha_rate, dtype=float),
                   alpha_floor=float(alpha[0]), sat_bound=sat_bound, g0=g0)

    @property
    def lambdas(self):
        a1, a2, a3 = self.alpha
        return a2 / a1, a3 / a1


def _with(st, **changes):
    # dataclasses.replace without re-running __init__; hot path
    new = object.__new__(type(st))
    new.__dict__.update(st.__dict__)
    new.__dict__.update(changes)
    return new


def integrate_error(st: SmcState, e: float, dt: float) -> SmcState:
    return _with(st, err_integral=st.err_integral + e * dt)


def sliding_surface(st: SmcState, e: float, e_dot: float) -> float:
    a1, a2, a3 = st.alpha
    if a1 <= 0.0:
        raise ContractViolation("alpha_1 must stay positive")
    return e + (a2 / a1) * e_dot + (a3 / a1) * st.err_integral


def auxiliary_control(st: SmcState, s_h: float) -> float:
    """Robustifying term ``alpha_1 s_H``, saturated to ``+-sat_bound``."""
    b = st.sat_bound
    return float(min(max(st.alpha[0] * s_h, -b), b))


def fuzzy_control(st: SmcState, psi_regressor) -> float:
    psi = np.asarray(psi_regressor, dtype=float)
    if psi.shape != st.omega.shape:
        raise ContractViolation(
            f"regressor length {psi.size} does not match omega length {st.omega.size}; "
            "resize after every structural change")
    return float(psi @ st.omega)


def total_control(u_arc: float, u_g: float) -> float:
    return u_arc - u_g


def _is_spd(m: np.ndarray) -> bool:
    try:
        np.linalg.cholesky(m)
    except np.linalg.LinAlgError:
        return False
    return True


def adapt(st: SmcState, psi_regressor, s_h: float, dt: float,
          scheme: str = "exact") -> SmcState:
    """
    Advance ``omega`` and ``G`` by one control step.

    ``scheme="euler"`` is the explicit step ``G -= dt (G psi)(G psi)^T`` with
    ``omega -= dt alpha_1 (G psi) s_H``, both from the pre-step gain.  It is
    only stable while ``dt psi^T G psi < 1``.

    ``scheme="exact"`` integrates the gain law exactly for ``psi`` held over
    the step (``G^-1 += dt psi psi^T``, applied via Sherman-Morrison), and
    drives ``omega`` with the post-step gain.  Both agree to first order in
    ``dt``; the exact form keeps ``G`` SPD for any step size.

    If ``G`` loses positive definiteness it is reset to ``g0 I`` and
    ``recoveries`` is incremented.
    """
    if dt <= 0.0:
        raise ContractViolation("dt must be positive")
    psi = np.asarray(psi_regressor, dtype=float)
    if psi.shape != st.omega.shape:
        raise ContractViolation("regressor and omega are not conformable")
    G = st.gain
    gpsi = G @ psi
    if scheme == "euler":
        new_gain = G - dt * (gpsi[:, None] * gpsi[None, :])
        step_dir = gpsi
    elif scheme == "exact":
        denom = 1.0 + dt * float(psi @ gpsi)
        new_gain = G - (dt / denom) * (gpsi[:, None] * gpsi[None, :])
        step_dir = gpsi / denom
    else:
        raise ContractViolation(f"unknown scheme {scheme!r}")
    omega = st.omega - dt * st.alpha[0] * s_h * step_dir
    new_gain = 0.5 * (new_gain + new_gain.T)
    recoveries = st.recoveries
    if scheme == "exact":
        # the exact update cannot leave the SPD cone unless roundoff
        # destroys the diagonal; the full test is reserved for Euler
        ok = denom > 0.0 and new_gain.diagonal().min() > 0.0 and math.isfinite(new_gain.sum())
    else:
        ok = _is_spd(new_gain)
    if not ok:
        new_gain = st.g0 * np.eye(len(omega))
        recoveries += 1
    return _with(st, omega=omega, gain=new_gain, recoveries=recoveries)


def evolve_alpha(st: SmcState, dt: float) -> SmcState:
    """Ramp each sliding parameter toward its target at its own rate, without overshoot."""
    if dt <= 0.0:
        raise ContractViolation("dt must be positive")
    if (st.alpha == st.alpha_target).all():
        return st
    gap = st.alpha_target - st.alpha
    step = np.minimum(dt * st.alpha_rate, np.abs(gap))
    alpha = st.alpha + np.sign(gap) * step
    alpha[0] = max(alpha[0], st.alpha_floor)
    return _with(st, alpha=alpha)


def resize(st: SmcState, old_rule_count: int, new_rule_count: int,
           indices: Sequence[int], block: int, init_block=None) -> SmcState:
    """
    Keep ``omega`` and ``G`` conformable with the rule base.

    Growing appends one consequent block (``init_block`` or zeros) and extends
    ``G`` block-diagonally with ``g0 I``; pruning deletes the listed blocks and
    the matching rows and columns of ``G``.  Untouched entries are preserved
    bit for bit.
    """
    n_old = st.omega.size
    if n_old != old_rule_count * block or st.gain.shape != (n_old, n_old):
        raise ContractViolation("state does not match the stated old rule count")
    indices = list(indices)
    if new_rule_count > old_rule_count:
        if new_rule_count - old_rule_count != len(indices):
            raise ContractViolation("grow indices do not match the rule count change")
        if sorted(indices) != list(range(old_rule_count, new_rule_count)):
            raise ContractViolation("new rules must be appended at the end")
        extra = len(indices) * block
        blocks = np.zeros(extra) if init_block is None else \
            np.tile(np.asarray(init_block, dtype=float).reshape(-1), len(indices))
        if blocks.size != extra:
            raise ContractViolation(f"init_block must have length {block}")
        omega = np.concatenate((st.omega, blocks))
        gain = np.zeros((n_old + extra, n_old + extra))
        gain[:n_old, :n_old] = st.gain
        gain[n_old:, n_old:] = st.g0 * np.eye(extra)
    elif new_rule_count < old_rule_count:
        if old_rule_count - new_rule_count != len(set(indices)) or \
                any(not 0 <= i < old_rule_count for i in indices):
            raise ContractViolation("prune indices do not match the rule count change")
        drop = np.concatenate([np.arange(i * block, (i + 1) * block) for i in sorted(set(indices))])
        keep = np.setdiff1d(np.arange(n_old), drop)
        omega = st.omega[keep]
        gain = st.gain[np.ix_(keep, keep)]
    else:
        if indices:
            raise ContractViolation("indices given but the rule count did not change")
        return st
    return _with(st, omega=omega, gain=gain)


@dataclass(frozen=True)
class LyapunovTrace:
    """
    Running Lyapunov surrogate ``V_hat`` driven by ``dV/dt = -(3/2) s_H^2``.

    ``v`` starts at ``v0``; ``violations`` counts steps where ``v`` rose by
    more than ``tol`` outside a structural event.
    """

    s_h: float = 0.0
    v: float = 0.0
    v_dot_bound: float = 0.0
    violations: int = 0
    tol: float = 1e-12


def lyapunov_monitor(prev: LyapunovTrace, s_h: float, dt: float,
                     structural: bool = False) -> LyapunovTrace:
    v_dot = -1.5 * s_h * s_h
    v = prev.v + dt * v_dot
    violations = prev.violations
    if not structural and v > prev.v + prev.tol:
        violations += 1
    return _with(prev, s_h=s_h, v=v, v_dot_bound=v_dot, violations=violations)
