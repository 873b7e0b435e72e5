"""
Online structure learning for the rule base.

Growing uses datum significance (how much of the total rule volume a new
kernel would claim), pruning uses extended rule significance (volume share
weighted by consequent magnitude), and premise adaptation follows a Bayesian
winner selection followed by a four-way vigilance test on membership degree
and volume.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from .exceptions import ContractViolation
from .fuzzy import (FuzzyRule, RuleBase, firing_strength, log_volume, log_volumes,
                    mahalanobis)

CASE_UPDATE = 1     # R_win >= rho_a, V_win <= V_max
CASE_CREATE = 2     # R_win <  rho_a, V_win >  V_max
CASE_SHRINK = 3     # R_win >= rho_a, V_win >  V_max
CASE_ATTRACT = 4    # R_win <  rho_a, V_win <= V_max


@dataclass
class EvolutionConfig:
    rho_a: float = 0.95
    rho_b: float = 0.01
    delta: float = 0.001
    k_fs: float = 2.0
    k_win: float = 1.1
    epsilon_complete: float = 0.5
    g: float = 0.1
    ern_mode: str = "tracking"
    vmax_mode: str = "domain"
    k_e: float = field(init=False)

    def __post_init__(self):
        if not 0.0 < self.rho_a < 1.0:
            raise ContractViolation("rho_a must lie in (0, 1)")
        if not 1e-4 <= self.rho_b <= 0.1:
            raise ContractViolation("rho_b must lie in [0.0001, 0.1]")
        if not 1e-4 <= self.delta <= 1.0:
            raise ContractViolation("delta must lie in [0.0001, 1]")
        if self.k_fs <= 0.0:
            raise ContractViolation("k_fs must be positive")
        if self.k_win <= 1.0:
            raise ContractViolation("k_win must exceed 1")
        if not 0.0 < self.g < 1.0:
            raise ContractViolation("g must lie in (0, 1)")
        if self.ern_mode not in ("tracking", "literal"):
            raise ContractViolation("ern_mode must be 'tracking' or 'literal'")
        if self.vmax_mode not in ("domain", "sum"):
            raise ContractViolation("vmax_mode must be 'domain' or 'sum'")
        self.k_e = 0.10 * self.delta


# -- rule growing ---------------------------------------------------------

def _logsumexp(x: np.ndarray) -> float:
    m = float(np.max(x))
    return m + math.log(float(np.sum(np.exp(x - m))))


def _candidate_log_volume(candidate_inv_disp) -> float:
    return log_volume(FuzzyRule(np.zeros(len(candidate_inv_disp)), candidate_inv_disp))


def datum_significance(rb: RuleBase, candidate_inv_disp) -> float:
    """Share ``det(S_new)^k / sum_i det(S_i)^k`` a new kernel would claim."""
    if len(rb) == 0:
        raise ContractViolation("datum significance needs a non-empty rule base")
    k = rb.input_dim
    logs = k * np.append(log_volumes(rb), _candidate_log_volume(candidate_inv_disp))
    return float(math.exp(logs[-1] - _logsumexp(logs)))


def error_weighted_significance(rb: RuleBase, candidate_inv_disp, e_rn: float) -> float:
    return abs(e_rn) * datum_significance(rb, candidate_inv_disp)


@dataclass(frozen=True)
class GrowthState:
    """Running mean and variance of the growth error signal."""

    err_mean: float = 0.0
    err_var: float = 0.0
    sample_count: int = 0
    ds_threshold: float = 0.1

    @property
    def level(self) -> float:
        return self.err_mean + self.err_var


def update_error_stats(gs: GrowthState, e_rn: float) -> GrowthState:
    n = gs.sample_count + 1
    mean = ((n - 1) / n) * gs.err_mean + e_rn / n
    dev = e_rn - gs.err_mean
    var = ((n - 1) / n) * gs.err_var + ((n - 1) / n ** 2) * dev * dev
    return GrowthState(mean, var, n, gs.ds_threshold)


def error_trend_positive(before: GrowthState, after: GrowthState) -> bool:
    return after.level - before.level > 0.0


def should_grow(gs: GrowthState, ds_plain: float, ds_weighted: float,
                trend_positive: bool) -> bool:
    """Rising error trend gates on the plain share, otherwise on the error-weighted one."""
    if trend_positive:
        return ds_plain >= gs.ds_threshold
    return ds_weighted >= gs.ds_threshold


# -- rule pruning ---------------------------------------------------------

def rule_magnitude(rule: FuzzyRule) -> float:
    """Sum of absolute consequent coefficients."""
    return float(np.sum(np.abs(rule.consequent)))


def significance_scores(rb: RuleBase) -> np.ndarray:
    k = rb.input_dim
    logs = k * log_volumes(rb)
    shares = np.exp(logs - _logsumexp(logs))
    mags = np.array([rule_magnitude(r) for r in rb.rules])
    return mags * shares


def rule_significance(rb: RuleBase, rule_index: int,
                      consequent_magnitude: Optional[float] = None) -> float:
    if not 0 <= rule_index < len(rb):
        raise IndexError(f"rule index {rule_index} out of range for {len(rb)} rules")
    k = rb.input_dim
    logs = k * log_volumes(rb)
    share = math.exp(logs[rule_index] - _logsumexp(logs))
    if consequent_magnitude is None:
        consequent_magnitude = rule_magnitude(rb[rule_index])
    return consequent_magnitude * share


def prune_rules(rb: RuleBase, cfg: EvolutionConfig) -> List[int]:
    """
    Remove every rule whose significance is at most ``cfg.k_e``.

    The last remaining rule is never removed.  Returns the removed indices
    (in ascending order, relative to the base before pruning) so callers can
    drop the matching consequent and gain blocks.
    """
    if len(rb) <= 1:
        return []
    scores = significance_scores(rb)
    doomed = [i for i, s in enumerate(scores) if s <= cfg.k_e]
    if len(doomed) == len(rb):
        keep = int(np.argmax(scores))
        doomed.remove(keep)
    rb.remove(doomed)
    return doomed


# -- winner selection -----------------------------------------------------

def log_posteriors(rb: RuleBase, z, distance=None) -> np.ndarray:
    """
    Normalized log posterior of each rule given ``z``.

    ``distance`` may carry the squared Mahalanobis distances already
    computed for ``z`` (e.g. by inference) to avoid recomputing them.
    """
    q = mahalanobis(rb, z) if distance is None else np.asarray(distance, dtype=float)
    log_like = -0.5 * (math.log(2.0 * math.pi) + log_volumes(rb)) - q
    supports = rb.supports()
    log_prior = np.log(supports) - math.log(float(supports.sum()))
    joint = log_like + log_prior
    return joint - _logsumexp(joint)


def select_winner(rb: RuleBase, z, distance=None) -> Tuple[int, float]:
    """Maximum-posterior rule; ties go to the lowest index."""
    if len(rb) == 0:
        raise ContractViolation("winner selection needs a non-empty rule base")
    if len(rb) == 1:
        log_volume(rb[0], 0)
        return 0, 1.0
    lp = log_posteriors(rb, z, distance)
    i = int(np.argmax(lp))
    return i, float(math.exp(lp[i]))


# -- vigilance ------------------------------------------------------------

def classify_case(r_win: float, v_win: float, rho_a: float, v_max: float) -> int:
    covered = r_win >= rho_a
    small = v_win <= v_max
    if covered:
        return CASE_UPDATE if small else CASE_SHRINK
    return CASE_ATTRACT if small else CASE_CREATE


def rank_one_inverse_update(inv_disp, center_old, z, support: int):
    """
    Absorb ``z`` into a rule that has already won ``support`` samples.

    Returns the new center and the new inverse dispersion, updated directly
    (no re-inversion) with step ``alpha = 1 / (support + 1)``.
    """
    inv_disp = np.asarray(inv_disp, dtype=float)
    z = np.asarray(z, dtype=float)
    alpha = 1.0 / (support + 1)
    center = center_old + (z - center_old) * alpha
    d = z - center
    w = inv_disp @ d
    new_inv = inv_disp / (1.0 - alpha) - (alpha / (1.0 - alpha)) * (w[:, None] * w[None, :]) / (1.0 + alpha * (d @ w))
    return center, 0.5 * (new_inv + new_inv.T)


def absorb(rule: FuzzyRule, z):
    rule.center, rule.inv_dispersion = rank_one_inverse_update(
        rule.inv_dispersion, rule.center, z, rule.support)
    rule.support += 1


@dataclass
class CaseOutcome:
    case: int
    winner: int
    created: Optional[int] = None
    shrink_steps: int = 0

    @property
    def grew(self) -> bool:
        return self.created is not None


def new_rule_inv_dispersion(k: int, cfg: EvolutionConfig) -> np.ndarray:
    return cfg.k_fs * np.eye(k)


def log_volume_cap(rb: RuleBase, cfg: EvolutionConfig, domain_volume: float = 1.0) -> float:
    """
    Log of the largest volume a winning rule may keep.

    ``vmax_mode="sum"`` caps at ``rho_b`` times the summed rule volumes;
    ``"domain"`` caps at ``rho_b`` times ``domain_volume`` (1 for inputs
    scaled onto [-1, 1]).
    """
    if cfg.vmax_mode == "sum":
        return math.log(cfg.rho_b) + _logsumexp(log_volumes(rb))
    return math.log(cfg.rho_b * domain_volume)


def vigilance_update(rb: RuleBase, cfg: EvolutionConfig, z, winner: int, *,
                     gs: Optional[GrowthState] = None, e_rn: float = 0.0,
                     trend_positive: bool = True, domain_volume: float = 1.0,
                     r_win: Optional[float] = None) -> CaseOutcome:
    """
    Route one sample through the four vigilance cases, mutating ``rb``.

    ``gs``, ``e_rn`` and ``trend_positive`` feed the growth test used by the
    rule-creation case; without ``gs`` a rule is always created there.  When
    the growth test declines, the winner is pulled toward the sample instead.
    ``r_win`` may pass in the winner's firing at ``z`` if already known.
    """
    z = np.asarray(z, dtype=float).reshape(-1)
    k = rb.input_dim
    rule = rb[winner]
    lv_win = log_volume(rule, winner)
    log_vmax = log_volume_cap(rb, cfg, domain_volume)
    if r_win is None:
        r_win = firing_strength(rule, z)
    # compared in log space; the ordering is the same and nothing overflows
    case = classify_case(r_win, lv_win, cfg.rho_a, log_vmax)
    out = CaseOutcome(case, winner)

    if case in (CASE_UPDATE, CASE_ATTRACT):
        absorb(rule, z)
    elif case == CASE_SHRINK:
        rule.center = z.copy()
        step = k * math.log(cfg.k_win)
        log_v = lv_win
        n = 0
        while log_v > log_vmax:
            log_v -= step
            n += 1
        # narrowing the kernel: Sigma shrinks by k_win per pass
        rule.inv_dispersion = rule.inv_dispersion * cfg.k_win ** n
        out.shrink_steps = n
    else:
        cand = new_rule_inv_dispersion(k, cfg)
        if gs is None:
            grow = True
        else:
            ds = datum_significance(rb, cand)
            grow = should_grow(gs, ds, abs(e_rn) * ds, trend_positive)
        if grow:
            out.created = rb.append(FuzzyRule(z.copy(), cand, 1, rule.consequent.copy()))
        else:
            absorb(rule, z)
    return out


def bootstrap_first_rule(z, cfg: EvolutionConfig, initial_consequent=None,
                         rb: Optional[RuleBase] = None) -> FuzzyRule:
    """Seed rule centered on the first sample; appended to ``rb`` when given."""
    if rb is not None and len(rb) > 0:
        raise ContractViolation("bootstrap requires an empty rule base")
    z = np.asarray(z, dtype=float).reshape(-1)
    rule = FuzzyRule(z.copy(), new_rule_inv_dispersion(z.size, cfg), 1, initial_consequent)
    if rb is not None:
        rb.append(rule)
    return rule
