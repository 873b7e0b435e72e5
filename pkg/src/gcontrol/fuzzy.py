"""
Evolving first-order Takagi-Sugeno rule base with multivariate Gaussian rules.

Each rule i owns a center ``Theta_i`` (length k), a full inverse dispersion
matrix ``Sigma_i^-1`` (k x k, SPD), a support count ``N_i`` and an affine
consequent ``(a_0i, a_1i, ..., a_ki)``.  For an input ``z`` the raw firing is

    R_i(z) = exp(-(z - Theta_i)^T Sigma_i^-1 (z - Theta_i))

and the model output is the normalized firing-weighted average of the rule
consequents ``eta_i(z) = a_0i + sum_m a_mi z_m``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple, Optional, Sequence

import numpy as np

from .exceptions import ContractViolation, NoRulesError, NumericalError

#: raw firings below this are treated as exactly zero
FIRING_FLOOR = 1e-300


@dataclass
class FuzzyRule:
    center: np.ndarray
    inv_dispersion: np.ndarray
    support: int = 1
    consequent: Optional[np.ndarray] = None

    def __post_init__(self):
        self.center = np.array(self.center, dtype=float).reshape(-1)
        k = self.center.size
        self.inv_dispersion = np.array(self.inv_dispersion, dtype=float).reshape(k, k)
        if self.consequent is None:
            self.consequent = np.zeros(k + 1)
        else:
            self.consequent = np.array(self.consequent, dtype=float).reshape(-1)
        if self.consequent.size != k + 1:
            raise ContractViolation(
                f"consequent must have length {k + 1}, got {self.consequent.size}")

    @property
    def dim(self) -> int:
        return self.center.size

    def copy(self) -> "FuzzyRule":
        return FuzzyRule(self.center.copy(), self.inv_dispersion.copy(),
                         self.support, self.consequent.copy())


@dataclass
class RuleBase:
    """Ordered, mutable collection of rules sharing one input dimension."""

    input_dim: int
    input_range: np.ndarray = None
    rules: list = field(default_factory=list)

    def __post_init__(self):
        if self.input_dim < 1:
            raise ContractViolation("input_dim must be positive")
        if self.input_range is None:
            self.input_range = np.tile([-1.0, 1.0], (self.input_dim, 1))
        self.input_range = np.array(self.input_range, dtype=float).reshape(self.input_dim, 2)
        if np.any(self.input_range[:, 0] >= self.input_range[:, 1]):
            raise ContractViolation("input_range needs lo < hi in every dimension")
        for r in self.rules:
            self._check(r)

    def _check(self, rule: FuzzyRule):
        if rule.dim != self.input_dim:
            raise ContractViolation(
                f"rule dimension {rule.dim} does not match rule base dimension {self.input_dim}")

    def __len__(self):
        return len(self.rules)

    def __iter__(self):
        return iter(self.rules)

    def __getitem__(self, i) -> FuzzyRule:
        return self.rules[i]

    def append(self, rule: FuzzyRule) -> int:
        self._check(rule)
        self.rules.append(rule)
        return len(self.rules) - 1

    def remove(self, indices: Sequence[int]):
        for i in sorted(set(indices), reverse=True):
            del self.rules[i]

    def normalize(self, z) -> np.ndarray:
        """Map raw inputs onto [-1, 1] per dimension using ``input_range``."""
        lo, hi = self.input_range[:, 0], self.input_range[:, 1]
        return (2.0 * (np.asarray(z, dtype=float) - lo) / (hi - lo)) - 1.0

    def centers(self) -> np.ndarray:
        return np.array([r.center for r in self.rules])

    def inv_dispersions(self) -> np.ndarray:
        return np.array([r.inv_dispersion for r in self.rules])

    def consequents(self) -> np.ndarray:
        return np.array([r.consequent for r in self.rules])

    def supports(self) -> np.ndarray:
        return np.array([r.support for r in self.rules], dtype=float)


@dataclass
class FiringVector:
    raw: np.ndarray
    normalized: np.ndarray
    distance: Optional[np.ndarray] = None   # squared Mahalanobis distances


class Inference(NamedTuple):
    output: float
    firing: FiringVector
    psi_regressor: np.ndarray


def _as_input(z, k: int) -> np.ndarray:
    z = np.asarray(z, dtype=float).reshape(-1)
    if z.size != k:
        raise ContractViolation(f"input has dimension {z.size}, expected {k}")
    return z


def firing_strength(rule: FuzzyRule, z) -> float:
    """Unnormalized Gaussian activation of one rule, in (0, 1]."""
    d = _as_input(z, rule.dim) - rule.center
    return float(np.exp(-(d @ rule.inv_dispersion @ d)))


def mahalanobis(rb: RuleBase, z) -> np.ndarray:
    """Squared Mahalanobis distance of ``z`` to every rule center."""
    z = _as_input(z, rb.input_dim)
    if len(rb.rules) == 1:
        r = rb.rules[0]
        d = z - r.center
        return np.array([d @ r.inv_dispersion @ d])
    diff = z[None, :] - rb.centers()
    return np.einsum("ji,jik,jk->j", diff, rb.inv_dispersions(), diff)


def normalized_firing(rb: RuleBase, z) -> FiringVector:
    if len(rb) == 0:
        raise NoRulesError("no rules: create the first rule before inference")
    q = mahalanobis(rb, z)
    raw = np.exp(-q)
    raw[raw < FIRING_FLOOR] = 0.0
    total = raw.sum()
    if total > 0.0:
        psi = raw / total
    else:
        # every kernel underflowed; hand the sample to the nearest rule
        psi = np.zeros_like(raw)
        psi[int(np.argmin(q))] = 1.0
    return FiringVector(raw, psi, q)


def infer(rb: RuleBase, z) -> Inference:
    """
    Evaluate the TS model at ``z``.

    Returns the crisp output, the firing vector and the stacked regressor
    whose block i is ``psi_i * (1, z_1, ..., z_k)``.
    """
    z = _as_input(z, rb.input_dim)
    firing = normalized_firing(rb, z)
    ext = np.concatenate(([1.0], z))
    eta = rb.consequents() @ ext
    output = float(firing.normalized @ eta)
    regressor = np.outer(firing.normalized, ext).ravel()
    return Inference(output, firing, regressor)


def _log_det_inv(m: np.ndarray) -> float:
    if m.shape == (2, 2):
        det = m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0]
        if m[0, 0] > 0.0 and det > 0.0 and np.isfinite(det):
            return math.log(det)
        return math.nan
    sign, logdet = np.linalg.slogdet(m)
    return float(logdet) if sign > 0 and np.isfinite(logdet) else math.nan


def log_volume(rule: FuzzyRule, index: Optional[int] = None) -> float:
    """``log det(Sigma)`` computed from the stored inverse dispersion."""
    key = rule.inv_dispersion.tobytes()
    cached = rule.__dict__.get("_lv")
    if cached is not None and cached[0] == key:
        return cached[1]
    logdet = _log_det_inv(rule.inv_dispersion)
    if math.isnan(logdet):
        where = "" if index is None else f" (rule {index})"
        raise NumericalError(f"inverse dispersion is singular or indefinite{where}")
    rule.__dict__["_lv"] = (key, -logdet)
    return -logdet


def rule_volume(rule: FuzzyRule, index: Optional[int] = None) -> float:
    """Hyper-volume ``det(Sigma) = 1 / det(Sigma^-1)`` covered by a rule."""
    return float(np.exp(log_volume(rule, index)))


def log_volumes(rb: RuleBase) -> np.ndarray:
    return np.array([log_volume(r, i) for i, r in enumerate(rb.rules)])
