"""The self-evolving neuro-fuzzy controller: one object per control loop."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, NamedTuple, Optional, Tuple

import numpy as np

from . import evolution as evo
from . import smc
from .fuzzy import RuleBase, infer


@dataclass
class GControllerConfig:
    evolution: evo.EvolutionConfig = field(default_factory=evo.EvolutionConfig)
    # raw (e, de/dt) bounds used to scale inputs onto [-1, 1]
    input_range: Tuple[Tuple[float, float], ...] = ((-10.0, 10.0), (-50.0, 50.0))
    normalize_inputs: bool = True
    g0: float = 1000.0
    alpha_init: Tuple[float, float, float] = smc.ALPHA_INIT
    alpha_target: Tuple[float, float, float] = smc.ALPHA_TARGET
    alpha_rate: Tuple[float, float, float] = smc.ALPHA_RATE
    sat_bound: float = 5.0
    scheme: str = "exact"
    prune: bool = True
    v0: float = 0.0
    diagnostics: bool = False


class ControlStep(NamedTuple):
    u: float
    u_arc: float
    u_g: float
    s_h: float
    rules: int
    v_hat: float
    det_g: float
    alpha: Tuple[float, float, float]
    events: List[str]
    logdet_g: float
    min_eig_g: Optional[float]
    gpsi_norm: float


class GController:
    """
    Online TS controller that starts with no rules.

    Each call to :meth:`step` runs, in order: inference, sliding surface,
    control synthesis, consequent adaptation, one structure-learning pass
    (winner selection, vigilance, growth or pruning), resizing of the
    adaptive state, sliding-parameter evolution and the Lyapunov monitor.
    """

    def __init__(self, config: Optional[GControllerConfig] = None):
        self.config = config or GControllerConfig()
        k = len(self.config.input_range)
        self.block = k + 1
        self.rules = RuleBase(k, np.array(self.config.input_range, dtype=float))
        self.growth = evo.GrowthState(ds_threshold=self.config.evolution.g)
        self.state: Optional[smc.SmcState] = None
        self.lyapunov = smc.LyapunovTrace(v=self.config.v0)
        self.last_u = 0.0
        self.steps = 0
        self._logdet: Optional[float] = None
        half = (self.rules.input_range[:, 1] - self.rules.input_range[:, 0]) / 2.0
        self.domain_volume = 1.0 if self.config.normalize_inputs else float(np.prod(half ** 2))

    def _inputs(self, e: float, e_dot: float) -> np.ndarray:
        z = np.array([e, e_dot], dtype=float)[: self.rules.input_dim]
        if not self.config.normalize_inputs:
            return z
        # inputs beyond the declared range saturate at its edge
        return np.minimum(np.maximum(self.rules.normalize(z), -1.0), 1.0)

    def _sync_consequents(self):
        b = self.block
        om = self.state.omega
        for i, rule in enumerate(self.rules):
            rule.consequent = om[i * b:(i + 1) * b].copy()

    def step(self, e: float, e_dot: float, dt: float, y: Optional[float] = None) -> ControlStep:
        cfg = self.config
        z = self._inputs(e, e_dot)
        events: List[str] = []
        structural = False
        fresh = len(self.rules) == 0
        if fresh:
            evo.bootstrap_first_rule(z, cfg.evolution, rb=self.rules)
            self.state = smc.SmcState.initial(
                self.block, 1, cfg.g0, cfg.alpha_init, cfg.alpha_target, cfg.alpha_rate,
                cfg.sat_bound)
            events.append("grow:0")
            structural = True
            self._logdet = self.block * math.log(cfg.g0)

        st = smc.integrate_error(self.state, e, dt)
        inference = infer(self.rules, z)
        psi = inference.psi_regressor
        s_h = smc.sliding_surface(st, e, e_dot)
        u_arc = smc.auxiliary_control(st, s_h)
        u_g = smc.fuzzy_control(st, psi)
        u = smc.total_control(u_arc, u_g)
        gpsi = st.gain @ psi
        gpsi_norm = math.sqrt(float(gpsi @ gpsi))
        quad = dt * float(psi @ gpsi)

        before = st.recoveries
        st = smc.adapt(st, psi, s_h, dt, cfg.scheme)
        if st.recoveries != before:
            events.append("recovery")
            self._logdet = None
        elif self._logdet is not None and (cfg.scheme == "exact" or quad < 1.0):
            # closed-form determinant change of the rank-one gain update
            shrink = math.log1p(quad) if cfg.scheme == "exact" else -math.log1p(-quad)
            self._logdet -= shrink
        else:
            self._logdet = None
        self.state = st
        self._sync_consequents()

        if not fresh:
            if cfg.evolution.ern_mode == "tracking":
                # same units as the premise inputs so the growth gate is scale free
                e_rn = abs(float(z[0])) if cfg.normalize_inputs else abs(e)
            else:
                e_rn = abs((y if y is not None else 0.0) - self.last_u)
            grown = self.growth
            self.growth = evo.update_error_stats(self.growth, e_rn)
            trend = evo.error_trend_positive(grown, self.growth)
            q = inference.firing.distance
            winner, _ = evo.select_winner(self.rules, z, q)
            j = len(self.rules)
            outcome = evo.vigilance_update(self.rules, cfg.evolution, z, winner,
                                           gs=self.growth, e_rn=e_rn, trend_positive=trend,
                                           domain_volume=self.domain_volume,
                                           r_win=math.exp(-q[winner]))
            events.append(f"case{outcome.case}:{winner}")
            if outcome.grew:
                st = smc.resize(st, j, j + 1, [outcome.created], self.block,
                                init_block=self.rules[winner].consequent)
                events.append(f"grow:{outcome.created}")
                structural = True
                if self._logdet is not None:
                    self._logdet += self.block * math.log(cfg.g0)
            elif cfg.prune:
                pruned = evo.prune_rules(self.rules, cfg.evolution)
                if pruned:
                    st = smc.resize(st, j, j - len(pruned), pruned, self.block)
                    events.extend(f"prune:{i}" for i in pruned)
                    structural = True
                    self._logdet = None

        st = smc.evolve_alpha(st, dt)
        self.state = st
        self.lyapunov = smc.lyapunov_monitor(self.lyapunov, s_h, dt, structural)
        self.last_u = u
        self.steps += 1

        if self._logdet is None:
            sign, logdet = np.linalg.slogdet(st.gain)
            self._logdet = float(logdet) if sign > 0 else None
        logdet = self._logdet if self._logdet is not None else float("nan")
        min_eig = float(np.linalg.eigvalsh(st.gain)[0]) if cfg.diagnostics else None
        return ControlStep(u, u_arc, u_g, s_h, len(self.rules), self.lyapunov.v,
                           math.exp(min(logdet, 709.0)) if logdet == logdet else float("nan"), tuple(float(a) for a in st.alpha), events,
                           logdet, min_eig, gpsi_norm)
