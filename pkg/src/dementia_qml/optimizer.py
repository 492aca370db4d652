"""Derivative-free minimization for noisy objectives.

Two methods are available:

* ``COBYLA`` -- Powell's linear-approximation trust-region method, here for
  the unconstrained case. A simplex of ``n + 1`` points defines a linear
  model of the objective; trial steps minimize the model inside a ball,
  extra "geometry" steps keep the simplex well conditioned, and the
  resolution ``rho`` is halved whenever the model stops producing
  improvement. As in Zhang's PRIMA revision, the trial radius ``delta``
  is kept separate from ``rho`` and may expand again after good steps.
* ``SPSA`` -- simultaneous-perturbation stochastic approximation, two
  objective calls per iteration regardless of dimension.

Both return the best point ever evaluated, so the result is never worse than
the starting point.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import ConfigurationError

Objective = Callable[[np.ndarray], float]
TraceCallback = Callable[[int, np.ndarray, float], None]

METHODS = ("COBYLA", "SPSA")

# Powell's acceptability and step constants.
_ALPHA = 0.25  # min distance of a vertex from the opposite face, in units of rho
_BETA = 2.1  # max edge length from the optimal vertex, in units of rho
_GAMMA = 0.5  # geometry step length, in units of rho
_DELTA = 1.1  # edge threshold when choosing which vertex to drop


@dataclass
class OptimizerConfig:
    method: str = "COBYLA"
    rho_begin: float = 1.0
    rho_end: float = 1e-4
    max_evaluations: int = 500
    seed: int = 0
    # SPSA gains; ``spsa_a=None`` calibrates the step size from the first gradient estimates.
    spsa_a: Optional[float] = None
    spsa_c: float = 0.1
    spsa_alpha: float = 0.602
    spsa_gamma: float = 0.101

    def validate(self, dimension: int) -> None:
        if self.method.upper() not in METHODS:
            raise ConfigurationError(f"method must be one of {METHODS}, got {self.method!r}")
        if not 0 < self.rho_end < self.rho_begin:
            raise ConfigurationError(
                f"need 0 < rho_end < rho_begin, got rho_end={self.rho_end}, rho_begin={self.rho_begin}"
            )
        if self.max_evaluations < dimension + 2:
            raise ConfigurationError(
                f"max_evaluations={self.max_evaluations} is below dimension + 2 = {dimension + 2}"
            )


@dataclass
class OptimizationResult:
    best_point: np.ndarray
    best_value: float
    evaluations_used: int
    converged: bool
    message: str = ""
    rho_history: list = field(default_factory=list)
    incumbent_trace: list = field(default_factory=list)


class _Stop(Exception):
    def __init__(self, reason: str):
        super().__init__(reason)
        self.reason = reason


class _Evaluator:
    """Counts calls, enforces the budget, and keeps the incumbent."""

    def __init__(self, objective: Objective, budget: int, callback: TraceCallback | None):
        self.objective = objective
        self.budget = budget
        self.callback = callback
        self.count = 0
        self.best_point: np.ndarray | None = None
        self.best_value = math.inf
        self.incumbent_trace: list = []

    def __call__(self, x: np.ndarray) -> float:
        if self.count >= self.budget:
            raise _Stop("budget")
        x = np.array(x, dtype=float)
        value = float(self.objective(x.copy()))
        self.count += 1
        if self.callback is not None:
            self.callback(self.count, x.copy(), value)
        if not math.isfinite(value):
            if self.best_point is None:
                self.best_point, self.best_value = x, value
            raise _Stop("nonfinite")
        if value < self.best_value:
            self.best_point, self.best_value = x, value
        self.incumbent_trace.append(self.best_value)
        return value

    def result(self, converged: bool, message: str, rho_history=None) -> OptimizationResult:
        return OptimizationResult(
            best_point=self.best_point.copy(),
            best_value=self.best_value,
            evaluations_used=self.count,
            converged=converged,
            message=message,
            rho_history=list(rho_history or []),
            incumbent_trace=list(self.incumbent_trace),
        )


def minimize(
    objective: Objective,
    x0,
    config: OptimizerConfig | None = None,
    callback: TraceCallback | None = None,
) -> OptimizationResult:
    """Minimize ``objective`` starting from ``x0``.

    A non-finite objective value aborts the run; the best point seen so far
    is returned with ``converged=False``. Running out of evaluations counts
    as convergence.
    """
    config = config or OptimizerConfig()
    x0 = np.array(x0, dtype=float).reshape(-1)
    if x0.size < 1:
        raise ValueError("x0 must have at least one entry")
    config.validate(x0.size)
    evaluator = _Evaluator(objective, config.max_evaluations, callback)
    if config.method.upper() == "COBYLA":
        return _cobyla(evaluator, x0, config)
    return _spsa(evaluator, x0, config)


def _cobyla(ev: _Evaluator, x0: np.ndarray, config: OptimizerConfig) -> OptimizationResult:
    n = x0.size
    rho = config.rho_begin
    rho_history = [rho]
    # Trial steps use radius delta >= rho. delta may grow after good steps;
    # rho (the resolution) only ever shrinks.
    delta = rho
    # base = current optimal vertex; sim[j] = displacement of vertex j from base
    base = x0.copy()
    sim = rho * np.eye(n)
    fvals = np.empty(n)
    last_improvement: np.ndarray | None = None
    # Trial steps continue even on a poor simplex; a geometry step happens only
    # after a failed trial on an unacceptable simplex.
    after_trial = True

    try:
        f_base = ev(base)
        for j in range(n):
            fvals[j] = ev(base + sim[j])

        while True:
            # Move the lowest vertex into the base position.
            j_best = int(np.argmin(fvals))
            if fvals[j_best] < f_base:
                shift = sim[j_best].copy()
                last_improvement = shift / np.linalg.norm(shift)
                base = base + shift
                sim = sim - shift
                sim[j_best] = -shift
                fvals[j_best], f_base = f_base, fvals[j_best]

            simi = np.linalg.inv(sim)  # columns are the dual basis of the displacement rows
            gradient = simi @ (fvals - f_base)
            vsig = 1.0 / np.linalg.norm(simi, axis=0)
            veta = np.linalg.norm(sim, axis=1)
            parsig, pareta = _ALPHA * rho, _BETA * rho
            acceptable = bool(np.all(vsig >= parsig) and np.all(veta <= pareta))

            if not (acceptable or after_trial):
                too_long = veta > pareta
                if np.any(too_long):
                    j_drop = int(np.argmax(np.where(too_long, veta, -np.inf)))
                else:
                    j_drop = int(np.argmin(vsig))
                step = _GAMMA * rho * vsig[j_drop] * simi[:, j_drop]
                if gradient @ step > 0:
                    step = -step
                sim[j_drop] = step
                fvals[j_drop] = ev(base + step)
                continue

            after_trial = True
            gnorm = float(np.linalg.norm(gradient))
            if gnorm > 0.0:
                step = -delta * gradient / gnorm
            elif last_improvement is not None:
                # flat model: keep moving the way the last improvement went
                step = delta * last_improvement
            else:
                step = None

            trial_delta = delta
            if step is not None:
                predicted = max(-(gradient @ step), 0.0)
                f_new = ev(base + step)
                actual = f_base - f_new
                replaced = _replace_vertex(sim, fvals, simi, vsig, veta, step, f_new, actual, rho)
                delta = _update_radius(delta, float(np.linalg.norm(step)), actual, predicted, rho)
                if replaced and actual > 0:
                    continue
            else:
                delta = rho

            if trial_delta > rho:
                continue
            if not acceptable:
                after_trial = False
                continue
            if rho <= config.rho_end:
                return ev.result(True, "trust radius reached rho_end", rho_history)
            rho *= 0.5
            if rho <= 1.5 * config.rho_end:
                rho = config.rho_end
            delta = max(0.5 * delta, rho)
            rho_history.append(rho)
    except _Stop as stop:
        if stop.reason == "budget":
            return ev.result(True, "evaluation budget exhausted", rho_history)
        return ev.result(False, "objective returned a non-finite value", rho_history)


def _update_radius(delta: float, step_norm: float, actual: float, predicted: float, rho: float) -> float:
    ratio = actual / predicted if predicted > 0 else -1.0
    if ratio <= 0.1:
        delta = 0.5 * min(delta, step_norm)
    elif ratio <= 0.7:
        delta = max(0.5 * delta, step_norm)
    else:
        delta = max(0.5 * delta, 2.0 * step_norm)
    return rho if delta <= 1.5 * rho else delta


def _replace_vertex(sim, fvals, simi, vsig, veta, step, f_new, actual, rho) -> bool:
    """Swap the trial point into the simplex in place of the least useful vertex.

    Returns False when no vertex qualifies and the simplex is left unchanged.
    """
    threshold = 0.0 if actual > 0 else 1.0
    j_drop = None
    sigbar = np.abs(step @ simi)
    for j in range(len(fvals)):
        if sigbar[j] > threshold:
            j_drop, threshold = j, sigbar[j]
    sigbar = sigbar * vsig
    edge_max = _DELTA * rho
    far = None
    for j in range(len(fvals)):
        if sigbar[j] >= _ALPHA * rho or sigbar[j] >= vsig[j]:
            dist = np.linalg.norm(step - sim[j]) if actual > 0 else veta[j]
            if dist > edge_max:
                far, edge_max = j, dist
    if far is not None:
        j_drop = far
    if j_drop is None:
        return False
    sim[j_drop] = step
    fvals[j_drop] = f_new
    return True


def _spsa(ev: _Evaluator, x0: np.ndarray, config: OptimizerConfig) -> OptimizationResult:
    rng = np.random.default_rng(config.seed)
    x = x0.copy()
    alpha, gamma = config.spsa_alpha, config.spsa_gamma
    try:
        ev(x)
        calibration = 0 if config.spsa_a is not None else min(5, (config.max_evaluations - 1) // 4)
        iterations = max((config.max_evaluations - 1 - 2 * calibration) // 2, 1)
        stability = 0.1 * iterations
        c = config.spsa_c

        def gradient_estimate(point, ck):
            delta = rng.choice([-1.0, 1.0], size=point.size)
            f_plus = ev(point + ck * delta)
            f_minus = ev(point - ck * delta)
            return (f_plus - f_minus) / (2.0 * ck) * delta

        if config.spsa_a is None:
            # Size the first step to ~rho_begin/5 per coordinate.
            magnitudes = [np.mean(np.abs(gradient_estimate(x, c))) for _ in range(calibration)]
            mean_mag = float(np.mean(magnitudes)) if magnitudes else 0.0
            target = 0.2 * config.rho_begin
            a = target * (stability + 1) ** alpha / mean_mag if mean_mag > 0 else target
        else:
            a = config.spsa_a

        for k in range(iterations):
            ak = a / (k + 1 + stability) ** alpha
            ck = c / (k + 1) ** gamma
            x = x - ak * gradient_estimate(x, ck)
        return ev.result(True, "iteration budget exhausted")
    except _Stop as stop:
        if stop.reason == "budget":
            return ev.result(True, "evaluation budget exhausted")
        return ev.result(False, "objective returned a non-finite value")
