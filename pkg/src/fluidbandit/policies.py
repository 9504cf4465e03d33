"""Allocation rules mapping (t, Z) to integer action counts X.

The scalar functions here are the semantic anchors: one count state in,
one plan out.  The simulator's vectorized engine must match them row for
row (property-tested).  Score arguments accept a PriorityScheme, a full
(T, S) array, or a per-period (S,) vector; order is always descending
score with ties broken by ascending state index.

Budget note: the period budget floor(alpha_t * N) needs the exact alpha_t.
Allocators take it as an explicit argument; when omitted, it is recovered
from the measure's pull mass (correct to the LP residual tolerance, then
snapped to the nearest integer boundary when within 1e-4 of one).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any

import numpy as np

from .errors import DimensionMismatch, MissingMetadata, QOutOfRange
from .lp import OccupationMeasure
from .mdp import AllocationPlan, ArmModel, BeliefStateAnnotation, CountState, period_budget
from .occupancy import CategoryPartition, classify


@dataclass
class PolicySpec:
    """Declarative policy choice, compiled by the simulator.

    :kind: one of "fluid", "relaxed", "index", "rac", "ucb", "ts".
    :measure: required by fluid/relaxed/rac.
    :scores: optional explicit scores for fluid/relaxed/index.
    :delta: UCB bonus multiplier.
    """

    kind: str
    measure: OccupationMeasure | None = None
    scores: Any = None
    delta: float | None = None

    @property
    def label(self) -> str:
        if self.kind == "ucb":
            return f"ucb:{self.delta:g}"
        return self.kind


def _score_vector(scores: Any, t: int, S: int) -> np.ndarray:
    """Per-state scores for period t from any accepted scores form."""
    arr = np.asarray(getattr(scores, "P", scores), dtype=np.float64)
    if arr.ndim == 2:
        arr = arr[t - 1]
    if arr.shape != (S,):
        raise DimensionMismatch(f"scores for period {t} have shape {arr.shape}, expected ({S},)")
    return arr


def score_order(scores: Any, t: int, S: int) -> np.ndarray:
    """State visit order: descending score, ties by ascending index."""
    sc = _score_vector(scores, t, S)
    return np.lexsort((np.arange(S), -sc))


def _budget(t: int, N: int, alpha_t: float | None, measure: OccupationMeasure | None) -> int:
    if alpha_t is None:
        if measure is None:
            raise DimensionMismatch("need alpha_t or a measure to derive the budget")
        a = float(measure.x[t - 1, :, 1].sum())
        v = a * N
        if abs(v - round(v)) <= 1e-4:
            return int(round(v))
        return int(math.floor(v))
    return period_budget(alpha_t, N)


def fluid_priority_allocate(t: int, counts: CountState, measure: OccupationMeasure,
                            scores: Any, N: int, alpha_t: float | None = None,
                            partition: CategoryPartition | None = None) -> AllocationPlan:
    """Priority allocation with neutral-state quotas from the measure.

    Pass order: active states (descending score) up to their counts; then
    neutral states up to floor(N * x_t(s,1)); then leftover neutral arms;
    then inactive states.  Exactly floor(alpha_t * N) arms are pulled.
    """
    Z = counts.Z
    S = Z.size
    if counts.N != N or int(Z.sum()) != N:
        raise DimensionMismatch(f"counts sum {Z.sum()} vs N={N}")
    if measure.x.shape[1] != S:
        raise DimensionMismatch("measure and counts disagree on the state count")
    part = partition if partition is not None else classify(measure)
    codes = part.codes[t - 1]
    order = score_order(scores, t, S)
    B = _budget(t, N, alpha_t, measure)

    X1 = np.zeros(S, dtype=np.int64)
    undecided = np.zeros(S, dtype=np.int64)
    for s in order:
        if codes[s] == 1:
            take = min(B, int(Z[s]))
            X1[s] += take
            B -= take
    for s in order:
        if codes[s] == 0:
            quota = int(math.floor(N * measure.x[t - 1, s, 1]))
            take = min(B, int(Z[s]), quota)
            X1[s] += take
            B -= take
            undecided[s] = int(Z[s]) - take
    for s in order:
        if codes[s] == 0:
            take = min(B, int(undecided[s]))
            X1[s] += take
            B -= take
    for s in order:
        if codes[s] == -1:
            take = min(B, int(Z[s]))
            X1[s] += take
            B -= take
    X = np.stack([Z - X1, X1], axis=1)
    return AllocationPlan(t=t, X=X, relaxed=False)


def budget_relaxed_allocate(t: int, counts: CountState, measure: OccupationMeasure,
                            scores: Any, N: int, alpha_t: float | None = None,
                            partition: CategoryPartition | None = None) -> AllocationPlan:
    """Relaxed variant: all active arms are pulled even past the budget.

    If the budget is spent (or overspent) by the active pass, no neutral
    arm is pulled; otherwise the two neutral passes run as in the strict
    policy.  Inactive arms are never pulled.  The plan is flagged relaxed.
    """
    Z = counts.Z
    S = Z.size
    if counts.N != N or int(Z.sum()) != N:
        raise DimensionMismatch(f"counts sum {Z.sum()} vs N={N}")
    part = partition if partition is not None else classify(measure)
    codes = part.codes[t - 1]
    order = score_order(scores, t, S)
    B = _budget(t, N, alpha_t, measure)

    X1 = np.zeros(S, dtype=np.int64)
    for s in order:
        if codes[s] == 1:
            X1[s] += int(Z[s])
            B -= int(Z[s])
    if B > 0:
        undecided = np.zeros(S, dtype=np.int64)
        for s in order:
            if codes[s] == 0:
                quota = int(math.floor(N * measure.x[t - 1, s, 1]))
                take = min(B, int(Z[s]), quota)
                X1[s] += take
                B -= take
                undecided[s] = int(Z[s]) - take
        for s in order:
            if codes[s] == 0:
                take = min(B, int(undecided[s]))
                X1[s] += take
                B -= take
    X = np.stack([Z - X1, X1], axis=1)
    return AllocationPlan(t=t, X=X, relaxed=True)


def violation_event(t: int, counts: CountState, partition: CategoryPartition,
                    alpha_t: float, N: int | None = None) -> bool:
    """True iff the real-budget bracketing event fails at (t, Z).

    The good event asks the active mass to sit at or below alpha_t*N and
    the active-plus-neutral mass to reach it; its failure is what makes
    the strict and relaxed allocations diverge.
    """
    if N is None:
        N = counts.N
    codes = partition.codes[t - 1]
    lo = int(counts.Z[codes == 1].sum())
    hi = lo + int(counts.Z[codes == 0].sum())
    target = alpha_t * N
    return not (lo <= target <= hi)


def index_allocate(t: int, counts: CountState, scores: Any, B: int) -> AllocationPlan:
    """Greedy: pull arms in descending state score until B is spent."""
    Z = counts.Z
    S = Z.size
    order = score_order(scores, t, S)
    X1 = np.zeros(S, dtype=np.int64)
    rem = int(B)
    for s in order:
        if rem <= 0:
            break
        take = min(rem, int(Z[s]))
        X1[s] = take
        rem -= take
    X = np.stack([Z - X1, X1], axis=1)
    return AllocationPlan(t=t, X=X, relaxed=bool(rem > 0))


def activation_probabilities(measure: OccupationMeasure, t: int,
                             tol: float = 1e-9) -> np.ndarray:
    """q_t(s) = x_t(s,1) / z_t(s), zero where the fluid mass vanishes."""
    z = measure.z[t - 1]
    x1 = measure.x[t - 1, :, 1]
    q = np.zeros_like(z)
    occ = z > tol
    q[occ] = x1[occ] / z[occ]
    if (q < -tol).any() or (q > 1.0 + 1e-9).any():
        raise QOutOfRange(f"activation probabilities outside [0,1]: min {q.min()}, max {q.max()}")
    return np.clip(q, 0.0, 1.0)


def rac_allocate(t: int, counts: CountState, measure: OccupationMeasure, B: int,
                 rng: np.random.Generator) -> AllocationPlan:
    """Randomized activation: visit arms in uniform order, flip q_t(s) coins.

    Pulls stop the moment the budget is exhausted, so the plan may spend
    less than B but never more.  The per-arm coin of every arm is drawn
    independently of the visiting order, which reproduces the sequential
    law exactly (unvisited arms simply discard their coins).
    """
    q = activation_probabilities(measure, t)
    Z = counts.Z
    S = Z.size
    N = int(Z.sum())
    arm_state = np.repeat(np.arange(S), Z)
    visit = rng.permutation(N)
    coins = rng.random(N) < q[arm_state]
    success_in_order = coins[visit]
    cum = np.cumsum(success_in_order)
    chosen_arms = visit[success_in_order & (cum <= B)]
    X1 = np.bincount(arm_state[chosen_arms], minlength=S).astype(np.int64)
    X = np.stack([Z - X1, X1], axis=1)
    return AllocationPlan(t=t, X=X, relaxed=True)


def _require_annotations(annotations) -> list[BeliefStateAnnotation]:
    if not annotations:
        raise MissingMetadata("model ships no per-state posterior annotations")
    return annotations


def ucb_scores(annotations, delta: float) -> np.ndarray:
    ann = _require_annotations(annotations)
    return np.array([a.posterior_mean + delta * a.posterior_sd for a in ann])


def ucb_allocate(t: int, counts: CountState, annotations, delta: float,
                 B: int) -> AllocationPlan:
    """Index allocation by posterior mean plus delta posterior sd."""
    return index_allocate(t, counts, ucb_scores(annotations, delta), B)


def ts_allocate(t: int, counts: CountState, annotations, rng: np.random.Generator,
                B: int) -> AllocationPlan:
    """Thompson sampling: per-arm posterior draws, pull the top B.

    Draws happen state by state in ascending index (one sampler call per
    occupied state).  Equal draws are resolved in ascending state order,
    which is distribution-neutral by exchangeability of tied arms.
    """
    ann = _require_annotations(annotations)
    Z = counts.Z
    S = Z.size
    N = int(Z.sum())
    B = min(int(B), N)
    if B <= 0:
        return AllocationPlan(t=t, X=np.stack([Z, np.zeros(S, dtype=np.int64)], 1), relaxed=False)
    draws_by_state = [ann[s].sampler(rng, int(Z[s])) if Z[s] > 0 else np.empty(0)
                      for s in range(S)]
    allsamp = np.concatenate(draws_by_state) if N else np.empty(0)
    thr = np.partition(allsamp, N - B)[N - B]
    gt = np.array([(d > thr).sum() for d in draws_by_state], dtype=np.int64)
    eq = np.array([(d == thr).sum() for d in draws_by_state], dtype=np.int64)
    X1 = gt.copy()
    rem = B - int(gt.sum())
    for s in range(S):
        if rem <= 0:
            break
        take = min(rem, int(eq[s]))
        X1[s] += take
        rem -= take
    X = np.stack([Z - X1, X1], axis=1)
    return AllocationPlan(t=t, X=X, relaxed=False)


def parse_policy(text: str) -> PolicySpec:
    """CLI form: fluid | relaxed | index | rac | ucb:<delta> | ts."""
    from .errors import ConfigError

    t = text.strip().lower()
    if t in ("fluid", "relaxed", "index", "rac", "ts"):
        return PolicySpec(kind=t)
    if t.startswith("ucb"):
        parts = t.split(":")
        if len(parts) == 2:
            try:
                return PolicySpec(kind="ucb", delta=float(parts[1]))
            except ValueError:
                pass
        raise ConfigError(f"bad UCB policy spec {text!r}; use ucb:<delta>")
    raise ConfigError(f"unknown policy {text!r}")
