"""Monte Carlo evaluation of policies over N exchangeable arms.

Two engines share one report format.  The count engine tracks only the
per-state arm counts (cost independent of N for count-level policies)
and samples transitions as grouped multinomials via sequential binomial
conditioning.  The per-arm engine tracks every arm individually and is
the reference for distributional cross-validation; it is also the
natural home of genuinely per-arm policies at small N.

Replications are processed in deterministic chunks, vectorized across
the chunk.  Chunk k of a run draws from a Philox stream seeded by
SeedSequence(seed, spawn_key=(tag, k)), where the tag hashes the policy
label and run shape, so runs are reproducible bit for bit and chunk
merging is order-fixed (Chan's variance combine in chunk order).
"""

from __future__ import annotations

import math
import time
import zlib
from dataclasses import dataclass, field
from typing import Any, Callable, Sequence

import numpy as np

from .errors import DimensionMismatch, MissingMetadata, RangeError
from .lp import OccupationMeasure, solve_relaxation
from .mdp import ArmModel, CountState, period_budget
from .occupancy import CategoryPartition, classify
from .policies import (PolicySpec, activation_probabilities, parse_policy,
                       score_order, ucb_scores)
from .priority import lambda_from_duals, q_recursion

# 95% two-sided normal quantile.
Z95 = 1.959963984540054
# Cells (reps x per-rep width) processed per vectorized chunk.
CHUNK_CELL_BUDGET = 1 << 21
# Below this replication count the normal CI is flagged unreliable.
CI_MIN_REPS = 1000


def default_reps(N: int) -> int:
    """Desk-scale default replication rule."""
    return min(50 * N, 200_000)


def diffusion_stats(arr: np.ndarray, N: int, reference: np.ndarray) -> np.ndarray:
    """Centered, sqrt(N)-scaled fluctuation of counts around N * reference."""
    a = np.asarray(arr, dtype=np.float64)
    ref = np.asarray(reference, dtype=np.float64)
    if a.shape != ref.shape:
        raise DimensionMismatch(f"shapes {a.shape} vs {ref.shape}")
    return (a - N * ref) / math.sqrt(N)


@dataclass
class SimulationReport:
    """Aggregated Monte Carlo results for one (model, policy, N) run.

    :mean_reward: mean total reward across replications.
    :ci_halfwidth: 95% normal-approximation halfwidth of that mean.
    :per_t_violation_rate: per-period failure frequency of the budget
        bracketing event (NaN when the policy carries no measure).
    :union_violation_rate: frequency of failing in at least one period.
    :diffusion_second_moments: {"Z": per-t E||Z~||^2, "X": per-t E||X~||^2},
        or None when no reference measure exists.
    :ci_reliable: False when reps < 1000 (normal CI not trusted).
    """

    mean_reward: float
    ci_halfwidth: float
    reps: int
    per_t_violation_rate: np.ndarray
    diffusion_second_moments: dict[str, np.ndarray] | None
    seed: int
    wall_time: float
    N: int
    policy: str
    union_violation_rate: float
    ci_reliable: bool
    engine: str


@dataclass
class SweepRow:
    """One N of a gap sweep; gap bracket is gap +- ci."""

    N: int
    upper_bound: float
    mean: float
    ci: float
    gap_upper_bound: float
    report: SimulationReport = field(repr=False, default=None)


class CompiledPolicy:
    """Per-(model, spec) allocation engine with vectorized batch paths."""

    def __init__(self, model: ArmModel, spec: PolicySpec):
        self.model = model
        self.spec = spec
        self.kind = spec.kind
        self.measure: OccupationMeasure | None = spec.measure
        if self.kind in ("fluid", "relaxed", "rac") and self.measure is None:
            self.measure = solve_relaxation(model)
        self.partition: CategoryPartition | None = (
            classify(self.measure) if self.measure is not None else None)

        scores = spec.scores
        if self.kind in ("fluid", "relaxed", "index") and scores is None:
            m = self.measure if self.measure is not None else solve_relaxation(model)
            if self.measure is None:
                self.measure = m
                self.partition = classify(m)
            scores = q_recursion(model, lambda_from_duals(m))
        if self.kind == "ucb":
            if spec.delta is None:
                raise RangeError("UCB policy needs a delta")
            scores = ucb_scores(model.annotations, spec.delta)
        self.scores = scores

        if self.kind == "ts" and not model.annotations:
            raise MissingMetadata("TS needs per-state posterior annotations")
        # index/ucb/ts carry no reference measure for violation/diffusion
        if self.kind in ("index", "ucb", "ts"):
            self.measure = None
            self.partition = None

        T, S = model.T, model.S
        if self.kind in ("ts", "rac"):
            self._orders = None
        else:
            self._orders = [score_order(self.scores, t, S) for t in range(1, T + 1)]
        self._codes = self.partition.codes if self.partition is not None else None
        # transition support lists per (t, s, a)
        self._support = []
        for t in range(T - 1):
            per_sa = []
            for s in range(S):
                for a in (0, 1):
                    p = model.P[t, s, a]
                    nz = np.flatnonzero(p > 0.0)
                    per_sa.append((s, a, nz, p[nz]))
            self._support.append(per_sa)

    @property
    def label(self) -> str:
        return self.spec.label

    def prepare(self, N: int) -> dict[str, Any]:
        """Per-run integers: budgets and neutral quotas at this N."""
        T, S = self.model.T, self.model.S
        ctx: dict[str, Any] = {
            "N": N,
            "B": np.array([period_budget(float(self.model.alpha[t]), N) for t in range(T)]),
            "alphaN": self.model.alpha * N,
        }
        if self.measure is not None:
            ctx["quota"] = np.floor(N * self.measure.x[:, :, 1]).astype(np.int64)
        return ctx

    # ---- batch allocation ------------------------------------------------

    def allocate_batch(self, t: int, Z: np.ndarray, rng: np.random.Generator,
                       ctx: dict[str, Any]) -> np.ndarray:
        """Pull counts (R, S) matching the scalar allocators row for row."""
        if self.kind in ("fluid", "relaxed"):
            return self._batch_fluid(t, Z, ctx, relaxed=self.kind == "relaxed")
        if self.kind in ("index", "ucb"):
            return self._batch_index(t, Z, ctx)
        if self.kind == "rac":
            return self._batch_rac(t, Z, rng, ctx)
        if self.kind == "ts":
            return self._batch_ts(t, Z, rng, ctx)
        raise RangeError(f"unknown policy kind {self.kind!r}")

    @staticmethod
    def _prefix_clip(caps: list[np.ndarray], budget) -> list[np.ndarray]:
        """Greedy takes per slot under a shared budget (scalar or per-rep)."""
        takes = []
        used = 0
        for cap in caps:
            rem = np.maximum(budget - used, 0)
            take = np.minimum(cap, rem)
            takes.append(take)
            used = used + take
        return takes

    def _batch_fluid(self, t: int, Z: np.ndarray, ctx: dict[str, Any],
                     relaxed: bool) -> np.ndarray:
        codes = self._codes[t - 1]
        order = self._orders[t - 1]
        quota = ctx["quota"][t - 1]
        B = int(ctx["B"][t - 1])
        R, S = Z.shape
        X1 = np.zeros((R, S), dtype=np.int64)

        active = [s for s in order if codes[s] == 1]
        neutral = [s for s in order if codes[s] == 0]
        inactive = [s for s in order if codes[s] == -1]

        if relaxed:
            for s in active:
                X1[:, s] = Z[:, s]
            budget = B - Z[:, active].sum(axis=1) if active else np.full(R, B)
            budget = np.maximum(budget, 0)
        else:
            budget = B
            slots, caps = [], []
            for s in active:
                slots.append(s)
                caps.append(Z[:, s])
            takes = self._prefix_clip(caps, budget)
            used = np.zeros(R, dtype=np.int64)
            for s, take in zip(slots, takes):
                X1[:, s] += take
                used += take
            budget = B - used

        # neutral pass one (quota floor), then pass two (leftovers)
        caps1 = [np.minimum(Z[:, s], quota[s]) for s in neutral]
        caps2 = [Z[:, s] - np.minimum(Z[:, s], quota[s]) for s in neutral]
        takes = self._prefix_clip(caps1 + caps2, budget)
        for s, take in zip(neutral + neutral, takes):
            X1[:, s] += take
        if not relaxed:
            spent = X1.sum(axis=1)
            caps3 = [Z[:, s] for s in inactive]
            takes = self._prefix_clip(caps3, B - spent)
            for s, take in zip(inactive, takes):
                X1[:, s] += take
        return X1

    def _batch_index(self, t: int, Z: np.ndarray, ctx: dict[str, Any]) -> np.ndarray:
        order = self._orders[t - 1]
        B = int(ctx["B"][t - 1])
        R, S = Z.shape
        X1 = np.zeros((R, S), dtype=np.int64)
        takes = self._prefix_clip([Z[:, s] for s in order], B)
        for s, take in zip(order, takes):
            X1[:, s] = take
        return X1

    def _batch_rac(self, t: int, Z: np.ndarray, rng: np.random.Generator,
                   ctx: dict[str, Any]) -> np.ndarray:
        q = activation_probabilities(self.measure, t)
        B = int(ctx["B"][t - 1])
        R, S = Z.shape
        N = int(ctx["N"])
        arm_state = np.repeat(np.tile(np.arange(S), R), Z.reshape(-1)).reshape(R, N)
        coins = rng.random((R, N)) < q[arm_state]
        keys = rng.random((R, N))
        visit = np.argsort(keys, axis=1)
        succ = np.take_along_axis(coins, visit, axis=1)
        st = np.take_along_axis(arm_state, visit, axis=1)
        chosen = succ & (np.cumsum(succ, axis=1) <= B)
        flat = st[chosen] + S * np.broadcast_to(np.arange(R)[:, None], (R, N))[chosen]
        X1 = np.bincount(flat, minlength=R * S).reshape(R, S).astype(np.int64)
        return X1

    def _batch_ts(self, t: int, Z: np.ndarray, rng: np.random.Generator,
                  ctx: dict[str, Any]) -> np.ndarray:
        ann = self.model.annotations
        B = int(ctx["B"][t - 1])
        R, S = Z.shape
        N = int(ctx["N"])
        if B <= 0:
            return np.zeros((R, S), dtype=np.int64)
        if B >= N:
            return Z.copy()
        occupied = np.flatnonzero(Z.any(axis=0))
        if occupied.size == 1:
            # single occupied state: top-B is any B of its arms
            X1 = np.zeros((R, S), dtype=np.int64)
            X1[:, occupied[0]] = np.minimum(Z[:, occupied[0]], B)
            return X1
        # rep-major (R, N) sample matrix, filled state block by state block
        samples = np.empty((R, N), dtype=np.float64)
        col_start = np.concatenate([np.zeros((R, 1), dtype=np.int64),
                                    np.cumsum(Z, axis=1)[:, :-1]], axis=1)
        row_base = np.arange(R, dtype=np.int64) * N
        per_state = {}
        for s in occupied:
            zs = Z[:, s]
            M = int(zs.sum())
            if M == 0:
                continue
            draws = np.asarray(ann[s].sampler(rng, M), dtype=np.float64)
            starts = np.concatenate([[0], np.cumsum(zs)[:-1]])
            offs = np.arange(M) - np.repeat(starts, zs)
            flat = np.repeat(row_base + col_start[:, s], zs) + offs
            samples.reshape(-1)[flat] = draws
            per_state[s] = (draws, starts, zs)
        thr = np.partition(samples, N - B, axis=1)[:, N - B]
        gt = np.zeros((R, S), dtype=np.int64)
        eq = np.zeros((R, S), dtype=np.int64)
        for s, (draws, starts, zs) in per_state.items():
            ends = starts + zs
            thr_rep = np.repeat(thr, zs)
            cg = np.concatenate([[0], np.cumsum(draws > thr_rep)])
            ce = np.concatenate([[0], np.cumsum(draws == thr_rep)])
            gt[:, s] = cg[ends] - cg[starts]
            eq[:, s] = ce[ends] - ce[starts]
        X1 = gt
        rem = B - gt.sum(axis=1)
        takes = self._prefix_clip([eq[:, s] for s in range(S)], rem)
        for s, take in zip(range(S), takes):
            X1[:, s] += take
        return X1

    # ---- batch transitions ----------------------------------------------

    def step_counts(self, t: int, X: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        """Sample Z_{t+1} (R, S) from per-(s, a) grouped multinomials.

        Sequential binomial conditioning over each support, visiting
        (s asc, a in 0..1, targets asc) in a fixed order.
        """
        R = X.shape[0]
        S = self.model.S
        Znext = np.zeros((R, S), dtype=np.int64)
        for s, a, targets, probs in self._support[t - 1]:
            n = X[:, s, a]
            if not n.any():
                continue
            if targets.size == 1:
                Znext[:, targets[0]] += n
                continue
            remaining = n.copy()
            mass = float(probs.sum())
            for j in range(targets.size - 1):
                p = min(max(probs[j] / mass, 0.0), 1.0)
                k = rng.binomial(remaining, p)
                Znext[:, targets[j]] += k
                remaining -= k
                mass -= probs[j]
                if not remaining.any():
                    break
            Znext[:, targets[-1]] += remaining
        return Znext


# ---- chunked execution ----------------------------------------------------


def _policy_tag(label: str, N: int, reps: int, engine: str, crn: bool) -> int:
    core = f"N={N}|reps={reps}|engine={engine}"
    if not crn:
        core = f"{label}|{core}"
    return zlib.crc32(core.encode()) & 0x7FFFFFFF


def _stream(seed: int, tag: int, chunk: int) -> np.random.Generator:
    ss = np.random.SeedSequence(entropy=seed, spawn_key=(tag, chunk))
    return np.random.Generator(np.random.Philox(ss))


def _chunk_sizes(reps: int, cell: int) -> list[int]:
    size = max(1, min(reps, CHUNK_CELL_BUDGET // max(1, cell)))
    full, rem = divmod(reps, size)
    return [size] * full + ([rem] if rem else [])


@dataclass
class _Welford:
    n: int = 0
    mean: float = 0.0
    m2: float = 0.0

    def add_chunk(self, values: np.ndarray) -> None:
        nb = values.size
        mb = float(values.mean())
        m2b = float(((values - mb) ** 2).sum())
        na = self.n
        delta = mb - self.mean
        tot = na + nb
        self.mean += delta * nb / tot
        self.m2 += m2b + delta * delta * na * nb / tot
        self.n = tot

    def ci95(self) -> float:
        if self.n < 2:
            return 0.0
        var = self.m2 / (self.n - 1)
        return Z95 * math.sqrt(max(var, 0.0) / self.n)


def _resolve_policy(model: ArmModel, policy) -> CompiledPolicy:
    if isinstance(policy, CompiledPolicy):
        return policy
    if isinstance(policy, str):
        policy = parse_policy(policy)
    if isinstance(policy, PolicySpec):
        return CompiledPolicy(model, policy)
    raise RangeError(f"cannot interpret policy {policy!r}")


def simulate(model: ArmModel, policy, N: int, reps: int, seed: int,
             crn: bool = False, collect_diffusion: bool = True,
             jobs: int = 1) -> SimulationReport:
    """Count-based Monte Carlo run; deterministic given all arguments.

    TS and RAC consume O(N) work per replication inside the count engine
    (their per-arm draws are grouped by state, which is distributionally
    identical to arm-by-arm execution by exchangeability).
    """
    return _run(model, policy, N, reps, seed, engine="counts",
                crn=crn, collect_diffusion=collect_diffusion)


def simulate_per_arm(model: ArmModel, policy, N: int, reps: int, seed: int,
                     crn: bool = False, collect_diffusion: bool = True,
                     jobs: int = 1) -> SimulationReport:
    """Per-arm reference engine; same contract, each arm tracked singly."""
    return _run(model, policy, N, reps, seed, engine="per_arm",
                crn=crn, collect_diffusion=collect_diffusion)


def _run(model: ArmModel, policy, N: int, reps: int, seed: int, engine: str,
         crn: bool, collect_diffusion: bool) -> SimulationReport:
    if N < 1 or reps < 1:
        raise RangeError("need N >= 1 and reps >= 1")
    t0 = time.perf_counter()
    pol = _resolve_policy(model, policy)
    T, S = model.T, model.S
    ctx = pol.prepare(N)

    per_arm_width = N if (engine == "per_arm" or pol.kind in ("rac", "ts")) else 0
    cell = S + per_arm_width + (S * N if engine == "per_arm" else 0)
    sizes = _chunk_sizes(reps, cell)
    tag = _policy_tag(pol.label, N, reps, engine, crn)

    stats = _Welford()
    viol_counts = np.zeros(T, dtype=np.int64)
    union_count = 0
    has_ref = pol.measure is not None
    diff_z = np.zeros(T)
    diff_x = np.zeros(T)

    for chunk_idx, R in enumerate(sizes):
        rng = _stream(seed, tag, chunk_idx)
        if engine == "counts":
            rewards, vc, uc, dz, dx = _chunk_counts(model, pol, ctx, N, R, rng,
                                                    has_ref and collect_diffusion)
        else:
            rewards, vc, uc, dz, dx = _chunk_per_arm(model, pol, ctx, N, R, rng,
                                                     has_ref and collect_diffusion)
        stats.add_chunk(rewards)
        if vc is not None:
            viol_counts += vc
            union_count += uc
        if dz is not None:
            diff_z += dz
            diff_x += dx

    wall = time.perf_counter() - t0
    if has_ref:
        per_t = viol_counts / reps
        union = union_count / reps
    else:
        per_t = np.full(T, np.nan)
        union = float("nan")
    diffusion = None
    if has_ref and collect_diffusion:
        diffusion = {"Z": diff_z / reps, "X": diff_x / reps}
    return SimulationReport(
        mean_reward=stats.mean,
        ci_halfwidth=stats.ci95(),
        reps=reps,
        per_t_violation_rate=per_t,
        diffusion_second_moments=diffusion,
        seed=seed,
        wall_time=wall,
        N=N,
        policy=pol.label,
        union_violation_rate=union,
        ci_reliable=reps >= CI_MIN_REPS,
        engine=engine,
    )


def _violations(pol: CompiledPolicy, ctx, t: int, Z: np.ndarray) -> np.ndarray:
    codes = pol.partition.codes[t - 1]
    lo = Z[:, codes == 1].sum(axis=1)
    hi = lo + Z[:, codes == 0].sum(axis=1)
    target = float(ctx["alphaN"][t - 1])
    return (lo > target) | (target > hi)


def _chunk_counts(model, pol, ctx, N, R, rng, want_diffusion):
    T, S = model.T, model.S
    Z = np.zeros((R, S), dtype=np.int64)
    Z[:, model.s0] = N
    rewards = np.zeros(R)
    track_viol = pol.partition is not None
    vc = np.zeros(T, dtype=np.int64) if track_viol else None
    union = np.zeros(R, dtype=bool) if track_viol else None
    dz = np.zeros(T) if want_diffusion else None
    dx = np.zeros(T) if want_diffusion else None
    sqrtN = math.sqrt(N)
    for t in range(1, T + 1):
        X1 = pol.allocate_batch(t, Z, rng, ctx)
        X0 = Z - X1
        rewards += X1 @ model.R[t - 1, :, 1] + X0 @ model.R[t - 1, :, 0]
        if track_viol:
            v = _violations(pol, ctx, t, Z)
            vc[t - 1] = int(v.sum())
            union |= v
        if want_diffusion:
            zt = pol.measure.z[t - 1]
            xt = pol.measure.x[t - 1]
            dz[t - 1] = float((((Z - N * zt) / sqrtN) ** 2).sum())
            dx[t - 1] = float((((X0 - N * xt[:, 0]) / sqrtN) ** 2).sum()
                              + (((X1 - N * xt[:, 1]) / sqrtN) ** 2).sum())
        if t < T:
            X = np.stack([X0, X1], axis=2)
            Z = pol.step_counts(t, X, rng)
    uc = int(union.sum()) if track_viol else 0
    return rewards, vc, uc, dz, dx


def _chunk_per_arm(model, pol, ctx, N, R, rng, want_diffusion):
    T, S = model.T, model.S
    states = np.full((R, N), model.s0, dtype=np.int64)
    rewards = np.zeros(R)
    track_viol = pol.partition is not None
    vc = np.zeros(T, dtype=np.int64) if track_viol else None
    union = np.zeros(R, dtype=bool) if track_viol else None
    dz = np.zeros(T) if want_diffusion else None
    dx = np.zeros(T) if want_diffusion else None
    sqrtN = math.sqrt(N)
    row = np.arange(R)[:, None] * S
    cumP = np.cumsum(model.P, axis=3)
    for t in range(1, T + 1):
        Z = np.bincount((states + row).reshape(-1), minlength=R * S).reshape(R, S)
        actions = _per_arm_actions(pol, ctx, t, states, Z, rng)
        X1 = np.bincount((states + row).reshape(-1), minlength=R * S,
                         weights=actions.reshape(-1).astype(np.float64))
        X1 = X1.reshape(R, S).astype(np.int64)
        X0 = Z - X1
        rewards += model.R[t - 1][states, actions].sum(axis=1)
        if track_viol:
            v = _violations(pol, ctx, t, Z)
            vc[t - 1] = int(v.sum())
            union |= v
        if want_diffusion:
            zt = pol.measure.z[t - 1]
            xt = pol.measure.x[t - 1]
            dz[t - 1] = float((((Z - N * zt) / sqrtN) ** 2).sum())
            dx[t - 1] = float((((X0 - N * xt[:, 0]) / sqrtN) ** 2).sum()
                              + (((X1 - N * xt[:, 1]) / sqrtN) ** 2).sum())
        if t < T:
            rows = cumP[t - 1][states, actions]  # (R, N, S)
            u = rng.random((R, N, 1))
            # float dust in the final cumulative entry must not spill past S-1
            states = np.minimum((u > rows).sum(axis=2), S - 1)
    uc = int(union.sum()) if track_viol else 0
    return rewards, vc, uc, dz, dx


def _per_arm_actions(pol: CompiledPolicy, ctx, t: int, states: np.ndarray,
                     Z: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Per-arm 0/1 actions consistent with the policy's count semantics."""
    R, N = states.shape
    S = Z.shape[1]
    if pol.kind == "ts":
        ann = pol.model.annotations
        B = int(ctx["B"][t - 1])
        if B <= 0:
            return np.zeros((R, N), dtype=np.int64)
        if B >= N:
            return np.ones((R, N), dtype=np.int64)
        draws = np.empty((R, N), dtype=np.float64)
        for s in range(S):
            mask = states == s
            cnt = int(mask.sum())
            if cnt:
                draws[mask] = np.asarray(ann[s].sampler(rng, cnt), dtype=np.float64)
        thr = np.partition(draws, N - B, axis=1)[:, N - B][:, None]
        act = draws > thr
        need = B - act.sum(axis=1)
        eq = draws == thr
        rank_eq = np.cumsum(eq, axis=1)
        act |= eq & (rank_eq <= need[:, None])
        return act.astype(np.int64)
    if pol.kind == "rac":
        q = activation_probabilities(pol.measure, t)
        B = int(ctx["B"][t - 1])
        coins = rng.random((R, N)) < q[states]
        keys = rng.random((R, N))
        visit = np.argsort(keys, axis=1)
        succ = np.take_along_axis(coins, visit, axis=1)
        chosen = succ & (np.cumsum(succ, axis=1) <= B)
        act = np.zeros((R, N), dtype=np.int64)
        np.put_along_axis(act, visit, chosen.astype(np.int64), axis=1)
        return act
    # count-level policies: compute the count plan, then tag the first
    # X1[r, s] arms of each state (exchangeable, so any fixed choice works)
    X1 = pol.allocate_batch(t, Z, rng, ctx)
    order = np.argsort(states, axis=1, kind="stable")
    st_sorted = np.take_along_axis(states, order, axis=1)
    cumZ_prev = np.concatenate([np.zeros((R, 1), dtype=np.int64),
                                np.cumsum(Z, axis=1)[:, :-1]], axis=1)
    start = np.take_along_axis(cumZ_prev, st_sorted, axis=1)
    quota = np.take_along_axis(X1, st_sorted, axis=1)
    pos = np.arange(N)[None, :]
    chosen_sorted = (pos - start) < quota
    act = np.zeros((R, N), dtype=np.int64)
    np.put_along_axis(act, order, chosen_sorted.astype(np.int64), axis=1)
    return act


# ---- sweeps ----------------------------------------------------------------


def _reps_for(reps_per_N, N: int) -> int:
    if reps_per_N is None:
        return default_reps(N)
    if callable(reps_per_N):
        return int(reps_per_N(N))
    if isinstance(reps_per_N, (int, np.integer)):
        return int(reps_per_N)
    raise RangeError(f"cannot interpret reps rule {reps_per_N!r}")


def gap_sweep(model: ArmModel, policy, N_list: Sequence[int], reps_per_N=None,
              seed: int = 0, engine: str = "counts",
              crn: bool = False) -> list[SweepRow]:
    """Optimality-gap upper bounds across N: N*V-hat minus simulated mean."""
    if not N_list or list(N_list) != sorted(set(N_list)):
        raise RangeError("N_list must be nonempty, ascending, duplicate-free")
    pol = _resolve_policy(model, policy)
    vhat = (pol.measure.value if pol.measure is not None
            else solve_relaxation(model).value)
    run = simulate if engine == "counts" else simulate_per_arm
    rows = []
    for N in N_list:
        reps = _reps_for(reps_per_N, N)
        rep = run(model, pol, N, reps, seed, crn=crn)
        ub = N * vhat
        rows.append(SweepRow(N=N, upper_bound=ub, mean=rep.mean_reward,
                             ci=rep.ci_halfwidth,
                             gap_upper_bound=ub - rep.mean_reward, report=rep))
    return rows


def violation_rate_sweep(model: ArmModel, policy, N_list: Sequence[int],
                         reps, seed: int = 0) -> list[SimulationReport]:
    """Budget-bracket failure rates per (N, t); policy must carry a measure."""
    pol = _resolve_policy(model, policy)
    if pol.partition is None:
        raise RangeError("violation sweep needs a measure-carrying policy")
    out = []
    for N in N_list:
        out.append(simulate(model, pol, N, _reps_for(reps, N), seed,
                            collect_diffusion=False))
    return out
