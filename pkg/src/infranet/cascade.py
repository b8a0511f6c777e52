"""Cascade-failure engine and environment metrics.

Power follows supply reachability: a 10kV station delivers its load while
every station on its path from a parentless 220kV root is Normal. Damaging
a station invalidates its whole live subtree and every traffic light fed by
a lost 10kV station; damaging a junction removes only that junction.

Road connectivity sigma = sum over components of size*(size-1)/2, computed
on the alive road view; gcc is the largest component size.
"""

from __future__ import annotations

import csv
import time
from dataclasses import dataclass, field

import numpy as np

from .graph import DAMAGED, INVALID, NORMAL, STATION, CoupledGraph


class CascadeError(ValueError):
    pass


@dataclass(frozen=True)
class RewardWeights:
    """Coefficients of the composite reward: a_e * power drop + a_r * sigma drop."""

    a_e: float = 1.0
    a_r: float = 1.0

    def __post_init__(self):
        if self.a_e < 0 or self.a_r < 0 or self.a_e + self.a_r <= 0:
            raise CascadeError("weights must be nonnegative with positive sum")

    @classmethod
    def normalized(cls, g: CoupledGraph) -> "RewardWeights":
        """Each term scaled by its intact total, so both start with unit budget."""
        p0 = power(g)
        s0 = sigma(g)
        return cls(a_e=1.0 / p0 if p0 > 0 else 0.0, a_r=1.0 / s0 if s0 > 0 else 1.0)


@dataclass
class CascadeOutcome:
    node: int
    newly_invalid: set
    power_before: float
    power_after: float
    sigma_before: float
    sigma_after: float
    gcc_after: int


def power(g: CoupledGraph) -> float:
    """Total delivered load: 10kV loads reachable from live 220kV roots."""
    total = 0.0
    stack = [int(r) for r in g.elec_roots() if g.state[r] == NORMAL]
    while stack:
        v = stack.pop()
        if g.level[v] == 10:
            total += g.load[v]
        for c in g.elec_children[v]:
            if g.state[c] == NORMAL:
                stack.append(int(c))
    return total


class _UnionFind:
    def __init__(self, ids):
        self.parent = {int(v): int(v) for v in ids}
        self.size = {int(v): 1 for v in ids}

    def find(self, v):
        root = v
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[v] != root:
            self.parent[v], v = root, self.parent[v]
        return root

    def union(self, u, v):
        ru, rv = self.find(u), self.find(v)
        if ru == rv:
            return
        if self.size[ru] < self.size[rv]:
            ru, rv = rv, ru
        self.parent[rv] = ru
        self.size[ru] += self.size[rv]

    def component_sizes(self):
        return [s for v, s in self.size.items() if self.find(v) == v]


def _road_components(g: CoupledGraph):
    alive = (g.state == NORMAL) & (g.kind != STATION)
    uf = _UnionFind(np.flatnonzero(alive))
    for u, v in g.road_edges:
        if alive[u] and alive[v]:
            uf.union(u, v)
    return uf.component_sizes()


def sigma(g: CoupledGraph) -> float:
    """Pairwise-connectivity count of the alive road view."""
    return float(sum(s * (s - 1) // 2 for s in _road_components(g)))


def gcc(g: CoupledGraph) -> int:
    """Largest alive road component size; 0 for an empty view."""
    sizes = _road_components(g)
    return max(sizes) if sizes else 0


def anc(sigmas, sigma0: float) -> float:
    """Accumulated normalized connectivity of the post-removal sigma series."""
    if len(sigmas) == 0:
        raise CascadeError("anc needs at least one post-removal value")
    if sigma0 <= 0:
        raise CascadeError("sigma0 must be positive")
    return float(np.mean(np.asarray(sigmas, dtype=np.float64) / sigma0))


def damage(g: CoupledGraph, v: int) -> CascadeOutcome:
    """Damage one Normal node and propagate the cascade to a fixed point."""
    v = int(v)
    if not 0 <= v < g.n:
        raise CascadeError(f"node id {v} out of range")
    if g.state[v] != NORMAL:
        raise CascadeError(f"node {v} is not Normal; mask such actions")

    p_before = power(g)
    s_before = sigma(g)

    newly_invalid = set()
    g.state[v] = DAMAGED
    if g.kind[v] == STATION:
        # whole live subtree loses supply
        stack = [v]
        while stack:
            u = stack.pop()
            for c in g.elec_children[u]:
                c = int(c)
                if g.state[c] == NORMAL:
                    g.state[c] = INVALID
                    newly_invalid.add(c)
                stack.append(c)
        # lights fed by the damaged station or a freshly lost 10kV station
        lost = {v} | newly_invalid
        for s in list(lost):
            if g.level[s] == 10:
                for j in g.dep_lights[s]:
                    j = int(j)
                    if g.state[j] == NORMAL:
                        g.state[j] = INVALID
                        newly_invalid.add(j)

    return CascadeOutcome(
        node=v,
        newly_invalid=newly_invalid,
        power_before=p_before,
        power_after=power(g),
        sigma_before=s_before,
        sigma_after=sigma(g),
        gcc_after=gcc(g),
    )


def reward_from_outcome(out: CascadeOutcome, g: CoupledGraph, w: RewardWeights) -> float:
    r = w.a_r * (out.sigma_before - out.sigma_after)
    if g.kind[out.node] == STATION:
        r += w.a_e * (out.power_before - out.power_after)
    return float(r)


def reward(g: CoupledGraph, v: int, w: RewardWeights) -> float:
    """Composite reward of damaging v; applies the damage to g."""
    return reward_from_outcome(damage(g, v), g, w)


@dataclass
class AttackReport:
    """Ordered damaged nodes plus per-step metric series (step 0 = intact)."""

    method: str
    nodes: list                      # length K; node picked at step k
    power: list                      # length K+1
    sigma: list
    gcc: list
    anc: list
    reward: list
    cum_reward: list
    wall_seconds: float = 0.0

    COLUMNS = ("step", "node", "power", "sigma", "gcc", "anc", "reward", "cum_reward")

    @property
    def budget(self) -> int:
        return len(self.nodes)

    @property
    def final_cum_reward(self) -> float:
        return self.cum_reward[-1]

    def rows(self):
        for k in range(len(self.power)):
            node = self.nodes[k - 1] if k > 0 else -1
            yield (
                k,
                node,
                repr(self.power[k]),
                repr(self.sigma[k]),
                self.gcc[k],
                repr(self.anc[k]),
                repr(self.reward[k]),
                repr(self.cum_reward[k]),
            )

    def save_csv(self, path):
        with open(path, "w", newline="") as f:
            wr = csv.writer(f)
            wr.writerow(self.COLUMNS)
            wr.writerows(self.rows())


def run_attack(g: CoupledGraph, policy, budget: int, weights: RewardWeights,
               method: str = "attack") -> AttackReport:
    """Run one attack episode on a fork of g.

    policy(env, step) -> node id; a node that is no longer Normal when its
    turn comes is recorded as a no-op step (zero reward, metrics unchanged).
    """
    t0 = time.perf_counter()
    env = g.fork()
    sigma0 = sigma(env)
    rep = AttackReport(
        method=method,
        nodes=[],
        power=[power(env)],
        sigma=[sigma0],
        gcc=[gcc(env)],
        anc=[1.0],
        reward=[0.0],
        cum_reward=[0.0],
    )
    for k in range(budget):
        v = int(policy(env, k))
        if env.state[v] == NORMAL:
            out = damage(env, v)
            r = reward_from_outcome(out, env, weights)
        else:
            r = 0.0
        rep.nodes.append(v)
        rep.power.append(power(env))
        rep.sigma.append(sigma(env))
        rep.gcc.append(gcc(env))
        rep.anc.append(anc(rep.sigma[1:], sigma0) if sigma0 > 0 else 0.0)
        rep.reward.append(r)
        rep.cum_reward.append(rep.cum_reward[-1] + r)
    rep.wall_seconds = time.perf_counter() - t0
    return rep


def replay_attack(g: CoupledGraph, nodes, weights: RewardWeights,
                  method: str = "attack") -> AttackReport:
    """Apply a fixed node sequence and record the metric series."""
    seq = list(nodes)
    return run_attack(g, lambda env, k: seq[k], len(seq), weights, method=method)
