"""Mask-graph perturbation and embedding retraining for transfer evaluation.

A mask graph keeps the node set but deletes and adds a fraction of edges per
layer while preserving layer typing (forest for electricity, supplier
uniqueness for dependencies). Retraining re-fits GNN weights on the mask
graph under the link-prediction margin loss plus a pull-back term that keeps
the new embeddings near the originals, so a frozen value network stays
usable.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import agent as agent_mod
from . import embed as embed_mod
from .cascade import AttackReport, RewardWeights
from .graph import STATION, CoupledGraph, GraphError


class TransferError(ValueError):
    pass


@dataclass(frozen=True)
class MaskSpec:
    delete_fraction: float = 0.1
    add_fraction: float = 0.1
    seed: int = 0

    def validate(self):
        for f in (self.delete_fraction, self.add_fraction):
            if not 0.0 <= f <= 1.0:
                raise TransferError("fractions must lie in [0,1]")


@dataclass(frozen=True)
class RetrainConfig:
    epochs: int = 50
    distance_weight: float = 1.0
    lr: float = 1e-3
    seed: int = 0
    embed: embed_mod.EmbedConfig = None   # None = defaults with matching seed

    def validate(self):
        if self.epochs < 1 or self.distance_weight < 0:
            raise TransferError("need epochs >= 1 and distance_weight >= 0")


def _sample_keep(edges, fraction, rng):
    m = len(edges)
    k = int(round(fraction * m))
    drop = set(map(int, rng.permutation(m)[:k]))
    return [e for i, e in enumerate(edges) if i not in drop], k


def mask_graph(g: CoupledGraph, spec: MaskSpec) -> CoupledGraph:
    """Edge-perturbed copy of g with an identical node set."""
    spec.validate()
    rng = np.random.default_rng(spec.seed)

    elec, _ = _sample_keep(g.elec_edges, spec.delete_fraction, rng)
    road, _ = _sample_keep(g.road_edges, spec.delete_fraction, rng)
    dep, _ = _sample_keep(g.dep_edges, spec.delete_fraction, rng)

    # electricity additions: re-parent orphaned stations one level down a
    # valid parent; availability is bounded by the current orphan count
    add_elec = int(round(spec.add_fraction * len(g.elec_edges)))
    has_parent = {c for _, c in elec}
    orphans = [
        v for v in g.station_ids()
        if g.level[v] in (110, 10) and v not in has_parent
    ]
    if add_elec > len(orphans):
        raise TransferError(
            f"cannot add {add_elec} electricity edges while keeping the forest: "
            f"only {len(orphans)} parentless stations available"
        )
    parents = {110: g.station_ids(level=220), 10: g.station_ids(level=110)}
    for v in [orphans[i] for i in rng.permutation(len(orphans))[:add_elec]]:
        cand = parents[int(g.level[v])]
        if len(cand) == 0:
            raise TransferError(f"no valid parent level for station {v}")
        elec.append((int(cand[rng.integers(0, len(cand))]), int(v)))

    # road additions: uniform new junction pairs
    add_road = int(round(spec.add_fraction * len(g.road_edges)))
    junctions = g.junction_ids()
    existing = {frozenset(e) for e in road}
    added = 0
    while added < add_road:
        u, v = junctions[rng.integers(0, len(junctions), size=2)]
        key = frozenset((int(u), int(v)))
        if u == v or key in existing:
            continue
        existing.add(key)
        road.append((int(u), int(v)))
        added += 1

    # dependency additions: unsupplied junctions get a random 10kV station
    add_dep = int(round(spec.add_fraction * len(g.dep_edges)))
    supplied = {j for _, j in dep}
    free = [int(j) for j in junctions if j not in supplied]
    if add_dep > len(free):
        raise TransferError(
            f"cannot add {add_dep} dependency edges: only {len(free)} "
            f"unsupplied junctions remain"
        )
    leaves = g.station_ids(level=10)
    if add_dep > 0 and len(leaves) == 0:
        raise TransferError("no 10kV stations to act as suppliers")
    for j in [free[i] for i in rng.permutation(len(free))[:add_dep]]:
        dep.append((int(leaves[rng.integers(0, len(leaves))]), j))

    return CoupledGraph(
        kind=g.kind.copy(),
        level=g.level.copy(),
        load=g.load.copy(),
        elec_edges=elec,
        road_edges=road,
        dep_edges=dep,
    )


def retrain(g_mask: CoupledGraph, old_emb, cfg: RetrainConfig):
    """Re-fit GNN weights on the mask graph; returns the new embeddings.

    Loss per epoch: margin link-prediction loss of the forward output on the
    mask graph plus distance_weight times the mean squared deviation from
    the original embeddings. The forward input is fixed at the original
    embeddings throughout.
    """
    cfg.validate()
    F_old = old_emb.Z if hasattr(old_emb, "Z") else np.asarray(old_emb)
    ecfg = cfg.embed or embed_mod.EmbedConfig(d=F_old.shape[0], seed=cfg.seed)
    if ecfg.d != F_old.shape[0]:
        raise TransferError("embedding dimension mismatch")
    problem = embed_mod.problem_for(g_mask, "coupled", ecfg)
    if F_old.shape[1] != problem.n:
        raise TransferError("embedding column count does not match the graph")
    rng = np.random.default_rng(cfg.seed)
    params = embed_mod.init_params(ecfg, rng)
    scale = F_old.size
    losses = []
    for epoch in range(cfg.epochs):
        neg = embed_mod.sample_negatives(rng, problem, len(problem.edges) * ecfg.neg_ratio)
        Z, caches = embed_mod.forward(F_old, params, problem, ecfg.aggregator,
                                      want_cache=True)
        recon, dZ = embed_mod.margin_loss(
            Z, problem.edges, neg, ecfg, pos_weights=problem.edge_weights,
            params=params, want_grad=True,
        )
        diff = Z - F_old
        distant = float(np.sum(diff ** 2) / scale)
        loss = recon + cfg.distance_weight * distant
        if not np.isfinite(loss):
            raise TransferError(f"retraining diverged at epoch {epoch}")
        losses.append(loss)
        dZ = dZ + cfg.distance_weight * 2.0 * diff / scale
        dWs, _ = embed_mod._backward(dZ, params, caches, problem, ecfg.aggregator)
        for W, dW in zip(params.weights, dWs):
            W -= cfg.lr * (dW + 2.0 * ecfg.l2 * W)
    Z = embed_mod.forward(F_old, params, problem, ecfg.aggregator)
    return embed_mod.EmbeddingMatrix(Z, provenance=embed_mod.PRETRAINED), losses


def transfer_attack(g_mask: CoupledGraph, new_emb, frozen_params, budget: int,
                    weights: RewardWeights = None) -> AttackReport:
    """Greedy attack on the mask graph with frozen Q-network parameters."""
    before = frozen_params.checksum()
    rep = agent_mod.greedy_attack(g_mask, new_emb, frozen_params, budget,
                                  weights=weights, method="transfer")
    if frozen_params.checksum() != before:
        raise TransferError("value network parameters changed during transfer")
    return rep
