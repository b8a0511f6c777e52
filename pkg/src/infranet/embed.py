"""From-scratch GNN node embeddings trained by margin-loss link prediction.

Forward pass per layer: neighbor features are aggregated (sum by default,
mean behind a flag), averaged with the node's own feature, linearly mixed
and passed through ReLU. Training pits observed edges against sampled
non-edges under a hinge margin; gradients are hand-derived, no autograd.

Pretraining runs the same machinery on each layer's subgraph alone; the
coupled-graph training then starts from those columns.
"""

from __future__ import annotations

from dataclasses import dataclass, field, asdict

import numpy as np
import scipy.sparse as sp

from .graph import CoupledGraph
from . import serial

PRETRAINED = "pretrained"
RANDOM = "random"

DEFAULT_EDGE_TYPE_WEIGHTS = {"elec": 1.0, "road": 1.0, "dep": 1.0}


class EmbedError(ValueError):
    pass


@dataclass(frozen=True)
class EmbedConfig:
    d: int = 64
    depth: int = 2
    margin: float = 1.0
    l2: float = 1e-4
    lr: float = 1e-3
    epochs: int = 200
    neg_ratio: int = 1
    seed: int = 0
    aggregator: str = "sum"  # 'sum' (literal reading) or 'mean'
    edge_type_weights: dict = field(default_factory=lambda: dict(DEFAULT_EDGE_TYPE_WEIGHTS))

    def validate(self):
        if self.d < 1 or self.depth < 1 or self.margin <= 0:
            raise EmbedError("need d >= 1, depth >= 1, margin > 0")
        if self.l2 < 0 or self.neg_ratio < 1 or self.epochs < 0:
            raise EmbedError("bad l2/neg_ratio/epochs")
        if self.aggregator not in ("sum", "mean"):
            raise EmbedError(f"unknown aggregator {self.aggregator!r}")


@dataclass
class EmbeddingMatrix:
    Z: np.ndarray            # (d, n)
    provenance: str = PRETRAINED

    def __post_init__(self):
        self.Z = np.asarray(self.Z, dtype=np.float64)
        if self.Z.ndim != 2:
            raise EmbedError("embedding matrix must be 2-D")
        if not np.all(np.isfinite(self.Z)):
            raise EmbedError("non-finite embedding entries")

    @property
    def d(self):
        return self.Z.shape[0]

    @property
    def n(self):
        return self.Z.shape[1]


@dataclass
class GnnParams:
    weights: list            # depth matrices, each (d, d)

    def copy(self):
        return GnnParams([w.copy() for w in self.weights])


@dataclass
class EmbedProblem:
    """One training instance: edges with type weights plus the sampling pool."""

    n: int
    edges: np.ndarray        # (m, 2) undirected pairs
    edge_weights: np.ndarray # (m,)
    pool: np.ndarray         # node ids eligible for negative endpoints

    def __post_init__(self):
        self.edges = np.asarray(self.edges, dtype=np.int64).reshape(-1, 2)
        self.edge_weights = np.asarray(self.edge_weights, dtype=np.float64)
        self.pool = np.asarray(self.pool, dtype=np.int64)
        self.edge_set = {frozenset(e) for e in map(tuple, self.edges)}
        m = len(self.edges)
        rows = np.concatenate([self.edges[:, 0], self.edges[:, 1]])
        cols = np.concatenate([self.edges[:, 1], self.edges[:, 0]])
        self.adj = sp.csr_matrix(
            (np.ones(2 * m), (rows, cols)), shape=(self.n, self.n)
        )
        self.deg = np.asarray(self.adj.sum(axis=1)).ravel()


def problem_for(g: CoupledGraph, scope: str, cfg: EmbedConfig) -> EmbedProblem:
    """scope: 'elec', 'road', or 'coupled' (all layers, type-weighted)."""
    tw = cfg.edge_type_weights
    if scope == "elec":
        edges, w = g.elec_edges, [tw["elec"]] * len(g.elec_edges)
        pool = g.station_ids()
    elif scope == "road":
        edges, w = g.road_edges, [tw["road"]] * len(g.road_edges)
        pool = g.junction_ids()
    elif scope == "coupled":
        tagged = g.all_edges()
        edges = [(u, v) for u, v, _ in tagged]
        w = [tw[t] for _, _, t in tagged]
        pool = np.arange(g.n)
    else:
        raise EmbedError(f"unknown scope {scope!r}")
    if len(edges) == 0:
        raise EmbedError(f"scope {scope!r} has no edges to train on")
    return EmbedProblem(n=g.n, edges=np.array(edges), edge_weights=np.array(w), pool=pool)


# -- initial features ------------------------------------------------------

def _uniform(rng, shape, d):
    bound = 1.0 / np.sqrt(d)
    return rng.uniform(-bound, bound, size=shape)


def init_features(g: CoupledGraph, d: int, seed: int,
                  sub_embeds=None) -> EmbeddingMatrix:
    """Initial feature columns; per-layer pretrained columns when provided.

    sub_embeds: optional (elec: EmbeddingMatrix, road: EmbeddingMatrix) pair
    sized like the full graph; station columns come from the first, junction
    columns from the second.
    """
    rng = np.random.default_rng(seed)
    F = _uniform(rng, (d, g.n), d)
    if sub_embeds is not None:
        emb_e, emb_r = sub_embeds
        if emb_e.d != d or emb_r.d != d or emb_e.n != g.n or emb_r.n != g.n:
            raise EmbedError("sub-embedding dimensions do not match")
        st, ju = g.station_ids(), g.junction_ids()
        F[:, st] = emb_e.Z[:, st]
        F[:, ju] = emb_r.Z[:, ju]
    return EmbeddingMatrix(F, provenance=PRETRAINED)


def random_embeddings(g: CoupledGraph, d: int, seed: int) -> EmbeddingMatrix:
    """Ablation arm: i.i.d. uniform embeddings, no training."""
    rng = np.random.default_rng(seed)
    return EmbeddingMatrix(_uniform(rng, (d, g.n), d), provenance=RANDOM)


# -- forward / backward -----------------------------------------------------

def forward(F: np.ndarray, params: GnnParams, problem: EmbedProblem,
            aggregator: str = "sum", want_cache: bool = False):
    H = np.asarray(F, dtype=np.float64)
    caches = []
    for W in params.weights:
        HN = (problem.adj @ H.T).T
        if aggregator == "mean":
            HN = HN / np.maximum(problem.deg, 1.0)
        M = 0.5 * (H + HN)
        pre = W @ M
        caches.append((M, pre))
        H = np.maximum(pre, 0.0)
    return (H, caches) if want_cache else H


def _backward(dZ, params: GnnParams, caches, problem: EmbedProblem, aggregator: str):
    """Backprop dLoss/dZ through the layer stack; returns per-matrix grads."""
    dWs = [None] * len(params.weights)
    dH = dZ
    for i in range(len(params.weights) - 1, -1, -1):
        M, pre = caches[i]
        G = dH * (pre > 0)
        dWs[i] = G @ M.T
        dM = params.weights[i].T @ G
        dHN = 0.5 * dM
        if aggregator == "mean":
            dHN = dHN / np.maximum(problem.deg, 1.0)
        dH = 0.5 * dM + (problem.adj @ dHN.T).T
    return dWs, dH


# -- scoring and loss ---------------------------------------------------------

def score(Z: np.ndarray, edges) -> np.ndarray:
    """Inner product of the endpoint embeddings, one score per edge."""
    e = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
    return np.einsum("ij,ij->j", Z[:, e[:, 0]], Z[:, e[:, 1]])


def sample_negatives(rng, problem: EmbedProblem, count: int) -> np.ndarray:
    """Uniform non-edges within the pool, excluding self-loops."""
    pool = problem.pool
    if len(pool) < 2:
        raise EmbedError("pool too small to sample negatives")
    out = np.empty((count, 2), dtype=np.int64)
    k = 0
    while k < count:
        u, v = pool[rng.integers(0, len(pool), size=2)]
        if u == v or frozenset((int(u), int(v))) in problem.edge_set:
            continue
        out[k] = (u, v)
        k += 1
    return out


def margin_loss(Z: np.ndarray, pos, neg, cfg: EmbedConfig,
                pos_weights=None, params: GnnParams = None,
                want_grad: bool = False):
    """Hinge margin loss over (positive, negative) edge pairs.

    neg must hold neg_ratio sampled negatives per positive, grouped so that
    neg[i*r:(i+1)*r] belong to positive i. Returns the scalar loss, plus
    dLoss/dZ when want_grad is set (L2 term excluded from dZ; it only
    touches params).
    """
    pos = np.asarray(pos, dtype=np.int64).reshape(-1, 2)
    neg = np.asarray(neg, dtype=np.int64).reshape(-1, 2)
    if len(pos) == 0 or len(neg) == 0:
        raise EmbedError("positive and negative sets must be nonempty")
    if len(neg) % len(pos) != 0:
        raise EmbedError("negatives must be a multiple of positives")
    r = len(neg) // len(pos)
    w = np.ones(len(pos)) if pos_weights is None else np.asarray(pos_weights, float)

    pos_rep = np.repeat(pos, r, axis=0)
    w_rep = np.repeat(w, r)
    s_pos = score(Z, pos_rep)
    s_neg = score(Z, neg)
    hinge = cfg.margin - s_pos + s_neg
    active = hinge > 0
    P = len(pos_rep)
    loss = float(np.sum(w_rep * np.maximum(hinge, 0.0)) / P)
    if params is not None:
        loss += cfg.l2 * sum(float(np.sum(W * W)) for W in params.weights)
    if not want_grad:
        return loss

    coef = (w_rep * active) / P
    dZT = np.zeros((Z.shape[1], Z.shape[0]))
    ZT = Z.T
    np.add.at(dZT, pos_rep[:, 0], -coef[:, None] * ZT[pos_rep[:, 1]])
    np.add.at(dZT, pos_rep[:, 1], -coef[:, None] * ZT[pos_rep[:, 0]])
    np.add.at(dZT, neg[:, 0], coef[:, None] * ZT[neg[:, 1]])
    np.add.at(dZT, neg[:, 1], coef[:, None] * ZT[neg[:, 0]])
    return loss, dZT.T


def loss_and_grads(F, params: GnnParams, problem: EmbedProblem, neg, cfg: EmbedConfig):
    """Full-pipeline loss (forward + hinge + L2) and gradients per weight matrix."""
    Z, caches = forward(F, params, problem, cfg.aggregator, want_cache=True)
    loss, dZ = margin_loss(
        Z, problem.edges, neg, cfg, pos_weights=problem.edge_weights,
        params=params, want_grad=True,
    )
    dWs, _ = _backward(dZ, params, caches, problem, cfg.aggregator)
    for dW, W in zip(dWs, params.weights):
        dW += 2.0 * cfg.l2 * W
    return loss, dWs


# -- training ------------------------------------------------------------

def init_params(cfg: EmbedConfig, rng) -> GnnParams:
    return GnnParams([_uniform(rng, (cfg.d, cfg.d), cfg.d) for _ in range(cfg.depth)])


def train(problem: EmbedProblem, cfg: EmbedConfig, F: np.ndarray = None):
    """Gradient-descent training; negatives are resampled every epoch.

    Returns (EmbeddingMatrix, GnnParams, per-epoch loss list).
    """
    cfg.validate()
    rng = np.random.default_rng(cfg.seed)
    if F is None:
        F = _uniform(rng, (cfg.d, problem.n), cfg.d)
    params = init_params(cfg, rng)
    losses = []
    for epoch in range(cfg.epochs):
        neg = sample_negatives(rng, problem, len(problem.edges) * cfg.neg_ratio)
        loss, dWs = loss_and_grads(F, params, problem, neg, cfg)
        if not np.isfinite(loss):
            raise EmbedError(f"training diverged at epoch {epoch}")
        for W, dW in zip(params.weights, dWs):
            W -= cfg.lr * dW
        losses.append(loss)
    Z = forward(F, params, problem, cfg.aggregator)
    return EmbeddingMatrix(Z, provenance=PRETRAINED), params, losses


def train_coupled(g: CoupledGraph, cfg: EmbedConfig):
    """Eq-1 pipeline: pretrain each layer's subgraph, then the coupled graph.

    Per-stage seeds are derived from cfg.seed so the whole pipeline is a
    pure function of (g, cfg).
    """
    cfg.validate()
    emb_e, _, _ = train(problem_for(g, "elec", cfg), _reseed(cfg, cfg.seed + 1))
    if len(g.road_edges) > 0:
        emb_r, _, _ = train(problem_for(g, "road", cfg), _reseed(cfg, cfg.seed + 2))
    else:
        emb_r = random_embeddings(g, cfg.d, cfg.seed + 2)
    F = init_features(g, cfg.d, cfg.seed, sub_embeds=(emb_e, emb_r))
    return train(problem_for(g, "coupled", cfg), cfg, F=F.Z)


def _reseed(cfg: EmbedConfig, seed: int) -> EmbedConfig:
    from dataclasses import replace
    return replace(cfg, seed=seed)


# -- persistence -----------------------------------------------------------

def save_embedding(path, emb: EmbeddingMatrix, cfg: EmbedConfig = None):
    sidecar = {"provenance": emb.provenance}
    if cfg is not None:
        sidecar["config"] = asdict(cfg)
    depth = cfg.depth if cfg is not None else 0
    serial.write_tensors(path, [emb.Z], d=emb.d, n_nodes=emb.n, depth=depth,
                         sidecar=sidecar)


def load_embedding(path) -> EmbeddingMatrix:
    arrays, header = serial.read_tensors(path)
    prov = PRETRAINED
    if header["sidecar"]:
        prov = header["sidecar"].get("provenance", PRETRAINED)
    return EmbeddingMatrix(arrays[0], provenance=prov)
