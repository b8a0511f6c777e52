"""Evaluate transfer: perturb a preset graph, retrain embeddings with the
pull-back loss, and attack with the frozen value network versus CI.

Example:
    python3 scripts/transfer_eval.py --preset desk --episodes 500
"""

import argparse
import sys
import time

from infranet.agent import AgentConfig, train
from infranet.baselines import ci_attack
from infranet.cascade import RewardWeights
from infranet.embed import EmbedConfig, train_coupled
from infranet.netgen import generate, preset_config
from infranet.transfer import (
    MaskSpec,
    RetrainConfig,
    mask_graph,
    retrain,
    transfer_attack,
)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--preset", default="desk")
    ap.add_argument("--graph-seed", type=int, default=0)
    ap.add_argument("--budget", type=int, default=10)
    ap.add_argument("--episodes", type=int, default=500)
    ap.add_argument("--mask-delete", type=float, default=0.1)
    ap.add_argument("--mask-add", type=float, default=0.1)
    ap.add_argument("--retrain-epochs", type=int, default=50)
    ap.add_argument("--distance-weight", type=float, default=1.0)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)

    t0 = time.time()
    g = generate(preset_config(args.preset, seed=args.graph_seed))
    w = RewardWeights.normalized(g)
    emb, _, _ = train_coupled(g, EmbedConfig(seed=args.seed))
    params, _ = train(g, emb, AgentConfig(budget=args.budget,
                                          episodes=args.episodes,
                                          seed=args.seed, weights=w))
    print(f"trained on {g.n}-node graph in {time.time() - t0:.0f}s")

    gm = mask_graph(g, MaskSpec(delete_fraction=args.mask_delete,
                                add_fraction=args.mask_add, seed=args.seed))
    wm = RewardWeights.normalized(gm)
    new_emb, losses = retrain(gm, emb, RetrainConfig(
        epochs=args.retrain_epochs, distance_weight=args.distance_weight,
        seed=args.seed))
    print(f"retrain loss {losses[0]:.4f} -> {losses[-1]:.4f}")

    rep = transfer_attack(gm, new_emb, params, args.budget, wm)
    ci = ci_attack(gm, args.budget, weights=wm)
    print(f"transfer cum_reward {rep.final_cum_reward:.4f}")
    print(f"CI       cum_reward {ci.final_cum_reward:.4f}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
