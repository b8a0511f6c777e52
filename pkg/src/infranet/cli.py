"""Command-line interface.

Subcommands: generate, embed, attack, train, baseline, transfer, report.
Every invocation is deterministic given its flags and seeds.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace

import numpy as np

from . import agent as agent_mod
from . import baselines, cascade, embed as embed_mod, harness, transfer as transfer_mod
from .cascade import RewardWeights
from .graph import CoupledGraph
from .netgen import GenConfig, PRESETS, generate, preset_config


def _parse_weights(text: str, g: CoupledGraph) -> RewardWeights:
    if text == "normalized":
        return RewardWeights.normalized(g)
    parts = dict(kv.split("=") for kv in text.split(","))
    return RewardWeights(a_e=float(parts["ae"]), a_r=float(parts["ar"]))


def _add_weights_flag(p):
    p.add_argument("--weights", default="normalized",
                   help="'normalized' or 'ae=<float>,ar=<float>'")


def cmd_generate(args):
    if args.preset:
        cfg = preset_config(args.preset, seed=args.seed)
    else:
        cfg = GenConfig(seed=args.seed)
    overrides = {}
    for name in ("n_220", "road_nodes", "road_model", "coupling_fraction"):
        val = getattr(args, name)
        if val is not None:
            overrides[name] = val
    for name in ("fanout_110", "fanout_10", "load_range"):
        val = getattr(args, name)
        if val is not None:
            overrides[name] = tuple(val)
    cfg = replace(cfg, **overrides)
    g = generate(cfg)
    g.save(args.out)
    print(f"wrote {args.out}: {g.n} nodes, "
          f"{len(g.elec_edges)} elec / {len(g.road_edges)} road / "
          f"{len(g.dep_edges)} dep edges")


def cmd_embed(args):
    g = CoupledGraph.from_file(args.graph)
    cfg = embed_mod.EmbedConfig(
        d=args.d, depth=args.depth, margin=args.margin, l2=args.l2, lr=args.lr,
        epochs=args.epochs, neg_ratio=args.neg_ratio, seed=args.seed,
        aggregator=args.aggregator,
    )
    emb, params, losses = embed_mod.train_coupled(g, cfg)
    embed_mod.save_embedding(args.out, emb, cfg)
    print(f"wrote {args.out}: d={emb.d}, n={emb.n}, "
          f"final loss {losses[-1]:.6f}" if losses else f"wrote {args.out}")


def cmd_attack(args):
    g = CoupledGraph.from_file(args.graph)
    weights = _parse_weights(args.weights, g)
    nodes = [int(x) for x in args.nodes.split(",")]
    rep = cascade.replay_attack(g, nodes, weights, method="attack")
    rep.save_csv(args.out)
    print(f"wrote {args.out}: cum_reward {rep.final_cum_reward!r}")


def cmd_train(args):
    g = CoupledGraph.from_file(args.graph)
    emb = embed_mod.load_embedding(args.emb)
    weights = _parse_weights(args.weights, g)
    cfg = agent_mod.AgentConfig(
        budget=args.budget, gamma=args.gamma, lr=args.lr,
        episodes=args.episodes, seed=args.seed, weights=weights,
        batch_size=args.batch_size, target_sync=args.target_sync,
        buffer_size=args.buffer_size, eps_end=args.eps_end,
    )
    params, log = agent_mod.train(g, emb, cfg)
    agent_mod.save_qnet(args.out, params, cfg)
    if args.log:
        log.save_csv(args.log)
    last = log.cum_reward[-1] if log.cum_reward else 0.0
    print(f"wrote {args.out}; last episode cum_reward {last!r}")


def cmd_baseline(args):
    g = CoupledGraph.from_file(args.graph)
    weights = _parse_weights(args.weights, g)
    if args.kind == "de":
        rep = baselines.de_attack(g, args.budget, weights)
    elif args.kind == "ci":
        rep = baselines.ci_attack(g, args.budget, radius=args.radius, weights=weights)
    elif args.kind == "random":
        rep = baselines.random_attack(g, args.budget, seed=args.seed, weights=weights)
    elif args.kind == "gdm":
        if not args.emb:
            raise SystemExit("gdm needs --emb")
        emb = embed_mod.load_embedding(args.emb)
        cfg = baselines.GdmConfig(seed=args.seed)
        rep = baselines.gdm_attack(g, emb, args.budget, cfg, weights)
    rep.save_csv(args.out)
    print(f"wrote {args.out}: cum_reward {rep.final_cum_reward!r}")


def cmd_transfer(args):
    g = CoupledGraph.from_file(args.graph)
    emb = embed_mod.load_embedding(args.emb)
    params = agent_mod.load_qnet(args.qnet)
    weights = _parse_weights(args.weights, g)
    spec = transfer_mod.MaskSpec(delete_fraction=args.mask_delete,
                                 add_fraction=args.mask_add, seed=args.seed)
    g_mask = transfer_mod.mask_graph(g, spec)
    rcfg = transfer_mod.RetrainConfig(
        epochs=args.retrain_epochs, distance_weight=args.distance_weight,
        lr=args.retrain_lr, seed=args.seed,
    )
    new_emb, _ = transfer_mod.retrain(g_mask, emb, rcfg)
    rep = transfer_mod.transfer_attack(g_mask, new_emb, params, args.budget, weights)
    rep.save_csv(args.out)
    print(f"wrote {args.out}: cum_reward {rep.final_cum_reward!r}")


def cmd_report(args):
    with open(args.plan) as f:
        plan = harness.ExperimentPlan.from_json(f.read())
    reports = harness.run_plan(plan, args.out)
    harness.emit_curves(reports.values(), args.out, svg=not args.no_svg)
    print(f"wrote {len(reports)} reports plus summary.csv and curves.csv to {args.out}")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="infranet",
                                description="interdependent-network vulnerability toolkit")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="generate a synthetic coupled graph")
    g.add_argument("--preset", choices=sorted(PRESETS))
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", required=True)
    g.add_argument("--n-220", dest="n_220", type=int)
    g.add_argument("--fanout-110", dest="fanout_110", nargs=2, type=int,
                   metavar=("LO", "HI"))
    g.add_argument("--fanout-10", dest="fanout_10", nargs=2, type=int,
                   metavar=("LO", "HI"))
    g.add_argument("--road-nodes", dest="road_nodes", type=int)
    g.add_argument("--road-model", dest="road_model", choices=("grid", "random"))
    g.add_argument("--coupling-fraction", dest="coupling_fraction", type=float)
    g.add_argument("--load-range", dest="load_range", nargs=2, type=int,
                   metavar=("LO", "HI"))
    g.set_defaults(func=cmd_generate)

    e = sub.add_parser("embed", help="train GNN node embeddings")
    e.add_argument("--graph", required=True)
    e.add_argument("--d", type=int, default=64)
    e.add_argument("--depth", type=int, default=2)
    e.add_argument("--epochs", type=int, default=200)
    e.add_argument("--margin", type=float, default=1.0)
    e.add_argument("--l2", type=float, default=1e-4)
    e.add_argument("--lr", type=float, default=1e-3)
    e.add_argument("--neg-ratio", dest="neg_ratio", type=int, default=1)
    e.add_argument("--aggregator", choices=("sum", "mean"), default="sum")
    e.add_argument("--seed", type=int, default=0)
    e.add_argument("--out", required=True)
    e.set_defaults(func=cmd_embed)

    a = sub.add_parser("attack", help="damage a fixed node sequence")
    a.add_argument("--graph", required=True)
    a.add_argument("--nodes", required=True, help="comma-separated node ids")
    _add_weights_flag(a)
    a.add_argument("--out", required=True)
    a.set_defaults(func=cmd_attack)

    t = sub.add_parser("train", help="train the DQN detector")
    t.add_argument("--graph", required=True)
    t.add_argument("--emb", required=True)
    t.add_argument("--budget", type=int, default=10)
    t.add_argument("--episodes", type=int, default=500)
    t.add_argument("--gamma", type=float, default=0.99)
    t.add_argument("--lr", type=float, default=1e-3)
    t.add_argument("--batch-size", dest="batch_size", type=int, default=64)
    t.add_argument("--target-sync", dest="target_sync", type=int, default=100)
    t.add_argument("--buffer-size", dest="buffer_size", type=int, default=100_000)
    t.add_argument("--eps-end", dest="eps_end", type=float, default=0.05)
    t.add_argument("--seed", type=int, default=0)
    _add_weights_flag(t)
    t.add_argument("--out", required=True)
    t.add_argument("--log")
    t.set_defaults(func=cmd_train)

    b = sub.add_parser("baseline", help="run a baseline attack")
    b.add_argument("--kind", required=True, choices=("de", "ci", "gdm", "random"))
    b.add_argument("--graph", required=True)
    b.add_argument("--emb")
    b.add_argument("--budget", type=int, default=10)
    b.add_argument("--radius", type=int, default=1)
    b.add_argument("--seed", type=int, default=0)
    _add_weights_flag(b)
    b.add_argument("--out", required=True)
    b.set_defaults(func=cmd_baseline)

    tr = sub.add_parser("transfer", help="mask graph, retrain embeddings, attack")
    tr.add_argument("--graph", required=True)
    tr.add_argument("--mask-delete", dest="mask_delete", type=float, default=0.1)
    tr.add_argument("--mask-add", dest="mask_add", type=float, default=0.1)
    tr.add_argument("--emb", required=True)
    tr.add_argument("--qnet", required=True)
    tr.add_argument("--budget", type=int, default=10)
    tr.add_argument("--retrain-epochs", dest="retrain_epochs", type=int, default=50)
    tr.add_argument("--distance-weight", dest="distance_weight", type=float, default=1.0)
    tr.add_argument("--retrain-lr", dest="retrain_lr", type=float, default=1e-3)
    tr.add_argument("--seed", type=int, default=0)
    _add_weights_flag(tr)
    tr.add_argument("--out", required=True)
    tr.set_defaults(func=cmd_transfer)

    r = sub.add_parser("report", help="run an experiment plan")
    r.add_argument("--plan", required=True)
    r.add_argument("--out", required=True)
    r.add_argument("--no-svg", action="store_true")
    r.set_defaults(func=cmd_report)

    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    args.func(args)
    return 0


if __name__ == "__main__":
    sys.exit(main())
