"""Command-line entry point (``hlwnet``)."""

import argparse
import json
import logging
import os
import sys
import time

import numpy as np

from . import balancers, channel, harness, scenario
from .snapshot import NetworkConfig, random_snapshot

log = logging.getLogger("hlwnet")


def _ints(text):
    return tuple(int(x) for x in text.split(",") if x)


def _floats(text):
    return tuple(float(x) for x in text.split(",") if x)


def _load_config(path):
    if not path:
        return {}
    with open(path) as f:
        return json.load(f)


def _network(args, room=None):
    cfg = _load_config(args.config).get("network", {})
    base = NetworkConfig(room=harness.ROOMS[room or args.room]()).to_dict()
    for k, v in cfg.items():
        if isinstance(v, dict):
            base.setdefault(k, {}).update(v)
        else:
            base[k] = v
    net = NetworkConfig.from_dict(base)
    if getattr(args, "mean_rate", None):
        net = net.with_mean_rate(args.mean_rate)
    return net


def _out_path(args, name):
    os.makedirs(args.out, exist_ok=True)
    return os.path.join(args.out, name)


def _print_rows(rows, out=None):
    if not rows:
        return
    out = out or sys.stdout
    cols = list(rows[0])
    out.write("\t".join(cols) + "\n")
    for r in rows:
        out.write("\t".join(_cell(r[c]) for c in cols) + "\n")


def _cell(v):
    if isinstance(v, float):
        return f"{v:.6g}"
    return str(v)


def _methods(args, default):
    return tuple(args.method.split(",")) if args.method else default


def _snapshot(args):
    net = _network(args)
    clusters = scenario.ClusterSpec(args.clusters) if args.clusters else None
    return random_snapshot(net, args.users, args.seed, clusters=clusters)


# -- scenario ------------------------------------------------------------------

def cmd_scenario_dump(args):
    snap = _snapshot(args)
    print("# id\tkind\tx_m\ty_m\tz_m\tbandwidth_hz\ttx_power\tsubband")
    for a in snap.aps:
        x, y, z = a.position
        print(f"{a.id}\t{a.kind}\t{x:.3f}\t{y:.3f}\t{z:.3f}\t{a.bandwidth:.6g}\t{a.tx_power:.6g}\t{a.subband}")
    users = [scenario.UserDescriptor(j, tuple(snap.positions[j]), float(snap.requirements[j]))
             for j in range(snap.n_users)]
    sys.stdout.write(scenario.dump_users(users))


def cmd_scenario_snr(args):
    snap = _snapshot(args)
    sys.stdout.write(channel.dump_snr_db(channel.SnrMatrix(snap.snr)))


def cmd_assign(args):
    snap = _snapshot(args)
    method = _methods(args, ("flopt",))[0]
    if method == "tcnn":
        from .tcnn.checkpoint import load_checkpoint
        from .tcnn.train import predict_assignment

        ck = load_checkpoint(_need_checkpoint(args))
        chi = predict_assignment(ck.model, snap, ck.spec)
    else:
        chi, _ = balancers.assign(method, snap, args.seed, mode=args.mode)
    _print_rows(harness.assignment_table(snap, chi, args.mode))
    from .allocation import evaluate

    rep = evaluate(chi, snap.capacity, snap.requirements, args.mode)
    print(f"# method={method} throughput_bps={rep.throughput:.6g} jain={rep.jain:.6f} "
          f"objective={rep.objective:.6f}")


# -- dataset -------------------------------------------------------------------

def cmd_dataset_generate(args):
    from . import dataset as D

    cfg = D.GeneratorConfig(_ints(args.users), args.batches, args.batch_size, args.max_users,
                            _network(args))
    t0 = time.perf_counter()
    ds = D.generate(cfg, args.seed, workers=args.workers, per_kind=args.per_kind)
    path = args.path or _out_path(args, "dataset.bin")
    D.save(ds, path)
    print(f"wrote {len(ds)} samples to {path} in {time.perf_counter() - t0:.1f} s")


def cmd_dataset_inspect(args):
    from . import dataset as D

    print(json.dumps(D.inspect(D.load(args.path)), indent=2))


def cmd_dataset_export(args):
    from . import dataset as D

    ds = D.load(args.path)
    if args.csv == "-":
        D.export_csv(ds, sys.stdout)
    else:
        with open(args.csv, "w", newline="") as f:
            D.export_csv(ds, f)


# -- model ---------------------------------------------------------------------

def _need_checkpoint(args):
    if not args.checkpoint:
        raise SystemExit("error: this command needs --checkpoint PATH")
    return args.checkpoint


def cmd_train(args):
    from . import dataset as D
    from .tcnn.checkpoint import save_checkpoint
    from .tcnn.train import TrainConfig, train

    ds = D.load(args.data)
    tr, te = D.split(ds, args.test_fraction, args.seed)
    cfg = TrainConfig(args.epochs, args.batch_size, args.lr, seed=args.seed, all_targets=args.all_targets)
    t0 = time.perf_counter()
    res = train(tr, te, cfg)
    ck = args.checkpoint or _out_path(args, "model.ckpt")
    save_checkpoint(ck, res.model, tr.spec, ds.kinds, args.seed, res.epoch,
                    {"train": vars(cfg), "dataset_digest": ds.digest(), "clamped": res.clamped})
    hist = args.history or _out_path(args, "history.csv")
    with open(hist, "w", newline="") as f:
        res.history.write_csv(f)
    h = res.history
    print(f"trained {res.epoch} epochs in {time.perf_counter() - t0:.1f} s: train_loss={h.train_loss[-1]:.5f} "
          f"test_loss={h.test_loss[-1]:.5f} accuracy={h.accuracy[-1]:.4f}")
    print(f"checkpoint {ck}\nhistory {hist}")


def cmd_eval(args):
    from . import dataset as D
    from .allocation import accuracy, chi_from_labels, performance_gap
    from .tcnn.checkpoint import load_checkpoint
    from .tcnn.train import predict_assignment

    ck = load_checkpoint(_need_checkpoint(args))
    ds = D.load(args.data)
    net = ds.network()
    per = {}
    clamped = 0
    for k in range(len(ds)):
        snap = ds.snapshot(k, net)
        _, _, c = D.encode_instance(snap.snr_db, snap.requirements, ck.spec, ds.is_wifi, ck.model.shape.max_users)
        clamped += c
        pred = predict_assignment(ck.model, snap, ck.spec)
        lab = chi_from_labels(ds.samples[k].labels, snap.n_aps)
        per.setdefault(snap.n_users, []).append(
            (accuracy(pred, lab), performance_gap(pred, lab, snap.capacity, snap.requirements, args.mode)))
    rows = [{"n_users": n, "samples": len(v), "accuracy": float(np.mean([a for a, _ in v])),
             "gap": float(np.mean([g for _, g in v]))} for n, v in sorted(per.items())]
    _print_rows(rows)
    print(f"# checkpoint_epoch={ck.epoch} clamped_features={clamped}")


def cmd_predict(args):
    from .tcnn.checkpoint import load_checkpoint
    from .tcnn.train import predict_assignment

    ck = load_checkpoint(_need_checkpoint(args))
    snap = _snapshot(args)
    chi = predict_assignment(ck.model, snap, ck.spec)
    _print_rows(harness.assignment_table(snap, chi, args.mode))


# -- experiments ---------------------------------------------------------------

def _plan(args, **kw):
    base = dict(_load_config(args.config).get("plan", {}))
    base.update({k: v for k, v in kw.items() if v is not None})
    base.setdefault("network", _load_config(args.config).get("network", {}))
    return harness.ExperimentPlan.from_dict(base)


def cmd_sweep(args):
    values = _floats(args.values) if args.sweep == "mean_rate" else _ints(args.values)
    plan = _plan(args, methods=_methods(args, ("sss", "gt", "fl", "flopt")), room=args.room, sweep=args.sweep,
                 values=values, trials=args.trials, seed=args.seed, mode=args.mode, n_users=args.users,
                 checkpoint=args.checkpoint, out_dir=args.out, workers=args.workers)
    records = harness.run_sweep(plan)
    raw, summ = harness.emit_sweep(plan, records, f"sweep_{plan.sweep}")
    print(f"{len(records)} records\nraw {raw}\nsummary {summ}")


def cmd_cluster(args):
    plan = _plan(args, methods=_methods(args, ("sss", "fl", "flopt")), room=args.room, sweep="clusters",
                 values=_ints(args.values), trials=args.trials, seed=args.seed, mode=args.mode,
                 n_users=args.users, checkpoint=args.checkpoint, out_dir=args.out)
    rows = harness.run_cluster_stress(plan)
    os.makedirs(plan.out_dir, exist_ok=True)
    harness.write_csv(rows, os.path.join(plan.out_dir, "cluster_records.csv"))
    summary = harness.summarize_clusters(rows)
    harness.write_csv(summary, os.path.join(plan.out_dir, "cluster_summary.csv"))
    harness.write_manifest(os.path.join(plan.out_dir, "cluster_manifest.txt"), plan)
    _print_rows(summary)


def cmd_bench(args):
    plan = _plan(args, methods=_methods(args, ("sss", "gt", "fl", "flopt", "tcnn")), room=args.room,
                 seed=args.seed, checkpoint=args.checkpoint, out_dir=args.out)
    rows = harness.bench_runtime(plan, _ints(args.users_list), reps=args.reps, warmup=args.warmup)
    os.makedirs(plan.out_dir, exist_ok=True)
    harness.write_csv(rows, os.path.join(plan.out_dir, "bench.csv"))
    harness.write_manifest(os.path.join(plan.out_dir, "bench_manifest.txt"), plan)
    _print_rows(rows)


def cmd_oracle(args):
    methods = _methods(args, ("sss", "gt", "fl", "flopt", "oracle"))
    rep = harness.validate_vs_oracle(args.instances, args.seed, methods, args.mode,
                                     (args.min_aps, args.max_aps), args.max_users)
    os.makedirs(args.out, exist_ok=True)
    harness.write_csv(rep.rows, os.path.join(args.out, "oracle_validation.csv"))
    print("\n".join(rep.lines()))


# -- parser --------------------------------------------------------------------

def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON file with optional 'network' and 'plan' sections")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--out", default="out", help="output directory")
    common.add_argument("--method", help="method name, or comma list for experiments "
                                         "(sss, gt, fl, flopt, oracle, tcnn)")
    common.add_argument("--mode", default="equal_share", choices=["equal_share", "satisfaction_capped"])
    common.add_argument("--room", default="4lifi", choices=sorted(harness.ROOMS))
    common.add_argument("--checkpoint")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="hlwnet", description="Hybrid LiFi/WiFi load-balancing toolkit")
    sub = p.add_subparsers(dest="command", required=True)

    def snap_args(sp, users=20):
        sp.add_argument("--users", type=int, default=users)
        sp.add_argument("--clusters", type=int, default=0)
        sp.add_argument("--mean-rate", type=float)

    sc = sub.add_parser("scenario").add_subparsers(dest="action", required=True)
    for name, fn in (("dump", cmd_scenario_dump), ("snr", cmd_scenario_snr)):
        sp = sc.add_parser(name, parents=[common])
        snap_args(sp)
        sp.set_defaults(func=fn)

    sp = sub.add_parser("assign", parents=[common], help="assign one random snapshot and print the table")
    snap_args(sp)
    sp.set_defaults(func=cmd_assign)

    ds = sub.add_parser("dataset").add_subparsers(dest="action", required=True)
    sp = ds.add_parser("generate", parents=[common])
    sp.add_argument("--users", default="5,10", help="comma list of user counts")
    sp.add_argument("--batches", type=int, default=20)
    sp.add_argument("--batch-size", type=int, default=64)
    sp.add_argument("--max-users", type=int, default=10)
    sp.add_argument("--workers", type=int, default=1)
    sp.add_argument("--per-kind", action="store_true", help="normalise WiFi and LiFi SNR separately")
    sp.add_argument("--mean-rate", type=float)
    sp.add_argument("--path", help="dataset file (default OUT/dataset.bin)")
    sp.set_defaults(func=cmd_dataset_generate)
    sp = ds.add_parser("inspect", parents=[common])
    sp.add_argument("path")
    sp.set_defaults(func=cmd_dataset_inspect)
    sp = ds.add_parser("export", parents=[common])
    sp.add_argument("path")
    sp.add_argument("--csv", default="-")
    sp.set_defaults(func=cmd_dataset_export)

    sp = sub.add_parser("train", parents=[common])
    sp.add_argument("--data", required=True)
    sp.add_argument("--test-fraction", type=float, default=0.2)
    sp.add_argument("--epochs", type=int, default=30)
    sp.add_argument("--batch-size", type=int, default=32)
    sp.add_argument("--lr", type=float, default=1e-4)
    sp.add_argument("--all-targets", action="store_true", help="train on every mapped slot per example")
    sp.add_argument("--history", help="history CSV path (default OUT/history.csv)")
    sp.set_defaults(func=cmd_train)

    sp = sub.add_parser("eval", parents=[common])
    sp.add_argument("--data", required=True)
    sp.set_defaults(func=cmd_eval)

    sp = sub.add_parser("predict", parents=[common])
    snap_args(sp, users=10)
    sp.set_defaults(func=cmd_predict)

    sp = sub.add_parser("sweep", parents=[common])
    sp.add_argument("--sweep", default="users", choices=harness.SWEEPS)
    sp.add_argument("--values", default="10,20,30,40,50")
    sp.add_argument("--trials", type=int, default=100)
    sp.add_argument("--users", type=int, default=50, help="user count for rate/cluster sweeps")
    sp.add_argument("--workers", type=int, default=1)
    sp.set_defaults(func=cmd_sweep)

    sp = sub.add_parser("cluster", parents=[common])
    sp.add_argument("--values", default="0,1,2,3,4,5", help="cluster counts")
    sp.add_argument("--trials", type=int, default=100)
    sp.add_argument("--users", type=int, default=50)
    sp.set_defaults(func=cmd_cluster)

    sp = sub.add_parser("bench", parents=[common])
    sp.add_argument("--users-list", default="10,20,40,50")
    sp.add_argument("--reps", type=int, default=30)
    sp.add_argument("--warmup", type=int, default=3)
    sp.set_defaults(func=cmd_bench)

    sp = sub.add_parser("oracle-validate", parents=[common])
    sp.add_argument("--instances", type=int, default=200)
    sp.add_argument("--min-aps", type=int, default=2)
    sp.add_argument("--max-aps", type=int, default=5)
    sp.add_argument("--max-users", type=int, default=6)
    sp.set_defaults(func=cmd_oracle)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    from .dataset import DatasetFormatError
    from .tcnn.checkpoint import CheckpointError
    from .tcnn.mapping import MappingInfeasibleError

    try:
        args.func(args)
    except (harness.MissingCheckpointError, MappingInfeasibleError, DatasetFormatError,
            CheckpointError, balancers.InstanceTooLargeError, FileNotFoundError) as e:
        raise SystemExit(f"error: {e}")
    except BrokenPipeError:
        sys.stderr.close()  # output consumer went away (e.g. piped into head)
    return 0


if __name__ == "__main__":
    sys.exit(main())
