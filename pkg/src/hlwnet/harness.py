"""Experiment runner: sweeps, clustering stress, runtime benchmark, oracle validation.

Every (sweep value, trial) pair draws one snapshot from its own derived seed
and every method is run on that same snapshot, so comparisons are paired.
"""

import csv
import json
import math
import os
import platform
import statistics
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace
from functools import lru_cache

import numpy as np

from . import __version__, balancers, kernels
from .allocation import EQUAL_SHARE, accuracy, allocate_time, evaluate, performance_gap, satisfaction
from .scenario import ClusterSpec, RoomConfig
from .seeding import as_rng, mix_seed
from .snapshot import NetworkConfig, random_snapshot
from .tcnn.mapping import MappingInfeasibleError

ROOMS = {"4lifi": RoomConfig.four_lifi, "9lifi": RoomConfig.nine_lifi}
SWEEPS = ("users", "mean_rate", "clusters")
METHODS = ("sss", "gt", "fl", "flopt", "oracle", "tcnn")


class MissingCheckpointError(ValueError):
    pass


@dataclass
class ExperimentPlan:
    methods: tuple = ("sss", "gt", "fl", "flopt")
    room: str = "4lifi"
    sweep: str = "users"
    values: tuple = (10, 20, 30, 40, 50)
    trials: int = 100
    seed: int = 0
    mode: str = EQUAL_SHARE
    n_users: int = 50  # fixed user count for rate and cluster sweeps
    mean_rate: float = 100e6
    users_per_cluster: int = 10
    checkpoint: str = None
    out_dir: str = "."
    workers: int = 1
    gt_max_iterations: int = 1000
    network: dict = field(default_factory=dict)  # overrides merged into the room's NetworkConfig

    def __post_init__(self):
        self.methods = tuple(self.methods)
        self.values = tuple(self.values)
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if not self.values:
            raise ValueError("sweep values are empty")
        if self.sweep not in SWEEPS:
            raise ValueError(f"sweep must be one of {SWEEPS}")
        if self.room not in ROOMS:
            raise ValueError(f"room must be one of {sorted(ROOMS)}")
        bad = set(self.methods) - set(METHODS)
        if bad:
            raise ValueError(f"unknown methods {sorted(bad)}")

    def network_config(self):
        base = NetworkConfig(room=ROOMS[self.room]()).to_dict()
        for key, sub in (self.network or {}).items():
            if isinstance(sub, dict):
                base.setdefault(key, {}).update(sub)
            else:
                base[key] = sub
        return NetworkConfig.from_dict(base).with_mean_rate(self.mean_rate)

    @classmethod
    def from_dict(cls, d):
        allowed = {f.name for f in fields(cls)}
        bad = set(d) - allowed
        if bad:
            raise ValueError(f"unknown plan keys {sorted(bad)}")
        return cls(**d)

    def to_dict(self):
        return asdict(self)


@dataclass
class RunRecord:
    method: str
    sweep_value: float
    trial: int
    trial_seed: int
    n_users: int
    throughput: float
    served_demand: float
    jain: float
    objective: float
    runtime_ns: int
    iterations: int = None
    converged: bool = None
    accuracy: float = None
    gap: float = None
    checkpoint_epoch: int = None

    def key(self):
        return self.trial_seed, self.throughput, self.jain

    def row(self):
        return asdict(self)


RECORD_FIELDS = [f.name for f in fields(RunRecord)]


def _require_model(plan):
    """The checkpoint for sweeps that evaluate tcnn, or ``None`` when tcnn is not run."""
    if "tcnn" not in plan.methods:
        return None
    if not plan.checkpoint:
        raise MissingCheckpointError("method tcnn needs a trained model: pass --checkpoint PATH")
    return _load_model(plan)


def _load_model(plan):
    if not plan.checkpoint:
        return None
    if not os.path.exists(plan.checkpoint):
        raise MissingCheckpointError(f"checkpoint {plan.checkpoint!r} not found (--checkpoint)")
    st = os.stat(plan.checkpoint)
    return _cached_checkpoint(os.path.abspath(plan.checkpoint), st.st_mtime_ns, st.st_size)


@lru_cache(maxsize=4)
def _cached_checkpoint(path, mtime_ns, size):
    from .tcnn.checkpoint import load_checkpoint

    return load_checkpoint(path)


def _snapshot(plan, net, value, seed):
    if plan.sweep == "users":
        return random_snapshot(net, int(value), seed)
    if plan.sweep == "mean_rate":
        return random_snapshot(net.with_mean_rate(float(value)), plan.n_users, seed)
    k = int(value)
    spec = ClusterSpec(k, plan.users_per_cluster) if k > 0 else None
    return random_snapshot(net, plan.n_users, seed, clusters=spec)


def _run_method(method, snap, plan, trial_seed, ckpt):
    extras = {}
    t0 = time.perf_counter_ns()
    if method == "tcnn":
        from .tcnn.train import predict_assignment

        if snap.n_users > ckpt.model.shape.max_users:
            raise MappingInfeasibleError(
                f"{snap.n_users} users exceed the checkpoint's M={ckpt.model.shape.max_users}")
        chi = predict_assignment(ckpt.model, snap, ckpt.spec)
    else:
        cfg = balancers.GtConfig(plan.gt_max_iterations, mode=plan.mode)
        chi, extras = balancers.assign(method, snap, mix_seed(trial_seed, 1), cfg, plan.mode)
    elapsed = max(time.perf_counter_ns() - t0, 1)
    return chi, extras, elapsed


def _trial(args):
    plan, vi, value, trial, trial_seed = args
    net = plan.network_config()
    snap = _snapshot(plan, net, value, trial_seed)
    ckpt = _require_model(plan)
    label = balancers.flopt_assign(snap) if "tcnn" in plan.methods else None
    out = []
    for method in plan.methods:
        chi, extras, ns = _run_method(method, snap, plan, trial_seed, ckpt)
        rep = evaluate(chi, snap.capacity, snap.requirements, plan.mode)
        rec = RunRecord(method, value, trial, trial_seed, snap.n_users, rep.throughput,
                        rep.served_demand, rep.jain, rep.objective, ns,
                        extras.get("iterations"), extras.get("converged"))
        if method == "tcnn":
            rec.accuracy = accuracy(chi, label)
            rec.gap = performance_gap(chi, label, snap.capacity, snap.requirements, plan.mode)
            rec.checkpoint_epoch = ckpt.epoch
        out.append(rec)
    return out


def trial_seed(plan, value_index, trial):
    return mix_seed(plan.seed, value_index, trial)


def run_sweep(plan):
    """All (method, value, trial) records, sorted canonically."""
    _require_model(plan)  # fail early with the flag name
    jobs = [(plan, vi, v, t, trial_seed(plan, vi, t))
            for vi, v in enumerate(plan.values) for t in range(plan.trials)]
    if plan.workers > 1:
        with ProcessPoolExecutor(plan.workers) as pool:
            chunks = list(pool.map(_trial, jobs, chunksize=8))
    else:
        chunks = [_trial(j) for j in jobs]
    records = [r for c in chunks for r in c]
    records.sort(key=lambda r: (r.method, r.sweep_value, r.trial))
    return records


def rerun_record(plan, method, value, trial):
    """Recompute one record in isolation (reproducibility check)."""
    vi = plan.values.index(value)
    single = replace(plan, methods=(method,))
    return _trial((single, vi, value, trial, trial_seed(plan, vi, trial)))[0]


def summarize(records, metrics=("throughput", "served_demand", "jain", "objective", "runtime_ns",
                                 "accuracy", "gap")):
    """Mean and population std per (method, sweep value); runtime also gets the median."""
    groups = {}
    for r in records:
        groups.setdefault((r.method, r.sweep_value), []).append(r)
    rows = []
    for (method, value), rs in sorted(groups.items()):
        row = {"method": method, "sweep_value": value, "trials": len(rs)}
        for m in metrics:
            xs = [getattr(r, m) for r in rs if getattr(r, m) is not None]
            if not xs:
                continue
            arr = np.asarray(xs, dtype=float)
            row[f"{m}_mean"] = float(arr.mean())
            row[f"{m}_std"] = float(arr.std()) if np.all(np.isfinite(arr)) else float("nan")
        row["runtime_ns_median"] = float(np.median([r.runtime_ns for r in rs]))
        rows.append(row)
    return rows


def write_csv(rows, path, columns=None):
    rows = [r.row() if hasattr(r, "row") else r for r in rows]
    if columns is None:
        columns = []
        for r in rows:
            columns += [k for k in r if k not in columns]
    with open(path, "w", newline="") as f:
        w = csv.DictWriter(f, fieldnames=columns, extrasaction="ignore")
        w.writeheader()
        for r in rows:
            w.writerow({k: _fmt(r.get(k)) for k in columns})


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return v


def write_manifest(path, plan, extra=None):
    lines = [f"hlwnet_version = {__version__}", f"kernel_backend = {kernels.BACKEND}",
             f"python = {platform.python_version()}", f"numpy = {np.__version__}"]
    for k, v in plan.to_dict().items():
        lines.append(f"plan.{k} = {json.dumps(v)}")
    for k, v in _flatten("network", plan.network_config().to_dict()):
        lines.append(f"{k} = {json.dumps(v)}")
    for k, v in (extra or {}).items():
        lines.append(f"{k} = {json.dumps(v)}")
    with open(path, "w") as f:
        f.write("\n".join(lines) + "\n")


def _flatten(prefix, d):
    for k, v in d.items():
        if isinstance(v, dict):
            yield from _flatten(f"{prefix}.{k}", v)
        else:
            yield f"{prefix}.{k}", v


def emit_sweep(plan, records, name="sweep"):
    os.makedirs(plan.out_dir, exist_ok=True)
    raw = os.path.join(plan.out_dir, f"{name}_records.csv")
    summ = os.path.join(plan.out_dir, f"{name}_summary.csv")
    write_csv(records, raw, RECORD_FIELDS)
    write_csv(summarize(records), summ)
    epochs = sorted({r.checkpoint_epoch for r in records if r.checkpoint_epoch is not None})
    write_manifest(os.path.join(plan.out_dir, f"{name}_manifest.txt"), plan,
                   {"records": len(records), "checkpoint_epochs": epochs})
    return raw, summ


# -- clustering stress ---------------------------------------------------------

def run_cluster_stress(plan):
    """Relative throughput loss of clustered placement against uniform placement.

    Trial ``t`` uses the seed ``mix_seed(plan.seed, t)`` for every cluster
    count, so ``0`` clusters reproduces the uniform baseline exactly.  The loss
    is ``max(0, 1 - clustered / uniform)``; the raw ratio is kept as well.
    """
    plan = replace(plan, sweep="clusters")
    net = plan.network_config()
    ckpt = _require_model(plan)
    rows = []
    for t in range(plan.trials):
        seed = mix_seed(plan.seed, t)
        base = {}
        uniform = random_snapshot(net, plan.n_users, seed)
        for m in plan.methods:
            chi, _, _ = _run_method(m, uniform, plan, seed, ckpt)
            base[m] = evaluate(chi, uniform.capacity, uniform.requirements, plan.mode).throughput
        for k in plan.values:
            snap = _snapshot(plan, net, k, seed)
            for m in plan.methods:
                chi, _, ns = _run_method(m, snap, plan, seed, ckpt)
                thr = evaluate(chi, snap.capacity, snap.requirements, plan.mode).throughput
                ratio = thr / base[m] if base[m] > 0 else float("nan")
                rows.append({"method": m, "clusters": k, "trial": t, "trial_seed": seed,
                             "throughput": thr, "uniform_throughput": base[m], "ratio": ratio,
                             "loss": min(max(0.0, 1.0 - ratio), 1.0), "runtime_ns": ns})
    rows.sort(key=lambda r: (r["method"], r["clusters"], r["trial"]))
    return rows


def summarize_clusters(rows):
    groups = {}
    for r in rows:
        groups.setdefault((r["method"], r["clusters"]), []).append(r)
    out = []
    for (m, k), rs in sorted(groups.items()):
        loss = np.array([r["loss"] for r in rs])
        ratio = np.array([r["ratio"] for r in rs])
        out.append({"method": m, "clusters": k, "trials": len(rs), "loss_mean": float(loss.mean()),
                    "loss_std": float(loss.std()), "ratio_mean": float(np.nanmean(ratio))})
    return out


# -- runtime -------------------------------------------------------------------

def _tcnn_timer(ckpt, max_users, n_aps, rng_seed):
    from .dataset import NormalizationSpec
    from .tcnn.model import Tcnn, TcnnShape
    from .tcnn.train import predict_assignment

    if ckpt is not None:
        model, spec = ckpt.model, ckpt.spec
    else:
        model = Tcnn.init(TcnnShape(n_aps, max_users), rng_seed)
        spec = NormalizationSpec(10.0, 70.0)
    return lambda snap: predict_assignment(model, snap, spec)


def bench_runtime(plan, user_counts=(10, 20, 40, 50), reps=30, warmup=3, pool=5, tcnn_max_users=50):
    """Median/min/max wall time per (method, user count), single process.

    TCNN is timed as inference only (mapping plus the forward passes); when
    no checkpoint is given a seeded random model with ``tcnn_max_users``
    slots stands in, since weights do not affect the cost.
    """
    net = plan.network_config()
    n_aps = net.room.n_aps
    ckpt = _load_model(plan) if plan.checkpoint else None
    rows = []
    for n in user_counts:
        snaps = [random_snapshot(net, n, mix_seed(plan.seed, n, p)) for p in range(pool)]
        for m in plan.methods:
            if m == "oracle":
                continue
            if m == "tcnn":
                fn = _tcnn_timer(ckpt, tcnn_max_users, n_aps, plan.seed)
                if n > (ckpt.model.shape.max_users if ckpt else tcnn_max_users):
                    continue
            else:
                cfg = balancers.GtConfig(plan.gt_max_iterations, mode=plan.mode)

                def fn(snap, m=m, cfg=cfg):
                    return balancers.assign(m, snap, plan.seed, cfg, plan.mode)
            for i in range(warmup):
                fn(snaps[i % pool])
            times = []
            for i in range(reps):
                s = snaps[i % pool]
                t0 = time.perf_counter_ns()
                fn(s)
                times.append(max(time.perf_counter_ns() - t0, 1))
            rows.append({"room": plan.room, "n_users": n, "method": m, "reps": reps,
                         "median_ns": float(statistics.median(times)), "min_ns": min(times),
                         "max_ns": max(times), "backend": kernels.BACKEND})
    return rows


# -- oracle validation ---------------------------------------------------------

@dataclass
class OracleReport:
    instances: int
    mean_ratio: dict
    min_ratio: dict
    violations: dict  # method -> count of objective > oracle + tol
    rows: list

    def lines(self):
        out = [f"instances: {self.instances}"]
        for m in sorted(self.mean_ratio):
            out.append(f"{m}: mean_ratio={self.mean_ratio[m]:.6f} min_ratio={self.min_ratio[m]:.6f} "
                       f"violations={self.violations[m]}")
        return out


def optimality_ratio(value, best, n_users):
    """Geometric-mean satisfaction of a method relative to the optimum, in (0, 1]."""
    if best == -math.inf:
        return 1.0 if value == -math.inf else float("nan")
    if value == -math.inf:
        return 0.0
    return math.exp((value - best) / n_users)


def small_instance(seed, n_aps_range=(2, 5), max_users=6, net=None):
    """A random WiFi + LiFi-subset snapshot small enough for exhaustive search."""
    rng = as_rng(seed)
    net = net or NetworkConfig()
    n_users = int(rng.integers(1, max_users + 1))
    k = int(rng.integers(n_aps_range[0], n_aps_range[1] + 1))
    snap = random_snapshot(net, n_users, rng)
    lifi = np.sort(rng.choice(snap.lifi_indices, size=k - 1, replace=False))
    return snap.subset_aps([snap.wifi_index, *lifi.tolist()])


def validate_vs_oracle(instances=200, seed=0, methods=("sss", "gt", "fl", "flopt"), mode=EQUAL_SHARE,
                       n_aps_range=(2, 5), max_users=6, tol=1e-12):
    rows = []
    for t in range(instances):
        s = small_instance(mix_seed(seed, t), n_aps_range, max_users)
        chi_opt, best = balancers.exhaustive_oracle(s, mode)
        row = {"instance": t, "n_aps": s.n_aps, "n_users": s.n_users, "oracle": best}
        for m in methods:
            if m == "oracle":
                val = best
            else:
                cfg = balancers.GtConfig(mode=mode)
                chi, _ = balancers.assign(m, s, mix_seed(seed, t, 1), cfg, mode)
                val = balancers.objective(s, chi, mode)
            row[m] = val
            row[f"{m}_ratio"] = optimality_ratio(val, best, s.n_users)
            row[f"{m}_violation"] = bool(val > best + tol * max(1.0, abs(best)))
        rows.append(row)
    mean_ratio = {m: float(np.nanmean([r[f"{m}_ratio"] for r in rows])) for m in methods}
    min_ratio = {m: float(np.nanmin([r[f"{m}_ratio"] for r in rows])) for m in methods}
    violations = {m: sum(r[f"{m}_violation"] for r in rows) for m in methods}
    return OracleReport(instances, mean_ratio, min_ratio, violations, rows)


def assignment_table(snapshot, chi, mode=EQUAL_SHARE):
    """Per-user rows: user id, AP id, time share and satisfaction."""
    rho = allocate_time(chi, snapshot.capacity, snapshot.requirements, mode)
    sat = satisfaction(chi, rho, snapshot.capacity, snapshot.requirements)
    ap = np.argmax(chi, axis=0)
    return [{"user": j, "ap": int(ap[j]), "rho": float(rho[ap[j], j]), "satisfaction": float(sat[j])}
            for j in range(snapshot.n_users)]
