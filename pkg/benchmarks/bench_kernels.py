"""Compiled vs pure-Python kernel timings on identical inputs.

    python3 benchmarks/bench_kernels.py [--reps 20] [--users 10,20,40]

Prints one row per (kernel, user count) with the median time of each
backend and the speed-up, and checks that both backends agree.
"""

import argparse
import statistics
import time

import numpy as np

from hlwnet import balancers
from hlwnet.kernels import available_backends, load_backend
from hlwnet.seeding import mix_seed
from hlwnet.snapshot import NetworkConfig, random_snapshot


def _time(fn, reps):
    fn()
    out = []
    for _ in range(reps):
        t0 = time.perf_counter_ns()
        fn()
        out.append(time.perf_counter_ns() - t0)
    return statistics.median(out)


def cases(snap):
    C, R, snr_db, is_wifi = balancers._arrays(snap)
    enc = balancers._table(snap.mean_rate).encode()
    labels = np.argmax(snap.snr, axis=0).astype(np.int64)
    x = np.array([snap.requirements[0], snr_db[0, 0], snr_db[1, 0], 0.7, 0.4])
    return {
        "fuzzy_score": lambda k: k.fuzzy_score(x, *enc),
        "flopt": lambda k: k.flopt(C, R, snr_db, is_wifi, *enc),
        "fl": lambda k: k.fl(C, R, snr_db, is_wifi, 0.5, *enc),
        "gt": lambda k: k.gt(labels, C, R, 12345, 1000, False, 0),
        "pf_value": lambda k: k.pf_value(labels, C, R, 0),
    }


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--reps", type=int, default=20)
    ap.add_argument("--users", default="10,20,40")
    ap.add_argument("--oracle-users", type=int, default=6)
    args = ap.parse_args(argv)
    names = available_backends()
    if "cython" not in names:
        print("compiled backend not built; only the Python kernels are available")
    backends = {n: load_backend(n) for n in names}
    net = NetworkConfig()
    print("kernel\tn_users\t" + "\t".join(f"{n}_us" for n in backends) + "\tspeedup\tagree")
    for n in (int(u) for u in args.users.split(",")):
        snap = random_snapshot(net, n, mix_seed(7, n))
        for name, call in cases(snap).items():
            results = {b: call(k) for b, k in backends.items()}
            agree = _same(list(results.values()))
            t = {b: _time(lambda k=k: call(k), args.reps) / 1e3 for b, k in backends.items()}
            speed = t["python"] / t["cython"] if "cython" in t else 1.0
            print(f"{name}\t{n}\t" + "\t".join(f"{t[b]:.1f}" for b in backends) + f"\t{speed:.1f}x\t{agree}")
    snap = random_snapshot(net, args.oracle_users, 3)
    C, R, _, _ = balancers._arrays(snap)
    results = {b: k.exhaustive(C, R, 0) for b, k in backends.items()}
    t = {b: _time(lambda k=k: k.exhaustive(C, R, 0), max(3, args.reps // 5)) / 1e3 for b, k in backends.items()}
    speed = t["python"] / t["cython"] if "cython" in t else 1.0
    print(f"exhaustive\t{args.oracle_users}\t" + "\t".join(f"{t[b]:.1f}" for b in backends)
          + f"\t{speed:.1f}x\t{_same(list(results.values()))}")


def _same(results):
    """Integer outputs must match exactly, float outputs to 1e-12."""
    def eq(a, b):
        a, b = np.asarray(a), np.asarray(b)
        if a.dtype.kind == "f" or b.dtype.kind == "f":
            return bool(np.allclose(a, b, rtol=0, atol=1e-12))
        return bool(np.array_equal(a, b))

    first = results[0]
    for r in results[1:]:
        pairs = zip(first, r) if isinstance(first, tuple) else [(first, r)]
        if not all(eq(a, b) for a, b in pairs):
            return False
    return True


if __name__ == "__main__":
    main()
