"""Compare the compiled kinematics kernel against the pure-Python twin.

Times round trips (IK followed by FK) for both arm geometries over a
fixed seeded workload, and verifies the two implementations agree to
within 1e-9 mm on every sample while timing.

Usage:
    python3 benchmarks/bench_kinematics.py [--samples N] [--repeats R]
"""

import argparse
import math
import random
import statistics
import time

from armsim.kinematics import BACKEND, pure

if BACKEND != "compiled":
    raise SystemExit(
        "compiled kernel unavailable (BACKEND=%s); build the extension "
        "with `pip install -e . --no-build-isolation` first" % BACKEND)

from armsim.kinematics import _core  # noqa: E402  (import after the guard)

L1 = L2 = 200.0
RB, RE, RF, RL, BASE_H = 200.0, 50.0, 200.0, 400.0, 430.0


def scara_targets(rng, n):
    out = []
    for _ in range(n):
        r = 400.0 * math.sqrt(rng.random())
        a = rng.uniform(-math.pi, math.pi)
        out.append((r * math.cos(a), r * math.sin(a),
                    rng.uniform(0.0, 180.0), rng.uniform(-180.0, 180.0)))
    return out


def delta_targets(rng, n):
    out = []
    while len(out) < n:
        z = rng.uniform(0.0, 200.0)
        r_max = 285.0 - 0.625 * abs(z - 100.0)
        r = r_max * math.sqrt(rng.random())
        a = rng.uniform(-math.pi, math.pi)
        out.append((r * math.cos(a), r * math.sin(a), z,
                    rng.uniform(-180.0, 180.0)))
    return out


def bench_scara(impl, targets):
    t0 = time.perf_counter()
    acc = 0.0
    for x, y, z, rot in targets:
        s, e, zs, w = impl.scara_ik(L1, L2, x, y, z, rot)
        px, py, pz, pr = impl.scara_fk(L1, L2, s, e, zs, w)
        acc += px + py + pz + pr
    return time.perf_counter() - t0, acc


def bench_delta(impl, targets):
    t0 = time.perf_counter()
    acc = 0.0
    for x, y, z, rot in targets:
        t1, t2, t3, w = impl.delta_ik(RB, RE, RF, RL, BASE_H, x, y, z, rot)
        px, py, pz, pr = impl.delta_fk(RB, RE, RF, RL, BASE_H, t1, t2, t3, w)
        acc += px + py + pz + pr
    return time.perf_counter() - t0, acc


def check_parity(targets, kind):
    worst = 0.0
    for x, y, z, rot in targets:
        if kind == "scara":
            a = _core.scara_fk(L1, L2, *_core.scara_ik(L1, L2, x, y, z, rot))
            b = pure.scara_fk(L1, L2, *pure.scara_ik(L1, L2, x, y, z, rot))
        else:
            a = _core.delta_fk(RB, RE, RF, RL, BASE_H,
                               *_core.delta_ik(RB, RE, RF, RL, BASE_H,
                                               x, y, z, rot))
            b = pure.delta_fk(RB, RE, RF, RL, BASE_H,
                              *pure.delta_ik(RB, RE, RF, RL, BASE_H,
                                             x, y, z, rot))
        worst = max(worst, max(abs(u - v) for u, v in zip(a, b)))
    return worst


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--samples", type=int, default=50000)
    ap.add_argument("--repeats", type=int, default=5)
    args = ap.parse_args()

    rng = random.Random(1234)
    workloads = {"scara": (scara_targets(rng, args.samples), bench_scara),
                 "delta": (delta_targets(rng, args.samples), bench_delta)}

    print(f"samples per run: {args.samples}, repeats: {args.repeats}")
    for kind, (targets, fn) in workloads.items():
        parity = check_parity(targets[:2000], kind)
        times = {"compiled": [], "pure": []}
        for _ in range(args.repeats):
            for name, impl in (("compiled", _core), ("pure", pure)):
                dt, _ = fn(impl, targets)
                times[name].append(dt)
        best_c = min(times["compiled"])
        best_p = min(times["pure"])
        med_c = statistics.median(times["compiled"])
        med_p = statistics.median(times["pure"])
        print(f"\n{kind} IK+FK round trip "
              f"(parity over 2000 samples: {parity:.2e} mm)")
        print(f"  compiled: best {best_c * 1e9 / args.samples:8.1f} ns/op  "
              f"median {med_c * 1e9 / args.samples:8.1f} ns/op")
        print(f"  pure:     best {best_p * 1e9 / args.samples:8.1f} ns/op  "
              f"median {med_p * 1e9 / args.samples:8.1f} ns/op")
        print(f"  speedup:  {best_p / best_c:.2f}x (best over best)")


if __name__ == "__main__":
    main()
