#!/usr/bin/env python3
"""Smoke test for the forest_lab_py extension module.

Builds nothing itself: run `cargo build -p forest-lab-py` (or --release)
first, then `python3 python/smoke_test.py`.
"""

import math
import shutil
import sys
import tempfile
from pathlib import Path

REPO_ROOT = Path(__file__).resolve().parent.parent


def load_module():
    candidates = [
        REPO_ROOT / "target" / "release" / "libforest_lab_py.so",
        REPO_ROOT / "target" / "debug" / "libforest_lab_py.so",
    ]
    built = [p for p in candidates if p.exists()]
    if not built:
        sys.exit(
            "libforest_lab_py.so not found; run `cargo build -p forest-lab-py` first"
        )
    newest = max(built, key=lambda p: p.stat().st_mtime)
    stage = Path(tempfile.mkdtemp(prefix="forest_lab_py_"))
    shutil.copy2(newest, stage / "forest_lab_py.so")
    sys.path.insert(0, str(stage))
    import forest_lab_py

    return forest_lab_py


CHECKS = []


def check(name, ok, detail=""):
    CHECKS.append(ok)
    status = "ok" if ok else "FAIL"
    print(f"[{status}] {name}" + (f" ({detail})" if detail else ""))


def main():
    fl = load_module()

    check("count_binary_shapes(4) == 15", fl.count_binary_shapes(4) == 15)
    check("count_bouquets(3, 2) == 3", fl.count_bouquets(3, 2) == 3)
    shapes = fl.enumerate_binary_shapes(3)
    check("3 canonical shapes on {1,2,3}", sorted(shapes) == ["((1,2),3)", "((1,3),2)", "(1,(2,3))"])
    check("15 bouquets for l=4, r=1", len(fl.enumerate_bouquets(4, 1)) == 15)

    check(
        "green determinant 2/3 at n=2, kappa=1, d=1",
        abs(fl.green_submatrix_det(2, 1.0, 1) - 2.0 / 3.0) < 1e-14,
    )

    exact = fl.exact_reduced_distribution(3, 1.0, 2)
    check(
        "exact law: direct pair has mass 3/16",
        abs(exact["((1))|((2));u=[0,0]"] - 3.0 / 16.0) < 1e-12,
    )
    check("exact law sums to one", abs(sum(exact.values()) - 1.0) < 1e-12)

    check(
        "normalization sum S_6(1) == 1",
        abs(fl.normalization_sum(6, 1.0) - 1.0) < 1e-8,
    )
    i22 = fl.bouquet_limit_probability(2, 2, 1.0)
    check("I(2,2)(1) ~ 0.6557", abs(i22 - 0.6557) < 2e-4, f"{i22:.6f}")
    block = fl.block_count_distribution(2, 1.0)
    check("block-count law sums to one", abs(sum(block) - 1.0) < 1e-8)
    check(
        "distance tail at t=0 is 1",
        fl.distance_tail(0.0, 1.0) == 1.0,
    )
    check(
        "critical density at origin equals c",
        abs(fl.critical_regime_density([0.0], 1, 2.0) - 2.0) < 1e-14,
    )
    check(
        "fixed-regime density vanishes at zero",
        fl.fixed_regime_density([0.0, 0.0]) == 0.0,
    )
    v = fl.scaled_class_pmf(1, 1, [1.0], 10_000, 1.0)
    check(
        "finite-n pmf near its limit",
        abs(v - math.exp(-0.5)) < 0.02,
        f"{v:.5f} vs {math.exp(-0.5):.5f}",
    )

    check("block weight w_3 == 3/4", fl.block_weight(3) == (3, 4))
    check(
        "eppf complements at l=2",
        abs(fl.eppf([2], 1.0) + fl.eppf([1, 1], 1.0) - 1.0) < 1e-10,
    )
    closed, integrated = fl.poisson_dirichlet_mixture(2, 2, 0.0)
    check(
        "PD mixture identity at (2,2,0)",
        abs(closed - 0.5) < 1e-14 and abs(closed - integrated) < 1e-6,
        f"closed={closed:.8f} integrated={integrated:.8f}",
    )

    # Monte Carlo against the exact law at n=5
    sampler = fl.Sampler(5, 1.5, 2, seed=202_406, stream=0)
    reps = 20_000
    counts = sampler.sample_class_counts(reps)
    reference = fl.exact_reduced_distribution(5, 1.5, 2)
    tv = 0.5 * sum(
        abs(counts.get(key, 0) / reps - p) for key, p in reference.items()
    )
    check("sampler matches exact law (TV < 0.02)", tv < 0.02, f"tv={tv:.4f}")
    check("sampler reports walk steps", sampler.total_steps() > 0)

    one = sampler.sample()
    heights = [0]
    for step in one["dyck_steps"]:
        heights.append(heights[-1] + step)
    check(
        "sampled contour is a Dyck path",
        min(heights) == 0 and heights[-1] == 0 and max(heights) > 0,
    )
    check(
        "contour length is twice the embedded size",
        len(one["dyck_steps"]) == 2 * one["d"],
    )

    gibbs = fl.GibbsPartitionSampler(3, 1.0, seed=7)
    partition, block_shapes = gibbs.sample()
    check(
        "gibbs sample covers {1,2,3}",
        sorted(x for part in partition.split("|") for x in part.split(",")) == ["1", "2", "3"],
        partition,
    )
    check("gibbs sample has one shape per block", len(block_shapes) == partition.count("|") + 1)
    gcounts = gibbs.sample_partition_counts(20_000)
    singletons = gcounts.get("1|2|3", 0) / 20_000
    expected = fl.eppf([1, 1, 1], 1.0)
    check(
        "gibbs partition frequency tracks EPPF",
        abs(singletons - expected) < 0.02,
        f"freq={singletons:.4f} eppf={expected:.4f}",
    )

    failed = CHECKS.count(False)
    print(f"\n{len(CHECKS) - failed}/{len(CHECKS)} checks passed")
    if failed:
        sys.exit(1)


if __name__ == "__main__":
    main()
