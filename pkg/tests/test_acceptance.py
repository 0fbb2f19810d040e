"""End-to-end acceptance checks, one printed verdict line per criterion."""
import csv

import numpy as np
import pytest
from scipy import stats as sps

from wohs.cli import main
from wohs.kernels import Barrier, Direction, Point, StableParams
from wohs.samplers import (
    ConditionedSamplerCache,
    RngStream,
    overshoot_first_coord,
    overshoot_first_coord_conditioned,
)
from wohs.stats_validate import run_suite
from wohs.walk_engine import (
    Measure,
    WalkConfig,
    WalkStatus,
    batch_walk,
    hitting_probability_estimate,
)


def _verdict(capsys, num, ok, detail):
    with capsys.disabled():
        print(f"\ncriterion {num:2d}: {'PASS' if ok else 'FAIL'} - {detail}")
    assert ok, f"criterion {num}: {detail}"


def _suite_detail(report):
    worst = max(report.checks, key=lambda c: c.statistic / c.threshold)
    return (f"{len(report.checks)} checks, worst {worst.check_id} "
            f"stat={worst.statistic:.3g} (thr {worst.threshold:.3g})")


def test_criterion_1_normalization(capsys):
    rep = run_suite("normalization", master_seed=101)
    worst = max(c.statistic for c in rep.checks
                if "normalization" in c.check_id)
    ok = rep.overall_pass and worst <= 1e-6
    _verdict(capsys, 1, ok,
             f"all kernels integrate to 1, max deviation {worst:.2e} "
             f"(tol 1e-6); {_suite_detail(rep)}")


def test_criterion_2_marginalization(capsys):
    rep = run_suite("marginalization", master_seed=102)
    _verdict(capsys, 2, rep.overall_pass,
             f"triple law marginalizes to double law; {_suite_detail(rep)}")


def test_criterion_3_factorization(capsys):
    rep = run_suite("factorization", master_seed=103)
    _verdict(capsys, 3, rep.overall_pass,
             f"double = green x jump at 100 random triples (rel tol 1e-12); "
             f"{_suite_detail(rep)}")


def test_criterion_4_sampler_fidelity(capsys):
    rep = run_suite("sampler-fit", master_seed=104, n=100_000)
    _verdict(capsys, 4, rep.overall_pass,
             f"KS + chi-square at 1%, 2-of-3 streams, n=1e5; "
             f"{_suite_detail(rep)}")


def test_criterion_5_mode_equivalence(capsys):
    rep = run_suite("mode-equivalence", master_seed=105, n=100_000,
                    workers=4)
    _verdict(capsys, 5, rep.overall_pass,
             f"collapsed vs full-trace two-sample KS at 1%, n=1e5/mode; "
             f"{_suite_detail(rep)}")


def test_criterion_6_flat_earth(capsys):
    rep = run_suite("flat-earth", master_seed=106)
    _verdict(capsys, 6, rep.overall_pass,
             f"ball kernel approaches half-space kernel, gap monotone in R "
             f"and <= 1e-2 at R=1e4; {_suite_detail(rep)}")


def test_criterion_7_conditioned_consistency(capsys):
    alpha = 0.9
    params = StableParams(alpha, 2)

    # one-crossing reweighting: conditioned draws, reweighted back by the
    # ratio of harmonic factors, must reproduce plain-measure means
    n = 100_000
    yp = overshoot_first_coord(2.0, Barrier(1.0, Direction.DOWN), alpha,
                               RngStream(401, 0).first_lane, size=n)
    cache = ConditionedSamplerCache(1, params)
    yc = overshoot_first_coord_conditioned(2.0, 1, alpha, cache,
                                           RngStream(401, 1).first_lane,
                                           size=n)
    w = (np.abs(yp) / 2.0) ** (alpha - 1.0)
    zs = []
    for f in ((lambda y: y < 0.0),
              (lambda y: (0.0 < y) & (y < 0.5)),
              (lambda y: y > 0.8)):
        a = f(yc).astype(float)
        fw = w * f(yp)
        b = fw.mean() / w.mean()
        g = (fw - b * w) / w.mean()
        se = np.hypot(a.std(ddof=1), g.std(ddof=1)) / np.sqrt(n)
        zs.append(abs(float((a.mean() - b) / se)))
    ok1 = max(zs) < 2.576

    # walk level: weighted conditioned histogram of the final first
    # coordinate vs the plain walks that entered
    dsc = batch_walk(WalkConfig(params, Point(1.5, [0.0]),
                                measure=Measure.CONDITIONED),
                     50_000, workers=4, rng_master=402)
    dsp = batch_walk(WalkConfig(params, Point(1.5, [0.0]),
                                measure=Measure.PLAIN, max_crossings=1000),
                     100_000, workers=4, rng_master=403)
    yc1 = np.array([r.final_point.first for r in dsc])
    wc = np.array([r.weight for r in dsc])
    yp1 = np.array([r.final_point.first for r in dsp
                    if r.status is WalkStatus.ENTERED])
    edges = np.linspace(-1.0, 1.0, 21)
    wbar = wc.mean()
    stat, nb = 0.0, 0
    for lo, hi in zip(edges[:-1], edges[1:]):
        a = wc * ((yc1 >= lo) & (yc1 < hi))
        bbar = ((yp1 >= lo) & (yp1 < hi)).mean()
        se = np.sqrt(a.var(ddof=1) / len(a)
                     + bbar * (1.0 - bbar) / len(yp1))
        stat += ((a.mean() / wbar - bbar) / se * wbar) ** 2
        nb += 1
    crit = sps.chi2.ppf(0.999, nb)
    ok2 = stat < crit

    # hitting probabilities: inside (0,1), nonincreasing in start distance
    ests = []
    for x1 in (1.5, 2.0, 4.0, 8.0):
        ds = batch_walk(WalkConfig(params, Point(x1, [0.0]),
                                   measure=Measure.CONDITIONED),
                        10_000, workers=4, rng_master=404)
        est = hitting_probability_estimate(ds, Point(x1, [0.0]))
        ests.append((est.estimate, est.standard_error))
    ok3 = all(0.0 < e < 1.0 for e, _ in ests) and all(
        b[0] <= a[0] + 4.0 * np.hypot(a[1], b[1])
        for a, b in zip(ests, ests[1:]))

    _verdict(capsys, 7, ok1 and ok2 and ok3,
             f"reweight max|z|={max(zs):.2f} (<2.576), walk hist "
             f"T={stat:.1f} (<{crit:.1f}), hitting "
             f"{'/'.join(f'{e:.3f}' for e, _ in ests)} nonincreasing")


def test_criterion_8_plain_termination(capsys):
    fracs = {}
    for i, alpha in enumerate((1.0, 1.2, 1.5, 1.9)):
        ds = batch_walk(WalkConfig(StableParams(alpha, 2),
                                   Point(2.0, [0.0]),
                                   max_crossings=1_000_000),
                        100_000, workers=4, rng_master=810 + i)
        fracs[alpha] = sum(r.status is WalkStatus.CAP_REACHED
                           for r in ds) / len(ds)
    ds = batch_walk(WalkConfig(StableParams(0.5, 2), Point(2.0, [0.0]),
                               max_crossings=1000),
                    500, workers=4, rng_master=815)
    n_half = sum(r.status is WalkStatus.CAP_REACHED for r in ds)
    ok = all(f < 1e-4 for f in fracs.values()) and n_half > 0
    _verdict(capsys, 8, ok,
             f"capped fraction at cap 1e6, n=1e5: "
             + ", ".join(f"alpha={a}: {f:.1e}" for a, f in fracs.items())
             + f" (tol 1e-4); alpha=0.5 cap 1e3: {n_half}/500 capped (>0)")


def test_criterion_9_determinism(capsys, tmp_path):
    jobs = (
        ("sample", ["sample", "--alpha", "1.5", "--start", "3,0",
                    "--n", "2000", "--seed", "905"]),
        ("walk", ["walk", "--alpha", "1.5", "--start", "2,0",
                  "--n", "1000", "--seed", "906"]),
    )
    ok = True
    for label, argv in jobs:
        outs = []
        for wk in (1, 4, 16):
            path = tmp_path / f"{label}_{wk}.csv"
            rc = main(argv + ["--workers", str(wk), "--out", str(path)])
            assert rc == 0
            outs.append(path.read_bytes())
        ok = ok and outs[0] == outs[1] == outs[2]
    _verdict(capsys, 9, ok,
             "sample and walk CSVs byte-identical across workers 1/4/16")


def _iqr_with_se(values):
    v = np.sort(values)
    n = len(v)
    qs = []
    for p in (0.25, 0.75):
        k = int(round(p * (n - 1)))
        m = int(np.ceil(np.sqrt(n * p * (1.0 - p))))
        half = (v[min(k + m, n - 1)] - v[max(k - m, 0)]) / 2.0
        qs.append((v[k], half))
    (q1, s1), (q3, s3) = qs
    return q3 - q1, float(np.hypot(s1, s3))


def test_criterion_10_figure_grid(capsys, tmp_path):
    cells = {}
    for alpha in (0.8, 1.5):
        for x1 in (1.2, 3.0):
            walk_csv = tmp_path / f"walk_{alpha}_{x1}.csv"
            hist_csv = tmp_path / f"hist_{alpha}_{x1}.csv"
            measure = "conditioned" if alpha < 1.0 else "plain"
            rc = main(["walk", "--alpha", str(alpha),
                       "--start", f"{x1},0", "--n", "40000",
                       "--seed", "77", "--workers", "4",
                       "--measure", measure, "--out", str(walk_csv)])
            assert rc == 0
            rc = main(["hist", "--in", str(walk_csv),
                       "--out", str(hist_csv)])
            assert rc == 0
            with open(hist_csv, newline="") as fh:
                header = next(csv.reader(fh))
            assert header == ["bin_x_lo", "bin_x_hi",
                              "bin_y_lo", "bin_y_hi", "count"]
            assert (tmp_path / f"hist_{alpha}_{x1}_mx.csv").exists()
            assert (tmp_path / f"hist_{alpha}_{x1}_my.csv").exists()
            with open(walk_csv, newline="") as fh:
                rows = list(csv.reader(fh))
            trans = np.array([float(r[5]) for r in rows[1:]
                              if r[1] == "entered"])
            cells[(alpha, x1)] = _iqr_with_se(trans)

    msgs, ok = [], True
    # transverse spread widens with start distance at fixed alpha
    for alpha in (0.8, 1.5):
        near, far = cells[(alpha, 1.2)], cells[(alpha, 3.0)]
        margin = 4.0 * np.hypot(near[1], far[1])
        ok = ok and far[0] - near[0] > margin
        msgs.append(f"alpha={alpha}: IQR {near[0]:.2f}->{far[0]:.2f}")
    # and narrows toward alpha = 2 at fixed start
    for x1 in (1.2, 3.0):
        heavy, light = cells[(0.8, x1)], cells[(1.5, x1)]
        margin = 4.0 * np.hypot(heavy[1], light[1])
        ok = ok and heavy[0] - light[0] > margin
        msgs.append(f"start={x1}: IQR {heavy[0]:.2f}->{light[0]:.2f}")
    _verdict(capsys, 10, ok,
             "; ".join(msgs) + " (all ordered beyond 4 SE)")
