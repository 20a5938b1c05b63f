"""Acceptance criteria 1-14.

Each test prints and logs one ``CRITERION k: PASS|FAIL ...`` line; the
conftest hook repeats them, sorted, at the end of the session. Library
results are compared against independent computations (brute-force walk
and cycle enumeration, direct grid evaluation, explicit transitive
closure) wherever one is affordable.
"""
import os
import subprocess
import sys
import time
import numpy as np
import pytest

import oracles
from samples import double_well
from xyaubry.aubry import equivalence_classes, static_check, subaction_identity_gap
from xyaubry.checks import named_twist_potentials, random_twist_polynomials
from xyaubry.lettergraph import build_graph, minplus_multiply, reduce
from xyaubry.mane import EventuallyPeriodicPoint as P, shift_metric, windowed_tail_min
from xyaubry.orbitlab import (crossing_surgery, gap_phi, orbit_descent_batch,
                              tpo_experiment)
from xyaubry.pipeline import analyze
from xyaubry.potential import builtin, certify_twist, evaluate
from xyaubry.spectrum import diagonal_min, distance_to_set, spectral_analysis
from xyaubry.subaction import SubactionConvergenceError, solve_subaction, verify_calibration

NAMED = named_twist_potentials()
RANDOM = random_twist_polynomials(seed=2024, count=20, degree=4)
TWIST = list(NAMED.values()) + RANDOM
# the structural tests also cover a potential with two Aubry classes
STRUCTURAL = TWIST + [double_well()]

_CACHE = {}


def get(spec, n, window=False):
    key = (spec, n, window)
    if key not in _CACHE:
        _CACHE[key] = analyze(spec, n, window_multiplier=4 if window else None)
    return _CACHE[key]


def verdict(log, k, ok, detail):
    line = f"CRITERION {k}: {'PASS' if ok else 'FAIL'} {detail}"
    log.append(line)
    print(line)
    assert ok, line


def test_random_polynomials_are_certified():
    assert len(RANDOM) == 20
    assert all(certify_twist(s).passed for s in RANDOM)


def test_criterion_01_alpha_identity(acceptance_log):
    t0 = time.perf_counter()
    worst, loops = 0.0, True
    for spec in TWIST:
        sp = spectral_analysis(spec, 128)
        nodes = np.linspace(0.0, 1.0, 129)
        grid_diag_min = float(np.min(evaluate(spec, nodes, nodes)))
        worst = max(worst, abs(sp.alpha_grid - grid_diag_min))
        loops &= len(sp.witness_cycle) == 1
        loops &= abs(sp.karp_value - sp.alpha_grid) <= 1e-12
    elapsed = time.perf_counter() - t0
    # brute force over every simple cycle on a coarse grid
    brute = 0.0
    for spec in TWIST:
        _, w = build_graph(spec, 4)
        brute = max(brute, abs(oracles.min_cycle_mean(w) - np.min(np.diag(w))))
    ok = worst <= 1e-12 and loops and brute <= 1e-12 and elapsed <= 10.0
    verdict(acceptance_log, 1, ok,
            f"max|alpha_grid - grid diag min|={worst:.1e} brute={brute:.1e} "
            f"self_loops={loops} time={elapsed:.2f}s potentials={len(TWIST)}")


def test_criterion_02_optimal_periodic_are_fixed_points(acceptance_log):
    failures = []
    for spec in TWIST:
        for n in (16, 64):
            an = get(spec, n)
            spacing = 1.0 / n
            dist = distance_to_set(an.grid.nodes, an.spectral.m_set, an.spectral.m_intervals)
            trace = {a for a in range(an.grid.size) if dist[a] <= spacing * (1 + 1e-9)}
            letters = set(an.aubry.aubry_letters)
            # every Aubry letter is a zero self-loop and sits on the trace of m
            zero_loops = {a for a in range(an.grid.size) if abs(an.reduced[a, a]) <= 1e-12}
            if letters != zero_loops or not letters <= trace:
                failures.append((n, "letters"))
            # no zero-mean cycle through two distinct letters
            d = an.mane
            for a in letters:
                for b in letters:
                    if a < b and d[a, b] + d[b, a] <= 1e-12:
                        failures.append((n, "cycle", a, b))
            an.mather_support()
    # exhaustive cycle enumeration on a small grid
    brute_bad = 0
    for spec in TWIST:
        an = get(spec, 4)
        for cyc in oracles.simple_cycles(5):
            if abs(oracles.cycle_sum(an.reduced, cyc)) <= 1e-12:
                brute_bad += len(cyc) != 1 or cyc[0] not in an.aubry.aubry_letters
    ok = not failures and brute_bad == 0
    verdict(acceptance_log, 2, ok,
            f"failures={len(failures)} brute_force_nonloop_zero_cycles={brute_bad} N=4,16,64")


def test_criterion_03_subaction(acceptance_log):
    worst_res = worst_edge = 0.0
    sweeps_ok = detects = True
    for spec in TWIST:
        for n in (64, 128):
            an = get(spec, n)
            sub = an.subaction
            sweeps_ok &= sub.iterations <= 64 * (n + 1) and sub.method == "value_iteration"
            cal = verify_calibration(an.reduced, sub)
            worst_res = max(worst_res, cal.max_residual, cal.max_inequality_violation)
            worst_edge = max(worst_edge, -float(np.min(an.reweighted)))
        an = get(spec, 64)
        try:
            solve_subaction(reduce(an.weights, an.spectral.alpha_grid - 0.1),
                            max_iters=64 * 65)
            detects = False
        except SubactionConvergenceError:
            pass
    ok = sweeps_ok and worst_res <= 1e-9 and worst_edge <= 1e-12 and detects
    verdict(acceptance_log, 3, ok,
            f"residual={worst_res:.1e} min_edge={-worst_edge:.1e} "
            f"within_budget={sweeps_ok} rejects_alpha-0.1={detects}")


def test_criterion_04_triangle(acceptance_log):
    worst = -np.inf
    for spec in STRUCTURAL:
        d = get(spec, 64).mane
        # viol[a, c, b] = D(a, b) - D(a, c) - D(c, b) over all (N+1)^3 triples
        viol = d[:, None, :] - d[:, :, None] - d[None, :, :]
        worst = max(worst, float(np.max(viol)))
        worst = max(worst, float(np.max(d - minplus_multiply(d, d))))
    verdict(acceptance_log, 4, worst <= 1e-12, f"max violation={worst:.1e} N=64")


def test_criterion_05_barrier_liminf(acceptance_log):
    worst = 0.0
    for spec in TWIST:
        for n in (32, 64):
            b = get(spec, n, window=True).barrier
            assert b.window == (n + 1, 4 * (n + 1))
            worst = max(worst, b.agreement)
    # On coarse grids a cheap secondary well can undercut the liminf inside a
    # window this short; reported here, explained in test_mane.
    coarse = sum(get(spec, n, window=True).barrier.agreement > 1e-9
                 for spec in TWIST for n in (8, 16))
    # brute force: walk enumeration reproduces the tail minimum exactly
    enum_gap = closed_gap = 0.0
    for spec in list(NAMED.values()) + RANDOM[:3]:
        for n in (1, 2, 3, 4):
            an = get(spec, n)
            lo, hi = n + 1, 8
            start = lo + (hi - lo + 1) // 2
            brute = np.min([oracles.min_walk(an.reduced, k) for k in range(start, hi + 1)],
                           axis=0)
            enum_gap = max(enum_gap, float(np.max(np.abs(
                windowed_tail_min(an.reduced, (lo, hi)) - brute))))
            closed_gap = max(closed_gap, float(np.max(np.abs(
                an.barrier.closed_form - brute))))
    ok = worst <= 1e-9 and enum_gap <= 1e-12 and closed_gap <= 1e-12
    verdict(acceptance_log, 5, ok,
            f"window agreement={worst:.1e} (N=32,64; coarse N=8,16 short-window misses={coarse}) "
            f"enumeration={enum_gap:.1e} "
            f"closed_vs_enumeration={closed_gap:.1e} (N<=4, length<=8)")


def test_criterion_06_barrier_calibrated(acceptance_log):
    worst = 0.0
    rows = 0
    for spec in STRUCTURAL:
        for n in (64, 128):
            an = get(spec, n)
            for a in an.aubry.aubry_letters:
                cal = verify_calibration(an.reduced, an.barrier.closed_form[a])
                worst = max(worst, cal.max_residual, cal.max_inequality_violation)
                rows += 1
    verdict(acceptance_log, 6, worst <= 1e-9, f"max residual={worst:.1e} rows={rows}")


def test_criterion_07_equivalence(acceptance_log):
    added = 0
    multi = 0
    for spec in STRUCTURAL:
        for n in (16, 64):
            an = get(spec, n)
            letters = list(an.aubry.aubry_letters)
            h = an.barrier.closed_form[np.ix_(letters, letters)]
            rel = (h + h.T) <= an.aubry.tol_zero
            added += int(np.sum(oracles.transitive_closure(rel) & ~rel))
            classes = equivalence_classes(an.barrier.closed_form, letters, an.aubry.tol_zero)
            multi += len(classes) > 1
            # classes partition the letters and match the relation
            flat = sorted(a for c in classes for a in c)
            assert flat == letters
    ok = added == 0 and multi > 0
    verdict(acceptance_log, 7, ok,
            f"pairs added by closure={added} grids with >1 class={multi}")


def test_criterion_08_static_equals_aubry(acceptance_log):
    rng = np.random.default_rng(8)
    mismatch = 0
    static_words = not_semi = 0
    gap = 0.0
    words = 0
    per_spec = -(-1000 // len(STRUCTURAL))
    for spec in STRUCTURAL:
        an = get(spec, 16)
        singles = tuple(a for a in range(an.grid.size)
                        if static_check((a,), an.reduced, an.mane).is_static)
        mismatch += singles != an.aubry.aubry_letters
        letters = np.array(an.aubry.aubry_letters)
        for t in range(per_spec):
            length = int(rng.integers(1, 6))
            pool = letters if t % 2 == 0 else np.arange(an.grid.size)
            word = tuple(int(a) for a in rng.choice(pool, size=length))
            words += 1
            cert = static_check(word, an.reduced, an.mane)
            if cert.is_static:
                static_words += 1
                not_semi += not cert.is_semistatic
                gap = max(gap, subaction_identity_gap(word, an.reduced, an.subaction))
    ok = mismatch == 0 and not_semi == 0 and gap <= 1e-9 and static_words > 0 and words >= 1000
    verdict(acceptance_log, 8, ok,
            f"letter mismatches={mismatch} words={words} static={static_words} "
            f"static_not_semistatic={not_semi} identity gap={gap:.1e}")


def test_criterion_09_aubry_in_m(acceptance_log):
    worst = 0.0
    for spec in TWIST:
        for n in (32, 64, 128):
            an = get(spec, n)
            for a in an.aubry.aubry_letters:
                d = float(distance_to_set(an.grid.nodes[a], an.spectral.m_set,
                                          an.spectral.m_intervals))
                worst = max(worst, d * n)
    verdict(acceptance_log, 9, worst <= 1.0 + 1e-9, f"max distance={worst:.3f} cells")


def test_criterion_10_divergent_barrier(acceptance_log):
    an = get(builtin("projection"), 128)
    top = an.grid.size - 1
    res = an.sequence_barrier(P.fixed(top), P.fixed(top))
    x0 = P.fixed(0)
    lshift = an.lipschitz.l_shift
    excess = -np.inf
    for b in range(an.grid.size):
        y = P.fixed(b)
        h = an.sequence_barrier(x0, y)
        excess = max(excess, h.value - lshift * shift_metric(x0, y, an.grid.nodes))
    ok = (res.divergent and abs(res.growth_rate - 1.0) <= 1e-12
          and an.aubry.aubry_letters == (0,) and excess <= 1e-12)
    verdict(acceptance_log, 10, ok,
            f"divergent={res.divergent} growth={res.growth_rate!r} "
            f"max(H - l_shift d)={excess:.3f}")


def test_criterion_11_gap(acceptance_log):
    spec = NAMED["squared_difference_plus_well"]
    ok = True
    parts = []
    for n_cells in (8, 32):
        for delta in (0.1, 0.25):
            table = gap_phi(spec, n_cells, delta, 50)
            first = table.per_n[0][1]
            low = min(v for _, v in table.per_n)
            ok &= first > 0 and low >= first - 1e-12
            parts.append(f"N={n_cells} d={delta}: phi1={first:.4g} min={low:.4g}")
    table = gap_phi(spec, 8, 0.25, 4)
    ok &= abs(table.per_n[0][1] - 0.0625) <= 1e-12
    # exhaustive closed-walk enumeration for short periods
    _, w = build_graph(spec, 8)
    r = reduce(w, 0.0)
    enum = max(abs(v - oracles.gap_enum(r, table.far_nodes, n)) for n, v in table.per_n)
    ok &= enum <= 1e-12
    verdict(acceptance_log, 11, bool(ok), "; ".join(parts) + f"; enumeration gap={enum:.1e}")


def test_criterion_12_descent(acceptance_log):
    unconverged = 0
    spread = dist = 0.0
    runs = 0
    for spec in NAMED.values():
        dm = diagonal_min(spec, 128)
        for n in range(2, 9):
            inits = np.stack([np.random.default_rng(s).random(n) for s in range(100)])
            for tr in orbit_descent_batch(spec, inits):
                runs += 1
                unconverged += not tr.converged
                spread = max(spread, tr.final_spread)
                c = float(np.mean(tr.final))
                dist = max(dist, float(distance_to_set(c, dm.m_set, dm.m_intervals)))
    rng = np.random.default_rng(12)
    worst_delta = -np.inf
    for k in range(1000):
        spec = TWIST[k % len(TWIST)]
        n = int(rng.integers(1, 9))
        _, _, delta = crossing_surgery(rng.random(n), rng.random(n), spec)
        worst_delta = max(worst_delta, delta)
    ok = unconverged == 0 and spread <= 1e-6 and dist <= 1e-6 and worst_delta <= 1e-12
    verdict(acceptance_log, 12, ok,
            f"runs={runs} unconverged={unconverged} spread={spread:.1e} "
            f"dist_to_m={dist:.1e} max surgery delta={worst_delta:.1e}")


@pytest.mark.parametrize("a", [0.3, 0.7])
def test_criterion_13_tpo(acceptance_log, a):
    eps = 0.05
    rep = tpo_experiment(builtin("squared_difference"), a, eps, n_cells=128, seed=0)
    nearest = int(np.argmin(np.abs(np.linspace(0.0, 1.0, 129) - a)))
    ok = (rep.unique_min and abs(rep.second_derivative - 2 * eps) <= 1e-9
          and rep.aubry_letters == (nearest,) and rep.robustness_radius >= eps / 10)
    verdict(acceptance_log, 13, ok,
            f"a={a} unique={rep.unique_min} d2={rep.second_derivative:.12f} "
            f"aubry={rep.aubry_letters} nearest={nearest} radius={rep.robustness_radius}")


def test_criterion_14_determinism(acceptance_log, tmp_path):
    reports = []
    for threads in ("1", "4"):
        env = dict(os.environ)
        for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
            env[var] = threads
        out = tmp_path / f"t{threads}"
        proc = subprocess.run(
            [sys.executable, "-m", "xyaubry", "run", "--check-all", "--seed", "7",
             "--out", str(out)], env=env, capture_output=True, text=True, timeout=300)
        assert proc.returncode == 0, proc.stdout + proc.stderr
        reports.append((out / "report.json").read_bytes())
    same = reports[0] == reports[1]
    verdict(acceptance_log, 14, same,
            f"two runs (1 vs 4 threads) byte-identical={same} size={len(reports[0])}B")
