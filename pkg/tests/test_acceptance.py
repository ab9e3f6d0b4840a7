"""Acceptance suite: the nine desk-scale criteria, each at its stated tolerance.

Every criterion records one PASS/FAIL line (printed at the end of the pytest
run, or directly when this file is executed as a script).  Operators built by
criteria 1-8 are kept and re-evaluated against the dense oracle by criterion 9.
"""

from __future__ import annotations

import math
import sys
import time
from functools import lru_cache
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from ddlike.cli import random_finite_rank
from ddlike.dd_contraction import compact_pair_homotopy, conjugate_compact, lipschitz_in_operator, phi_dd
from ddlike.families import ROTATION_SCHEDULE, family_snapshot, rotation_family_w
from ddlike.hilbert import FinVec, gram_schmidt, inner_product, norm
from ddlike.operators import DOUBLE, IDENTITY, apply, apply_many, op_norm_restricted, unitarity_defect
from ddlike.probes import ProbeSet, continuity_scan, lemma_l10_check, strong_distance
from ddlike.stiefel import StiefelPoint, h_map, transport_unitary
from ddlike.unitary import UNITARY_SCHEDULE, EventuallyIdentityUnitary, contract_unitary, contraction_form_factor
from oracles import WindowTooSmall, oracle_apply_many, random_unit, random_unitary, to_dense, transport_oracle

RESULTS: dict[int, str] = {}
e = FinVec.basis


class Outcome:
    def __init__(self, number, title, limit):
        self.number, self.title, self.limit = number, title, limit
        self.ops = []  # (label, operator) pairs for the oracle check
        self.failures = []
        self.notes = []
        self.t0 = time.perf_counter()

    def check(self, ok, witness):
        if not ok:
            self.failures.append(witness)

    def keep(self, label, op):
        self.ops.append((label, op))

    def finish(self):
        self.elapsed = time.perf_counter() - self.t0
        self.check(self.elapsed < self.limit, f"runtime {self.elapsed:.1f}s >= {self.limit}s")
        status = "PASS" if not self.failures else "FAIL"
        detail = "; ".join(self.notes + self.failures[:3])
        RESULTS[self.number] = f"criterion {self.number} [{self.title}]: {status} ({self.elapsed:.1f}s) {detail}"
        return self


def seeded_unitary(seed, dim):
    return EventuallyIdentityUnitary(random_unitary(np.random.default_rng(seed), dim))


# ---------------------------------------------------------------------------


@lru_cache(maxsize=None)
def criterion_1():
    out = Outcome(1, "endpoint identities", 10)
    probes = ProbeSet.default()
    worst = 0.0
    for seed in range(10):
        U = seeded_unitary(seed, 1 + seed % 6)
        one, zero = phi_dd(U, 1.0), phi_dd(U, 0.0)
        d1 = strong_distance(one, U.operator(), probes)
        d0 = strong_distance(zero, IDENTITY, probes)
        worst = max(worst, d1, d0)
        out.check(d1 <= 1e-9, f"seed {seed}: |Phi(U,1) - U| = {d1:.2e}")
        out.check(d0 <= 1e-9, f"seed {seed}: |Phi(U,0) - id| = {d0:.2e}")
        out.keep(f"phi(U{seed},1)", one)
        out.keep(f"phi(U{seed},0)", zero)
    out.notes.append(f"max strong error {worst:.1e}")
    return out.finish()


def _schedule_times(tau, tau_next):
    return (tau, tau + 1e-6, 0.5 * (tau + tau_next))


@lru_cache(maxsize=None)
def criterion_2():
    out = Outcome(2, "stabilization schedules", 60)
    worst = 0.0
    basis = [e(j) for j in range(1, 9)]
    for seed in range(3):
        U = seeded_unitary(100 + seed, 4)
        for i in range(1, 9):
            ts = _schedule_times(UNITARY_SCHEDULE.stabilization_time(i), UNITARY_SCHEDULE.stabilization_time(i + 1))
            for t in ts:
                op = contract_unitary(U, t)
                out.keep(f"u_t(U{seed}, {t})", op)
                for j, y in enumerate(apply_many(op, basis[:i]), start=1):
                    d = norm(y - e(j))
                    worst = max(worst, d)
                    out.check(d <= 1e-8, f"u_t e_{j} != e_{j} at t={t} (seed {seed}, {d:.2e})")
    for i in range(1, 9):
        tau = 1 - 1 / (i + 2)
        for t in _schedule_times(tau, 1 - 1 / (i + 3)):
            w = rotation_family_w(t)
            out.keep(f"w_{t}", w)
            for j in range(1, i + 1):
                d = norm(apply(w, apply(DOUBLE, e(j))) - e(j))
                worst = max(worst, d)
                out.check(d <= 1e-8, f"w_t(u(e_{j})) != e_{j} at t={t} ({d:.2e})")
    out.notes.append(f"max defect {worst:.1e}")
    return out.finish()


@lru_cache(maxsize=None)
def criterion_3():
    out = Outcome(3, "stabilization lemma bound", 30)
    probes = ProbeSet.default()
    assert len(probes) == 16
    U = seeded_unitary(7, 5)
    families = {
        "dd u_t": (lambda t: family_snapshot(t).u, ROTATION_SCHEDULE.stabilization_time),
        "unitary u_t": (lambda t: contract_unitary(U, t), UNITARY_SCHEDULE.stabilization_time),
    }
    for name, (fam, schedule) in families.items():
        try:
            rep = lemma_l10_check(fam, schedule, probes, i_max=8)
            slack = max(r["max_bound_slack"] for r in rep.rows)
            out.notes.append(f"{name}: {len(rep.rows)} times, max slack {slack:.1e}")
        except AssertionError as exc:
            out.check(False, f"{name}: {exc}")
        for t in (schedule(1), schedule(4), schedule(8)):
            out.keep(f"{name} at {t}", fam(t))
    return out.finish()


@lru_cache(maxsize=None)
def criterion_4():
    out = Outcome(4, "unitarity everywhere", 60)
    worst = {"w": 0.0, "factor": 0.0, "transport": 0.0, "phi": 0.0}

    def record(kind, label, op, probes):
        d = unitarity_defect(op, probes)
        worst[kind] = max(worst[kind], d)
        out.check(d <= 1e-8, f"{label}: defect {d:.2e}")
        out.keep(label, op)

    w_grid = np.linspace(0.5, 1.0, 34)[:-1]
    grid = np.linspace(0.0, 1.0, 33)
    for seed in range(5):
        probes = list(ProbeSet.default(seed))
        rng = np.random.default_rng(200 + seed)
        U = EventuallyIdentityUnitary(random_unitary(rng, 3 + seed % 3))
        for t in w_grid:
            record("w", f"w_{t:.4f} seed {seed}", rotation_family_w(t), probes)
        for t in grid[:-1]:
            record("factor", f"h(U{seed}, {t:.4f})", contraction_form_factor(U, t), probes)
        for t in grid:
            record("phi", f"Phi(U{seed}, {t:.4f})", phi_dd(U, t), probes)
        for n in range(33):
            k = 1 + n % 3
            a = gram_schmidt([random_unit(rng, 6) for _ in range(k)])
            x = gram_schmidt([v + 0.25 * random_unit(rng, 6) for v in a])
            step = transport_unitary(StiefelPoint(tuple(a)), StiefelPoint(tuple(x)))
            record("transport", f"W seed {seed} #{n}", step.operator, probes + list(a) + list(x))
    out.notes.append(", ".join(f"{k} {v:.1e}" for k, v in worst.items()))
    return out.finish()


@lru_cache(maxsize=None)
def criterion_5():
    out = Outcome(5, "strong-vs-norm dichotomy", 60)
    near = ProbeSet.parse("basis:8,random:8:8", seed=5)
    dists = []
    for m in range(2, 65):
        t = 1 - 1 / m
        itpt = family_snapshot(t).itpt
        dists.append(strong_distance(itpt, IDENTITY, near))
        out.keep(f"itpt({t:.4f})", itpt)
    increases = [(m, b - a) for m, (a, b) in enumerate(zip(dists, dists[1:]), start=3) if b > a + 1e-12]
    out.check(not increases, f"strong distance increases at m={increases[:1]}")
    out.check(dists[-1] < 1e-6, f"strong distance at m=64 is {dists[-1]:.2e}")
    samples = [1 - 1 / m for m in range(2, 65, 3)] + [1 / m for m in range(3, 65, 3)]
    low = math.inf
    for t in samples:
        snap = family_snapshot(t)
        assert apply(snap.v, e(1)).top <= 200
        n = op_norm_restricted(snap.itpt - IDENTITY, 200)
        low = min(low, n)
        out.check(n >= 1 - 1e-9, f"|I_tP_t - id| on H_200 = {n:.12f} at t={t}")
    out.notes.append(f"strong distance {dists[0]:.2f} -> {dists[-1]:.1e}, min truncated norm {low:.12f}")
    return out.finish()


@lru_cache(maxsize=None)
def criterion_6():
    out = Outcome(6, "compact-operator norm continuity", 120)
    ts = [1 - 2.0**-k for k in range(5, 10)]
    worst, at_end, lip = 0.0, 0.0, -math.inf
    for seed in range(5):
        rng = np.random.default_rng(300 + seed)
        A, B = random_finite_rank(rng, 3, 10), random_finite_rank(rng, 3, 10)
        for t in ts + [0.5, 0.6, 0.75, 0.9]:
            C = conjugate_compact(A, t)
            out.keep(f"conj(A{seed}, {t})", C)
            lhs, rhs = lipschitz_in_operator(A, B, t, 64)
            lip = max(lip, lhs - rhs)
            out.check(lhs <= rhs + 1e-9, f"seed {seed} t={t}: {lhs:.6f} > {rhs:.6f}")
            if t in ts:
                d = op_norm_restricted(C - A.operator(), 64)
                worst = max(worst, d)
                out.check(d <= 0.05, f"seed {seed} t={t}: |conj - A| = {d:.3e}")
                if t == ts[-1]:
                    at_end = max(at_end, d)
                    out.check(d < 1e-3, f"seed {seed}: |conj - A| = {d:.3e} at t = 1 - 1/512")
    out.notes.append(f"max |conj-A| {worst:.1e}, at 1-1/512 {at_end:.1e}, max Lipschitz excess {lip:.1e}")
    return out.finish()


C7_WINDOWS = ((0.0, 1 / 8), (7 / 16, 9 / 16), (7 / 8, 1.0))
C7_POINTS = 17  # dt = 1/128, refined to 1/256


@lru_cache(maxsize=None)
def criterion_7():
    out = Outcome(7, "pairwise homotopy endpoints and modulus", 60)
    ratios = []
    for seed in range(3):
        rng = np.random.default_rng(400 + seed)
        A, B = random_finite_rank(rng, 3, 10), random_finite_rank(rng, 3, 10)
        h1, h0 = compact_pair_homotopy(A, 1.0, B), compact_pair_homotopy(A, 0.0, B)
        d1 = op_norm_restricted(h1 - A.operator(), 64)
        d0 = op_norm_restricted(h0 - B.operator(), 64)
        out.check(d1 <= 1e-9 and d0 <= 1e-9, f"seed {seed}: endpoint errors {d1:.1e}, {d0:.1e}")
        out.keep(f"pair(seed {seed}, 1)", h1)
        out.keep(f"pair(seed {seed}, 0)", h0)
        for lo, hi in C7_WINDOWS:
            rep = continuity_scan(
                lambda t: compact_pair_homotopy(A, t, B), np.linspace(lo, hi, C7_POINTS), "norm", N=64
            )
            ratios.append(rep.refinement_ratio)
            out.check(
                rep.halves(0.1),
                f"seed {seed} window [{lo:.4g}, {hi:.4g}]: max jump {rep.max_jump:.3f} -> {rep.refined_max_jump:.3f}",
            )
            out.keep(f"pair(seed {seed}, {lo + 1 / 128})", compact_pair_homotopy(A, lo + 1 / 128, B))
    out.notes.append("refinement ratios " + " ".join(f"{r:.2f}" for r in ratios))
    return out.finish()


def _overlapping_triple(rng):
    while True:
        base = random_unit(rng, 4)
        vs = []
        for _ in range(3):
            v = base + 0.9 * random_unit(rng, 4)
            vs.append(v / norm(v))
        if all(abs(inner_product(a, b)) >= 0.2 for n, a in enumerate(vs) for b in vs[n + 1 :]):
            return vs


@lru_cache(maxsize=None)
def criterion_8():
    out = Outcome(8, "cocycle and transport", 60)
    rng = np.random.default_rng(800)
    worst_c = worst_t = 0.0
    for n in range(20):
        x, y, z = _overlapping_triple(rng)
        hzy, hyx, hzx = h_map(z, y), h_map(y, x), h_map(z, x)
        ws = [random_unit(rng, 8) for _ in range(4)]
        for w in ws:
            d = norm(apply(hzy, apply(hyx, w)) - apply(hzx, w))
            worst_c = max(worst_c, d)
            out.check(d <= 1e-8, f"triple {n}: cocycle defect {d:.2e}")
        out.keep(f"h(z,y)h(y,x) #{n}", hzy @ hyx)
        out.keep(f"h(z,x) #{n}", hzx)
    L = 10
    for n in range(20):
        k = 1 + n % 3
        a = gram_schmidt([random_unit(rng, 7) for _ in range(k)])
        x = gram_schmidt([v + 0.3 * random_unit(rng, 7) for v in a])
        step = transport_unitary(StiefelPoint(tuple(a)), StiefelPoint(tuple(x)))
        W = transport_oracle(a, x, L)
        ours = np.column_stack([to_dense(apply(step.operator, e(j)), L) for j in range(1, L + 1)])
        d = float(np.abs(ours - W).max())
        worst_t = max(worst_t, d)
        out.check(d <= 1e-9, f"transport #{n} (k={k}) differs from polar oracle by {d:.2e}")
        out.keep(f"W #{n}", step.operator)
    out.notes.append(f"max cocycle defect {worst_c:.1e}, max oracle gap {worst_t:.1e}")
    return out.finish()


ORACLE_DIMS = (64, 128, 256)


@lru_cache(maxsize=None)
def criterion_9():
    earlier = [criterion_1, criterion_2, criterion_3, criterion_4, criterion_5, criterion_6, criterion_7, criterion_8]
    ops = [(f"c{n}: {label}", op) for n, fn in enumerate(earlier, start=1) for label, op in fn().ops]
    out = Outcome(9, "oracle equivalence", 120)
    probes = list(ProbeSet.parse("basis:16,random:16:16", seed=9))
    checked, skipped, worst = 0, 0, 0.0
    for label, op in ops:
        ours = apply_many(op, probes)
        for M in ORACLE_DIMS:
            try:
                ref = oracle_apply_many(op, probes, M)
            except WindowTooSmall:
                continue
            got = np.column_stack([to_dense(y, M) if y.top <= M else np.full(M, np.nan) for y in ours])
            d = float(np.abs(got - ref).max())
            worst = max(worst, d)
            out.check(d <= 1e-10, f"{label}: dense oracle gap {d:.2e} in dimension {M}")
            checked += 1
            break
        else:
            skipped += 1
    out.notes.append(
        f"{checked} operators checked, {skipped} with joint support beyond {ORACLE_DIMS[-1]}, max gap {worst:.1e}"
    )
    return out.finish()


CRITERIA = [criterion_1, criterion_2, criterion_3, criterion_4, criterion_5, criterion_6, criterion_7, criterion_8, criterion_9]


@pytest.mark.parametrize("n", range(1, 10))
def test_criterion(n):
    out = CRITERIA[n - 1]()
    print(RESULTS[n])
    assert not out.failures, RESULTS[n]


def main() -> int:
    failed = 0
    for fn in CRITERIA:
        out = fn()
        print(RESULTS[out.number], flush=True)
        failed += bool(out.failures)
    return 1 if failed else 0


if __name__ == "__main__":
    sys.exit(main())
