"""Quantitative stand-ins for the strong and norm topologies.

The strong topology is probed with a finite set of finitely supported vectors.
The norm topology is probed with restriction-exact norms on H_N.  Also holds
the checker for the stabilization lemma: a norm <= 1 family that is the
identity on H_i once t >= tau_i converges strongly to the identity, with
|f_t x - x| <= 2 dist(x, H_i) for t >= tau_i.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import BoundViolated, HypothesisViolated
from .hilbert import FinVec, dist_to_filtration, norm
from .operators import (
    OperatorExpr,
    _sum_blocks,
    apply_block,
    apply_many,
    block_from_vectors,
    op_norm_restricted,
)

Family = Callable[[float], OperatorExpr]

DEFAULT_PROBES = "basis:8,random:8:12"
L10_SLACK = 1e-8


@dataclass(frozen=True)
class ProbeSet:
    vectors: tuple[FinVec, ...]
    spec: str = "explicit"

    def __post_init__(self):
        if not self.vectors:
            raise ValueError("a probe set must be nonempty")

    @classmethod
    def parse(cls, spec: str = DEFAULT_PROBES, seed: int = 0) -> ProbeSet:
        """Build probes from e.g. ``"basis:8,random:8:12"``.

        ``basis:m`` gives e_1..e_m; ``random:n:s`` gives n seeded random unit
        vectors with complex Gaussian entries on e_1..e_s.
        """
        rng = np.random.default_rng(seed)
        vecs: list[FinVec] = []
        for part in filter(None, (p.strip() for p in spec.split(","))):
            kind, *args = part.split(":")
            if kind == "basis" and len(args) == 1:
                vecs += [FinVec.basis(i) for i in range(1, int(args[0]) + 1)]
            elif kind == "random" and len(args) == 2:
                n, support = int(args[0]), int(args[1])
                for _ in range(n):
                    z = rng.standard_normal(support) + 1j * rng.standard_normal(support)
                    vecs.append(FinVec.from_dense(z / np.linalg.norm(z)))
            else:
                raise ValueError(f"bad probe spec component {part!r}")
        return cls(tuple(vecs), spec)

    @classmethod
    def default(cls, seed: int = 0) -> ProbeSet:
        return cls.parse(DEFAULT_PROBES, seed)

    @property
    def top(self) -> int:
        return max(v.top for v in self.vectors)

    def __len__(self):
        return len(self.vectors)

    def __iter__(self):
        return iter(self.vectors)


def _columns_norms(A: OperatorExpr, B: OperatorExpr, probes: Sequence[FinVec]) -> np.ndarray:
    x = block_from_vectors(list(probes))
    d = _sum_blocks([(1.0, apply_block(A, x)), (-1.0, apply_block(B, x))], x.data.shape[1])
    if not len(d.rows):
        return np.zeros(x.data.shape[1])
    return np.linalg.norm(d.data, axis=0)


def strong_distance(A: OperatorExpr, B: OperatorExpr, probes) -> float:
    """max over probes of |(A - B) x|."""
    return float(_columns_norms(A, B, list(probes)).max())


def strong_norm(A: OperatorExpr, probes) -> float:
    """max over probes of |A x|."""
    vs = list(probes)
    return max(norm(y) for y in apply_many(A, vs))


@dataclass
class ContinuityReport:
    grid: list[float]
    jumps: list[float]  # metric distance between consecutive grid points
    max_jump: float
    refined_max_jump: float
    refinement_ratio: float  # max_jump / refined_max_jump; 2 for a Lipschitz-regular family
    metric: str = "strong"

    def halves(self, slack: float = 0.1) -> bool:
        """Whether halving the step at least halves the max jump, within ``slack``."""
        if self.max_jump == 0.0:
            return self.refined_max_jump == 0.0
        return self.refined_max_jump <= 0.5 * (1.0 + slack) * self.max_jump

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["t0", "t1", "jump"])
        for t0, t1, j in zip(self.grid, self.grid[1:], self.jumps):
            w.writerow([f"{t0:.17g}", f"{t1:.17g}", f"{j:.17g}"])
        return buf.getvalue()

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)


def _distance(metric: str, A, B, probes, N):
    if metric == "strong":
        return strong_distance(A, B, probes)
    if metric == "norm":
        return op_norm_restricted(A - B, N)
    raise ValueError(f"unknown metric {metric!r}")


def _evaluate(family: Family, t: float) -> OperatorExpr:
    try:
        return family(t)
    except Exception as exc:
        exc.t = t
        exc.args = (*exc.args, f"(family evaluated at t={t!r})")
        raise


def _max_jump(family, grid, metric, probes, N):
    ops = [_evaluate(family, t) for t in grid]
    jumps = [_distance(metric, a, b, probes, N) for a, b in zip(ops, ops[1:])]
    return jumps


def continuity_scan(
    family: Family,
    grid: Sequence[float],
    metric: str = "strong",
    probes: ProbeSet | None = None,
    N: int | None = None,
) -> ContinuityReport:
    """Consecutive-snapshot distances on ``grid`` and on its midpoint refinement."""
    grid = [float(t) for t in grid]
    if len(grid) < 2 or any(b <= a for a, b in zip(grid, grid[1:])):
        raise ValueError("grid must be strictly increasing with at least two points")
    if grid[0] < 0.0 or grid[-1] > 1.0:
        raise ValueError("grid must lie inside [0, 1]")
    if metric == "strong" and probes is None:
        probes = ProbeSet.default()
    if metric == "norm" and N is None:
        raise ValueError("the norm metric needs a truncation N")
    jumps = _max_jump(family, grid, metric, probes, N)
    fine = [grid[0]]
    for a, b in zip(grid, grid[1:]):
        fine += [0.5 * (a + b), b]
    fine_jumps = _max_jump(family, fine, metric, probes, N)
    mj, fj = max(jumps), max(fine_jumps)
    ratio = mj / fj if fj > 0 else (math.nan if mj == 0 else math.inf)
    return ContinuityReport(grid, jumps, mj, fj, ratio, metric)


@dataclass
class L10Report:
    rows: list[dict] = field(default_factory=list)
    passed: bool = True

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["t", "i", "hypothesis_defect", "max_bound_slack"])
        for r in self.rows:
            w.writerow([f"{r['t']:.17g}", r["i"], f"{r['hypothesis_defect']:.17g}", f"{r['max_bound_slack']:.17g}"])
        return buf.getvalue()

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)


def default_l10_grid(schedule: Callable[[int], float], i_max: int) -> list[float]:
    ts = set()
    for i in range(1, i_max + 1):
        tau = schedule(i)
        ts.add(tau)
        if tau + 1e-6 < 1.0:
            ts.add(tau + 1e-6)
    return sorted(ts)


def lemma_l10_check(
    family: Family,
    schedule: Callable[[int], float],
    probes: ProbeSet,
    i_max: int = 8,
    grid: Sequence[float] | None = None,
    norm_window: int | None = None,
) -> L10Report:
    """Verify identity-on-H_i after tau_i and the bound |f_t x - x| <= 2 dist(x, H_i).

    Raises HypothesisViolated or BoundViolated with the first witness found
    (grid ascending, then j or probe order).
    """
    grid = sorted(default_l10_grid(schedule, i_max) if grid is None else grid)
    taus = [schedule(i) for i in range(1, i_max + 1)]
    N = norm_window or max(i_max, probes.top)
    report = L10Report()
    basis = [FinVec.basis(j) for j in range(1, i_max + 1)]
    for t in grid:
        active = [i for i, tau in enumerate(taus, start=1) if tau <= t]
        if not active:
            continue
        f = _evaluate(family, t)
        nrm = op_norm_restricted(f, N)
        if nrm > 1.0 + 1e-9:
            raise ValueError(f"family norm {nrm:.12g} > 1 at t={t!r}")
        i = max(active)
        defects = [norm(y - e) for y, e in zip(apply_many(f, basis[:i]), basis[:i])]
        for j, d in enumerate(defects, start=1):
            if d > L10_SLACK:
                raise HypothesisViolated(j, t, d)
        moved = [norm(y - x) for y, x in zip(apply_many(f, probes.vectors), probes.vectors)]
        slack = -math.inf
        for n, (m, x) in enumerate(zip(moved, probes.vectors)):
            for ii in active:
                rhs = 2.0 * dist_to_filtration(x, ii) + L10_SLACK
                if m > rhs:
                    raise BoundViolated(n, t, m, rhs)
                slack = max(slack, m - (rhs - L10_SLACK))
        report.rows.append(
            {"t": t, "i": i, "hypothesis_defect": max(defects), "max_bound_slack": slack}
        )
    return report
