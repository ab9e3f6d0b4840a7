"""Command-line front end: run one construction or scan and write a report.

Exit status is 0 when every check in the scenario passes, 1 when a check
fails or a construction raises, and 2 for malformed input.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import errors
from .dd_contraction import FiniteRankOperator, compact_pair_homotopy, conjugate_compact, lipschitz_in_operator, phi_dd
from .families import ROTATION_SCHEDULE, family_snapshot
from .hilbert import FinVec, norm
from .operators import (
    IDENTITY,
    apply,
    dense_block_from_json,
    isometry_defect,
    op_norm_restricted,
    to_json,
    unitarity_defect,
)
from .probes import DEFAULT_PROBES, ProbeSet, lemma_l10_check, strong_distance, strong_norm
from .sphere import contract_point
from .stiefel import StiefelPoint, transport_unitary
from .unitary import STAGE_CAP, UNITARY_SCHEDULE, EventuallyIdentityUnitary, contract_unitary, stabilized_prefix


class ParseError(ValueError):
    pass


class ScenarioError(RuntimeError):
    pass


@dataclass
class RunConfig:
    subcommand: str
    grid: int = 21
    trunc: int = 32
    probes: str = DEFAULT_PROBES
    seed: int = 0
    format: str = "csv"
    out: str | None = None
    t: float | None = None
    matrix: str | None = None
    a: str | None = None
    b: str | None = None
    vector: str | None = None
    family: str = "dd"
    i_max: int = 8
    stage_cap: int = STAGE_CAP
    dump_ops: str | None = None

    def __post_init__(self):
        if self.grid < 2:
            raise ParseError("--grid must be >= 2")
        if self.trunc < 1:
            raise ParseError("--trunc must be >= 1")
        if self.format not in ("csv", "json"):
            raise ParseError("--format must be csv or json")


@dataclass
class Report:
    scenario: str
    columns: list[str]
    rows: list[dict] = field(default_factory=list)
    violations: list[str] = field(default_factory=list)
    ops: list[tuple[str, object]] = field(default_factory=list)

    def check(self, ok: bool, message: str):
        if not ok:
            self.violations.append(message)


# ---------------------------------------------------------------------------
# input helpers


def _load_json(path: str):
    try:
        return json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ParseError(f"cannot read {path}: {exc}") from exc


def _unitary(cfg: RunConfig) -> EventuallyIdentityUnitary:
    if cfg.matrix:
        try:
            return EventuallyIdentityUnitary(dense_block_from_json(_load_json(cfg.matrix)))
        except (KeyError, TypeError, ValueError) as exc:
            raise ParseError(f"bad --matrix: {exc}") from exc
    rng = np.random.default_rng(cfg.seed)
    z = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
    q, r = np.linalg.qr(z)
    return EventuallyIdentityUnitary(q * (np.diag(r) / np.abs(np.diag(r))))


def _frame(path: str) -> StiefelPoint:
    try:
        return StiefelPoint(tuple(FinVec.from_json(v) for v in _load_json(path)))
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"bad frame in {path}: {exc}") from exc


def _finite_rank(path: str | None, rng) -> FiniteRankOperator:
    if path:
        try:
            return FiniteRankOperator.from_json(_load_json(path))
        except (KeyError, TypeError, ValueError) as exc:
            raise ParseError(f"bad finite-rank operator in {path}: {exc}") from exc
    return random_finite_rank(rng, rank=3, support=10)


def random_finite_rank(rng, rank: int, support: int) -> FiniteRankOperator:
    def vec():
        z = rng.standard_normal(support) + 1j * rng.standard_normal(support)
        return FinVec.from_dense(z / np.linalg.norm(z))

    return FiniteRankOperator(tuple((vec(), vec()) for _ in range(rank)))


def _grid(cfg: RunConfig) -> list[float]:
    if cfg.t is not None:
        return [cfg.t]
    return [k / (cfg.grid - 1) for k in range(cfg.grid)]


# ---------------------------------------------------------------------------
# scenarios


def run_sphere(cfg: RunConfig) -> Report:
    if cfg.vector:
        x = FinVec.from_json(_load_json(cfg.vector))
    else:
        rng = np.random.default_rng(cfg.seed)
        z = rng.standard_normal(6) + 1j * rng.standard_normal(6)
        x = FinVec.from_dense(z / np.linalg.norm(z))
    rep = Report("sphere", ["t", "support", "norm", "dist_to_e1"])
    e1 = FinVec.basis(1)
    for t in _grid(cfg):
        p = contract_point(x, t)
        rep.rows.append(
            {"t": t, "support": " ".join(map(str, p.support)), "norm": norm(p), "dist_to_e1": norm(p - e1)}
        )
        rep.check(abs(norm(p) - 1.0) <= 1e-10, f"point at t={t!r} is not a unit vector")
        if t == 0.0:
            rep.check(norm(p - x) <= 1e-12, "path does not start at x")
        if t == 1.0:
            rep.check(p == e1, "path does not end at e_1")
    return rep


def run_transport(cfg: RunConfig) -> Report:
    if not (cfg.a and cfg.b):
        raise ParseError("transport needs --a and --b frame files")
    a, x = _frame(cfg.a), _frame(cfg.b)
    step = transport_unitary(a, x)
    probes = list(ProbeSet.parse(cfg.probes, cfg.seed)) + list(a.frame) + list(x.frame)
    frame_err = max(norm(apply(step.operator, aj) - xj) for aj, xj in zip(a.frame, x.frame))
    defect = unitarity_defect(step.operator, probes)
    rep = Report("transport", ["k", "correction_rank", "unitarity_defect", "frame_error", "min_eigenvalue"])
    rep.rows.append(
        {
            "k": a.k,
            "correction_rank": step.correction_rank,
            "unitarity_defect": defect,
            "frame_error": frame_err,
            "min_eigenvalue": step.min_eigenvalue,
        }
    )
    rep.ops.append(("W", step.operator))
    rep.check(defect <= 1e-9, f"transport unitarity defect {defect:.3e}")
    rep.check(frame_err <= 1e-9, f"transport frame error {frame_err:.3e}")
    return rep


def run_contract_unitary(cfg: RunConfig) -> Report:
    U = _unitary(cfg)
    probes = ProbeSet.parse(cfg.probes, cfg.seed)
    Uop = U.operator()
    rep = Report(
        "contract-unitary",
        ["t", "stage", "unitarity_defect", "stabilized", "expected_stabilized", "strong_dist_to_U", "strong_dist_to_identity"],
    )
    for t in _grid(cfg):
        op = contract_unitary(U, t, cfg.stage_cap)
        stage = "" if t == 1.0 else UNITARY_SCHEDULE.locate(t)[0]
        expected = sum(1 for j in range(1, 17) if UNITARY_SCHEDULE.stabilization_time(j) <= t)
        window = 16
        row = {
            "t": t,
            "stage": stage,
            "unitarity_defect": unitarity_defect(op, list(probes)),
            "stabilized": stabilized_prefix(op, window),
            "expected_stabilized": expected,
            "strong_dist_to_U": strong_distance(op, Uop, probes),
            "strong_dist_to_identity": strong_distance(op, IDENTITY, probes),
        }
        rep.rows.append(row)
        rep.ops.append((f"u_{t!r}", op))
        rep.check(row["unitarity_defect"] <= 1e-8, f"u_t not unitary at t={t!r}")
        rep.check(row["stabilized"] >= expected, f"u_t does not fix e_1..e_{expected} at t={t!r}")
        if t == 0.0:
            rep.check(row["strong_dist_to_U"] <= 1e-9, "u_0 != U")
        if t == 1.0:
            rep.check(row["strong_dist_to_identity"] == 0.0, "u_1 != id")
    return rep


def run_families(cfg: RunConfig) -> Report:
    probes = ProbeSet.parse(cfg.probes, cfg.seed)
    rep = Report(
        "families",
        [
            "t",
            "strong_dist_itpt_identity",
            "strong_norm_vtqt",
            "trunc_norm_itpt_minus_identity",
            "u_isometry_defect",
            "v_isometry_defect",
            "complement_defect",
        ],
    )
    for t in _grid(cfg):
        snap = family_snapshot(t)
        interior = 0.0 < t < 1.0
        row = {
            "t": t,
            "strong_dist_itpt_identity": strong_distance(snap.itpt, IDENTITY, probes),
            "strong_norm_vtqt": strong_norm(snap.vtqt, probes),
            "trunc_norm_itpt_minus_identity": op_norm_restricted(snap.itpt - IDENTITY, cfg.trunc),
            "u_isometry_defect": isometry_defect(snap.u, list(probes)) if t > 0.0 else "",
            "v_isometry_defect": isometry_defect(snap.v, list(probes)) if t < 1.0 else "",
            "complement_defect": strong_distance(snap.itpt + snap.itqt, IDENTITY, probes),
        }
        rep.rows.append(row)
        rep.ops.append((f"itpt_{t!r}", snap.itpt))
        rep.check(row["complement_defect"] <= 1e-9, f"I_tP_t + I'_tQ_t != id at t={t!r}")
        if interior:
            rep.check(row["u_isometry_defect"] <= 1e-9, f"u_t not isometric at t={t!r}")
            rep.check(row["v_isometry_defect"] <= 1e-9, f"v_t not isometric at t={t!r}")
            witness = apply(snap.v, FinVec.basis(1))
            if witness.top <= cfg.trunc:
                rep.check(
                    row["trunc_norm_itpt_minus_identity"] >= 1.0 - 1e-9,
                    f"|I_tP_t - id| restricted to H_{cfg.trunc} below 1 at t={t!r}",
                )
        if t == 1.0:
            rep.check(row["strong_dist_itpt_identity"] == 0.0, "I_1 P_1 != id")
        if t == 0.0:
            rep.check(strong_norm(snap.itpt, probes) == 0.0, "I_0 P_0 != 0")
    return rep


def run_dd_contract(cfg: RunConfig) -> Report:
    U = _unitary(cfg)
    probes = ProbeSet.parse(cfg.probes, cfg.seed)
    Uop = U.operator()
    rep = Report(
        "dd-contract",
        ["t", "unitarity_defect", "strong_dist_to_U", "strong_dist_to_identity", "strong_dist_to_staged_contraction"],
    )
    for t in _grid(cfg):
        op = phi_dd(U, t)
        # the staged contraction runs from U (t=0) to id (t=1); Phi runs the other way
        try:
            staged = strong_distance(op, contract_unitary(U, 1.0 - t, cfg.stage_cap), probes)
        except errors.ScheduleOverflow:
            staged = ""
        row = {
            "t": t,
            "unitarity_defect": unitarity_defect(op, list(probes)),
            "strong_dist_to_U": strong_distance(op, Uop, probes),
            "strong_dist_to_identity": strong_distance(op, IDENTITY, probes),
            "strong_dist_to_staged_contraction": staged,
        }
        rep.rows.append(row)
        rep.ops.append((f"phi_{t!r}", op))
        rep.check(row["unitarity_defect"] <= 1e-8, f"Phi(U, t) not unitary at t={t!r}")
        if t == 1.0:
            rep.check(row["strong_dist_to_U"] <= 1e-9, "Phi(U, 1) != U")
        if t == 0.0:
            rep.check(row["strong_dist_to_identity"] <= 1e-9, "Phi(U, 0) != id")
    return rep


def run_compact(cfg: RunConfig) -> Report:
    rng = np.random.default_rng(cfg.seed)
    A = _finite_rank(cfg.a, rng)
    B = _finite_rank(cfg.b, rng)
    N = cfg.trunc
    Aop, Bop = A.operator(), B.operator()
    rep = Report(
        "compact",
        ["t", "trunc_dist_to_A", "trunc_dist_to_B", "trunc_conj_A_minus_A", "lipschitz_lhs", "lipschitz_rhs"],
    )
    for t in _grid(cfg):
        H = compact_pair_homotopy(A, t, B)
        row = {
            "t": t,
            "trunc_dist_to_A": op_norm_restricted(H - Aop, N),
            "trunc_dist_to_B": op_norm_restricted(H - Bop, N),
            "trunc_conj_A_minus_A": op_norm_restricted(conjugate_compact(A, t) - Aop, N) if t > 0 else "",
            "lipschitz_lhs": "",
            "lipschitz_rhs": "",
        }
        if t > 0:
            row["lipschitz_lhs"], row["lipschitz_rhs"] = lipschitz_in_operator(A, B, t, N)
            rep.check(
                row["lipschitz_lhs"] <= row["lipschitz_rhs"] + 1e-9, f"conjugation expands |B - A| at t={t!r}"
            )
        rep.rows.append(row)
        rep.ops.append((f"pair_{t!r}", H))
        if t == 1.0:
            rep.check(row["trunc_dist_to_A"] <= 1e-9, "homotopy at t=1 differs from A")
        if t == 0.0:
            rep.check(row["trunc_dist_to_B"] <= 1e-9, "homotopy at t=0 differs from B")
    return rep


def run_l10(cfg: RunConfig) -> Report:
    probes = ProbeSet.parse(cfg.probes, cfg.seed)
    if cfg.family == "dd":
        def fam(t):
            return family_snapshot(t).u

        schedule = ROTATION_SCHEDULE.stabilization_time
    elif cfg.family == "unitary":
        U = _unitary(cfg)

        def fam(t):
            return contract_unitary(U, t, cfg.stage_cap)

        schedule = UNITARY_SCHEDULE.stabilization_time
    else:
        raise ParseError(f"unknown --family {cfg.family!r}")
    rep = Report("l10-check", ["t", "i", "hypothesis_defect", "max_bound_slack"])
    try:
        res = lemma_l10_check(fam, schedule, probes, i_max=cfg.i_max)
    except (errors.HypothesisViolated, errors.BoundViolated) as exc:
        rep.violations.append(f"{type(exc).__name__}: {exc}")
        return rep
    rep.rows = res.rows
    return rep


SCENARIOS = {
    "sphere": run_sphere,
    "transport": run_transport,
    "contract-unitary": run_contract_unitary,
    "families": run_families,
    "dd-contract": run_dd_contract,
    "compact": run_compact,
    "l10-check": run_l10,
}


# ---------------------------------------------------------------------------
# output


def _fmt(v):
    if isinstance(v, float):
        return f"{v:.17g}"
    return str(v)


def render(rep: Report, fmt: str) -> str:
    if fmt == "json":
        rows = [{k: (None if v == "" else v) for k, v in r.items()} for r in rep.rows]
        body = {"scenario": rep.scenario, "rows": rows, "violations": rep.violations, "passed": not rep.violations}
        return json.dumps(body, indent=2, sort_keys=True, allow_nan=True) + "\n"
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(rep.columns)
    for r in rep.rows:
        w.writerow([_fmt(r[c]) for c in rep.columns])
    return buf.getvalue()


def run(cfg: RunConfig, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    try:
        rep = SCENARIOS[cfg.subcommand](cfg)
    except ParseError as exc:
        print(f"error: {exc}", file=stderr)
        return 2
    except (ArithmeticError, ValueError, RuntimeError) as exc:
        print(f"error: {type(exc).__name__} in {cfg.subcommand}: {exc}", file=stderr)
        return 1
    text = render(rep, cfg.format)
    if cfg.out:
        Path(cfg.out).write_text(text)
    else:
        stdout.write(text)
    if cfg.dump_ops:
        Path(cfg.dump_ops).write_text(
            json.dumps([{"label": label, "op": to_json(op)} for label, op in rep.ops], sort_keys=True)
        )
    for v in rep.violations:
        print(f"violation: {v}", file=stderr)
    return 1 if rep.violations else 0


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--grid", type=int, default=21, help="number of evenly spaced t in [0, 1]")
    common.add_argument("--trunc", type=int, default=32, help="truncation N for restricted norms")
    common.add_argument("--probes", default=DEFAULT_PROBES, help='probe spec, e.g. "basis:8,random:8:12"')
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--out", help="output path (default stdout)")
    common.add_argument("--format", choices=("csv", "json"), default="csv")
    common.add_argument("--t", type=float, help="evaluate at a single t instead of a grid")
    common.add_argument("--matrix", help="unitary block JSON {dim, block}")
    common.add_argument("--a", help="frame (transport) or finite-rank operator (compact) JSON")
    common.add_argument("--b", help="frame (transport) or finite-rank operator (compact) JSON")
    common.add_argument("--stage-cap", type=int, default=STAGE_CAP)
    common.add_argument("--dump-ops", metavar="PATH", help="write the constructed operator trees as JSON")

    parser = argparse.ArgumentParser(prog="ddlike", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="subcommand", required=True)
    sp = sub.add_parser("sphere", parents=[common], help="contraction of the unit sphere")
    sp.add_argument("--vector", help="unit FinVec JSON (default: seeded random)")
    sub.add_parser("transport", parents=[common], help="polar transport between two frames")
    sub.add_parser("contract-unitary", parents=[common], help="staged contraction of U(H)")
    sub.add_parser("families", parents=[common], help="Dixmier-Douady-like families")
    sub.add_parser("dd-contract", parents=[common], help="contraction Phi(U, t) built from the families")
    sub.add_parser("compact", parents=[common], help="pair homotopy of compact operators")
    lp = sub.add_parser("l10-check", parents=[common], help="stabilization-lemma verifier")
    lp.add_argument("--family", choices=("dd", "unitary"), default="dd")
    lp.add_argument("--i-max", type=int, default=8)
    return parser


def main(argv=None) -> int:
    args = vars(build_parser().parse_args(argv))
    try:
        cfg = RunConfig(**args)
    except ParseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
