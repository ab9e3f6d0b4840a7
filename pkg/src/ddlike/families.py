"""Dixmier-Douady-like families of subspaces and operators on l2.

H_{1/2} is the closed span of the even basis vectors.  It is the image of
u: e_i -> e_{2i}, and its complement is the image of v: e_i -> e_{2i-1}.  A
norm-continuous unitary family w_t, t in [1/2, 1), built from plane rotations,
satisfies w_{1/2} = id and w_t(u(e_i)) = e_i once t >= 1 - 1/(i+2).  Then
u_t = w_t u and v_t = w_t v.  On (0, 1/2] the same construction is run for v
with t reflected to 1 - t.  The subspaces themselves only appear through the
operators

    I_t P_t = u_t u_t*,   I'_t Q_t = v_t v_t*,   U_t P_t = u_t*,   V_t Q_t = v_t*.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

from .hilbert import FinVec, inner_product, norm
from .operators import (
    DOUBLE,
    DOUBLE_MINUS_ONE,
    IDENTITY,
    ZERO,
    Compose,
    IndexIsometry,
    OperatorExpr,
    adjoint,
    apply,
    make_plane_rotation,
)
from .errors import ScheduleOverflow
from .unitary import StageSchedule

ROTATION_SCHEDULE = StageSchedule(1)
FAMILY_STAGE_CAP = 2048  # stage i costs i rotations; t within ~1/cap of an endpoint is refused
_TIE_TOL = 1e-12


@dataclass(frozen=True)
class _Plane:
    a: FinVec  # current position of the embedded basis vector at stage entry
    b: FinVec
    angle: float

    def rotation(self, s: float) -> OperatorExpr:
        return make_plane_rotation(self.a, self.b, s * self.angle)


class _RotationStages:
    """Stage planes for the family driving ``embedding``(e_i) to e_i."""

    def __init__(self, embedding: IndexIsometry):
        self.embedding = embedding
        self.planes: list[_Plane | None] = []  # None marks a constant (identity) stage
        self.full: list[OperatorExpr] = []
        self.top = 0

    def upto(self, i: int):
        while len(self.planes) < i:
            j = len(self.planes) + 1
            done = self.completed(j - 1)
            f = apply(done, apply(self.embedding, FinVec.basis(j)))
            f = f.restrict_above(j - 1)
            f = f / norm(f)
            e = FinVec.basis(j)
            self.top = max(self.top, f.top, j)
            r = inner_product(f, e)
            if abs(r - 1.0) <= _TIE_TOL:
                plane = None
            elif abs(r + 1.0) <= _TIE_TOL:
                # antipodal: half turn through a fresh direction
                self.top += 1
                plane = _Plane(f, FinVec.basis(self.top), math.pi)
            else:
                if abs(r.imag) > _TIE_TOL:
                    raise ValueError(f"stage {j}: complex overlap {r} has no real rotation branch")
                rr = min(1.0, max(-1.0, r.real))
                b = e - rr * f
                plane = _Plane(f, b / norm(b), math.acos(rr))
            self.planes.append(plane)
            self.full.append(IDENTITY if plane is None else plane.rotation(1.0))
        return self.planes[:i]

    def completed(self, n: int) -> OperatorExpr:
        """Product of the first n full stage rotations (later stages act last)."""
        self.upto(n)
        ops = [op for op in reversed(self.full[:n]) if op is not IDENTITY]
        return Compose(tuple(ops)) if ops else IDENTITY

    def at(self, t: float) -> OperatorExpr:
        if t == 0.5:
            return IDENTITY
        i, s = ROTATION_SCHEDULE.locate(t)
        plane = self.upto(i)[-1]
        ops = [] if plane is None or s == 0.0 else [plane.rotation(s)]
        ops += [op for op in reversed(self.full[: i - 1]) if op is not IDENTITY]
        return Compose(tuple(ops)) if ops else IDENTITY


@lru_cache(maxsize=None)
def _stages(kind: str) -> _RotationStages:
    return _RotationStages(DOUBLE if kind == "u" else DOUBLE_MINUS_ONE)


def _check_cap(d: float, stage_cap: int):
    # d is the distance to the nearer endpoint; the active stage is about 1/d - 1
    if d * (stage_cap + 2) < 1.0:
        raise ScheduleOverflow(f"distance {d!r} to the endpoint needs more than {stage_cap} stages")


def rotation_family_w(t: float, stage_cap: int = FAMILY_STAGE_CAP) -> OperatorExpr:
    """w_t for 1/2 <= t < 1."""
    if not 0.5 <= t < 1.0:
        raise ValueError(f"w_t is defined for 1/2 <= t < 1, got {t!r}")
    _check_cap(1.0 - t, stage_cap)
    return _stages("u").at(t)


def mirror_rotation_family(t: float, stage_cap: int = FAMILY_STAGE_CAP) -> OperatorExpr:
    """w'_t for 0 < t <= 1/2: drives v(e_i) to e_i as t decreases, fixed once t <= 1/(i+2)."""
    if not 0.0 < t <= 0.5:
        raise ValueError(f"w'_t is defined for 0 < t <= 1/2, got {t!r}")
    _check_cap(t, stage_cap)
    return _stages("v").at(1.0 - t)


@dataclass(frozen=True, eq=False)
class FamilySnapshot:
    t: float
    u: OperatorExpr  # I_t U_t^{-1}
    v: OperatorExpr  # I'_t V_t^{-1}
    itpt: OperatorExpr
    itqt: OperatorExpr
    utpt: OperatorExpr
    vtqt: OperatorExpr


def family_snapshot(t: float, stage_cap: int = FAMILY_STAGE_CAP) -> FamilySnapshot:
    if not 0.0 <= t <= 1.0:
        raise ValueError(f"t must lie in [0, 1], got {t!r}")
    if t == 1.0:
        u, v = IDENTITY, ZERO
    elif t == 0.0:
        u, v = ZERO, IDENTITY
    else:
        w = rotation_family_w(t, stage_cap) if t >= 0.5 else mirror_rotation_family(t, stage_cap)
        u, v = Compose((w, DOUBLE)), Compose((w, DOUBLE_MINUS_ONE))

    def proj(op):
        if op is IDENTITY or op is ZERO:
            return op
        return Compose((op, adjoint(op)))

    return FamilySnapshot(t, u, v, proj(u), proj(v), adjoint(u), adjoint(v))


def closest_point_bound(x: FinVec, t: float) -> tuple[float, float]:
    """(|I_t P_t x - x|, |u_t x - x|); the first never exceeds the second."""
    if not 0.5 <= t < 1.0:
        raise ValueError(f"t must lie in [1/2, 1), got {t!r}")
    snap = family_snapshot(t)
    return norm(apply(snap.itpt, x) - x), norm(apply(snap.u, x) - x)
