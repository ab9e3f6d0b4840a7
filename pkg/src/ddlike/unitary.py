"""Staged contraction (U, t) -> u_t of the unitary group onto the identity.

Stage i runs over [(i-1)/i, i/(i+1)].  At its entry the current unitary g
fixes e_1..e_{i-1}; the vector x = g(e_i) lies in their complement and is
pulled to e_i along the relative sphere contraction x_s.  During the stage

    u_t = Phi_{x_s} Phi_x* g,

where Phi is the frame trivialization relabelled into the complement of
e_1..e_{i-1}.  This is the unitary taking e_i to x_s and acting as h(x_s, x) g
on the complement of e_i.  At the end of the stage x_s = e_i, so u_t fixes
e_1..e_i from then on.  u_1 is the identity by convention.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import ScheduleOverflow
from .hilbert import FinVec, norm
from .operators import IDENTITY, Compose, OperatorExpr, adjoint, apply, apply_many, eventually_identity
from .sphere import contract_point_relative
from .stiefel import phi_frame

STAGE_CAP = 64


@dataclass(frozen=True)
class StageSchedule:
    """Stages [1 - 1/(i+offset), 1 - 1/(i+offset+1)], i = 1, 2, ...

    offset 0 is the unitary-contraction schedule ([0, 1/2], [1/2, 2/3], ...);
    offset 1 is the rotation schedule of the Dixmier-Douady-like families
    ([1/2, 2/3], [2/3, 3/4], ...).
    """

    offset: int = 0

    def stage_interval(self, i: int) -> tuple[float, float]:
        if i < 1:
            raise ValueError("stages are numbered from 1")
        return 1.0 - 1.0 / (i + self.offset), 1.0 - 1.0 / (i + self.offset + 1)

    def start(self) -> float:
        return self.stage_interval(1)[0]

    def locate(self, t: float) -> tuple[int, float]:
        """Stage index and local parameter s in [0, 1] for start() <= t < 1."""
        if not self.start() <= t < 1.0:
            raise ValueError(f"t={t!r} outside [{self.start()}, 1)")
        i = max(1, int(math.floor(1.0 / (1.0 - t))) - self.offset)
        lo, hi = self.stage_interval(i)
        # guard against floor() landing one stage off; a boundary belongs to the later stage
        if t < lo and i > 1:
            i -= 1
        elif t >= hi:
            i += 1
        lo, hi = self.stage_interval(i)
        s = (t - lo) / (hi - lo)
        return i, min(1.0, max(0.0, s))

    def stabilization_time(self, j: int) -> float:
        """First t after which e_j is fixed: the end of stage j."""
        return self.stage_interval(j)[1]


UNITARY_SCHEDULE = StageSchedule(0)


class EventuallyIdentityUnitary:
    """U = block (+) I on l2, block an n x n unitary."""

    def __init__(self, block):
        M = np.array(block, dtype=complex)
        if M.ndim != 2 or M.shape[0] != M.shape[1]:
            raise ValueError("block must be square")
        if np.abs(M.conj().T @ M - np.eye(M.shape[0])).max() > 1e-9:
            raise ValueError("block is not unitary")
        M.setflags(write=False)
        self.block = M
        self._key = (M.shape[0], M.tobytes())

    @property
    def block_dim(self) -> int:
        return self.block.shape[0]

    def operator(self) -> OperatorExpr:
        return eventually_identity(self.block)

    def __eq__(self, other):
        return isinstance(other, EventuallyIdentityUnitary) and self._key == other._key

    def __hash__(self):
        return hash(self._key)

    def __repr__(self):
        return f"EventuallyIdentityUnitary(block_dim={self.block_dim})"


@dataclass(frozen=True, eq=False)
class _StageEntry:
    g: OperatorExpr  # unitary at the start of the stage
    x: FinVec  # g(e_i)
    phi_x: OperatorExpr  # relabelled Phi_x, fixing e_1..e_{i-1}


@lru_cache(maxsize=64)
def _operator_of(U: EventuallyIdentityUnitary) -> OperatorExpr:
    return U.operator()


class _StageCache:
    """Per-unitary list of stage entries, grown on demand."""

    def __init__(self, U: EventuallyIdentityUnitary):
        self.U = U
        self.entries: list[_StageEntry] = []

    def upto(self, i: int) -> list[_StageEntry]:
        while len(self.entries) < i:
            j = len(self.entries) + 1
            if j == 1:
                g = _operator_of(self.U)
            else:
                prev = self.entries[-1]
                g = Compose((adjoint(prev.phi_x), prev.g))
            x = apply(g, FinVec.basis(j)).restrict_above(j - 1)
            x = x / norm(x)
            self.entries.append(_StageEntry(g, x, phi_frame(x, j - 1)))
        return self.entries[:i]


@lru_cache(maxsize=32)
def _stages(U: EventuallyIdentityUnitary) -> _StageCache:
    return _StageCache(U)


def _check_t(t: float):
    if not 0.0 <= t <= 1.0:
        raise ValueError(f"t must lie in [0, 1], got {t!r}")


def _stage_factor(entry: _StageEntry, i: int, s: float) -> OperatorExpr:
    if s == 0.0:
        return IDENTITY
    y = contract_point_relative(entry.x, s, i - 1)
    return Compose((phi_frame(y, i - 1), adjoint(entry.phi_x)))


def contraction_form_factor(U: EventuallyIdentityUnitary, t: float, stage_cap: int = STAGE_CAP) -> OperatorExpr:
    """The unitary h(U, t) with u_t = h(U, t) U, for 0 <= t < 1."""
    _check_t(t)
    if t >= 1.0:
        raise ValueError("the form factor is only defined for t < 1")
    i, s = UNITARY_SCHEDULE.locate(t)
    if i > stage_cap:
        raise ScheduleOverflow(f"t={t!r} needs stage {i} > cap {stage_cap}")
    entries = _stages(U).upto(i)
    factors = [_stage_factor(entries[-1], i, s)]
    # completed stages, most recent first; each ended with factor Phi_{x_j}*
    factors += [adjoint(e.phi_x) for e in reversed(entries[:-1])]
    factors = [f for f in factors if f is not IDENTITY]
    return Compose(tuple(factors)) if factors else IDENTITY


def contract_unitary(U: EventuallyIdentityUnitary, t: float, stage_cap: int = STAGE_CAP) -> OperatorExpr:
    _check_t(t)
    if t == 1.0:
        return IDENTITY
    return Compose((contraction_form_factor(U, t, stage_cap), _operator_of(U)))


def stabilized_prefix(op: OperatorExpr, upto: int, tol: float = 1e-8) -> int:
    """Largest j <= upto with |op e_l - e_l| <= tol for all l <= j."""
    images = apply_many(op, [FinVec.basis(l) for l in range(1, upto + 1)])
    for l, y in enumerate(images, start=1):
        if norm(y - FinVec.basis(l)) > tol:
            return l - 1
    return upto
