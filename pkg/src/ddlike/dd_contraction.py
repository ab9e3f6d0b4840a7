"""Homotopies assembled from the Dixmier-Douady-like families.

* phi_dd: Phi(U, t) = (id - I_t P_t) + I_t U_t^{-1} U U_t P_t, contracting the
  unitary group (Phi(U, 1) = U, Phi(U, 0) = id).
* conjugate_compact / compact_pair_homotopy: the norm-continuous maps on
  compact operators, with finite-rank operators standing in for K(l2).
"""

from __future__ import annotations

from collections.abc import Mapping, Sequence
from dataclasses import dataclass

from .families import family_snapshot
from .hilbert import FinVec
from .operators import IDENTITY, ZERO, Compose, KetBraSum, LinComb, OperatorExpr
from .operators import op_norm_restricted
from .unitary import EventuallyIdentityUnitary


@dataclass(frozen=True, eq=False)
class FiniteRankOperator:
    """sum_j |ket_j><bra_j|."""

    pairs: tuple[tuple[FinVec, FinVec], ...]

    def __post_init__(self):
        object.__setattr__(self, "pairs", tuple((k, b) for k, b in self.pairs))

    def operator(self) -> OperatorExpr:
        return KetBraSum(self.pairs) if self.pairs else ZERO

    @property
    def top(self) -> int:
        return max((max(k.top, b.top) for k, b in self.pairs), default=0)

    def to_json(self) -> dict:
        return {"pairs": [{"ket": k.to_json(), "bra": b.to_json()} for k, b in self.pairs]}

    @classmethod
    def from_json(cls, obj: Mapping) -> FiniteRankOperator:
        return cls(tuple((FinVec.from_json(p["ket"]), FinVec.from_json(p["bra"])) for p in obj["pairs"]))

    @classmethod
    def from_vectors(cls, kets: Sequence[FinVec], bras: Sequence[FinVec]) -> FiniteRankOperator:
        return cls(tuple(zip(kets, bras)))


def _as_operator(A) -> OperatorExpr:
    if isinstance(A, FiniteRankOperator):
        return A.operator()
    if isinstance(A, EventuallyIdentityUnitary):
        return A.operator()
    return A


def _conjugate(iso: OperatorExpr, A: OperatorExpr) -> OperatorExpr:
    if iso is ZERO or A is ZERO:
        return ZERO
    if iso is IDENTITY:
        return A
    return Compose((iso, A, iso.H))


def phi_dd(U, t: float) -> OperatorExpr:
    snap = family_snapshot(t)
    Uop = _as_operator(U)
    # endpoint conventions live in the snapshot: I_1 P_1 = u_1 = id, I_0 P_0 = u_0 = 0
    return LinComb(((1.0, IDENTITY), (-1.0, snap.itpt), (1.0, _conjugate(snap.u, Uop))))


def conjugate_compact(A, t: float) -> OperatorExpr:
    """I_t U_t^{-1} A U_t P_t = u_t A u_t*, for 0 < t <= 1."""
    if not 0.0 < t <= 1.0:
        raise ValueError(f"t must lie in (0, 1], got {t!r}")
    return _conjugate(family_snapshot(t).u, _as_operator(A))


def compact_pair_homotopy(A, t: float, B) -> OperatorExpr:
    """t u_t A u_t* + (1 - t) v_t B v_t*: equals B at t = 0 and A at t = 1."""
    if not 0.0 <= t <= 1.0:
        raise ValueError(f"t must lie in [0, 1], got {t!r}")
    snap = family_snapshot(t)
    terms = []
    if t > 0.0:
        terms.append((t, _conjugate(snap.u, _as_operator(A))))
    if t < 1.0:
        terms.append((1.0 - t, _conjugate(snap.v, _as_operator(B))))
    return LinComb(tuple(terms))


def lipschitz_in_operator(A, B, t: float, N: int) -> tuple[float, float]:
    """(|conj_t(B) - conj_t(A)| on H_N, |B - A|).

    The right side is the full norm when both inputs are finite rank (their
    difference then lives on H_top), otherwise it is restricted to H_N too.
    """
    lhs = op_norm_restricted(conjugate_compact(B, t) - conjugate_compact(A, t), N)
    M = N
    if isinstance(A, FiniteRankOperator) and isinstance(B, FiniteRankOperator):
        M = max(N, A.top, B.top)
    rhs = op_norm_restricted(_as_operator(B) - _as_operator(A), M)
    return lhs, rhs
