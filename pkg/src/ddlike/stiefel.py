"""Frame transport on the infinite Stiefel manifold V_k(l2).

For orthonormal k-frames a and x, let H_a and H_x be the orthogonal
complements of their spans and s = p_x restricted to H_a.  When s*s is
invertible, u = s (s*s)^(-1/2) is a unitary H_a -> H_x.  Together with
a_j -> x_j this gives a unitary W of the whole space.  W differs from the
identity only on span(a) + span(x): for w orthogonal to both frames,
s*s w = w.  So W = I + (rank <= 2k) and is exact in the expression algebra.

For unit vectors (k = 1) the transport is chained along the reversed sphere
contraction from the base vector to x.  This gives a fixed unitary Phi_x with
Phi_x(base) = x.  The transition maps h(y, x) = Phi_y P Phi_x* then satisfy
h(z, y) h(y, x) = h(z, x) identically.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property, lru_cache
from typing import Sequence

import numpy as np

from .errors import NotInvertible, NotOrthonormal, PathTooLong
from .hilbert import TOL, FinVec, inner_product, norm
from .operators import (
    IDENTITY,
    Compose,
    KetBraSum,
    LinComb,
    OperatorExpr,
    adjoint,
    projector,
    unitarity_defect,
)
from .sphere import contract_point_relative

EIG_FLOOR = 1e-6
ACTIVE_TOL = 1e-12
MIN_OVERLAP = 0.9
BASE_PIECES = 8  # uniform pieces per contraction phase before any refinement
MAX_STEPS = 10_000


@dataclass(frozen=True, eq=False)
class StiefelPoint:
    frame: tuple[FinVec, ...]

    def __post_init__(self):
        frame = tuple(self.frame)
        object.__setattr__(self, "frame", frame)
        if not frame:
            raise ValueError("a frame needs at least one vector")
        G = np.array([[inner_product(p, q) for q in frame] for p in frame])
        if np.abs(G - np.eye(len(frame))).max() > TOL:
            raise NotOrthonormal("frame vectors are not orthonormal")

    @classmethod
    def of(cls, *vectors: FinVec) -> StiefelPoint:
        return cls(tuple(vectors))

    @property
    def k(self) -> int:
        return len(self.frame)


def complement_projection(x: StiefelPoint) -> OperatorExpr:
    """i_x p_x = I - sum_j |x_j><x_j|."""
    return LinComb(((1.0, IDENTITY), (-1.0, projector(x.frame))))


@dataclass(frozen=True, eq=False)
class TransportStep:
    source: StiefelPoint
    target: StiefelPoint
    operator: OperatorExpr
    active: tuple[FinVec, ...]  # orthonormal basis of span(source) + span(target)
    min_eigenvalue: float

    @property
    def correction_rank(self) -> int:
        return len(self.operator.terms[1][1].pairs) if isinstance(self.operator, LinComb) else 0

    @cached_property
    def defect(self) -> float:
        probes = list(self.source.frame) + list(self.target.frame) + list(self.active)
        return unitarity_defect(self.operator, probes)


def _extend_basis(base: Sequence[FinVec], extra: Sequence[FinVec]) -> list[FinVec]:
    """Orthonormal vectors completing ``base`` to a basis of span(base + extra)."""
    basis, added = list(base), []
    for v in extra:
        r = v
        for _ in range(2):
            for q in basis:
                r = r - inner_product(r, q) * q
        nr = norm(r)
        if nr > ACTIVE_TOL:
            q = r / nr
            basis.append(q)
            added.append(q)
    return added


def transport_unitary(a: StiefelPoint, x: StiefelPoint) -> TransportStep:
    if a.k != x.k:
        raise ValueError(f"frames of different length: {a.k} and {x.k}")
    C = _extend_basis(a.frame, x.frame)  # orthonormal basis of H_a within the active span
    m = len(C)
    pairs = [(xl - al, al) for al, xl in zip(a.frame, x.frame)]
    min_eig = 1.0
    if m:
        # M[i, j] = <s*s c_j, c_i> = <p_x c_j, c_i> = delta_ij - sum_l <c_j, x_l> <x_l, c_i>
        Xc = np.array([[inner_product(c, xl) for xl in x.frame] for c in C])  # Xc[j, l] = <c_j, x_l>
        M = np.eye(m) - Xc.conj() @ Xc.T
        M = 0.5 * (M + M.conj().T)
        lam, V = np.linalg.eigh(M)
        min_eig = float(lam[0])
        if min_eig < EIG_FLOOR:
            raise NotInvertible(f"smallest eigenvalue of s*s is {min_eig:.3e}")
        inv_sqrt = (V / np.sqrt(lam)) @ V.conj().T
        for j, cj in enumerate(C):
            w = FinVec.zero()
            for i, ci in enumerate(C):
                w = w + inv_sqrt[i, j] * ci
            uw = w - sum((inner_product(w, xl) * xl for xl in x.frame), FinVec.zero())
            pairs.append((uw - cj, cj))
    pairs = tuple((k, b) for k, b in pairs if k)
    op = LinComb(((1.0, IDENTITY), (1.0, KetBraSum(pairs)))) if pairs else IDENTITY
    return TransportStep(a, x, op, tuple(a.frame) + tuple(C), min_eig)


def _unit(x: FinVec):
    if abs(norm(x) - 1.0) > TOL:
        raise ValueError(f"expected a unit vector, got norm {norm(x):.12g}")


def frame_path(x: FinVec, fixed: int = 0) -> list[tuple[float, FinVec]]:
    """Points of the reversed contraction path from e_{fixed+1} to x.

    Starts from a uniform grid (BASE_PIECES per phase) and bisects any piece
    whose end points have overlap below MIN_OVERLAP.
    """
    def point(s):
        return contract_point_relative(x, s, fixed)

    n = 2 * BASE_PIECES
    grid = [1.0 - j / n for j in range(n + 1)]
    pts = [(s, point(s)) for s in grid]
    out = [pts[0]]
    for (s0, p0), (s1, p1) in zip(pts, pts[1:]):
        stack = [(s1, p1)]
        cur = (s0, p0)
        while stack:
            nxt = stack[-1]
            if abs(inner_product(cur[1], nxt[1])) >= MIN_OVERLAP:
                out.append(nxt)
                cur = stack.pop()
                if len(out) > MAX_STEPS + 1:
                    raise PathTooLong(f"more than {MAX_STEPS} transport steps")
            else:
                sm = 0.5 * (cur[0] + nxt[0])
                if len(stack) > 60:
                    raise PathTooLong("path refinement does not terminate")
                stack.append((sm, point(sm)))
    return out


@lru_cache(maxsize=8192)
def phi_frame(x: FinVec, fixed: int = 0) -> OperatorExpr:
    """The trivializing unitary Phi_x: e_{fixed+1} -> x, H_{e_{fixed+1}} -> H_x.

    With fixed = k the construction runs inside the complement of
    e_1..e_k and leaves those vectors alone.  Phi of the base vector itself
    is the identity (empty product).
    """
    _unit(x)
    base = FinVec.basis(fixed + 1)
    if norm(x - base) <= 1e-14:
        return IDENTITY
    path = frame_path(x, fixed)
    steps = [
        transport_unitary(StiefelPoint((p,)), StiefelPoint((q,))).operator
        for (_, p), (_, q) in zip(path, path[1:])
    ]
    return Compose(tuple(reversed(steps)))


def h_map(y: FinVec, x: FinVec, fixed: int = 0) -> OperatorExpr:
    """i_y h(y, x) p_x = Phi_y (I - |e><e|) Phi_x*, with e the base vector."""
    base = StiefelPoint((FinVec.basis(fixed + 1),))
    return Compose((phi_frame(y, fixed), complement_projection(base), adjoint(phi_frame(x, fixed))))
