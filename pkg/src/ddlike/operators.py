"""Symbolic-numeric bounded operators on l2, exact on finitely supported inputs.

An operator is an immutable expression tree over seven node types.  Evaluation
walks the tree on a *block*: a set of column vectors stored densely over the
union of their supports.  Every node maps finitely supported columns to
finitely supported columns, so nothing is ever truncated.

    >>> x = FinVec.basis(3)
    >>> apply(DOUBLE, x)
    FinVec((1+0j)e_6)
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import NamedTuple, Sequence

import numpy as np

from .errors import NoConvergence, NotOrthonormal
from .hilbert import DROP_TOL, TOL, FinVec, inner_product, norm


class OperatorExpr:
    """Base class; use the concrete node types below."""

    __array_ufunc__ = None

    def __matmul__(self, other):
        if isinstance(other, FinVec):
            return apply(self, other)
        if not isinstance(other, OperatorExpr):
            return NotImplemented
        return Compose((self, other))

    def __add__(self, other):
        if not isinstance(other, OperatorExpr):
            return NotImplemented
        return LinComb(((1.0, self), (1.0, other)))

    def __sub__(self, other):
        if not isinstance(other, OperatorExpr):
            return NotImplemented
        return LinComb(((1.0, self), (-1.0, other)))

    def __neg__(self):
        return LinComb(((-1.0, self),))

    def __mul__(self, c):
        if not isinstance(c, (int, float, complex, np.number)):
            return NotImplemented
        return LinComb(((complex(c), self),))

    __rmul__ = __mul__

    @property
    def H(self) -> OperatorExpr:
        return adjoint(self)


@dataclass(frozen=True, eq=False)
class Zero(OperatorExpr):
    pass


@dataclass(frozen=True, eq=False)
class Identity(OperatorExpr):
    pass


@dataclass(frozen=True, eq=False)
class KetBraSum(OperatorExpr):
    """sum_j |ket_j><bra_j|."""

    pairs: tuple[tuple[FinVec, FinVec], ...]

    def __post_init__(self):
        object.__setattr__(self, "pairs", tuple((k, b) for k, b in self.pairs))

    @cached_property
    def _packed(self):
        return _pack([k for k, _ in self.pairs]), _pack([b for _, b in self.pairs])


SHIFT, DOUBLE_KIND, DOUBLE_MINUS_ONE_KIND = "shift", "double", "double_minus_one"
_INDEX_MAPS = {
    SHIFT: (lambda i: i + 1, lambda j: (j - 1, j >= 2)),
    DOUBLE_KIND: (lambda i: 2 * i, lambda j: (j // 2, j % 2 == 0)),
    DOUBLE_MINUS_ONE_KIND: (lambda i: 2 * i - 1, lambda j: ((j + 1) // 2, j % 2 == 1)),
}


@dataclass(frozen=True, eq=False)
class IndexIsometry(OperatorExpr):
    """e_i -> e_sigma(i) for sigma one of shift (i+1), double (2i), double_minus_one (2i-1)."""

    kind: str

    def __post_init__(self):
        if self.kind not in _INDEX_MAPS:
            raise ValueError(f"unknown index map {self.kind!r}")

    def sigma(self, i):
        return _INDEX_MAPS[self.kind][0](i)

    def sigma_inv(self, j):
        """Preimage of j and whether j lies in the image."""
        return _INDEX_MAPS[self.kind][1](j)


@dataclass(frozen=True, eq=False)
class Adjoint(OperatorExpr):
    inner: OperatorExpr


@dataclass(frozen=True, eq=False)
class Compose(OperatorExpr):
    """factors[0] @ factors[1] @ ... (the last factor acts first)."""

    factors: tuple[OperatorExpr, ...]

    def __post_init__(self):
        object.__setattr__(self, "factors", tuple(self.factors))
        if not self.factors:
            raise ValueError("Compose needs at least one factor")


@dataclass(frozen=True, eq=False)
class LinComb(OperatorExpr):
    terms: tuple[tuple[complex, OperatorExpr], ...]

    def __post_init__(self):
        object.__setattr__(self, "terms", tuple((complex(c), op) for c, op in self.terms))
        if not self.terms:
            raise ValueError("LinComb needs at least one term")


ZERO = Zero()
IDENTITY = Identity()
SHIFT_OP = IndexIsometry(SHIFT)
DOUBLE = IndexIsometry(DOUBLE_KIND)
DOUBLE_MINUS_ONE = IndexIsometry(DOUBLE_MINUS_ONE_KIND)


def adjoint(A: OperatorExpr) -> OperatorExpr:
    if isinstance(A, (Zero, Identity)):
        return A
    if isinstance(A, Adjoint):
        return A.inner
    if isinstance(A, KetBraSum):
        return KetBraSum(tuple((b, k) for k, b in A.pairs))
    return Adjoint(A)


def ket_bra(ket: FinVec, bra: FinVec) -> KetBraSum:
    return KetBraSum(((ket, bra),))


def projector(vs: Sequence[FinVec]) -> KetBraSum:
    """sum_j |v_j><v_j| (an orthogonal projection when the v_j are orthonormal)."""
    return KetBraSum(tuple((v, v) for v in vs))


# ---------------------------------------------------------------------------
# block evaluation


class Block(NamedTuple):
    rows: np.ndarray  # sorted unique 1-based indices, int64
    data: np.ndarray  # complex, shape (len(rows), ncols)


def _pack(vs: Sequence[FinVec]):
    rows = np.array(sorted({k for v in vs for k in v.support}), dtype=np.int64)
    mat = np.zeros((len(rows), len(vs)), dtype=complex)
    pos = {int(r): n for n, r in enumerate(rows)}
    for j, v in enumerate(vs):
        for k, c in v.entries.items():
            mat[pos[k], j] = c
    return rows, mat


def _gather(block: Block, rows: np.ndarray) -> np.ndarray:
    """Rows of ``block`` at the given indices, zero where absent."""
    out = np.zeros((len(rows), block.data.shape[1]), dtype=complex)
    if len(block.rows) == 0 or len(rows) == 0:
        return out
    pos = np.searchsorted(block.rows, rows)
    pos_c = np.minimum(pos, len(block.rows) - 1)
    hit = block.rows[pos_c] == rows
    out[hit] = block.data[pos_c[hit]]
    return out


def _empty(ncols: int) -> Block:
    return Block(np.zeros(0, dtype=np.int64), np.zeros((0, ncols), dtype=complex))


def _sum_blocks(parts: list[tuple[complex, Block]], ncols: int) -> Block:
    rows = np.unique(np.concatenate([b.rows for _, b in parts])) if parts else np.zeros(0, np.int64)
    data = np.zeros((len(rows), ncols), dtype=complex)
    for c, b in parts:
        if len(b.rows):
            data[np.searchsorted(rows, b.rows)] += c * b.data
    keep = np.abs(data).max(axis=1, initial=0.0) >= DROP_TOL if len(rows) else np.zeros(0, bool)
    return Block(rows[keep], data[keep])


def apply_block(A: OperatorExpr, block: Block, dagger: bool = False) -> Block:
    """Apply A (or A* when ``dagger``) to every column of ``block``."""
    ncols = block.data.shape[1]
    if isinstance(A, Identity):
        return block
    if isinstance(A, Zero):
        return _empty(ncols)
    if isinstance(A, Adjoint):
        return apply_block(A.inner, block, not dagger)
    if isinstance(A, Compose):
        order = A.factors if dagger else reversed(A.factors)
        for f in order:
            block = apply_block(f, block, dagger)
        return block
    if isinstance(A, LinComb):
        parts = [
            (c.conjugate() if dagger else c, apply_block(op, block, dagger))
            for c, op in A.terms
            if c != 0
        ]
        return _sum_blocks(parts, ncols)
    if isinstance(A, KetBraSum):
        (krows, kmat), (brows, bmat) = A._packed
        if dagger:
            (krows, kmat), (brows, bmat) = (brows, bmat), (krows, kmat)
        if len(krows) == 0 or len(brows) == 0:
            return _empty(ncols)
        coeff = bmat.conj().T @ _gather(block, brows)
        return _sum_blocks([(1.0, Block(krows, kmat @ coeff))], ncols)
    if isinstance(A, IndexIsometry):
        if not dagger:
            return Block(A.sigma(block.rows), block.data)
        pre, hit = A.sigma_inv(block.rows)
        return Block(pre[hit], block.data[hit])
    raise TypeError(f"not an operator expression: {A!r}")


def block_from_vectors(vs: Sequence[FinVec]) -> Block:
    return Block(*_pack(vs))


def block_columns(block: Block) -> list[FinVec]:
    rows = block.rows.tolist()
    return [FinVec(zip(rows, block.data[:, j])) for j in range(block.data.shape[1])]


def apply(A: OperatorExpr, x: FinVec) -> FinVec:
    return block_columns(apply_block(A, block_from_vectors([x])))[0]


def apply_adjoint(A: OperatorExpr, x: FinVec) -> FinVec:
    return block_columns(apply_block(A, block_from_vectors([x]), dagger=True))[0]


def apply_many(A: OperatorExpr, xs: Sequence[FinVec]) -> list[FinVec]:
    return block_columns(apply_block(A, block_from_vectors(xs)))


# ---------------------------------------------------------------------------
# constructors and finite windows


def make_plane_rotation(a: FinVec, b: FinVec, theta: float) -> OperatorExpr:
    """Rotate span{a, b} by theta (a -> cos a + sin b), identity on its complement."""
    gram = np.array([[inner_product(p, q) for q in (a, b)] for p in (a, b)])
    if np.abs(gram - np.eye(2)).max() > TOL:
        raise NotOrthonormal("plane rotation needs an orthonormal pair")
    c, s = math.cos(theta), math.sin(theta)
    correction = KetBraSum((((c - 1) * a + s * b, a), ((c - 1) * b - s * a, b)))
    return LinComb(((1.0, IDENTITY), (1.0, correction)))


class Compressed(NamedTuple):
    rows: np.ndarray
    matrix: np.ndarray


def compress_columns(A: OperatorExpr, N: int) -> Compressed:
    """Columns A e_1 .. A e_N as a matrix over the union of their supports."""
    if N < 1:
        raise ValueError("N must be >= 1")
    basis = Block(np.arange(1, N + 1, dtype=np.int64), np.eye(N, dtype=complex))
    out = apply_block(A, basis)
    keep = np.abs(out.data).max(axis=1, initial=0.0) >= DROP_TOL if len(out.rows) else []
    return Compressed(out.rows[keep], out.data[keep])


def largest_singular_value(M: np.ndarray, rtol: float = 1e-10, max_iter: int = 10000) -> float:
    """Power iteration on the Gram matrix M^H M.

    Each round squares the current power of the Gram matrix, so round k runs
    2^k plain power steps; the Rayleigh quotient is accurate to O(1/2^k) even
    when the top of the spectrum is clustered.
    """
    G = M.conj().T @ M
    n = G.shape[0]
    scale = np.abs(G).max(initial=0.0)
    if n == 0 or scale == 0.0:
        return 0.0
    G = G / scale
    rng = np.random.default_rng(20250321)
    x0 = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    P = G.copy()
    lam_prev = None
    for _ in range(max_iter):
        x = P @ x0
        nx = np.linalg.norm(x)
        if not np.isfinite(nx):
            break
        if nx == 0.0:
            # start vector orthogonal to the dominant eigenspace; perturb
            x0 = rng.standard_normal(n) + 1j * rng.standard_normal(n)
            continue
        x /= nx
        lam = float(np.real(np.vdot(x, G @ x)))
        if lam_prev is not None and abs(lam - lam_prev) <= rtol * abs(lam):
            return math.sqrt(max(lam, 0.0) * scale)
        lam_prev = lam
        P = P @ P
        P /= np.abs(P).max()
    raise NoConvergence("power iteration did not reach the requested tolerance")


def op_norm_restricted(A: OperatorExpr, N: int, rtol: float = 1e-10, max_iter: int = 10000) -> float:
    """Operator norm of A restricted to H_N = span(e_1..e_N)."""
    return largest_singular_value(compress_columns(A, N).matrix, rtol, max_iter)


def unitarity_defect(A: OperatorExpr, probes: Sequence[FinVec]) -> float:
    """max over probes of max(|A*A x - x|, |A A* x - x|)."""
    if not probes:
        raise ValueError("need at least one probe")
    x = block_from_vectors(probes)
    worst = 0.0
    for first in (False, True):
        y = apply_block(A, apply_block(A, x, dagger=first), dagger=not first)
        d = _sum_blocks([(1.0, y), (-1.0, x)], x.data.shape[1])
        if len(d.rows):
            worst = max(worst, float(np.linalg.norm(d.data, axis=0).max()))
    return worst


def isometry_defect(A: OperatorExpr, probes: Sequence[FinVec]) -> float:
    """max over probes of |A*A x - x|."""
    x = block_from_vectors(probes)
    y = apply_block(A, apply_block(A, x), dagger=True)
    d = _sum_blocks([(1.0, y), (-1.0, x)], x.data.shape[1])
    return float(np.linalg.norm(d.data, axis=0).max()) if len(d.rows) else 0.0


# ---------------------------------------------------------------------------
# dense inputs and JSON


def eventually_identity(block: np.ndarray) -> OperatorExpr:
    """The operator M (+) I, with M acting on e_1..e_n."""
    M = np.asarray(block, dtype=complex)
    n = M.shape[0]
    D = M - np.eye(n)
    pairs = tuple(
        (FinVec.from_dense(D[:, j]), FinVec.basis(j + 1)) for j in range(n) if np.abs(D[:, j]).max() >= DROP_TOL
    )
    if not pairs:
        return IDENTITY
    return LinComb(((1.0, IDENTITY), (1.0, KetBraSum(pairs))))


def dense_block_from_json(obj: dict) -> np.ndarray:
    n = int(obj["dim"])
    vals = obj["block"]
    if len(vals) != n * n:
        raise ValueError(f"expected {n * n} block entries, got {len(vals)}")
    return np.array([complex(re, im) for re, im in vals]).reshape(n, n)


def dense_block_to_json(M: np.ndarray) -> dict:
    M = np.asarray(M, dtype=complex)
    return {"dim": M.shape[0], "block": [[z.real, z.imag] for z in M.ravel()]}


def to_json(A: OperatorExpr) -> dict:
    if isinstance(A, Zero):
        return {"op": "Zero"}
    if isinstance(A, Identity):
        return {"op": "Identity"}
    if isinstance(A, KetBraSum):
        return {"op": "KetBraSum", "pairs": [{"ket": k.to_json(), "bra": b.to_json()} for k, b in A.pairs]}
    if isinstance(A, IndexIsometry):
        return {"op": "IndexIsometry", "map": A.kind}
    if isinstance(A, Adjoint):
        return {"op": "Adjoint", "inner": to_json(A.inner)}
    if isinstance(A, Compose):
        return {"op": "Compose", "factors": [to_json(f) for f in A.factors]}
    if isinstance(A, LinComb):
        return {"op": "LinComb", "terms": [{"coeff": [c.real, c.imag], "inner": to_json(op)} for c, op in A.terms]}
    raise TypeError(f"not an operator expression: {A!r}")


def from_json(obj: dict) -> OperatorExpr:
    kind = obj["op"]
    if kind == "Zero":
        return ZERO
    if kind == "Identity":
        return IDENTITY
    if kind == "KetBraSum":
        return KetBraSum(tuple((FinVec.from_json(p["ket"]), FinVec.from_json(p["bra"])) for p in obj["pairs"]))
    if kind == "IndexIsometry":
        return IndexIsometry(obj["map"])
    if kind == "Adjoint":
        return Adjoint(from_json(obj["inner"]))
    if kind == "Compose":
        return Compose(tuple(from_json(f) for f in obj["factors"]))
    if kind == "LinComb":
        return LinComb(tuple((complex(*t["coeff"]), from_json(t["inner"])) for t in obj["terms"]))
    raise ValueError(f"unknown operator node {kind!r}")


def vector_distance(x: FinVec, y: FinVec) -> float:
    return norm(x - y)
