"""Finitely supported vectors of l2 over the complex numbers.

Basis vectors are 1-indexed (e_1, e_2, ...).  The subspace H_i is the span of
e_1, ..., e_i and is represented just by the integer i.
"""

from __future__ import annotations

import math
from collections.abc import Iterable, Mapping
from types import MappingProxyType

import numpy as np

from .errors import DependentInput

DROP_TOL = 1e-15
TOL = 1e-9


class FinVec:
    """Immutable sparse vector ``{index: complex}`` with indices >= 1.

    Entries with modulus below ``DROP_TOL`` are never stored.
    """

    __slots__ = ("_entries", "_hash")
    # numpy scalars must defer to __rmul__ instead of treating a FinVec as a sequence
    __array_ufunc__ = None
    __iter__ = None

    def __init__(self, entries: Mapping[int, complex] | Iterable[tuple[int, complex]] = ()):
        items = entries.items() if isinstance(entries, Mapping) else entries
        acc: dict[int, complex] = {}
        for k, v in items:
            k = int(k)
            if k < 1:
                raise IndexError(f"basis indices start at 1, got {k}")
            acc[k] = acc.get(k, 0j) + complex(v)
        self._entries = {k: acc[k] for k in sorted(acc) if abs(acc[k]) >= DROP_TOL}
        self._hash = None

    # construction helpers

    @classmethod
    def basis(cls, i: int, coeff: complex = 1.0) -> FinVec:
        return cls({i: coeff})

    @classmethod
    def zero(cls) -> FinVec:
        return cls()

    @classmethod
    def from_dense(cls, values, start: int = 1) -> FinVec:
        return cls((start + k, v) for k, v in enumerate(np.asarray(values).ravel()))

    def to_dense(self, n: int | None = None) -> np.ndarray:
        n = self.top if n is None else n
        out = np.zeros(n, dtype=complex)
        for k, v in self._entries.items():
            if k > n:
                raise IndexError(f"entry e_{k} does not fit in dimension {n}")
            out[k - 1] = v
        return out

    # inspection

    @property
    def entries(self) -> Mapping[int, complex]:
        return MappingProxyType(self._entries)

    @property
    def support(self) -> tuple[int, ...]:
        return tuple(self._entries)

    @property
    def top(self) -> int:
        """Largest index in the support, 0 for the zero vector."""
        return next(reversed(self._entries), 0)

    def __getitem__(self, i: int) -> complex:
        return self._entries.get(i, 0j)

    def __len__(self) -> int:
        return len(self._entries)

    def __bool__(self) -> bool:
        return bool(self._entries)

    # arithmetic

    def _combine(self, other: FinVec, sign: float) -> FinVec:
        if not isinstance(other, FinVec):
            return NotImplemented
        out = dict(self._entries)
        for k, v in other._entries.items():
            out[k] = out.get(k, 0j) + sign * v
        return FinVec(out)

    def __add__(self, other):
        return self._combine(other, 1.0)

    def __sub__(self, other):
        return self._combine(other, -1.0)

    def __neg__(self):
        return FinVec({k: -v for k, v in self._entries.items()})

    def __mul__(self, c):
        if not isinstance(c, (int, float, complex, np.number)):
            return NotImplemented
        return FinVec({k: c * v for k, v in self._entries.items()})

    __rmul__ = __mul__

    def __truediv__(self, c):
        return self * (1.0 / c)

    def conj(self) -> FinVec:
        return FinVec({k: v.conjugate() for k, v in self._entries.items()})

    def relabel(self, k: int) -> FinVec:
        """Move every entry from index j to j + k; entries landing below 1 are an error."""
        if self._entries and next(iter(self._entries)) + k < 1:
            raise IndexError(f"relabelling by {k} pushes the support below e_1")
        return FinVec({j + k: v for j, v in self._entries.items()})

    def restrict_above(self, k: int) -> FinVec:
        """Drop the components on e_1..e_k."""
        return FinVec({j: v for j, v in self._entries.items() if j > k})

    # value semantics

    def __eq__(self, other):
        if not isinstance(other, FinVec):
            return NotImplemented
        return self._entries == other._entries

    def __hash__(self):
        if self._hash is None:
            self._hash = hash(tuple(self._entries.items()))
        return self._hash

    def __repr__(self):
        if not self._entries:
            return "FinVec(0)"
        body = " + ".join(f"({v:.6g})e_{k}" for k, v in self._entries.items())
        return f"FinVec({body})"

    def to_json(self) -> dict:
        return {"entries": [[k, v.real, v.imag] for k, v in self._entries.items()]}

    @classmethod
    def from_json(cls, obj: Mapping) -> FinVec:
        rows = obj["entries"]
        idx = [int(r[0]) for r in rows]
        if idx != sorted(set(idx)):
            raise ValueError("FinVec JSON indices must be strictly ascending")
        return cls((int(i), complex(re, im)) for i, re, im in rows)


def inner_product(x: FinVec, y: FinVec) -> complex:
    """sum_k x_k conj(y_k): linear in x, conjugate-linear in y."""
    a, b = x.entries, y.entries
    if len(a) > len(b):
        return sum((a[k] * v.conjugate() for k, v in b.items() if k in a), 0j)
    return sum((v * b[k].conjugate() for k, v in a.items() if k in b), 0j)


def norm(x: FinVec) -> float:
    return math.sqrt(sum(abs(v) ** 2 for v in x.entries.values()))


def dist_to_filtration(x: FinVec, i: int) -> float:
    """Distance from x to H_i, i.e. the norm of the tail of x beyond e_i."""
    if i < 0:
        raise ValueError("filtration index must be >= 0")
    return math.sqrt(sum(abs(v) ** 2 for k, v in x.entries.items() if k > i))


def normalize(x: FinVec) -> FinVec:
    n = norm(x)
    if n == 0.0:
        raise ZeroDivisionError("cannot normalize the zero vector")
    return x / n


def gram_schmidt(vs: Iterable[FinVec], tol: float = TOL) -> list[FinVec]:
    """Orthonormalize ``vs`` in order (modified Gram-Schmidt, two passes).

    Raises DependentInput when a residual has norm below ``tol``.
    """
    out: list[FinVec] = []
    for n, v in enumerate(vs):
        r = v
        for _ in range(2):
            for q in out:
                r = r - inner_product(r, q) * q
        nr = norm(r)
        if nr < tol:
            raise DependentInput(f"vector {n} is dependent on its predecessors (residual {nr:.3e})")
        out.append(r / nr)
    return out
