"""A contraction of the unit sphere of l2 onto e_1.

Two phases over the global parameter t in [0, 1]:

* t in [0, 1/2]: slide x to its shift S x along normalize((1-2t) x + 2t S x);
* t in [1/2, 1]: swing S x to e_1 along normalize((2-2t) S x + (2t-1) e_1).

Phase 2 is safe because S x is orthogonal to e_1.  Phase 1 never vanishes for
finitely supported x: if m is the top of the support, the unnormalized vector
has the entry 2t x_m at index m + 1.
"""

from __future__ import annotations

from .errors import DegeneratePath, NotInComplement
from .hilbert import TOL, FinVec, norm

PHASE1_FLOOR = 1e-12
ILL_CONDITIONED = 1e-6


def _check_unit(x: FinVec):
    if abs(norm(x) - 1.0) > TOL:
        raise ValueError(f"expected a unit vector, got norm {norm(x):.12g}")


def _check_t(t: float):
    if not 0.0 <= t <= 1.0:
        raise ValueError(f"t must lie in [0, 1], got {t!r}")


def shift(x: FinVec) -> FinVec:
    return x.relabel(1)


def phase1_vector(x: FinVec, t: float) -> FinVec:
    """The unnormalized phase-1 point (1-2t) x + 2t S x."""
    return (1.0 - 2.0 * t) * x + (2.0 * t) * shift(x)


def phase1_lower_bound(x: FinVec, t: float) -> float:
    """2t |x_m| with m the top support index; bounds |phase1_vector| from below."""
    return 2.0 * t * abs(x[x.top])


def contract_point(x: FinVec, t: float) -> FinVec:
    _check_unit(x)
    _check_t(t)
    if t == 0.0:
        return x
    if t <= 0.5:
        v = phase1_vector(x, t)
        n = norm(v)
        if n < PHASE1_FLOOR:
            raise DegeneratePath(f"phase-1 denominator {n:.3e} at t={t!r}")
        return v / n
    if t == 1.0:
        return FinVec.basis(1)
    v = (2.0 - 2.0 * t) * shift(x) + (2.0 * t - 1.0) * FinVec.basis(1)
    return v / norm(v)


def contract_point_relative(x: FinVec, t: float, fixed: int) -> FinVec:
    """The same contraction run inside the complement of e_1..e_fixed, ending at e_{fixed+1}."""
    if fixed < 0:
        raise ValueError("fixed must be >= 0")
    head = sum(abs(x[j]) ** 2 for j in range(1, fixed + 1)) ** 0.5
    if head > TOL:
        raise NotInComplement(f"vector has weight {head:.3e} on e_1..e_{fixed}")
    y = x.restrict_above(fixed).relabel(-fixed) if fixed else x
    return contract_point(y, t).relabel(fixed)


def phase1_conditioning(x: FinVec, samples: int = 257) -> float:
    """Smallest sampled phase-1 denominator; below ILL_CONDITIONED the path is steep."""
    return min(norm(phase1_vector(x, 0.5 * k / (samples - 1))) for k in range(samples))
