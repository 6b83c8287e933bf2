"""Truncated multivariate Taylor arithmetic (jets).

A jet stores the Taylor coefficients f_alpha = D^alpha f(x0) / alpha! of a
scalar field around a base point, for every multi-index alpha of degree at
most the truncation order. Propagating jets through arithmetic and the
elementary functions yields partial derivatives that are exact to rounding,
which is what the curvature computations downstream rely on: metrics need
second derivatives of the potential, curvature needs fourth.

Jets are immutable; every operation returns a new jet. Mixing jets with
plain numbers promotes the number to a constant jet.
"""

from __future__ import annotations

import math
from functools import lru_cache
from typing import Iterator, Sequence

import numpy as np

from .errors import DomainError

MAX_VARS = 8
DEFAULT_ORDER = 4

MultiIndex = tuple[int, ...]


def _gen_indices(nvars: int, order: int) -> Iterator[MultiIndex]:
    if nvars == 0:
        yield ()
        return
    for d in range(order + 1):
        for rest in _gen_indices(nvars - 1, order - d):
            yield (d,) + rest


@lru_cache(maxsize=None)
def _index_table(nvars: int, order: int) -> tuple[tuple[MultiIndex, ...], dict[MultiIndex, int]]:
    """Multi-indices of degree <= order in graded lexicographic order.

    The grading makes truncation a prefix operation: indices of degree <= m
    occupy the first `len(_index_table(nvars, m)[0])` slots.
    """
    indices = sorted(_gen_indices(nvars, order), key=lambda a: (sum(a), a))
    return tuple(indices), {a: i for i, a in enumerate(indices)}


@lru_cache(maxsize=None)
def _mul_table(nvars: int, order: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Index triplets (i, j, k) with alpha_i + alpha_j = alpha_k, degree <= order."""
    indices, pos = _index_table(nvars, order)
    ii, jj, kk = [], [], []
    for i, a in enumerate(indices):
        da = sum(a)
        for j, b in enumerate(indices):
            if da + sum(b) > order:
                continue
            ii.append(i)
            jj.append(j)
            kk.append(pos[tuple(x + y for x, y in zip(a, b))])
    return np.array(ii), np.array(jj), np.array(kk)


def _validate_shape(nvars: int, order: int) -> None:
    if not 1 <= nvars <= MAX_VARS:
        raise ValueError(f"nvars must be in [1, {MAX_VARS}], got {nvars}")
    if order < 0:
        raise ValueError(f"order must be non-negative, got {order}")


class Jet:
    """A scalar field truncated to its Taylor polynomial at a point.

    `coeffs[i]` holds f_alpha for the multi-index at slot i of the graded
    table for (nvars, order).
    """

    __slots__ = ("nvars", "order", "coeffs")

    def __init__(self, nvars: int, order: int, coeffs: Sequence[float] | np.ndarray):
        _validate_shape(nvars, order)
        indices, _ = _index_table(nvars, order)
        arr = np.array(coeffs, dtype=float)
        if arr.shape != (len(indices),):
            raise ValueError(
                f"expected {len(indices)} coefficients for nvars={nvars}, order={order}, "
                f"got shape {arr.shape}"
            )
        arr.flags.writeable = False
        object.__setattr__(self, "nvars", nvars)
        object.__setattr__(self, "order", order)
        object.__setattr__(self, "coeffs", arr)

    def __setattr__(self, name, value):
        raise AttributeError("Jet is immutable")

    @property
    def value(self) -> float:
        """Value of the field at the base point (the constant coefficient)."""
        return float(self.coeffs[0])

    @property
    def gradient(self) -> np.ndarray:
        """First partials at the base point, one per variable."""
        if self.order < 1:
            raise ValueError("gradient requires order >= 1")
        _, pos = _index_table(self.nvars, self.order)
        return np.array([self.coeffs[pos[_unit(self.nvars, v)]] for v in range(self.nvars)])

    def __repr__(self) -> str:
        return f"Jet(nvars={self.nvars}, order={self.order}, value={self.value!r})"

    # -- arithmetic ----------------------------------------------------------

    def _coerce(self, other) -> "Jet | None":
        if isinstance(other, Jet):
            if (other.nvars, other.order) != (self.nvars, self.order):
                raise ValueError(
                    f"jet shape mismatch: ({self.nvars}, {self.order}) vs "
                    f"({other.nvars}, {other.order})"
                )
            return other
        if isinstance(other, (int, float)):
            return constant(float(other), self.nvars, self.order)
        return None

    def __add__(self, other):
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        return Jet(self.nvars, self.order, self.coeffs + other.coeffs)

    __radd__ = __add__

    def __sub__(self, other):
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        return Jet(self.nvars, self.order, self.coeffs - other.coeffs)

    def __rsub__(self, other):
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        return Jet(self.nvars, self.order, other.coeffs - self.coeffs)

    def __neg__(self):
        return Jet(self.nvars, self.order, -self.coeffs)

    def __mul__(self, other):
        if isinstance(other, (int, float)):
            return Jet(self.nvars, self.order, self.coeffs * float(other))
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        ii, jj, kk = _mul_table(self.nvars, self.order)
        out = np.zeros_like(self.coeffs)
        np.add.at(out, kk, self.coeffs[ii] * other.coeffs[jj])
        return Jet(self.nvars, self.order, out)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, (int, float)):
            if other == 0:
                raise DomainError("division by zero")
            return Jet(self.nvars, self.order, self.coeffs / float(other))
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        return self * _reciprocal(other)

    def __rtruediv__(self, other):
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        return other * _reciprocal(self)

    def __pow__(self, exponent):
        if isinstance(exponent, (int, float)):
            return power(self, exponent)
        return NotImplemented


def constant(value: float, nvars: int, order: int = DEFAULT_ORDER) -> Jet:
    """Embed a number as a jet with all non-constant coefficients zero."""
    indices, _ = _index_table(nvars, order)
    coeffs = np.zeros(len(indices))
    coeffs[0] = value
    return Jet(nvars, order, coeffs)


def seed_variable(index: int, value: float, nvars: int, order: int = DEFAULT_ORDER) -> Jet:
    """Jet of the coordinate function x_index around x_index = value."""
    _validate_shape(nvars, order)
    if not 0 <= index < nvars:
        raise ValueError(f"variable index {index} out of range for nvars={nvars}")
    indices, pos = _index_table(nvars, order)
    coeffs = np.zeros(len(indices))
    coeffs[0] = value
    if order >= 1:
        coeffs[pos[_unit(nvars, index)]] = 1.0
    return Jet(nvars, order, coeffs)


def seed_point(values: Sequence[float], order: int = DEFAULT_ORDER) -> list[Jet]:
    """Seed every coordinate of a point at once."""
    n = len(values)
    return [seed_variable(i, float(v), n, order) for i, v in enumerate(values)]


def _unit(nvars: int, index: int) -> MultiIndex:
    return tuple(1 if i == index else 0 for i in range(nvars))


def extract_partial(jet: Jet, alpha: MultiIndex) -> float:
    """Exact partial derivative D^alpha f at the base point.

    Recovers alpha! * f_alpha; degree(alpha) must not exceed the truncation
    order carried by the jet.
    """
    alpha = tuple(int(a) for a in alpha)
    if len(alpha) != jet.nvars or any(a < 0 for a in alpha):
        raise ValueError(f"bad multi-index {alpha} for nvars={jet.nvars}")
    if sum(alpha) > jet.order:
        raise ValueError(
            f"derivative order {sum(alpha)} exceeds truncation order {jet.order}"
        )
    _, pos = _index_table(jet.nvars, jet.order)
    fact = 1.0
    for a in alpha:
        fact *= math.factorial(a)
    return float(jet.coeffs[pos[alpha]] * fact)


def truncate(jet: Jet, order: int) -> Jet:
    """Drop coefficients above `order` (a prefix slice in the graded table)."""
    if order > jet.order:
        raise ValueError(f"cannot extend order {jet.order} to {order}")
    indices, _ = _index_table(jet.nvars, order)
    return Jet(jet.nvars, order, jet.coeffs[: len(indices)])


def derive(jet: Jet, alpha: MultiIndex) -> Jet:
    """Jet of the derivative field D^alpha f, truncated to order - |alpha|.

    The coefficient of beta in D^alpha f is f_{beta+alpha} * (beta+alpha)!/beta!,
    which is how metric components stay differentiable after being built from
    Hessian entries of the potential.
    """
    alpha = tuple(int(a) for a in alpha)
    dorder = sum(alpha)
    if dorder > jet.order:
        raise ValueError(f"cannot take order-{dorder} derivative of order-{jet.order} jet")
    new_order = jet.order - dorder
    src_indices, src_pos = _index_table(jet.nvars, jet.order)
    dst_indices, _ = _index_table(jet.nvars, new_order)
    out = np.empty(len(dst_indices))
    for i, beta in enumerate(dst_indices):
        gamma = tuple(b + a for b, a in zip(beta, alpha))
        scale = 1.0
        for b, a in zip(beta, alpha):
            # (b+a)! / b! without large intermediates
            for m in range(b + 1, b + a + 1):
                scale *= m
        out[i] = jet.coeffs[src_pos[gamma]] * scale
    return Jet(jet.nvars, new_order, out)


# -- elementary functions ------------------------------------------------------
#
# Each is a composition f(a) = sum_m c_m (a - a0)^m with c_m the univariate
# Taylor coefficients of f at the constant term a0. Since (a - a0) has zero
# constant term, the Horner evaluation truncates itself.


def _compose(jet: Jet, series: Sequence[float]) -> Jet:
    h = jet - jet.value
    out = constant(series[jet.order], jet.nvars, jet.order)
    for m in range(jet.order - 1, -1, -1):
        out = out * h + series[m]
    return out


def _reciprocal(jet: Jet) -> Jet:
    a0 = jet.value
    if a0 == 0.0:
        raise DomainError("division by a jet with zero constant term")
    series = [(-1.0) ** m / a0 ** (m + 1) for m in range(jet.order + 1)]
    return _compose(jet, series)


def exp(jet: Jet) -> Jet:
    e0 = math.exp(jet.value)
    series = [e0 / math.factorial(m) for m in range(jet.order + 1)]
    return _compose(jet, series)


def ln(jet: Jet) -> Jet:
    a0 = jet.value
    if a0 <= 0.0:
        raise DomainError(f"ln of non-positive value {a0}")
    series = [math.log(a0)]
    series += [(-1.0) ** (m + 1) / (m * a0**m) for m in range(1, jet.order + 1)]
    return _compose(jet, series)


def power(jet: Jet, r: float) -> Jet:
    """jet**r; consistent with exp(r * ln(jet)) on the shared domain.

    Integer exponents work for any nonzero constant term (any value when
    r >= 0); fractional exponents require a positive constant term.
    """
    if isinstance(r, float) and r.is_integer():
        r = int(r)
    if isinstance(r, int):
        if r < 0:
            return _int_power(_reciprocal(jet), -r)
        return _int_power(jet, r)
    a0 = jet.value
    if a0 <= 0.0:
        raise DomainError(f"fractional power of non-positive value {a0}")
    series = []
    binom = 1.0
    for m in range(jet.order + 1):
        series.append(binom * a0 ** (r - m))
        binom *= (r - m) / (m + 1)
    return _compose(jet, series)


def _int_power(jet: Jet, r: int) -> Jet:
    out = constant(1.0, jet.nvars, jet.order)
    base = jet
    while r:
        if r & 1:
            out = out * base
        r >>= 1
        if r:
            base = base * base
    return out


def sqrt(jet: Jet) -> Jet:
    return power(jet, 0.5)


def sin(jet: Jet) -> Jet:
    a0 = jet.value
    series = [math.sin(a0 + m * math.pi / 2.0) / math.factorial(m) for m in range(jet.order + 1)]
    return _compose(jet, series)


def cos(jet: Jet) -> Jet:
    a0 = jet.value
    series = [math.cos(a0 + m * math.pi / 2.0) / math.factorial(m) for m in range(jet.order + 1)]
    return _compose(jet, series)


def add(a: Jet, b: Jet) -> Jet:
    return a + b


def sub(a: Jet, b: Jet) -> Jet:
    return a - b


def mul(a: Jet, b: Jet) -> Jet:
    return a * b


def div(a: Jet, b: Jet) -> Jet:
    return a / b
