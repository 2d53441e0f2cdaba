"""
Truncated multivariate Taylor arithmetic (jets) and a finite-difference oracle.

A jet stores, for every multi-index alpha of total degree <= K, the Taylor
coefficient c_alpha of a function around a point, so that

    f(p + h) = sum_alpha c_alpha h^alpha + O(|h|^(K+1)).

Coefficients live in a dense array ordered graded-lexicographically. The
trailing axis of ``Jet.coeffs`` runs over monomials; any leading axes are batch
or tensor axes that broadcast like numpy arrays, so one Jet can hold a whole
matrix of jets or a batch of points.
"""

from __future__ import annotations

import itertools
import math
from collections.abc import Callable, Iterable, Sequence
from functools import lru_cache
from typing import Any

import numpy as np

from .errors import DomainError, OrderError

DOMAIN_THRESHOLD = 1e-12

MultiIndex = tuple[int, ...]


class JetEngine:
    """Monomial bookkeeping for jets in ``nvars`` variables up to total order ``order``."""

    def __init__(self, nvars: int, order: int):
        if nvars < 1 or order < 0:
            raise ValueError(f"invalid jet engine ({nvars} variables, order {order})")
        self.nvars = nvars
        self.order = order

        monomials: list[MultiIndex] = []
        for degree in range(order + 1):
            for combo in itertools.combinations_with_replacement(range(nvars), degree):
                exponents = [0] * nvars
                for var in combo:
                    exponents[var] += 1
                monomials.append(tuple(exponents))
        self.monomials = monomials
        self.index = {mono: i for i, mono in enumerate(monomials)}
        self.size = len(monomials)
        self.degrees = np.array([sum(m) for m in monomials])
        self.factorials = np.array(
            [math.prod(math.factorial(e) for e in m) for m in monomials], dtype=float
        )

        # Product tables: for output alpha, all (beta, alpha - beta) pairs.
        left: list[int] = []
        right: list[int] = []
        starts: list[int] = []
        for mono in monomials:
            starts.append(len(left))
            for beta in itertools.product(*(range(e + 1) for e in mono)):
                gamma = tuple(a - b for a, b in zip(mono, beta, strict=True))
                left.append(self.index[beta])
                right.append(self.index[gamma])
        self._left = np.array(left)
        self._right = np.array(right)
        self._starts = np.array(starts)

        # Derivative tables: d/du_v maps coefficient of beta + e_v to beta.
        self._diff_source: list[np.ndarray] = []
        self._diff_target: list[np.ndarray] = []
        self._diff_scale: list[np.ndarray] = []
        for var in range(nvars):
            source, target, scale = [], [], []
            for i, mono in enumerate(monomials):
                if sum(mono) >= order:
                    continue
                raised = list(mono)
                raised[var] += 1
                source.append(self.index[tuple(raised)])
                target.append(i)
                scale.append(mono[var] + 1)
            self._diff_source.append(np.array(source, dtype=int))
            self._diff_target.append(np.array(target, dtype=int))
            self._diff_scale.append(np.array(scale, dtype=float))

    def __repr__(self) -> str:
        return f"JetEngine(nvars={self.nvars}, order={self.order})"

    def mask(self, order: int) -> np.ndarray:
        return self.degrees <= order

    def multiply(self, a: np.ndarray, b: np.ndarray, order: int) -> np.ndarray:
        products = a[..., self._left] * b[..., self._right]
        out = np.add.reduceat(products, self._starts, axis=-1)
        if order < self.order:
            out = out * self.mask(order)
        return out

    def unit(self, var: int) -> int:
        exponents = [0] * self.nvars
        exponents[var] = 1
        return self.index[tuple(exponents)]


@lru_cache(maxsize=32)
def get_engine(nvars: int, order: int) -> JetEngine:
    """Shared engine for (nvars, order); building the tables is the expensive part."""
    return JetEngine(nvars, order)


class Jet:
    """
    Immutable truncated Taylor expansion.

    Attributes:
        engine: Monomial tables shared by all jets of the same shape
        coeffs: Array of shape (*shape, engine.size)
        order: Effective order; coefficients above it are zero
    """

    __slots__ = ("engine", "coeffs", "order")
    __array_ufunc__ = None  # ndarray op Jet defers to Jet's reflected operators

    def __init__(self, engine: JetEngine, coeffs: np.ndarray, order: int | None = None):
        self.engine = engine
        self.coeffs = np.asarray(coeffs, dtype=float)
        self.order = engine.order if order is None else order
        if self.coeffs.shape[-1:] != (engine.size,):
            raise ValueError(
                f"coefficient axis has length {self.coeffs.shape[-1:]}, expected {engine.size}"
            )

    # -- construction helpers ---------------------------------------------------------

    @classmethod
    def constant(cls, engine: JetEngine, value: Any, order: int | None = None) -> Jet:
        value = np.asarray(value, dtype=float)
        coeffs = np.zeros(value.shape + (engine.size,))
        coeffs[..., 0] = value
        return cls(engine, coeffs, order)

    def _coerce(self, other: Any) -> tuple[np.ndarray, int]:
        if isinstance(other, Jet):
            if other.engine is not self.engine:
                raise ValueError(f"cannot combine jets of {self.engine} and {other.engine}")
            return other.coeffs, other.order
        value = np.asarray(other, dtype=float)
        coeffs = np.zeros(value.shape + (self.engine.size,))
        coeffs[..., 0] = value
        return coeffs, self.engine.order

    # -- properties -------------------------------------------------------------------

    @property
    def shape(self) -> tuple[int, ...]:
        return self.coeffs.shape[:-1]

    @property
    def ndim(self) -> int:
        return self.coeffs.ndim - 1

    @property
    def value(self) -> np.ndarray:
        return self.coeffs[..., 0]

    def __repr__(self) -> str:
        return f"Jet(shape={self.shape}, nvars={self.engine.nvars}, order={self.order})"

    # -- arithmetic -------------------------------------------------------------------

    def __neg__(self) -> Jet:
        return Jet(self.engine, -self.coeffs, self.order)

    def __pos__(self) -> Jet:
        return self

    def __add__(self, other: Any) -> Jet:
        coeffs, order = self._coerce(other)
        order = min(order, self.order)
        out = self.coeffs + coeffs
        if order < self.engine.order:
            out = out * self.engine.mask(order)
        return Jet(self.engine, out, order)

    __radd__ = __add__

    def __sub__(self, other: Any) -> Jet:
        return self + (-other if isinstance(other, Jet) else -np.asarray(other, dtype=float))

    def __rsub__(self, other: Any) -> Jet:
        return (-self) + other

    def __mul__(self, other: Any) -> Jet:
        if isinstance(other, Jet):
            coeffs, order = self._coerce(other)
            order = min(order, self.order)
            return Jet(self.engine, self.engine.multiply(self.coeffs, coeffs, order), order)
        scale = np.asarray(other, dtype=float)
        return Jet(self.engine, self.coeffs * scale[..., None], self.order)

    __rmul__ = __mul__

    def __truediv__(self, other: Any) -> Jet:
        if isinstance(other, Jet):
            return self * reciprocal(other)
        divisor = np.asarray(other, dtype=float)
        if np.any(np.abs(divisor) <= DOMAIN_THRESHOLD):
            raise DomainError("division by a value below 1e-12")
        return self * (1.0 / divisor)

    def __rtruediv__(self, other: Any) -> Jet:
        return reciprocal(self) * other

    def __pow__(self, exponent: float) -> Jet:
        return power(self, exponent)

    # -- tensor plumbing --------------------------------------------------------------

    def __getitem__(self, key: Any) -> Jet:
        if not isinstance(key, tuple):
            key = (key,)
        if any(k is Ellipsis for k in key):
            key = key + (slice(None),)
        else:
            key = key + (Ellipsis, slice(None))
        return Jet(self.engine, self.coeffs[key], self.order)

    def __len__(self) -> int:
        return self.shape[0]

    def _axis(self, axis: int) -> int:
        return axis - 1 if axis < 0 else axis

    def sum(self, axis: int | None = None) -> Jet:
        if axis is None:
            coeffs = self.coeffs.reshape(-1, self.engine.size).sum(axis=0)
        else:
            coeffs = self.coeffs.sum(axis=self._axis(axis))
        return Jet(self.engine, coeffs, self.order)

    def swapaxes(self, a: int, b: int) -> Jet:
        return Jet(self.engine, np.swapaxes(self.coeffs, self._axis(a), self._axis(b)), self.order)

    def trace(self) -> Jet:
        """Trace over the last two tensor axes."""
        return Jet(self.engine, np.trace(self.coeffs, axis1=-3, axis2=-2), self.order)

    def reshape(self, *shape: int) -> Jet:
        return Jet(self.engine, self.coeffs.reshape(*shape, self.engine.size), self.order)

    # -- differentiation --------------------------------------------------------------

    def diff(self, var: int) -> Jet:
        """Exact derivative in variable ``var``; the result carries one order less."""
        if self.order == 0:
            raise OrderError("cannot differentiate a jet of order 0")
        engine = self.engine
        out = np.zeros_like(self.coeffs)
        out[..., engine._diff_target[var]] = (
            self.coeffs[..., engine._diff_source[var]] * engine._diff_scale[var]
        )
        order = self.order - 1
        if order < engine.order - 1:
            out = out * engine.mask(order)
        return Jet(engine, out, order)

    def partial(self, idx: Sequence[int]) -> np.ndarray:
        """Mixed partial derivative: Taylor coefficient times prod(idx_v!)."""
        idx = tuple(int(i) for i in idx)
        if len(idx) != self.engine.nvars or any(i < 0 for i in idx):
            raise ValueError(f"multi-index {idx} does not fit {self.engine.nvars} variables")
        if sum(idx) > self.order:
            raise OrderError(f"multi-index {idx} has degree {sum(idx)} > order {self.order}")
        position = self.engine.index[idx]
        return self.coeffs[..., position] * self.engine.factorials[position]


# -----------------------------------------------------------------------------
# Construction
# -----------------------------------------------------------------------------


def lift(point: Any, varindex: int, order: int) -> Jet:
    """
    Jet of the coordinate function u -> u[varindex] at ``point``.

    Args:
        point: Coordinates, shape (nvars,) or (*batch, nvars)
        varindex: Variable to lift
        order: Truncation order K

    Returns:
        Jet with value point[varindex] and unit first derivative in that slot
    """
    point = np.asarray(point, dtype=float)
    nvars = point.shape[-1]
    if not 0 <= varindex < nvars:
        raise ValueError(f"variable index {varindex} outside 0..{nvars - 1}")
    engine = get_engine(nvars, order)
    coeffs = np.zeros(point.shape[:-1] + (engine.size,))
    coeffs[..., 0] = point[..., varindex]
    if order > 0:
        coeffs[..., engine.unit(varindex)] = 1.0
    return Jet(engine, coeffs)


def variables(point: Any, order: int) -> Jet:
    """All coordinate jets at once, as a Jet of shape (*batch, nvars)."""
    point = np.asarray(point, dtype=float)
    nvars = point.shape[-1]
    engine = get_engine(nvars, order)
    coeffs = np.zeros(point.shape + (engine.size,))
    coeffs[..., 0] = point
    if order > 0:
        for var in range(nvars):
            coeffs[..., var, engine.unit(var)] = 1.0
    return Jet(engine, coeffs)


def stack(items: Iterable[Any], axis: int = 0, engine: JetEngine | None = None) -> Jet:
    """
    Stack jets (plain numbers allowed) along a new tensor axis.

    ``engine`` is required only when every item is a plain number.
    """
    items = list(items)
    if engine is None:
        engine = next((item.engine for item in items if isinstance(item, Jet)), None)
    if engine is None:
        raise ValueError("stack of plain numbers needs an engine")
    jets = [item if isinstance(item, Jet) else Jet.constant(engine, item) for item in items]
    order = min(j.order for j in jets)
    coeffs = np.broadcast_arrays(*(j.coeffs for j in jets))
    axis = axis - 1 if axis < 0 else axis
    return Jet(engine, np.stack(coeffs, axis=axis), order)


# -----------------------------------------------------------------------------
# Elementary functions
# -----------------------------------------------------------------------------


def _compose(a: Jet, taylor: Sequence[np.ndarray]) -> Jet:
    """Evaluate sum_k taylor[k] * (a - a0)^k by Horner's rule."""
    h = Jet(a.engine, a.coeffs.copy(), a.order)
    h.coeffs[..., 0] = 0.0
    result = Jet.constant(a.engine, taylor[-1], a.order)
    for coefficient in reversed(taylor[:-1]):
        result = result * h + coefficient
    if not np.all(np.isfinite(result.coeffs)):
        raise DomainError("non-finite jet coefficients")
    return result


def _require_positive(a0: np.ndarray, name: str) -> None:
    if np.any(a0 <= DOMAIN_THRESHOLD):
        raise DomainError(f"{name} of a value below 1e-12 (min {np.min(a0):.3e})")


def reciprocal(a: Jet) -> Jet:
    a0 = a.value
    if np.any(np.abs(a0) <= DOMAIN_THRESHOLD):
        raise DomainError("division by a value below 1e-12")
    taylor = [(-1.0) ** k / a0 ** (k + 1) for k in range(a.order + 1)]
    return _compose(a, taylor)


def _int_power(a: Jet, exponent: int) -> Jet:
    result = Jet.constant(a.engine, np.ones(a.shape), a.order)
    base = a
    while exponent:
        if exponent & 1:
            result = result * base
        exponent >>= 1
        if exponent:
            base = base * base
    return result


def power(a: Any, exponent: float) -> Any:
    """a ** exponent; integer exponents are exact, others need a > 0."""
    if not isinstance(a, Jet):
        return np.power(np.asarray(a, dtype=float), exponent)
    if float(exponent).is_integer():
        k = int(exponent)
        if k >= 0:
            return _int_power(a, k)
        return reciprocal(_int_power(a, -k))
    a0 = a.value
    _require_positive(a0, "non-integer power")
    taylor = [a0**exponent]
    for k in range(1, a.order + 1):
        taylor.append(taylor[-1] * (exponent - k + 1) / (k * a0))
    return _compose(a, taylor)


def sqrt(a: Any) -> Any:
    if not isinstance(a, Jet):
        a = np.asarray(a, dtype=float)
        if np.any(a < 0):
            raise DomainError("square root of a negative value")
        return np.sqrt(a)
    _require_positive(a.value, "square root")
    return power(a, 0.5)


def exp(a: Any) -> Any:
    if not isinstance(a, Jet):
        return np.exp(np.asarray(a, dtype=float))
    e0 = np.exp(a.value)
    taylor = [e0 / math.factorial(k) for k in range(a.order + 1)]
    return _compose(a, taylor)


def _trig(a: Jet, shift: float) -> Jet:
    # k-th derivative of sin(u + shift) is sin(u + shift + k pi / 2)
    taylor = [
        np.sin(a.value + shift + k * np.pi / 2) / math.factorial(k) for k in range(a.order + 1)
    ]
    return _compose(a, taylor)


def sin(a: Any) -> Any:
    if not isinstance(a, Jet):
        return np.sin(np.asarray(a, dtype=float))
    return _trig(a, 0.0)


def cos(a: Any) -> Any:
    if not isinstance(a, Jet):
        return np.cos(np.asarray(a, dtype=float))
    return _trig(a, np.pi / 2)


def log(a: Any) -> Any:
    if not isinstance(a, Jet):
        a = np.asarray(a, dtype=float)
        if np.any(a <= 0):
            raise DomainError("logarithm of a nonpositive value")
        return np.log(a)
    a0 = a.value
    _require_positive(a0, "logarithm")
    taylor = [np.log(a0)]
    for k in range(1, a.order + 1):
        taylor.append((-1.0) ** (k + 1) / (k * a0**k))
    return _compose(a, taylor)


# -----------------------------------------------------------------------------
# Linear algebra on jet-valued matrices
# -----------------------------------------------------------------------------


def matmul(a: Any, b: Any) -> Any:
    """Matrix product over the last two axes; either operand may be a plain array."""
    if isinstance(a, Jet):
        left = a[..., :, :, None]
    else:
        left = np.asarray(a, dtype=float)[..., :, :, None]
    if isinstance(b, Jet):
        right = b[..., None, :, :]
    else:
        right = np.asarray(b, dtype=float)[..., None, :, :]
    return (left * right).sum(axis=-2)


def _split(g: Jet) -> tuple[np.ndarray, Jet]:
    perturbation = Jet(g.engine, g.coeffs.copy(), g.order)
    perturbation.coeffs[..., 0] = 0.0
    return g.value, perturbation


def inv(g: Jet) -> Jet:
    """Inverse of a jet-valued matrix by the (nilpotent) Neumann series about g0."""
    g0, perturbation = _split(g)
    inv0 = np.linalg.inv(g0)
    step = -matmul(inv0, perturbation)
    term = Jet.constant(g.engine, inv0, g.order)
    result = term
    for _ in range(g.order):
        term = matmul(step, term)
        result = result + term
    return result


def logdet(g: Jet) -> Jet:
    """ln det of a jet-valued matrix; DomainError unless det g0 > 0."""
    g0, perturbation = _split(g)
    sign, base = np.linalg.slogdet(g0)
    if np.any(sign <= 0):
        raise DomainError("log-determinant of a matrix with nonpositive determinant")
    m = matmul(np.linalg.inv(g0), perturbation)
    result = Jet.constant(g.engine, base, g.order)
    power_k = m
    for k in range(1, g.order + 1):
        result = result + power_k.trace() * ((-1.0) ** (k + 1) / k)
        if k < g.order:
            power_k = matmul(power_k, m)
    return result


# -----------------------------------------------------------------------------
# Moving jets between engines
# -----------------------------------------------------------------------------


@lru_cache(maxsize=64)
def _recast_tables(
    source: JetEngine, target: JetEngine, var_map: tuple[int | None, ...]
) -> tuple[np.ndarray, np.ndarray]:
    src, dst = [], []
    for i, mono in enumerate(source.monomials):
        exponents = [0] * target.nvars
        dropped = False
        for var, e in enumerate(mono):
            if e == 0:
                continue
            if var_map[var] is None:
                dropped = True
                break
            exponents[var_map[var]] += e
        if dropped or sum(exponents) > target.order:
            continue
        src.append(i)
        dst.append(target.index[tuple(exponents)])
    return np.array(src, dtype=int), np.array(dst, dtype=int)


def recast(jet: Jet, engine: JetEngine, var_map: Sequence[int | None]) -> Jet:
    """
    Re-express a jet in another engine.

    ``var_map[v]`` is the target variable of source variable v, or None to set
    that variable to its base value (its monomials are dropped).
    """
    var_map = tuple(var_map)
    if len(var_map) != jet.engine.nvars:
        raise ValueError("var_map must name a target for every source variable")
    src, dst = _recast_tables(jet.engine, engine, var_map)
    coeffs = np.zeros(jet.shape + (engine.size,))
    coeffs[..., dst] = jet.coeffs[..., src]
    order = min(jet.order, engine.order)
    if order < engine.order:
        coeffs = coeffs * engine.mask(order)
    return Jet(engine, coeffs, order)


# -----------------------------------------------------------------------------
# Finite-difference oracle
# -----------------------------------------------------------------------------


def _stencil(idx: Sequence[int], step: float) -> list[tuple[np.ndarray, float]]:
    per_variable = []
    for a in idx:
        per_variable.append(
            [((a / 2 - k) * step, (-1.0) ** k * math.comb(a, k) / step**a) for k in range(a + 1)]
        )
    stencil = []
    for combo in itertools.product(*per_variable):
        offset = np.array([c[0] for c in combo])
        weight = math.prod(c[1] for c in combo)
        stencil.append((offset, weight))
    return stencil


def _richardson(estimates: Sequence[Any]) -> np.ndarray:
    """Repeated Richardson extrapolation of central differences at steps h, h/2, h/4, ..."""
    table = [np.asarray(e, dtype=float) for e in estimates]
    for level in range(1, len(table)):
        factor = 4.0**level
        table = [
            (factor * fine - coarse) / (factor - 1.0) for coarse, fine in itertools.pairwise(table)
        ]
    return table[0]


def fd_oracle(
    f: Callable[[np.ndarray], Any],
    point: Any,
    idx: Sequence[int],
    step: float = 1e-3,
    levels: int = 1,
) -> Any:
    """
    Central-difference estimate of a mixed partial with Richardson extrapolation.

    Args:
        f: Smooth function of a coordinate vector; may return an array
        point: Base point
        idx: Multi-index of the derivative
        step: Base step; the extrapolation also uses step / 2, step / 4, ...
        levels: Richardson levels (one by default)

    Returns:
        Estimate of the partial (f(point) itself for the zero index)
    """
    point = np.asarray(point, dtype=float)
    if sum(idx) == 0:
        return np.asarray(f(point), dtype=float)

    def central(h: float) -> np.ndarray:
        total = 0.0
        for offset, weight in _stencil(idx, h):
            total = total + weight * np.asarray(f(point + offset), dtype=float)
        return np.asarray(total)

    return _richardson([central(step / 2**k) for k in range(levels + 1)])


def fd_partials(
    f: Callable[[np.ndarray], Any],
    point: Any,
    indices: Sequence[Sequence[int]],
    step: float = 1e-3,
    levels: int = 1,
) -> list[np.ndarray]:
    """
    Several mixed partials from a single call of ``f``.

    The shifted points of every stencil are stacked on a new leading axis, so
    ``f`` must broadcast over leading axes. Shared offsets are evaluated once.

    Args:
        f: Smooth function of coordinates (..., nvars)
        point: Base point(s), shape (..., nvars)
        indices: Multi-indices of the wanted partials
        step: Base step
        levels: Richardson levels

    Returns:
        One estimate per multi-index, in order
    """
    point = np.asarray(point, dtype=float)
    rows: dict[tuple[float, ...], int] = {}
    plans: list[list[list[tuple[int, float]]]] = []
    for idx in indices:
        steps = [step / 2**k for k in range(levels + 1)] if sum(idx) else [step]
        plan = []
        for h in steps:
            plan.append(
                [(rows.setdefault(tuple(offset), len(rows)), w) for offset, w in _stencil(idx, h)]
            )
        plans.append(plan)
    offsets = np.array(list(rows), dtype=float)
    offsets = offsets.reshape(len(rows), *(1,) * (point.ndim - 1), point.shape[-1])
    values = np.asarray(f(point[None] + offsets), dtype=float)
    return [
        _richardson([sum(w * values[row] for row, w in terms) for terms in plan])
        for plan in plans
    ]
