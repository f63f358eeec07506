"""Truncated multivariate Taylor (jet) arithmetic.

A Jet holds the Taylor coefficients of a scalar function at a fixed base
point, for every multi-index of total degree <= order.  The coefficient at
multi-index a equals the partial derivative divided by a! (the factorial
product of the exponents).  For the supported operation set (+, -, *, /,
powers, sqrt) truncated Taylor algebra is exact through the declared order,
so every derivative read off a Jet carries only float64 roundoff, never a
truncation or finite-difference error.

Coefficients are stored densely, indexed by graded-lexicographic rank.  The
multi-index tables and the multiplication (Cauchy product) index table are
cached per (nvars, order) pair in JetSpace.
"""

from __future__ import annotations

import math
from itertools import combinations
from typing import Callable, Sequence

import numpy as np

DEFAULT_JET_ORDER = 6


class JetError(Exception):
    """Base class for jet arithmetic failures."""


class JetDomainError(JetError):
    """An operation left its analytic domain (division by zero, sqrt of a
    non-positive value, fractional power of a non-positive value)."""

    def __init__(self, op: str, detail: str):
        self.op = op
        super().__init__(f"{op}: {detail}")


class JetOrderError(JetError):
    """A derivative beyond the truncation order was requested."""


class JetBaseMismatchError(JetError):
    """Arithmetic attempted between jets at different base points."""


def _grlex_exponents(nvars: int, order: int) -> list[tuple[int, ...]]:
    """All exponent tuples of total degree <= order, graded then lex."""
    out: list[tuple[int, ...]] = []
    for deg in range(order + 1):
        level = []
        if nvars == 1:
            level.append((deg,))
        else:
            # stars and bars: bar positions among deg + nvars - 1 slots
            for bars in combinations(range(deg + nvars - 1), nvars - 1):
                prev = -1
                exps = []
                for b in bars:
                    exps.append(b - prev - 1)
                    prev = b
                exps.append(deg + nvars - 1 - prev - 1)
                level.append(tuple(exps))
        out.extend(sorted(level))
    return out


class JetSpace:
    """Index bookkeeping shared by every jet in `nvars` variables at `order`.

    Holds the graded-lex multi-index enumeration, the rank lookup, the
    per-variable differentiation tables and (built lazily) the Cauchy
    product index table.
    """

    _cache: dict[tuple[int, int], "JetSpace"] = {}

    def __init__(self, nvars: int, order: int):
        if nvars < 1 or order < 0:
            raise ValueError("need nvars >= 1 and order >= 0")
        self.nvars = nvars
        self.order = order
        exps = _grlex_exponents(nvars, order)
        self.exponents: np.ndarray = np.array(exps, dtype=np.int64)
        self.rank: dict[tuple[int, ...], int] = {e: i for i, e in enumerate(exps)}
        self.size = len(exps)
        degs = self.exponents.sum(axis=1)
        # size of the coefficient vector of each lower-order truncation
        self.sizes_by_order = [int(np.searchsorted(degs, k + 1)) for k in range(order + 1)]
        self._mul_table: tuple[np.ndarray, np.ndarray, np.ndarray] | None = None
        self._deriv_tables: list[tuple[np.ndarray, np.ndarray]] | None = None

    @classmethod
    def get(cls, nvars: int, order: int) -> "JetSpace":
        key = (nvars, order)
        sp = cls._cache.get(key)
        if sp is None:
            sp = cls(nvars, order)
            cls._cache[key] = sp
        return sp

    def mul_table(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        if self._mul_table is None:
            ia, ib, ic = [], [], []
            degs = self.exponents.sum(axis=1)
            for i in range(self.size):
                budget = self.order - degs[i]
                nb = self.sizes_by_order[budget]
                sums = self.exponents[i] + self.exponents[:nb]
                rank = self.rank
                for j in range(nb):
                    ia.append(i)
                    ib.append(j)
                    ic.append(rank[tuple(sums[j])])
            self._mul_table = (
                np.array(ia, dtype=np.int64),
                np.array(ib, dtype=np.int64),
                np.array(ic, dtype=np.int64),
            )
        return self._mul_table

    def deriv_table(self, var: int) -> tuple[np.ndarray, np.ndarray]:
        """(source ranks, factors) mapping coefficients to the d/dx_var jet."""
        if self._deriv_tables is None:
            self._deriv_tables = [None] * self.nvars  # type: ignore[list-item]
        if self._deriv_tables[var] is None:
            nlow = self.sizes_by_order[self.order - 1] if self.order >= 1 else 0
            src = np.empty(nlow, dtype=np.int64)
            fac = np.empty(nlow, dtype=np.float64)
            for t in range(nlow):
                e = list(self.exponents[t])
                e[var] += 1
                src[t] = self.rank[tuple(e)]
                fac[t] = e[var]
            self._deriv_tables[var] = (src, fac)
        return self._deriv_tables[var]


class Jet:
    """Truncated Taylor expansion of a scalar at a fixed base point."""

    __slots__ = ("space", "base", "coeffs")

    def __init__(self, space: JetSpace, base: tuple[float, ...], coeffs: np.ndarray):
        self.space = space
        self.base = base
        self.coeffs = coeffs

    # -- constructors -------------------------------------------------

    @classmethod
    def constant(cls, space: JetSpace, base: tuple[float, ...], value: float) -> "Jet":
        c = np.zeros(space.size)
        c[0] = value
        return cls(space, base, c)

    @classmethod
    def variable(cls, space: JetSpace, base: tuple[float, ...], var: int) -> "Jet":
        c = np.zeros(space.size)
        c[0] = base[var]
        if space.order >= 1:
            unit = tuple(1 if v == var else 0 for v in range(space.nvars))
            c[space.rank[unit]] = 1.0
        return cls(space, base, c)

    # -- basic accessors ----------------------------------------------

    @property
    def order(self) -> int:
        return self.space.order

    @property
    def nvars(self) -> int:
        return self.space.nvars

    @property
    def value(self) -> float:
        return float(self.coeffs[0])

    def truncate(self, order: int) -> "Jet":
        if order >= self.order:
            return self
        sp = JetSpace.get(self.nvars, order)
        return Jet(sp, self.base, self.coeffs[: sp.size])

    def coefficient(self, alpha: Sequence[int]) -> float:
        alpha = tuple(int(a) for a in alpha)
        if len(alpha) != self.nvars:
            raise ValueError(f"multi-index has {len(alpha)} slots, jet has {self.nvars} variables")
        if any(a < 0 for a in alpha):
            raise ValueError("multi-index exponents must be non-negative")
        if sum(alpha) > self.order:
            raise JetOrderError(
                f"multi-index of degree {sum(alpha)} exceeds jet order {self.order}"
            )
        return float(self.coeffs[self.space.rank[alpha]])

    def partial(self, alpha: Sequence[int]) -> float:
        """Raw partial derivative: alpha! times the Taylor coefficient."""
        fac = 1.0
        for a in alpha:
            fac *= math.factorial(int(a))
        return fac * self.coefficient(alpha)

    def deriv(self, var: int) -> "Jet":
        """Partial derivative with respect to variable `var`, one order lower."""
        if self.order < 1:
            raise JetOrderError("cannot differentiate an order-0 jet")
        src, fac = self.space.deriv_table(var)
        sp = JetSpace.get(self.nvars, self.order - 1)
        return Jet(sp, self.base, self.coeffs[src] * fac)

    # -- arithmetic ----------------------------------------------------

    def _coerce(self, other) -> "Jet | None":
        if isinstance(other, Jet):
            if other.base is not self.base and other.base != self.base:
                raise JetBaseMismatchError("jets have different base points")
            return other
        if isinstance(other, (int, float, np.floating, np.integer)):
            return None  # scalar fast path
        return NotImplemented  # type: ignore[return-value]

    def __add__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return NotImplemented
        if o is None:
            c = self.coeffs.copy()
            c[0] += float(other)
            return Jet(self.space, self.base, c)
        k = min(self.order, o.order)
        sp = JetSpace.get(self.nvars, k)
        return Jet(sp, self.base, self.coeffs[: sp.size] + o.coeffs[: sp.size])

    __radd__ = __add__

    def __neg__(self):
        return Jet(self.space, self.base, -self.coeffs)

    def __sub__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return NotImplemented
        if o is None:
            c = self.coeffs.copy()
            c[0] -= float(other)
            return Jet(self.space, self.base, c)
        k = min(self.order, o.order)
        sp = JetSpace.get(self.nvars, k)
        return Jet(sp, self.base, self.coeffs[: sp.size] - o.coeffs[: sp.size])

    def __rsub__(self, other):
        return (-self).__add__(other)

    def __mul__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return NotImplemented
        if o is None:
            return Jet(self.space, self.base, self.coeffs * float(other))
        k = min(self.order, o.order)
        sp = JetSpace.get(self.nvars, k)
        ia, ib, ic = sp.mul_table()
        prod = self.coeffs[ia] * o.coeffs[ib]
        return Jet(sp, self.base, np.bincount(ic, weights=prod, minlength=sp.size))

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return NotImplemented
        if o is None:
            d = float(other)
            if d == 0.0:
                raise JetDomainError("div", "division by scalar zero")
            return Jet(self.space, self.base, self.coeffs / d)
        return self * o._pow_series(-1.0, "div")

    def __rtruediv__(self, other):
        return self._pow_series(-1.0, "div") * float(other)

    def __pow__(self, p):
        if isinstance(p, (int, np.integer)):
            p = int(p)
            if p >= 0:
                result = Jet.constant(self.space, self.base, 1.0)
                square = self
                e = p
                while e:
                    if e & 1:
                        result = result * square
                    e >>= 1
                    if e:
                        square = square * square
                return result
            return self._pow_series(float(p), "pow")
        return self._pow_series(float(p), "pow")

    def _pow_series(self, p: float, op: str) -> "Jet":
        """Binomial series for self**p around the constant term.

        Exact through the truncation order for any real p.  Needs a nonzero
        value for integer p, a positive value otherwise.
        """
        v = self.value
        if p == float(int(p)):
            if v == 0.0 or not math.isfinite(v):
                raise JetDomainError(op, f"value {v} not invertible at base point")
        elif v <= 0.0 or not math.isfinite(v):
            raise JetDomainError(op, f"value {v} not in the domain of power {p}")
        k = self.order
        u = self / v - 1.0  # zero constant term
        # Horner over binomial coefficients C(p, j)
        cs = [1.0]
        for j in range(1, k + 1):
            cs.append(cs[-1] * (p - (j - 1)) / j)
        acc = Jet.constant(self.space, self.base, cs[k])
        for j in range(k - 1, -1, -1):
            acc = acc * u + cs[j]
        return acc * (v**p)

    def sqrt(self) -> "Jet":
        if self.value <= 0.0:
            raise JetDomainError("sqrt", f"value {self.value} is not positive")
        return self._pow_series(0.5, "sqrt")

    def __repr__(self):
        return f"Jet(order={self.order}, nvars={self.nvars}, value={self.value!r})"


# -- generic scalar helpers (work on jets and plain numbers) -------------


def sqrt(v):
    if isinstance(v, Jet):
        return v.sqrt()
    if v <= 0.0:
        raise JetDomainError("sqrt", f"value {v} is not positive")
    return math.sqrt(v)


def fpow(v, p):
    if isinstance(v, Jet):
        return v.__pow__(p)
    return math.pow(v, p)


# -- lifting closed forms -------------------------------------------------


def _base_coords(base) -> tuple[tuple[float, ...], tuple[float, ...]]:
    if hasattr(base, "x") and hasattr(base, "y"):
        return tuple(float(v) for v in base.x), tuple(float(v) for v in base.y)
    x, y = base
    return tuple(float(v) for v in x), tuple(float(v) for v in y)


def lift(f: Callable, base, order: int = DEFAULT_JET_ORDER) -> Jet:
    """Evaluate f(x_jets, y_jets) at `base`, returning its jet to `order`.

    `f` must be a closed form built from +, -, *, /, powers and sqrt of its
    arguments; `base` is a ChartPoint or an (x, y) pair of sequences.  The
    returned coefficients are exact partial derivatives divided by the
    multi-index factorial.
    """
    if order < 0:
        raise ValueError("order must be >= 0")
    x, y = _base_coords(base)
    n = len(y)
    space = JetSpace.get(len(x) + n, order)
    flat = x + y
    xj = [Jet.variable(space, flat, i) for i in range(len(x))]
    yj = [Jet.variable(space, flat, len(x) + i) for i in range(n)]
    out = f(xj, yj)
    if not isinstance(out, Jet):
        out = Jet.constant(space, flat, float(out))
    return out


def partial(j: Jet, alpha: Sequence[int]) -> float:
    """Raw partial derivative of the lifted function at its base point."""
    return j.partial(alpha)


def euler_residual(j: Jet, var_indices: Sequence[int], degree: float) -> float:
    """Residual of the Euler relation sum_i v_i df/dv_i = degree * f.

    `var_indices` selects the variables (with their base values taken from
    the jet's base point) in which f is claimed positively homogeneous.
    Relative to |degree * f| with an absolute floor.
    """
    acc = 0.0
    for v in var_indices:
        e = [0] * j.nvars
        e[v] = 1
        acc += j.base[v] * j.partial(e)
    target = degree * j.value
    return abs(acc - target) / max(abs(target), abs(acc), 1e-12)


# -- helpers for object arrays of jets ------------------------------------


def value_array(jets: np.ndarray) -> np.ndarray:
    """Constant terms of an object array of jets, as a float array."""
    out = np.empty(jets.shape)
    flat_in = jets.reshape(-1)
    flat_out = out.reshape(-1)
    for i in range(flat_in.size):
        flat_out[i] = flat_in[i].value
    return out


def deriv_array(jets: np.ndarray, var: int) -> np.ndarray:
    """Componentwise jet derivative of an object array of jets."""
    out = np.empty(jets.shape, dtype=object)
    flat_in = jets.reshape(-1)
    flat_out = out.reshape(-1)
    for i in range(flat_in.size):
        flat_out[i] = flat_in[i].deriv(var)
    return out


def partial_values(jets: np.ndarray, variables: Sequence[int]) -> np.ndarray:
    """First-partial values of an object array of jets.

    Returns a float array of shape jets.shape + (len(variables),).
    """
    flat_in = jets.reshape(-1)
    out = np.empty((flat_in.size, len(variables)))
    for i in range(flat_in.size):
        j = flat_in[i]
        if j.order < 1:
            raise JetOrderError("field jets carry no first-order coefficients")
        sp = j.space
        for c, v in enumerate(variables):
            unit = tuple(1 if w == v else 0 for w in range(j.nvars))
            out[i, c] = j.coeffs[sp.rank[unit]]
    return out.reshape(jets.shape + (len(variables),))
