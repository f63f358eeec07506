"""Fundamental tensors of a Finsler metric at a chart point.

Everything derives from jets of the energy E = L^2 in the fiber variables:
the fundamental tensor g (half the y-Hessian of E), the Cartan tensor
(a quarter of the third y-derivative), the supporting covector, the angular
metric and projector, and the contracted torsion.  MetricJets keeps the
whole layer as jets so higher layers can keep differentiating it exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .jets import Jet, JetSpace, partial_values, value_array
from .metrics import ChartPoint, MetricFixture

CONDITION_LIMIT = 1e12


class DegenerateMetricError(Exception):
    """The fundamental tensor is numerically singular at a chart point."""

    def __init__(self, point: ChartPoint, cond: float):
        self.point = point
        self.cond = cond
        super().__init__(
            f"fundamental tensor numerically singular (condition number {cond:.3e})"
        )


@dataclass(frozen=True)
class Tensor:
    """Dense multi-index array at a chart point with declared index valences."""

    point: ChartPoint
    valence: tuple[str, ...]
    comps: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "comps", np.asarray(self.comps, dtype=float))
        if self.comps.ndim != len(self.valence):
            raise ValueError(
                f"rank {self.comps.ndim} components with {len(self.valence)} valences"
            )

    @property
    def rank(self) -> int:
        return len(self.valence)

    def inf_norm(self) -> float:
        return float(np.max(np.abs(self.comps))) if self.comps.size else 0.0


def max_asymmetry(comps: np.ndarray) -> float:
    """Largest deviation of a tensor from total symmetry over all axes."""
    from itertools import permutations

    worst = 0.0
    axes = range(comps.ndim)
    for perm in permutations(axes):
        worst = max(worst, float(np.max(np.abs(comps - np.transpose(comps, perm)))))
    return worst


def jet_matrix_inverse(A: np.ndarray, point: ChartPoint) -> np.ndarray:
    """Inverse of a jet-valued matrix by Gauss-Jordan elimination.

    Pivots on constant-term magnitude; the value matrix is condition-guarded
    so a degenerate metric fails loudly instead of poisoning the curvature
    layers downstream.
    """
    n = A.shape[0]
    cond = np.linalg.cond(value_array(A))
    if not np.isfinite(cond) or cond > CONDITION_LIMIT:
        raise DegenerateMetricError(point, float(cond))
    some = A[0, 0]
    sp = some.space
    work = [[A[i, j] for j in range(n)] for i in range(n)]
    inv = [
        [Jet.constant(sp, some.base, 1.0 if i == j else 0.0) for j in range(n)]
        for i in range(n)
    ]
    for col in range(n):
        piv = max(range(col, n), key=lambda r: abs(work[r][col].value))
        if piv != col:
            work[col], work[piv] = work[piv], work[col]
            inv[col], inv[piv] = inv[piv], inv[col]
        recip = 1.0 / work[col][col]
        work[col] = [w * recip for w in work[col]]
        inv[col] = [w * recip for w in inv[col]]
        for r in range(n):
            if r == col:
                continue
            f = work[r][col]
            if f.value == 0.0 and not np.any(f.coeffs):
                continue
            work[r] = [wr - f * wc for wr, wc in zip(work[r], work[col])]
            inv[r] = [ir - f * ic for ir, ic in zip(inv[r], inv[col])]
    out = np.empty((n, n), dtype=object)
    for i in range(n):
        for j in range(n):
            out[i, j] = inv[i][j]
    return out


class MetricJets:
    """Jet-valued metric layer at one chart point.

    The energy E = L^2 is lifted once at `order`; every derived object is
    jet algebra on it, with the truncation order falling by one per
    derivative.  Values are the constant terms.
    """

    def __init__(self, fixture: MetricFixture, point: ChartPoint, order: int = 6):
        if not fixture.contains(point):
            raise ValueError(f"point outside the domain of fixture {fixture.name!r}")
        self.fixture = fixture
        self.point = point
        self.order = order
        self.n = point.dim

    # -- coordinates as jets -------------------------------------------

    @cached_property
    def _base(self) -> tuple[float, ...]:
        return tuple(float(v) for v in self.point.x) + tuple(float(v) for v in self.point.y)

    @cached_property
    def space(self) -> JetSpace:
        return JetSpace.get(2 * self.n, self.order)

    @cached_property
    def x_vars(self) -> list[Jet]:
        return [Jet.variable(self.space, self._base, i) for i in range(self.n)]

    @cached_property
    def y_vars(self) -> list[Jet]:
        return [Jet.variable(self.space, self._base, self.n + i) for i in range(self.n)]

    def yv(self, i: int) -> int:
        """Jet variable index of the fiber coordinate y_i."""
        return self.n + i

    # -- metric layer jets ----------------------------------------------

    @cached_property
    def L_jet(self) -> Jet:
        return self.fixture.L(self.x_vars, self.y_vars)

    @cached_property
    def E_jet(self) -> Jet:
        return self.L_jet * self.L_jet

    @cached_property
    def dE_y(self) -> list[Jet]:
        return [self.E_jet.deriv(self.yv(i)) for i in range(self.n)]

    @cached_property
    def g_jets(self) -> np.ndarray:
        n = self.n
        out = np.empty((n, n), dtype=object)
        for i in range(n):
            for j in range(i, n):
                gij = 0.5 * self.dE_y[i].deriv(self.yv(j))
                out[i, j] = out[j, i] = gij
        return out

    @cached_property
    def T_jets(self) -> np.ndarray:
        """Cartan tensor jets: a quarter of the third fiber derivative of E."""
        n = self.n
        out = np.empty((n, n, n), dtype=object)
        for i in range(n):
            d2 = [self.dE_y[i].deriv(self.yv(j)) for j in range(i, n)]
            for j in range(i, n):
                for k in range(j, n):
                    t = 0.25 * d2[j - i].deriv(self.yv(k))
                    for perm in ((i, j, k), (i, k, j), (j, i, k), (j, k, i), (k, i, j), (k, j, i)):
                        out[perm] = t
        return out

    @cached_property
    def g_inv_jets(self) -> np.ndarray:
        return jet_matrix_inverse(self.g_jets, self.point)

    @cached_property
    def ell_jets(self) -> np.ndarray:
        out = np.empty(self.n, dtype=object)
        for i in range(self.n):
            out[i] = self.L_jet.deriv(self.yv(i))
        return out

    @cached_property
    def hbar_jets(self) -> np.ndarray:
        n = self.n
        out = np.empty((n, n), dtype=object)
        for i in range(n):
            for j in range(i, n):
                h = self.g_jets[i, j] - self.ell_jets[i] * self.ell_jets[j]
                out[i, j] = out[j, i] = h
        return out

    @cached_property
    def phi_jets(self) -> np.ndarray:
        n = self.n
        out = np.empty((n, n), dtype=object)
        for i in range(n):
            for j in range(n):
                p = -(self.y_vars[i] * self.ell_jets[j]) / self.L_jet
                if i == j:
                    p = p + 1.0
                out[i, j] = p
        return out

    @cached_property
    def C_jets(self) -> np.ndarray:
        n = self.n
        out = np.empty(n, dtype=object)
        for i in range(n):
            acc = None
            for j in range(n):
                for k in range(n):
                    term = self.g_inv_jets[j, k] * self.T_jets[i, j, k]
                    acc = term if acc is None else acc + term
            out[i] = acc
        return out

    # -- values -----------------------------------------------------------

    @cached_property
    def L(self) -> float:
        return self.L_jet.value

    @cached_property
    def g(self) -> np.ndarray:
        return value_array(self.g_jets)

    @cached_property
    def g_inv(self) -> np.ndarray:
        return value_array(self.g_inv_jets)

    @cached_property
    def T(self) -> np.ndarray:
        return value_array(self.T_jets)

    @cached_property
    def ell(self) -> np.ndarray:
        return self.g @ self.point.y / self.L

    @cached_property
    def hbar(self) -> np.ndarray:
        return self.g - np.outer(self.ell, self.ell)

    @cached_property
    def phi(self) -> np.ndarray:
        return np.eye(self.n) - np.outer(self.point.y, self.ell) / self.L

    @cached_property
    def C(self) -> np.ndarray:
        return np.einsum("jk,ijk->i", self.g_inv, self.T)

    @cached_property
    def C_vec(self) -> np.ndarray:
        return self.g_inv @ self.C

    @cached_property
    def C_sq(self) -> float:
        return float(self.C @ self.C_vec)

    @cached_property
    def cartan_up(self) -> np.ndarray:
        """Cartan tensor with the first index raised: the Cartan connection's
        vertical coefficients."""
        return np.einsum("il,ljk->ijk", self.g_inv, self.T)


@dataclass(frozen=True)
class FundamentalPack:
    """The zeroth tensor layer at one chart point, as numeric tensors."""

    point: ChartPoint
    L: float
    g: Tensor
    g_inv: Tensor
    ell: Tensor
    hbar: Tensor
    phi: Tensor
    T: Tensor
    C: Tensor
    C_vec: Tensor
    C_sq: float
    jets: MetricJets = field(repr=False, compare=False)


def fundamental_pack(
    fixture: MetricFixture,
    point: ChartPoint,
    order: int = 3,
    jets: MetricJets | None = None,
) -> FundamentalPack:
    """Fundamental tensor, Cartan tensor, and the angular objects at `point`."""
    mj = jets if jets is not None else MetricJets(fixture, point, order)
    p = point
    return FundamentalPack(
        point=p,
        L=mj.L,
        g=Tensor(p, ("down", "down"), mj.g),
        g_inv=Tensor(p, ("up", "up"), mj.g_inv),
        ell=Tensor(p, ("down",), mj.ell),
        hbar=Tensor(p, ("down", "down"), mj.hbar),
        phi=Tensor(p, ("up", "down"), mj.phi),
        T=Tensor(p, ("down", "down", "down"), mj.T),
        C=Tensor(p, ("down",), mj.C),
        C_vec=Tensor(p, ("up",), mj.C_vec),
        C_sq=mj.C_sq,
        jets=mj,
    )


@dataclass
class AngularCheckReport:
    support_residual: float
    angular_residual: float

    @property
    def max_residual(self) -> float:
        return max(self.support_residual, self.angular_residual)


def angular_projection_check(pack: FundamentalPack) -> AngularCheckReport:
    """Verify dL/dy = ell and d(ell)/dy = hbar / L from the jets directly."""
    mj = pack.jets
    n = mj.n
    yvars = [mj.yv(i) for i in range(n)]
    dL = partial_values(np.array(mj.L_jet, dtype=object), yvars)
    support = float(np.max(np.abs(dL - mj.ell)))
    dell = partial_values(mj.ell_jets, yvars)
    angular = float(np.max(np.abs(dell - mj.hbar / mj.L)))
    return AngularCheckReport(support_residual=support, angular_residual=angular)
