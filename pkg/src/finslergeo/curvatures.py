"""Curvature and torsion tower of the Berwald and Cartan connections.

Objects and conventions (indices i out, lower slots named):

* hv-curvature of the Berwald connection: P[i,j,k,l] = d3 G^i / dy^j dy^k dy^l,
  totally symmetric in (j,k,l), annihilated by y on every lower slot;
* deviation (Jacobi) endomorphism:
  H[i,j] = 2 dG^i/dx^j - y^k d2G^i/dx^k dy^j + 2 G^k d2G^i/dy^k dy^j
           - dG^i/dy^k dG^k/dy^j;
* vh-torsion R_hat[i,p,q] = (1/3)(d H[i,q]/dy^p - d H[i,p]/dy^q), so that
  contracting y into the first lower slot returns H;
* h-curvature R[i,a,p,q] = d R_hat[i,p,q] / dy^a: first lower slot is the
  vector acted on, the last two are the antisymmetric pair;
* Landsberg tensor Land[i,j,k] = -(1/2) y_s P[s,i,j,k] (y_s = g_sm y^m),
  cross-checked against the Cartan horizontal derivative of the Cartan
  tensor along the supporting direction;
* Cartan vv-curvature S[i,j,k,l] = Cu[i,k,m] Cu[m,j,l] - Cu[i,l,m] Cu[m,j,k]
  with Cu the raised Cartan tensor.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .connections import ConnectionJets
from .fundamentals import Tensor
from .jets import partial_values, value_array
from .metrics import ChartPoint, MetricFixture


class CurvatureJets(ConnectionJets):
    """Curvature layer of the jet tower."""

    @cached_property
    def P_jets(self) -> np.ndarray:
        n = self.n
        out = np.empty((n, n, n, n), dtype=object)
        for i in range(n):
            for j in range(n):
                for k in range(j, n):
                    d = self.G_berwald_jets[i, j, k]
                    for l in range(k, n):
                        v = d.deriv(self.yv(l))
                        for perm in (
                            (j, k, l), (j, l, k), (k, j, l),
                            (k, l, j), (l, j, k), (l, k, j),
                        ):
                            out[(i,) + perm] = v
        return out

    @cached_property
    def H_jets(self) -> np.ndarray:
        n = self.n
        out = np.empty((n, n), dtype=object)
        for i in range(n):
            dGx = [self.G_jets[i].deriv(m) for m in range(n)]
            for j in range(n):
                acc = 2.0 * dGx[j]
                for k in range(n):
                    acc = acc - self.y_vars[k] * dGx[k].deriv(self.yv(j))
                    acc = acc + 2.0 * self.G_jets[k] * self.G_berwald_jets[i, k, j]
                    acc = acc - self.N_jets[i, k] * self.N_jets[k, j]
                out[i, j] = acc
        return out

    @cached_property
    def R_hat_jets(self) -> np.ndarray:
        n = self.n
        out = np.empty((n, n, n), dtype=object)
        for i in range(n):
            dH = [[self.H_jets[i, q].deriv(self.yv(p)) for q in range(n)] for p in range(n)]
            for p in range(n):
                for q in range(n):
                    out[i, p, q] = (dH[p][q] - dH[q][p]) * (1.0 / 3.0)
        return out

    @cached_property
    def R_jets(self) -> np.ndarray:
        n = self.n
        out = np.empty((n, n, n, n), dtype=object)
        for i in range(n):
            for p in range(n):
                for q in range(n):
                    rh = self.R_hat_jets[i, p, q]
                    for a in range(n):
                        out[i, a, p, q] = rh.deriv(self.yv(a))
        return out

    # -- values ------------------------------------------------------------

    @cached_property
    def P_berwald(self) -> np.ndarray:
        return value_array(self.P_jets)

    @cached_property
    def H(self) -> np.ndarray:
        return value_array(self.H_jets)

    @cached_property
    def R_hat(self) -> np.ndarray:
        return value_array(self.R_hat_jets)

    @cached_property
    def R_berwald(self) -> np.ndarray:
        return value_array(self.R_jets)

    @cached_property
    def P_low_jets(self) -> np.ndarray:
        """Metric-lowered hv-curvature as jets (order capped by its factors)."""
        n = self.n
        out = np.empty((n, n, n, n), dtype=object)
        for j in range(n):
            for k in range(j, n):
                for l in range(k, n):
                    for z in range(n):
                        acc = None
                        for s in range(n):
                            t = self.g_jets[s, z] * self.P_jets[s, j, k, l]
                            acc = t if acc is None else acc + t
                        for perm in (
                            (j, k, l), (j, l, k), (k, j, l),
                            (k, l, j), (l, j, k), (l, k, j),
                        ):
                            out[perm + (z,)] = acc
        return out

    @cached_property
    def landsberg(self) -> np.ndarray:
        y_low = self.g @ self.point.y
        return -0.5 * np.einsum("s,sijk->ijk", y_low, self.P_berwald)

    @cached_property
    def landsberg_spray_route(self) -> np.ndarray:
        """Cartan horizontal derivative of the Cartan tensor along eta."""
        base = self.spray_derivative(self.T_jets)
        corr = np.einsum("sjk,si->ijk", self.T, self.N)
        corr += np.einsum("isk,sj->ijk", self.T, self.N)
        corr += np.einsum("ijs,sk->ijk", self.T, self.N)
        return base - corr

    @cached_property
    def P_hat(self) -> np.ndarray:
        return np.einsum("il,ljk->ijk", self.g_inv, self.landsberg)

    @cached_property
    def S_cartan(self) -> np.ndarray:
        cu = self.cartan_up
        prod = np.einsum("ikm,mjl->ijkl", cu, cu)
        return prod - prod.transpose(0, 1, 3, 2)


@dataclass(frozen=True)
class CurvaturePack:
    point: ChartPoint
    P_berwald: Tensor
    R_berwald: Tensor
    R_hat: Tensor
    H: Tensor
    landsberg: Tensor
    S_cartan: Tensor
    P_hat: Tensor
    landsberg_route_gap: float
    jets: CurvatureJets = field(repr=False, compare=False)


def curvature_pack(
    fixture: MetricFixture,
    point: ChartPoint,
    order: int = 6,
    tower: CurvatureJets | None = None,
) -> CurvaturePack:
    tw = tower if tower is not None else CurvatureJets(fixture, point, order)
    p = point
    gap = float(np.max(np.abs(tw.landsberg - tw.landsberg_spray_route)))
    return CurvaturePack(
        point=p,
        P_berwald=Tensor(p, ("up", "down", "down", "down"), tw.P_berwald),
        R_berwald=Tensor(p, ("up", "down", "down", "down"), tw.R_berwald),
        R_hat=Tensor(p, ("up", "down", "down"), tw.R_hat),
        H=Tensor(p, ("up", "down"), tw.H),
        landsberg=Tensor(p, ("down", "down", "down"), tw.landsberg),
        S_cartan=Tensor(p, ("up", "down", "down", "down"), tw.S_cartan),
        P_hat=Tensor(p, ("up", "down", "down"), tw.P_hat),
        landsberg_route_gap=gap,
        jets=tw,
    )


def berwald_hv_curvature(fixture: MetricFixture, point: ChartPoint, order: int = 5,
                         tower: CurvatureJets | None = None) -> Tensor:
    tw = tower if tower is not None else CurvatureJets(fixture, point, order)
    return Tensor(point, ("up", "down", "down", "down"), tw.P_berwald)


def deviation_tensor(fixture: MetricFixture, point: ChartPoint, order: int = 4,
                     tower: CurvatureJets | None = None) -> Tensor:
    tw = tower if tower is not None else CurvatureJets(fixture, point, order)
    return Tensor(point, ("up", "down"), tw.H)


def vh_torsion_and_h_curvature(
    fixture: MetricFixture, point: ChartPoint, order: int = 6,
    tower: CurvatureJets | None = None,
) -> tuple[Tensor, Tensor]:
    tw = tower if tower is not None else CurvatureJets(fixture, point, order)
    return (
        Tensor(point, ("up", "down", "down"), tw.R_hat),
        Tensor(point, ("up", "down", "down", "down"), tw.R_berwald),
    )


def landsberg_tensor(fixture: MetricFixture, point: ChartPoint, order: int = 5,
                     tower: CurvatureJets | None = None) -> Tensor:
    tw = tower if tower is not None else CurvatureJets(fixture, point, order)
    return Tensor(point, ("down", "down", "down"), tw.landsberg)


def landsberg_two_routes(fixture: MetricFixture, point: ChartPoint, order: int = 5,
                         tower: CurvatureJets | None = None) -> tuple[Tensor, Tensor]:
    """Spray-coefficient route and covariant-derivative route side by side."""
    tw = tower if tower is not None else CurvatureJets(fixture, point, order)
    return (
        Tensor(point, ("down", "down", "down"), tw.landsberg),
        Tensor(point, ("down", "down", "down"), tw.landsberg_spray_route),
    )


def cartan_hv_torsion(fixture: MetricFixture, point: ChartPoint, order: int = 5,
                      tower: CurvatureJets | None = None) -> Tensor:
    tw = tower if tower is not None else CurvatureJets(fixture, point, order)
    return Tensor(point, ("up", "down", "down"), tw.P_hat)


def cartan_v_curvature(fixture: MetricFixture, point: ChartPoint, order: int = 3,
                       tower: CurvatureJets | None = None) -> Tensor:
    tw = tower if tower is not None else CurvatureJets(fixture, point, order)
    return Tensor(point, ("up", "down", "down", "down"), tw.S_cartan)


# -- deep identities ----------------------------------------------------------


def horizontal_deriv_values(tower: ConnectionJets, jets: np.ndarray,
                            valence: tuple[str, ...], conn: str) -> np.ndarray:
    """Horizontal covariant derivative values of a jet array, slot appended."""
    from .connections import _connection_terms

    base = tower.horizontal_partial(jets)
    coeff = tower.G_berwald if conn == "berwald" else tower.Gamma_cartan
    return base + _connection_terms(value_array(jets), valence, coeff)


def spray_cov_deriv_values(tower: ConnectionJets, jets: np.ndarray,
                           valence: tuple[str, ...]) -> np.ndarray:
    """Horizontal covariant derivative along eta of a jet array.

    The Berwald and Cartan coefficients both contract with y to the
    nonlinear connection, so the operator is connection-independent.
    """
    out = tower.spray_derivative(jets)
    vals = value_array(jets)
    N = tower.N
    for s, v in enumerate(valence):
        moved = np.moveaxis(vals, s, 0)
        if v == "up":
            term = np.einsum("is,s...->i...", N, moved)
        else:
            term = -np.einsum("si,s...->i...", N, moved)
        out += np.moveaxis(term, 0, s)
    return out


def berwald_h_curvature_deriv(tower: CurvatureJets) -> np.ndarray:
    """Values of the horizontal Berwald derivative of the h-curvature."""
    return horizontal_deriv_values(
        tower, tower.R_jets, ("up", "down", "down", "down"), "berwald"
    )


def bianchi_residual(
    fixture: MetricFixture,
    point: ChartPoint,
    n_triples: int = 20,
    seed: int = 0,
    order: int = 7,
    tower: CurvatureJets | None = None,
) -> float:
    """Cyclic horizontal differential identity of the h-curvature.

    For direction triples (X, Y, Z) the cyclic sum of
    (D_X R)(Y, Z)W + P(R_hat(X, Y), Z)W must vanish for every W; the
    returned value is the worst relative residual over random triples.
    This integrates every layer of the tower, so it is the strongest
    cross-validation in the package.
    """
    tw = tower if tower is not None else CurvatureJets(fixture, point, order)
    dR = berwald_h_curvature_deriv(tw)
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n_triples):
        dirs = rng.normal(size=(3, tw.n))
        dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
        total = np.zeros((tw.n, tw.n))
        scale = 0.0
        for c in range(3):
            X, Y, Z = dirs[c % 3], dirs[(c + 1) % 3], dirs[(c + 2) % 3]
            t1 = np.einsum("iapqm,p,q,m->ia", dR, Y, Z, X)
            u = np.einsum("upq,p,q->u", tw.R_hat, X, Y)
            t2 = np.einsum("iuva,u,v->ia", tw.P_berwald, u, Z)
            total += t1 + t2
            scale = max(scale, float(np.max(np.abs(t1))), float(np.max(np.abs(t2))))
        res = float(np.max(np.abs(total))) / max(scale, 1e-12)
        if float(np.max(np.abs(total))) <= 1e-12:
            res = 0.0
        worst = max(worst, res)
    return worst


def hv_exchange_residual(
    fixture: MetricFixture,
    point: ChartPoint,
    order: int = 7,
    tower: CurvatureJets | None = None,
) -> float:
    """Exchange identity between the spray derivative of the hv-curvature and
    the vertical derivative of the h-curvature contracted with eta."""
    tw = tower if tower is not None else CurvatureJets(fixture, point, order)
    n = tw.n
    # left: horizontal Berwald derivative of P along eta
    sP = tw.spray_derivative(tw.P_jets)
    P = tw.P_berwald
    lhs = (
        sP
        + np.einsum("sjkl,is->ijkl", P, tw.N)
        - np.einsum("iskl,sj->ijkl", P, tw.N)
        - np.einsum("ijsl,sk->ijkl", P, tw.N)
        - np.einsum("ijks,sl->ijkl", P, tw.N)
    )
    # right: vertical derivative of R, pair slot contracted with y
    dRv = partial_values(tw.R_jets, [tw.yv(m) for m in range(n)])
    rhs = np.einsum("iljqk,q->ijkl", dRv, tw.point.y)
    diff = float(np.max(np.abs(lhs - rhs)))
    if diff <= 1e-12:
        return 0.0
    return diff / max(float(np.max(np.abs(lhs))), float(np.max(np.abs(rhs))), 1e-12)
