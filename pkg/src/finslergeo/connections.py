"""Spray, nonlinear connection, Berwald and Cartan connections, and the
horizontal / vertical covariant derivative operators.

Conventions, fixed once here and reused everywhere:

* spray: G^i = (1/4) g^il (y^k d2E/dy^l dx^k - dE/dx^l), E = L^2;
* nonlinear connection N^i_j = dG^i/dy^j, Berwald coefficients
  G^i_jk = dN^i_j/dy^k, horizontal basis d/dx^i := d_x^i - N^j_i d_y^j;
* Cartan coefficients from the metrical ansatz on the horizontal basis;
* the Berwald vertical covariant derivative of a tensor field is the plain
  fiber partial of its components (natural-chart realization), the Cartan
  one corrects each slot with the raised Cartan tensor;
* covariant derivatives append the differentiation slot last.

Tensor fields are procedures, not grids: a TensorField builds its
components as jets on a shared tower, so differentiating a field is a
coefficient read and stays exact.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable

import numpy as np

from .fundamentals import MetricJets, Tensor
from .jets import Jet, partial_values, value_array
from .metrics import ChartPoint, MetricFixture


class ConnectionJets(MetricJets):
    """Connection layer of the jet tower: spray and connection coefficients."""

    @cached_property
    def G_jets(self) -> np.ndarray:
        n = self.n
        term = np.empty(n, dtype=object)
        for el in range(n):
            dEl = self.dE_y[el]
            acc = -self.E_jet.deriv(el)
            for k in range(n):
                acc = acc + self.y_vars[k] * dEl.deriv(k)
            term[el] = acc
        out = np.empty(n, dtype=object)
        for i in range(n):
            acc = None
            for el in range(n):
                t = self.g_inv_jets[i, el] * term[el]
                acc = t if acc is None else acc + t
            out[i] = 0.25 * acc
        return out

    @cached_property
    def N_jets(self) -> np.ndarray:
        n = self.n
        out = np.empty((n, n), dtype=object)
        for i in range(n):
            for j in range(n):
                out[i, j] = self.G_jets[i].deriv(self.yv(j))
        return out

    @cached_property
    def G_berwald_jets(self) -> np.ndarray:
        n = self.n
        out = np.empty((n, n, n), dtype=object)
        for i in range(n):
            for j in range(n):
                d = self.N_jets[i, j]
                for k in range(j, n):
                    out[i, j, k] = out[i, k, j] = d.deriv(self.yv(k))
        return out

    # -- values ---------------------------------------------------------

    @cached_property
    def G(self) -> np.ndarray:
        return value_array(self.G_jets)

    @cached_property
    def N(self) -> np.ndarray:
        return value_array(self.N_jets)

    @cached_property
    def G_berwald(self) -> np.ndarray:
        return value_array(self.G_berwald_jets)

    @cached_property
    def delta_g(self) -> np.ndarray:
        """delta g_ij / delta x^k: horizontal derivative of the metric."""
        n = self.n
        dg_x = partial_values(self.g_jets, list(range(n)))
        dg_y = partial_values(self.g_jets, [self.yv(m) for m in range(n)])
        return dg_x - np.einsum("ijm,mk->ijk", dg_y, self.N)

    @cached_property
    def Gamma_cartan(self) -> np.ndarray:
        dg = self.delta_g
        n = self.n
        sym = np.empty((n, n, n))
        for el in range(n):
            sym[el] = dg[el, :, :] + dg[el, :, :].T - dg[:, :, el]
        return 0.5 * np.einsum("il,ljk->ijk", self.g_inv, sym)

    # -- derivative helpers ----------------------------------------------

    def spray_derivative(self, jets: np.ndarray) -> np.ndarray:
        """Value of y^m d(.)/dx^m - 2 G^j d(.)/dy^j on a jet array.

        This is the horizontal basis derivative along the supporting
        direction, the building block of every "along eta" operator.
        """
        n = self.n
        dx = partial_values(jets, list(range(n)))
        dy = partial_values(jets, [self.yv(m) for m in range(n)])
        return dx @ self.point.y - 2.0 * dy @ self.G

    def horizontal_partial(self, jets: np.ndarray) -> np.ndarray:
        """Values of the horizontal basis derivative, slot appended."""
        n = self.n
        dx = partial_values(jets, list(range(n)))
        dy = partial_values(jets, [self.yv(m) for m in range(n)])
        return dx - np.einsum("...j,jm->...m", dy, self.N)

    def vertical_partial(self, jets: np.ndarray) -> np.ndarray:
        return partial_values(jets, [self.yv(m) for m in range(self.n)])


@dataclass(frozen=True)
class ConnectionData:
    point: ChartPoint
    G: Tensor
    N: Tensor
    G_berwald: Tensor
    Gamma_cartan: Tensor
    jets: ConnectionJets = field(repr=False, compare=False)


def spray(fixture: MetricFixture, point: ChartPoint, order: int = 3,
          tower: ConnectionJets | None = None) -> Tensor:
    """Geodesic spray coefficients G^i at a chart point."""
    tw = tower if tower is not None else ConnectionJets(fixture, point, order)
    return Tensor(point, ("up",), tw.G)


def connection_data(fixture: MetricFixture, point: ChartPoint, order: int = 4,
                    tower: ConnectionJets | None = None) -> ConnectionData:
    tw = tower if tower is not None else ConnectionJets(fixture, point, order)
    p = point
    return ConnectionData(
        point=p,
        G=Tensor(p, ("up",), tw.G),
        N=Tensor(p, ("up", "down"), tw.N),
        G_berwald=Tensor(p, ("up", "down", "down"), tw.G_berwald),
        Gamma_cartan=Tensor(p, ("up", "down", "down"), tw.Gamma_cartan),
        jets=tw,
    )


# -- tensor fields ----------------------------------------------------------


@dataclass(frozen=True)
class TensorField:
    """A tensor field given by a jet-capable component builder.

    `build` receives the shared jet tower and returns an object array of
    jets (shape n^rank) carrying enough remaining order for the consumer's
    derivatives.  Builders must be pure.
    """

    valence: tuple[str, ...]
    build: Callable[[MetricJets], np.ndarray]
    name: str = ""

    def jets(self, tower: MetricJets) -> np.ndarray:
        arr = self.build(tower)
        return np.asarray(arr, dtype=object)


def component_field(valence: tuple[str, ...], fn: Callable, name: str = "") -> TensorField:
    """Field from a closed-form component function fn(x, y) -> nested lists.

    The coordinates arrive as jets, so the components may use any of the
    supported scalar operations.
    """

    def build(tower: MetricJets) -> np.ndarray:
        comps = fn(tower.x_vars, tower.y_vars)
        arr = np.asarray(comps, dtype=object)
        flat = arr.reshape(-1)
        for i in range(flat.size):
            if not isinstance(flat[i], Jet):
                flat[i] = Jet.constant(tower.space, tower._base, float(flat[i]))
        return arr

    return TensorField(valence=valence, build=build, name=name)


def scalar_norm_field() -> TensorField:
    return TensorField((), lambda tw: np.array(tw.L_jet, dtype=object), "L")


def metric_field() -> TensorField:
    return TensorField(("down", "down"), lambda tw: tw.g_jets, "g")


def angular_metric_field() -> TensorField:
    return TensorField(("down", "down"), lambda tw: tw.hbar_jets, "hbar")


def angular_projector_field() -> TensorField:
    return TensorField(("up", "down"), lambda tw: tw.phi_jets, "phi")


def cartan_tensor_field() -> TensorField:
    return TensorField(("down", "down", "down"), lambda tw: tw.T_jets, "T")


def mean_torsion_field() -> TensorField:
    return TensorField(("down",), lambda tw: tw.C_jets, "C")


def support_field() -> TensorField:
    """The canonical section eta, components y^i."""
    return TensorField(("up",), lambda tw: np.array(tw.y_vars, dtype=object), "eta")


def supporting_covector_field() -> TensorField:
    return TensorField(("down",), lambda tw: tw.ell_jets, "ell")


# -- covariant derivatives ---------------------------------------------------


def _connection_terms(vals: np.ndarray, valence: tuple[str, ...], coeff: np.ndarray) -> np.ndarray:
    """Sum of per-slot connection corrections; `coeff[i, j, m]` multiplies
    an up slot as +A^j coeff[i, j, m] and a down slot as -A_i coeff[i, j, m]."""
    out = np.zeros(vals.shape + (coeff.shape[-1],))
    for s, v in enumerate(valence):
        moved = np.moveaxis(vals, s, 0)
        if v == "up":
            term = np.einsum("ism,s...->i...m", coeff, moved)
        else:
            term = -np.einsum("sim,s...->i...m", coeff, moved)
        out += np.moveaxis(term, 0, s)
    return out


def vertical_cov_deriv(
    field: TensorField,
    conn: str,
    fixture: MetricFixture,
    point: ChartPoint,
    *,
    order: int = 5,
    tower: MetricJets | None = None,
) -> Tensor:
    """Vertical covariant derivative of a tensor field, slot appended.

    Berwald: plain fiber partials of the components.  Cartan: corrected by
    the raised Cartan tensor on every slot.
    """
    if conn not in ("berwald", "cartan"):
        raise ValueError(f"unknown connection {conn!r}")
    tw = tower if tower is not None else ConnectionJets(fixture, point, order)
    jets = field.jets(tw)
    dy = partial_values(jets, [tw.yv(m) for m in range(tw.n)])
    if conn == "cartan" and field.valence:
        dy = dy + _connection_terms(value_array(jets), field.valence, tw.cartan_up)
    return Tensor(point, field.valence + ("down",), dy)


def horizontal_cov_deriv(
    field: TensorField,
    conn: str,
    fixture: MetricFixture,
    point: ChartPoint,
    *,
    order: int = 5,
    tower: MetricJets | None = None,
) -> Tensor:
    """Horizontal covariant derivative of a tensor field, slot appended.

    Components are differentiated along the horizontal basis; each slot is
    corrected with the Berwald or the Cartan coefficients.
    """
    if conn not in ("berwald", "cartan"):
        raise ValueError(f"unknown connection {conn!r}")
    tw = tower if tower is not None else ConnectionJets(fixture, point, order)
    if not isinstance(tw, ConnectionJets):
        raise TypeError("horizontal derivatives need a connection-layer tower")
    jets = field.jets(tw)
    base = tw.horizontal_partial(jets)
    if field.valence:
        coeff = tw.G_berwald if conn == "berwald" else tw.Gamma_cartan
        base = base + _connection_terms(value_array(jets), field.valence, coeff)
    return Tensor(point, field.valence + ("down",), base)
