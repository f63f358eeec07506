"""Scalar-curvature extraction, classification predicates, the identity
verification suite, and the Landsberg-to-Riemannian reduction pipeline.

The suite evaluates, at sampled chart points, every displayed identity the
curvature tower is supposed to satisfy, from the vertical derivatives of
the angular objects up to the cyclic horizontal differential identity.
Identities whose hypotheses a fixture fails are reported as vacuous rather
than failing: the point of the harness is to document exactly which legs
of the reduction each fixture satisfies.

Residual policy: a residual is the infinity norm of (lhs - rhs) divided by
the largest natural scale of the two sides, with differences below an
absolute 1e-12 noise floor reported as zero.  Verdicts are monotone in the
tolerance by construction.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .curvatures import (
    CurvatureJets,
    bianchi_residual,
    hv_exchange_residual,
    horizontal_deriv_values,
    spray_cov_deriv_values,
)
from .fundamentals import max_asymmetry
from .jets import Jet, partial_values, value_array
from .metrics import ChartPoint, MetricFixture, SampleSpec, sample_points

DEFAULT_TOL_IDENTITY = 1e-6
DEFAULT_TOL_ZERO = 1e-7
NOISE_ABS = 1e-12
FLAT_FLOOR = 1e-10


class GateRefused(Exception):
    """A checker's hypothesis is not satisfied by the supplied data."""


def rel_residual(diff: float, *scales: float) -> float:
    """Relative residual with an absolute noise floor on the numerator."""
    if diff <= NOISE_ABS:
        return 0.0
    return diff / max(max(scales, default=0.0), NOISE_ABS)


def _norm(a: np.ndarray) -> float:
    return float(np.max(np.abs(a))) if a.size else 0.0


# -- scalar curvature --------------------------------------------------------


@dataclass(frozen=True)
class ScalarCurvatureFit:
    """Trace fit of the deviation endomorphism against the angular projector."""

    point: ChartPoint
    r: float
    residual: float
    flat: bool
    r_grad_v: np.ndarray  # vertical gradient of r (fiber partials)
    r_grad_h: np.ndarray  # horizontal-basis gradient of r
    homogeneity_residual: float
    dim_ok: bool


def _r_jet(tower: CurvatureJets) -> Jet:
    tr = None
    for i in range(tower.n):
        tr = tower.H_jets[i, i] if tr is None else tr + tower.H_jets[i, i]
    return tr / ((tower.n - 1.0) * tower.L_jet * tower.L_jet)


def extract_scalar_curvature(
    fixture: MetricFixture,
    point: ChartPoint,
    order: int = 6,
    tower: CurvatureJets | None = None,
) -> ScalarCurvatureFit:
    """Fit H = r L^2 phi by the metric trace and record the gradients of r.

    Flat points (deviation below the noise floor) report r = 0 with a zero
    residual and the flat flag set, so downstream fits never divide 0 by 0.
    """
    tw = tower if tower is not None else CurvatureJets(fixture, point, order)
    n = tw.n
    H = tw.H
    scale = max(1.0, tw.L**2 * _norm(tw.phi))
    if _norm(H) <= FLAT_FLOOR * scale:
        return ScalarCurvatureFit(
            point=point, r=0.0, residual=0.0, flat=True,
            r_grad_v=np.zeros(n), r_grad_h=np.zeros(n),
            homogeneity_residual=0.0, dim_ok=n >= 3,
        )
    rj = _r_jet(tw)
    r = rj.value
    diff = _norm(H - r * tw.L**2 * tw.phi)
    residual = rel_residual(diff, _norm(H) + tw.L**2 * _norm(tw.phi))
    grad_v = np.array([rj.deriv(tw.yv(i)).value for i in range(n)])
    grad_x = np.array([rj.deriv(i).value for i in range(n)])
    grad_h = grad_x - grad_v @ tw.N
    hom = rel_residual(abs(float(point.y @ grad_v)), abs(r), 1.0)
    return ScalarCurvatureFit(
        point=point, r=r, residual=residual, flat=False,
        r_grad_v=grad_v, r_grad_h=grad_h,
        homogeneity_residual=hom, dim_ok=n >= 3,
    )


# -- auxiliary tensors --------------------------------------------------------


@dataclass(frozen=True)
class AuxTensors:
    """The scalar-curvature companion tensors and extracted scalars."""

    point: ChartPoint
    r: float
    A: np.ndarray
    B: np.ndarray
    M: np.ndarray
    A_bb: np.ndarray  # vertical Cartan derivative of C, symmetrized with ell x C
    alpha: float | None
    psi: float | None
    mu: float | None
    trivial: bool


def _second_vertical_r(tower: CurvatureJets) -> tuple[float, np.ndarray, np.ndarray]:
    rj = _r_jet(tower)
    n = tower.n
    r_i = np.array([rj.deriv(tower.yv(i)).value for i in range(n)])
    r_ij = np.empty((n, n))
    for i in range(n):
        d = rj.deriv(tower.yv(i))
        for j in range(i, n):
            r_ij[i, j] = r_ij[j, i] = d.deriv(tower.yv(j)).value
    return rj.value, r_i, r_ij


def _nabla_vertical_C(tower: CurvatureJets) -> tuple[np.ndarray, np.ndarray]:
    """(plain fiber derivative of C, Cartan vertical derivative), rows indexed
    by the component, columns by the differentiation slot."""
    n = tower.n
    dC = np.array(
        [[tower.C_jets[w].deriv(tower.yv(x)).value for x in range(n)] for w in range(n)]
    )
    nabla = dC - np.einsum("s,swx->wx", tower.C, tower.cartan_up)
    return dC, nabla


def aux_tensors(
    fixture: MetricFixture,
    point: ChartPoint,
    fit: ScalarCurvatureFit | None = None,
    order: int = 6,
    tower: CurvatureJets | None = None,
    tol_identity: float = DEFAULT_TOL_IDENTITY,
) -> AuxTensors:
    """Assemble the scalar-curvature companion tensors at a chart point.

    Refuses points whose deviation endomorphism is not of scalar type; on
    flat points all companions vanish identically and the result is marked
    trivial.
    """
    tw = tower if tower is not None else CurvatureJets(fixture, point, order)
    if fit is None:
        fit = extract_scalar_curvature(fixture, point, tower=tw)
    if fit.residual > tol_identity:
        raise GateRefused(
            f"deviation tensor is not of scalar type (fit residual {fit.residual:.3e})"
        )
    n = tw.n
    L, ell, hbar = tw.L, tw.ell, tw.hbar
    if fit.flat:
        zero2 = np.zeros((n, n))
        alpha, res = _proportionality(
            L * _nabla_vertical_C(tw)[1].T + np.outer(ell, tw.C) + np.outer(tw.C, ell),
            hbar, tw.g_inv,
        )
        return AuxTensors(
            point=point, r=0.0, A=zero2, B=np.zeros(n), M=zero2,
            A_bb=zero2, alpha=alpha, psi=None, mu=None, trivial=True,
        )
    r, r_i, r_ij = _second_vertical_r(tw)
    A = (
        L * np.outer(ell, r_i)
        + (2.0 / 3.0) * L * np.outer(r_i, ell)
        + r * np.outer(ell, ell)
        + (1.0 / 3.0) * L**2 * r_ij
    )
    B = r * L * ell + (1.0 / 3.0) * L**2 * r_i
    M = L * np.outer(ell, r_i) + L * np.outer(r_i, ell) + L**2 * r_ij
    _, nabla_C = _nabla_vertical_C(tw)
    A_bb = nabla_C.T + (np.outer(ell, tw.C) + np.outer(tw.C, ell)) / L
    lhs = L * A_bb
    alpha, _ = _proportionality(lhs, hbar, tw.g_inv)
    psi = L * tw.C_sq / (n + 1) + alpha
    return AuxTensors(
        point=point, r=r, A=A, B=B, M=M, A_bb=A_bb,
        alpha=alpha, psi=psi, mu=None, trivial=False,
    )


def _proportionality(mat: np.ndarray, hbar: np.ndarray, g_inv: np.ndarray) -> tuple[float, float]:
    """Best scalar lam with mat = lam * hbar by the metric trace, and the
    relative residual of the proportionality."""
    n = hbar.shape[0]
    lam = float(np.einsum("xw,xw", g_inv, mat)) / (n - 1)
    res = rel_residual(_norm(mat - lam * hbar), _norm(mat), abs(lam) * _norm(hbar))
    return lam, res


def proportionality_fit(mat: np.ndarray, hbar: np.ndarray, g_inv: np.ndarray) -> tuple[float, float]:
    """Public wrapper used by the gated checkers and their synthetic tests."""
    return _proportionality(mat, hbar, g_inv)


# -- point-level identity residuals -------------------------------------------


_PROBE_RNG = np.random.default_rng(20240)
_PROBE_COEFFS: dict[int, tuple[np.ndarray, ...]] = {}


def _probe_vector_jets(tower: CurvatureJets) -> np.ndarray:
    """A fixed generic polynomial vector field used by the connection
    cross-checks; quadratic in y so both derivative kinds see curvature."""
    n = tower.n
    if n not in _PROBE_COEFFS:
        rng = np.random.default_rng(97 + n)
        _PROBE_COEFFS[n] = (
            rng.uniform(-1, 1, n),
            rng.uniform(-1, 1, (n, n)),
            rng.uniform(-1, 1, (n, n)),
            rng.uniform(-1, 1, (n, n, n)),
        )
    a, b, c, d = _PROBE_COEFFS[n]
    xs = [v.truncate(min(2, tower.order)) for v in tower.x_vars]
    ys = [v.truncate(min(2, tower.order)) for v in tower.y_vars]
    out = np.empty(n, dtype=object)
    for i in range(n):
        acc = Jet.constant(xs[0].space, tower._base, float(a[i]))
        for j in range(n):
            acc = acc + b[i, j] * xs[j] + c[i, j] * ys[j]
            for k in range(n):
                acc = acc + d[i, j, k] * ys[j] * ys[k]
        out[i] = acc
    return out


def eq5_residual(T: np.ndarray, hbar: np.ndarray, r: float, r_grad: np.ndarray) -> float:
    """Landsberg torsion-gradient form: T as the symmetrized angular product
    of the vertical r-gradient, scaled by -1/(3r)."""
    rhs = (
        np.einsum("xw,y->xyw", hbar, r_grad)
        + np.einsum("yw,x->xyw", hbar, r_grad)
        + np.einsum("xy,w->xyw", hbar, r_grad)
    ) * (-1.0 / (3.0 * r))
    return rel_residual(_norm(T - rhs), _norm(T), _norm(rhs), abs(r) * _norm(hbar))


def eq6_residual(C: np.ndarray, r: float, r_grad: np.ndarray, n: int) -> float:
    rhs = (-3.0 * r / (n + 1)) * C
    return rel_residual(_norm(r_grad - rhs), _norm(r_grad), _norm(rhs), abs(r))


def eq7_residual(ell: np.ndarray, C: np.ndarray, dC: np.ndarray, L: float, n: int) -> float:
    """Closure of the mean torsion under its vertical derivative (the step
    that forces C = 0 in the constant-curvature reduction).  `dC[w, x]` is
    the plain fiber derivative of C_w by y^x."""
    lhs = (
        np.outer(ell, C)
        + np.outer(C, ell)
        + L * (dC.T - (3.0 / (n + 1)) * np.outer(C, C))
    )
    scale = max(_norm(np.outer(ell, C)), L * _norm(dC), L * _norm(C) ** 2, NOISE_ABS)
    return rel_residual(_norm(lhs), scale)


def eq8_residual(
    ell: np.ndarray, C: np.ndarray, dC: np.ndarray, L: float, n: int,
    psi: float, hbar: np.ndarray,
) -> float:
    lhs = (
        np.outer(ell, C)
        + np.outer(C, ell)
        + L * (dC.T - (2.0 / (n + 1)) * np.outer(C, C))
    )
    rhs = psi * hbar
    return rel_residual(_norm(lhs - rhs), _norm(lhs), _norm(rhs), _norm(hbar))


def is_c_reducible(
    fixture: MetricFixture,
    point: ChartPoint,
    order: int = 3,
    tower: CurvatureJets | None = None,
    tol_identity: float = DEFAULT_TOL_IDENTITY,
    tol_zero: float = DEFAULT_TOL_ZERO,
) -> tuple[bool, float, bool]:
    """(verdict, residual, trivial): does the Cartan tensor have the
    symmetrized angular-times-mean-torsion form?  Points with a vanishing
    Cartan tensor are vacuously reducible and flagged trivial."""
    tw = tower if tower is not None else CurvatureJets(fixture, point, order)
    num, T_norm = _cred_numerator(tw)
    if T_norm < tol_zero:
        return True, 0.0, True
    res = num / max(T_norm, NOISE_ABS)
    return res < tol_identity, res, False


def _cred_numerator(tw: CurvatureJets) -> tuple[float, float]:
    n = tw.n
    sym = (
        np.einsum("ij,k->ijk", tw.hbar, tw.C)
        + np.einsum("jk,i->ijk", tw.hbar, tw.C)
        + np.einsum("ki,j->ijk", tw.hbar, tw.C)
    ) / (n + 1)
    return _norm(tw.T - sym), _norm(tw.T)


def check_prop25(
    fixture: MetricFixture,
    point: ChartPoint,
    order: int = 4,
    tower: CurvatureJets | None = None,
    tol_identity: float = DEFAULT_TOL_IDENTITY,
    tol_zero: float = DEFAULT_TOL_ZERO,
) -> tuple[float, float]:
    """(alpha, residual) of the C-reducible vertical balance: the Cartan
    vertical derivative of the mean torsion, symmetrized with ell (x) C,
    is proportional to the angular metric.  Refuses points that are not
    non-trivially C-reducible."""
    tw = tower if tower is not None else CurvatureJets(fixture, point, order)
    verdict, res, trivial = is_c_reducible(fixture, point, tower=tw,
                                           tol_identity=tol_identity, tol_zero=tol_zero)
    if trivial:
        return 0.0, 0.0
    if not verdict:
        raise GateRefused(f"point is not C-reducible (residual {res:.3e})")
    _, nabla_C = _nabla_vertical_C(tw)
    lhs = tw.L * nabla_C.T + np.outer(tw.ell, tw.C) + np.outer(tw.C, tw.ell)
    return _proportionality(lhs, tw.hbar, tw.g_inv)


# -- per-point evaluation -------------------------------------------------------


@dataclass
class PointEvaluation:
    point: ChartPoint
    L: float
    T_norm: float
    P_norm: float
    land_norm: float
    land_gap: float
    cred_num: float
    fit: ScalarCurvatureFit
    identities: dict[str, float]


def _identity_residuals(tw: CurvatureJets, fit: ScalarCurvatureFit,
                        deep: bool, seed: int, n_triples: int) -> dict[str, float]:
    n = tw.n
    y = tw.point.y
    L, ell, hbar, phi, T = tw.L, tw.ell, tw.hbar, tw.phi, tw.T
    yvars = [tw.yv(m) for m in range(n)]
    out: dict[str, float] = {}

    # total symmetry of the Cartan tensor and its Cartan vertical derivative
    dT = partial_values(tw.T_jets, yvars)
    corr = (
        np.einsum("sjk,sim->ijkm", T, tw.cartan_up)
        + np.einsum("isk,sjm->ijkm", T, tw.cartan_up)
        + np.einsum("ijs,skm->ijkm", T, tw.cartan_up)
    )
    nabla_T = dT - corr
    out["cartan-total-symmetry"] = rel_residual(
        max(max_asymmetry(T), max_asymmetry(nabla_T)), _norm(T), _norm(nabla_T), 1.0
    )

    # gradients of L and ell
    dL = partial_values(np.array(tw.L_jet, dtype=object), yvars)
    dell = partial_values(tw.ell_jets, yvars)
    out["support-gradient"] = rel_residual(
        max(_norm(dL - ell), _norm(dell - hbar / L)), 1.0
    )

    # vertical derivative of the angular projector
    dphi = partial_values(tw.phi_jets, yvars)
    exp_phi = -np.einsum("jk,i->ijk", hbar, y) / L**2 - np.einsum("j,ik->ijk", ell, phi) / L
    out["projector-vertical-derivative"] = rel_residual(_norm(dphi - exp_phi), _norm(dphi), 1.0)

    # vertical derivatives of the angular metric, both connections
    dhb = partial_values(tw.hbar_jets, yvars)
    lower = (np.einsum("ik,j->ijk", hbar, ell) + np.einsum("jk,i->ijk", hbar, ell)) / L
    out["angular-vertical-derivative-berwald"] = rel_residual(
        _norm(dhb - (2.0 * T - lower)), _norm(dhb), _norm(T), 1.0
    )
    corr_h = np.einsum("mj,mik->ijk", hbar, tw.cartan_up) + np.einsum(
        "im,mjk->ijk", hbar, tw.cartan_up
    )
    out["angular-vertical-derivative-cartan"] = rel_residual(
        _norm((dhb - corr_h) + lower), _norm(dhb), 1.0
    )

    # symmetry of the Cartan vertical derivative of the mean torsion
    dC, nabla_C = _nabla_vertical_C(tw)
    out["mean-torsion-gradient-symmetry"] = rel_residual(
        _norm(nabla_C - nabla_C.T), _norm(nabla_C), _norm(tw.C), 1.0
    )

    # connection cross-checks on a generic vector field
    V = _probe_vector_jets(tw)
    Vv = value_array(V)
    dV = partial_values(V, yvars)
    cartan_vert = dV + np.einsum("imx,m->ix", tw.cartan_up, Vv)
    torsion_term = np.einsum("ixm,m->ix", tw.cartan_up, Vv)
    out["berwald-cartan-vertical-relation"] = rel_residual(
        _norm(dV - (cartan_vert - torsion_term)), _norm(dV), 1.0
    )
    hb_berwald = horizontal_deriv_values(tw, V, ("up",), "berwald")
    hb_cartan = horizontal_deriv_values(tw, V, ("up",), "cartan")
    phat_term = np.einsum("ims,s->im", tw.P_hat, Vv)
    out["berwald-cartan-horizontal-relation"] = rel_residual(
        _norm(hb_berwald - (hb_cartan + phat_term)),
        _norm(hb_berwald), _norm(hb_cartan), 1.0,
    )

    # contraction identities of the curvature objects
    out["hv-curvature-eta-contraction"] = rel_residual(
        _norm(np.einsum("ijkl,j->ikl", tw.P_berwald, y)), _norm(tw.P_berwald), 1.0
    )
    out["vh-torsion-deviation-contraction"] = rel_residual(
        _norm(np.einsum("ipq,p->iq", tw.R_hat, y) - tw.H), _norm(tw.H), 1.0
    )
    out["landsberg-route-agreement"] = rel_residual(
        _norm(tw.landsberg - tw.landsberg_spray_route),
        _norm(tw.landsberg), _norm(tw.landsberg_spray_route), 1.0,
    )

    # connection ladder, deflection, metricity, parallel norm
    ladder = max(
        _norm(tw.N @ y - 2.0 * tw.G),
        _norm(np.einsum("ijk,k->ij", tw.G_berwald, y) - tw.N),
        _norm(np.einsum("ijk,j,k->i", tw.Gamma_cartan, y, y) - 2.0 * tw.G),
    )
    out["nonlinear-connection-ladder"] = rel_residual(ladder, _norm(tw.N), _norm(tw.G), 1.0)
    defl = -tw.N + np.einsum("s,ism->im", y, tw.G_berwald)
    out["deflection"] = rel_residual(_norm(defl), _norm(tw.N), 1.0)
    metricity = horizontal_deriv_values(tw, tw.g_jets, ("down", "down"), "cartan")
    out["cartan-metricity"] = rel_residual(_norm(metricity), _norm(tw.g), 1.0)
    dL_h = tw.horizontal_partial(np.array(tw.L_jet, dtype=object))
    out["horizontal-norm-parallel"] = rel_residual(_norm(dL_h), L)

    # Landsberg-hypothesis identities (reported only on Landsberg fixtures)
    nabla_T_h = horizontal_deriv_values(tw, tw.T_jets, ("down",) * 3, "cartan")
    out["landsberg-derivative-symmetry"] = rel_residual(
        max_asymmetry(nabla_T_h), _norm(nabla_T_h), _norm(T), 1.0
    )
    nabla_C_h = horizontal_deriv_values(tw, tw.C_jets, ("down",), "cartan")
    out["landsberg-mean-derivative-symmetry"] = rel_residual(
        _norm(nabla_C_h - nabla_C_h.T), _norm(nabla_C_h), 1.0
    )
    mu, mu_res = _proportionality(nabla_C_h.T, hbar, tw.g_inv)
    out["mean-torsion-horizontal-proportionality"] = mu_res
    out["mean-torsion-forced-vanishing"] = rel_residual(
        (n - 2) * abs(mu) * _norm(tw.C), abs(mu), _norm(tw.C), 1.0
    )
    out["_mu"] = mu

    # C-reducible vertical balance (+ its psi form)
    lhs25 = L * nabla_C.T + np.outer(ell, tw.C) + np.outer(tw.C, ell)
    alpha, alpha_res = _proportionality(lhs25, hbar, tw.g_inv)
    out["c-reducible-vertical-balance"] = alpha_res
    psi = L * tw.C_sq / (n + 1) + alpha
    out["c-reducible-vertical-balance-psi"] = eq8_residual(ell, tw.C, dC, L, n, psi, hbar)
    out["_alpha"] = alpha
    out["_psi"] = psi

    # scalar-curvature family
    if not fit.flat and fit.residual <= 1e-3:
        r, r_i, r_ij = _second_vertical_r(tw)
        A = (
            L * np.outer(ell, r_i)
            + (2.0 / 3.0) * L * np.outer(r_i, ell)
            + r * np.outer(ell, ell)
            + (1.0 / 3.0) * L**2 * r_ij
        )
        B = r * L * ell + (1.0 / 3.0) * L**2 * r_i
        M = L * np.outer(ell, r_i) + L * np.outer(r_i, ell) + L**2 * r_ij
        rl2 = abs(r) * L**2
        out["scalar-homogeneity"] = fit.homogeneity_residual
        out["scalar-ab-contractions"] = rel_residual(
            max(
                _norm(y @ A - (r * L * ell + (2.0 / 3.0) * L**2 * r_i)),
                _norm(A @ y - B),
                abs(float(y @ A @ y) - r * L**2),
                abs(float(B @ y) - r * L**2),
            ),
            _norm(A), _norm(B), rl2,
        )
        B_jets = [
            _r_jet(tw) * tw.L_jet * tw.ell_jets[i]
            + (1.0 / 3.0) * tw.L_jet * tw.L_jet * _r_jet(tw).deriv(tw.yv(i))
            for i in range(n)
        ]
        dB = np.array([[B_jets[i].deriv(tw.yv(j)).value for j in range(n)] for i in range(n)])
        out["scalar-b-gradient"] = rel_residual(
            _norm(dB - (A + r * hbar)), _norm(dB), _norm(A), 1.0
        )
        term = (
            np.einsum("pa,iq->iapq", r * hbar + A, phi)
            - np.einsum("p,qa,i->iapq", B, hbar, y) / L**2
            - np.einsum("p,q,ia->iapq", B, ell, phi) / L
        )
        R_exp = term - term.transpose(0, 1, 3, 2)
        out["h-curvature-scalar-form"] = rel_residual(
            _norm(tw.R_berwald - R_exp), _norm(tw.R_berwald), _norm(R_exp), 1.0
        )
        rhat_exp = np.einsum("p,iq->ipq", B, phi) - np.einsum("q,ip->ipq", B, phi)
        out["vh-torsion-scalar-form"] = rel_residual(
            _norm(tw.R_hat - rhat_exp), _norm(tw.R_hat), _norm(rhat_exp), 1.0
        )
        lhs1a = spray_cov_deriv_values(tw, tw.P_low_jets, ("down",) * 4)
        bracket = (
            np.einsum("kl,j->jkl", hbar, r_i)
            + np.einsum("jl,k->jkl", hbar, r_i)
            + np.einsum("jk,l->jkl", hbar, r_i)
            + 3.0 * r * T
        )
        rhs1a = (2.0 / 3.0) * L * np.einsum("z,jkl->jklz", ell, bracket) - (1.0 / 3.0) * (
            np.einsum("jz,kl->jklz", hbar, M)
            + np.einsum("kz,jl->jklz", hbar, M)
            + np.einsum("lz,jk->jklz", hbar, M)
        )
        scale1a = max(_norm(lhs1a), _norm(rhs1a), rl2 * _norm(T), 1.0)
        out["hv-spray-derivative-expansion"] = rel_residual(_norm(lhs1a - rhs1a), scale1a)
        lhs4 = np.einsum("jklz,z->jkl", lhs1a, y)
        rhs4 = (2.0 / 3.0) * L**2 * bracket
        out["hv-spray-derivative-eta-form"] = rel_residual(
            _norm(lhs4 - rhs4), max(_norm(lhs4), _norm(rhs4), rl2 * _norm(T), 1.0)
        )
        rhat_const = r * L * (
            np.einsum("p,iq->ipq", ell, np.eye(n)) - np.einsum("q,ip->ipq", ell, np.eye(n))
        )
        out["vh-torsion-constant-form"] = rel_residual(
            _norm(tw.R_hat - rhat_const), _norm(tw.R_hat), _norm(rhat_const), 1.0
        )
        out["scalar-vertical-parallel"] = rel_residual(_norm(r_i), abs(r), 1.0)
        out["scalar-horizontal-parallel"] = rel_residual(_norm(fit.r_grad_h), abs(r), 1.0)
        transfer = fit.r_grad_h - (float(y @ fit.r_grad_h) / L) * ell
        out["scalar-horizontal-transfer"] = rel_residual(
            _norm(transfer), _norm(fit.r_grad_h), abs(r), 1.0
        )
        if abs(r) > NOISE_ABS:
            out["landsberg-torsion-gradient-form"] = eq5_residual(T, hbar, r, r_i)
            out["scalar-gradient-mean-torsion"] = eq6_residual(tw.C, r, r_i, n)
            out["berwald-mean-torsion-closure"] = eq7_residual(ell, tw.C, dC, L, n)

    if deep:
        out["second-bianchi-horizontal"] = bianchi_residual(
            tw.fixture, tw.point, n_triples=n_triples, seed=seed, tower=tw
        )
        out["hv-h-exchange"] = hv_exchange_residual(tw.fixture, tw.point, tower=tw)
    return out


def evaluate_point(
    fixture: MetricFixture,
    point: ChartPoint,
    order: int = 6,
    *,
    with_identities: bool = False,
    deep: bool = False,
    seed: int = 0,
    n_triples: int = 12,
) -> PointEvaluation:
    tw = CurvatureJets(fixture, point, order)
    fit = extract_scalar_curvature(fixture, point, tower=tw)
    cred_num, _ = _cred_numerator(tw)
    idents: dict[str, float] = {}
    if with_identities:
        idents = _identity_residuals(tw, fit, deep=deep, seed=seed, n_triples=n_triples)
    return PointEvaluation(
        point=point,
        L=tw.L,
        T_norm=_norm(tw.T),
        P_norm=_norm(tw.P_berwald),
        land_norm=_norm(tw.landsberg),
        land_gap=rel_residual(
            _norm(tw.landsberg - tw.landsberg_spray_route),
            _norm(tw.landsberg), _norm(tw.landsberg_spray_route), 1.0,
        ),
        cred_num=cred_num,
        fit=fit,
        identities=idents,
    )


def _map_points(fn, points: Sequence[ChartPoint], threads: int) -> list:
    if threads <= 1:
        return [fn(p) for p in points]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, points))


# -- classification -------------------------------------------------------------


@dataclass
class PredicateVerdict:
    value: bool
    max_residual: float
    tolerance: float
    witness: dict | None = None
    trivial: bool = False
    note: str = ""

    def to_dict(self) -> dict:
        out = {
            "value": self.value,
            "max_residual": self.max_residual,
            "tolerance": self.tolerance,
            "witness": self.witness,
        }
        if self.trivial:
            out["trivial"] = True
        if self.note:
            out["note"] = self.note
        return out


@dataclass
class ClassificationReport:
    fixture: str
    dim: int
    params: dict
    samples: int
    seed: int
    predicates: dict[str, PredicateVerdict]
    r_mean: float
    r_std: float
    r_min_abs: float
    any_flat: bool
    records: list[PointEvaluation] = field(repr=False)

    def verdict(self, name: str) -> bool:
        return self.predicates[name].value

    @property
    def nonzero_r(self) -> bool:
        return (
            self.verdict("scalar_curvature")
            and not self.any_flat
            and self.r_min_abs > self.predicates["scalar_curvature"].tolerance
        )

    def to_dict(self) -> dict:
        return {
            "fixture": self.fixture,
            "dim": self.dim,
            "params": self.params,
            "samples": self.samples,
            "seed": self.seed,
            "predicates": {k: v.to_dict() for k, v in self.predicates.items()},
            "scalar_curvature_value": {
                "mean": self.r_mean,
                "std": self.r_std,
                "min_abs": self.r_min_abs,
                "flat": self.any_flat,
            },
        }


def _argmax_witness(points: list[ChartPoint], residuals: list[float]) -> dict | None:
    if not residuals:
        return None
    idx = int(np.argmax(residuals))
    return points[idx].to_dict()


def classify(
    fixture: MetricFixture,
    spec: SampleSpec,
    tol_identity: float = DEFAULT_TOL_IDENTITY,
    tol_zero: float = DEFAULT_TOL_ZERO,
    threads: int = 1,
    order: int = 6,
    records: list[PointEvaluation] | None = None,
    points: list[ChartPoint] | None = None,
) -> ClassificationReport:
    """Evaluate the five predicates at every sample and aggregate verdicts.

    Aggregation is an associative max/AND merge, so the outcome does not
    depend on evaluation order or thread count.
    """
    if points is None:
        points = sample_points(fixture, spec)
    if records is None:
        records = _map_points(lambda p: evaluate_point(fixture, p, order), points, threads)

    pts = [rec.point for rec in records]
    t_norms = [rec.T_norm for rec in records]
    p_norms = [rec.P_norm for rec in records]
    l_norms = [rec.land_norm for rec in records]
    cred_res = [
        0.0 if rec.T_norm < tol_zero else rec.cred_num / max(rec.T_norm, NOISE_ABS)
        for rec in records
    ]
    cred_trivial = all(rec.T_norm < tol_zero for rec in records)
    fit_res = [rec.fit.residual for rec in records]
    r_values = np.array([rec.fit.r for rec in records])
    grads = [
        max(_norm(rec.fit.r_grad_v), _norm(rec.fit.r_grad_h)) for rec in records
    ]
    any_flat = any(rec.fit.flat for rec in records)

    scalar_ok = max(fit_res) < tol_identity
    const_residual = max(float(np.std(r_values)), max(grads))
    predicates = {
        "riemannian": PredicateVerdict(
            max(t_norms) < tol_zero, max(t_norms), tol_zero, _argmax_witness(pts, t_norms)
        ),
        "berwald": PredicateVerdict(
            max(p_norms) < tol_zero, max(p_norms), tol_zero, _argmax_witness(pts, p_norms)
        ),
        "landsberg": PredicateVerdict(
            max(l_norms) < tol_zero, max(l_norms), tol_zero, _argmax_witness(pts, l_norms)
        ),
        "c_reducible": PredicateVerdict(
            max(cred_res) < tol_identity,
            max(cred_res),
            tol_identity,
            _argmax_witness(pts, cred_res),
            trivial=cred_trivial,
            note="Cartan tensor vanishes; reducibility holds vacuously" if cred_trivial else "",
        ),
        "scalar_curvature": PredicateVerdict(
            scalar_ok, max(fit_res), tol_identity, _argmax_witness(pts, fit_res),
            trivial=any_flat,
            note="flat deviation tensor (r = 0)" if any_flat else "",
        ),
        "constant_r": PredicateVerdict(
            scalar_ok and const_residual < tol_identity,
            const_residual,
            tol_identity,
            _argmax_witness(pts, grads),
        ),
    }
    return ClassificationReport(
        fixture=fixture.name,
        dim=fixture.dim,
        params=dict(fixture.params),
        samples=len(records),
        seed=spec.seed,
        predicates=predicates,
        r_mean=float(np.mean(r_values)),
        r_std=float(np.std(r_values)),
        r_min_abs=float(np.min(np.abs(r_values))),
        any_flat=any_flat,
        records=records,
    )


# -- identity suite ---------------------------------------------------------------


@dataclass
class IdentityResult:
    identity: str
    status: str  # pass | fail | vacuous | trivial
    max_residual: float | None
    tolerance: float
    samples: int
    witness: dict | None = None
    note: str = ""

    def to_dict(self) -> dict:
        return {
            "id": self.identity,
            "status": self.status,
            "max_residual": self.max_residual,
            "tolerance": self.tolerance,
            "samples": self.samples,
            "witness": self.witness,
            "note": self.note,
        }


# identity id -> (gate, description)
IDENTITY_CATALOG: dict[str, tuple[str, str]] = {
    "cartan-total-symmetry": ("always", "Cartan tensor and its vertical derivative are totally symmetric"),
    "support-gradient": ("always", "fiber gradient of L is the supporting covector; of that, the angular metric over L"),
    "projector-vertical-derivative": ("always", "vertical derivative of the angular projector"),
    "angular-vertical-derivative-berwald": ("always", "Berwald vertical derivative of the angular metric"),
    "angular-vertical-derivative-cartan": ("always", "Cartan vertical derivative of the angular metric"),
    "mean-torsion-gradient-symmetry": ("always", "Cartan vertical derivative of the mean torsion is symmetric"),
    "berwald-cartan-vertical-relation": ("always", "vertical derivatives of the two connections differ by the torsion"),
    "berwald-cartan-horizontal-relation": ("always", "horizontal derivatives differ by the raised Landsberg tensor"),
    "hv-curvature-eta-contraction": ("always", "hv-curvature annihilates the supporting direction"),
    "vh-torsion-deviation-contraction": ("always", "contracting the vh-torsion with eta returns the deviation tensor"),
    "landsberg-route-agreement": ("always", "spray-coefficient and covariant-derivative Landsberg routes agree"),
    "nonlinear-connection-ladder": ("always", "homogeneity ladder of spray, nonlinear connection, coefficients"),
    "deflection": ("always", "horizontal derivative of the supporting section vanishes"),
    "cartan-metricity": ("always", "Cartan horizontal derivative of the metric vanishes"),
    "horizontal-norm-parallel": ("always", "horizontal derivative of L vanishes"),
    "second-bianchi-horizontal": ("deep", "cyclic horizontal differential identity of the h-curvature"),
    "hv-h-exchange": ("deep", "spray derivative of hv-curvature equals vertical derivative of h-curvature along eta"),
    "scalar-homogeneity": ("scalar", "scalar curvature is 0-homogeneous in y"),
    "scalar-ab-contractions": ("scalar", "eta-contractions of the scalar companion tensors"),
    "scalar-b-gradient": ("scalar", "fiber gradient of the B companion"),
    "h-curvature-scalar-form": ("scalar", "h-curvature assembled from the scalar companions"),
    "vh-torsion-scalar-form": ("scalar", "vh-torsion as the alternated B-projector product"),
    "hv-spray-derivative-expansion": ("scalar", "spray derivative of the lowered hv-curvature, full expansion"),
    "hv-spray-derivative-eta-form": ("scalar", "eta-contracted form of the spray-derivative expansion"),
    "vh-torsion-constant-form": ("scalar-constant", "vh-torsion in constant-curvature form"),
    "c-reducible-vertical-balance": ("c-reducible", "vertical balance of the mean torsion against the angular metric"),
    "c-reducible-vertical-balance-psi": ("c-reducible", "vertical balance in its aggregated scalar form"),
    "landsberg-derivative-symmetry": ("landsberg", "horizontal derivative of the Cartan tensor is totally symmetric"),
    "landsberg-mean-derivative-symmetry": ("landsberg", "horizontal derivative of the mean torsion is symmetric"),
    "mean-torsion-horizontal-proportionality": ("landsberg-c-reducible", "horizontal derivative of the mean torsion is angular-proportional"),
    "mean-torsion-forced-vanishing": ("landsberg-c-reducible", "the proportionality scalar forces the mean torsion to vanish"),
    "landsberg-torsion-gradient-form": ("landsberg-scalar-nonzero", "Cartan tensor from the vertical gradient of the scalar curvature"),
    "scalar-gradient-mean-torsion": ("landsberg-scalar-nonzero", "vertical gradient of the scalar curvature from the mean torsion"),
    "berwald-mean-torsion-closure": ("berwald-nonzero-r", "closure equation that kills the mean torsion"),
    "scalar-vertical-parallel": ("berwald-nonzero-r", "scalar curvature is vertically parallel"),
    "scalar-horizontal-parallel": ("berwald-nonzero-r", "scalar curvature is horizontally parallel"),
    "scalar-horizontal-transfer": ("berwald-nonzero-r", "horizontal gradient transfers through the supporting covector"),
}


def _gate_status(gate: str, cls: ClassificationReport, n: int) -> tuple[bool, str]:
    """(applicable, note when not applicable)."""
    if gate in ("always", "deep"):
        return True, ""
    scalar = cls.verdict("scalar_curvature")
    if gate == "scalar":
        if not scalar:
            return False, "fixture is not of scalar curvature"
        if cls.any_flat:
            return False, "deviation tensor vanishes (flat, r = 0): companions are undefined"
        return True, ""
    if gate == "scalar-constant":
        if not (scalar and not cls.any_flat):
            return False, "needs a nonflat scalar-curvature fixture"
        if not cls.verdict("constant_r"):
            return False, "scalar curvature is not constant"
        return True, ""
    if gate == "c-reducible":
        if not cls.verdict("c_reducible"):
            return False, "fixture is not C-reducible"
        if cls.predicates["c_reducible"].trivial:
            return False, "Cartan tensor vanishes: balance is trivially empty"
        return True, ""
    if gate == "landsberg":
        if not cls.verdict("landsberg"):
            return False, "fixture is not Landsberg"
        return True, ""
    if gate == "landsberg-c-reducible":
        if not cls.verdict("landsberg"):
            return False, "fixture is not Landsberg"
        if not cls.verdict("c_reducible") or cls.predicates["c_reducible"].trivial or n < 3:
            return False, "needs a non-trivially C-reducible Landsberg fixture with n >= 3"
        return True, ""
    if gate == "landsberg-scalar-nonzero":
        if not cls.verdict("landsberg"):
            return False, "fixture is not Landsberg"
        if not cls.nonzero_r:
            return False, "needs nowhere-zero scalar curvature"
        return True, ""
    if gate == "berwald-nonzero-r":
        if not cls.verdict("berwald"):
            return False, "fixture is not Berwald"
        if not cls.nonzero_r:
            return False, "needs nowhere-zero scalar curvature (r = 0 here)"
        return True, ""
    raise ValueError(f"unknown gate {gate!r}")


def verify_identities(
    fixture: MetricFixture,
    spec: SampleSpec,
    tol_identity: float = DEFAULT_TOL_IDENTITY,
    tol_zero: float = DEFAULT_TOL_ZERO,
    threads: int = 1,
    order: int = 7,
    deep: bool = True,
    n_triples: int = 12,
) -> tuple[ClassificationReport, list[IdentityResult]]:
    """Run every applicable identity at every sample of the fixture."""
    points = sample_points(fixture, spec)
    records = _map_points(
        lambda p: evaluate_point(
            fixture, p, order, with_identities=True, deep=deep,
            seed=spec.seed, n_triples=n_triples,
        ),
        points,
        threads,
    )
    cls = classify(fixture, spec, tol_identity, tol_zero, records=records, points=points)
    results: list[IdentityResult] = []
    riemannian = cls.verdict("riemannian")
    for ident, (gate, _desc) in IDENTITY_CATALOG.items():
        if gate == "deep" and not deep:
            continue
        applicable, note = _gate_status(gate, cls, fixture.dim)
        if not applicable:
            results.append(IdentityResult(
                identity=ident, status="vacuous", max_residual=None,
                tolerance=tol_identity, samples=0, note=note,
            ))
            continue
        residuals = [rec.identities[ident] for rec in records if ident in rec.identities]
        pts = [rec.point for rec in records if ident in rec.identities]
        if not residuals:
            results.append(IdentityResult(
                identity=ident, status="vacuous", max_residual=None,
                tolerance=tol_identity, samples=0,
                note="no sample satisfied the pointwise hypothesis",
            ))
            continue
        worst = max(residuals)
        status = "pass" if worst < tol_identity else "fail"
        trivial_groups = ("landsberg-scalar-nonzero", "landsberg-c-reducible",
                          "berwald-nonzero-r", "c-reducible")
        if status == "pass" and riemannian and gate in trivial_groups:
            status = "trivial"
            note = "all torsion terms vanish on a Riemannian fixture"
        results.append(IdentityResult(
            identity=ident, status=status, max_residual=worst,
            tolerance=tol_identity, samples=len(residuals),
            witness=_argmax_witness(pts, residuals), note=note,
        ))
    return cls, results


# -- end-to-end pipeline ------------------------------------------------------------


@dataclass
class NumataReport:
    classification: ClassificationReport
    hypothesis: dict[str, bool]
    hypothesis_holds: bool
    failed_legs: list[str]
    conclusion: dict[str, bool] | None
    conclusion_holds: bool | None
    chain: list[IdentityResult]
    note: str

    def to_dict(self) -> dict:
        return {
            "hypothesis": self.hypothesis,
            "hypothesis_holds": self.hypothesis_holds,
            "failed_legs": self.failed_legs,
            "conclusion": self.conclusion,
            "conclusion_holds": self.conclusion_holds,
            "note": self.note,
        }


def numata_pipeline(
    fixture: MetricFixture,
    spec: SampleSpec,
    tol_identity: float = DEFAULT_TOL_IDENTITY,
    tol_zero: float = DEFAULT_TOL_ZERO,
    threads: int = 1,
) -> NumataReport:
    """Check the Landsberg-to-Riemannian reduction end to end.

    Hypothesis: Landsberg, of scalar curvature, with nowhere-zero r, in
    dimension >= 3.  When it holds the pipeline asserts the conclusion
    (Riemannian with constant r) and records every residual of the
    supporting identity chain; otherwise it names the failed legs.
    """
    if fixture.dim < 3:
        raise ValueError("the reduction requires dimension >= 3")
    cls, chain = verify_identities(
        fixture, spec, tol_identity, tol_zero, threads=threads
    )
    hypothesis = {
        "landsberg": cls.verdict("landsberg"),
        "scalar_curvature": cls.verdict("scalar_curvature"),
        "nonzero_scalar_curvature": cls.nonzero_r,
    }
    failed = [k for k, v in hypothesis.items() if not v]
    holds = not failed
    if holds:
        conclusion = {
            "riemannian": cls.verdict("riemannian"),
            "constant_r": cls.verdict("constant_r"),
        }
        concl_holds = all(conclusion.values())
        note = (
            "hypothesis satisfied; conclusion "
            + ("verified" if concl_holds else "FAILED")
            + f" with r = {cls.r_mean:.6g}"
        )
    else:
        conclusion = None
        concl_holds = None
        if "nonzero_scalar_curvature" in failed and hypothesis["scalar_curvature"]:
            note = (
                "hypothesis fails: scalar curvature vanishes (r = 0); "
                "the reduction requires nowhere-zero scalar curvature"
            )
        else:
            note = "hypothesis fails on: " + ", ".join(failed)
    return NumataReport(
        classification=cls,
        hypothesis=hypothesis,
        hypothesis_holds=holds,
        failed_legs=failed,
        conclusion=conclusion,
        conclusion_holds=concl_holds,
        chain=chain,
        note=note,
    )
