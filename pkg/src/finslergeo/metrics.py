"""Finsler metric fixtures and deterministic chart-point sampling.

Every fixture is a code-level closed form L(x, y) that jet arithmetic can
evaluate exactly, together with a domain predicate and named parameters.
The catalog covers the classification landscape: Euclidean, constant
sectional curvature Riemannian, a locally Minkowski quartic, the Funk
metric on the unit ball, and a generic Randers metric.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import jets
from .jets import Jet, fpow, lift, sqrt


class MetricsError(Exception):
    pass


class UnknownFixtureError(MetricsError):
    def __init__(self, name: str):
        self.name = name
        super().__init__(
            f"unknown fixture {name!r}; available: {', '.join(fixture_names())}"
        )


class InvalidParamsError(MetricsError):
    pass


class SamplingError(MetricsError):
    pass


class FixtureValidationError(MetricsError):
    """A fixture failed its registration checks.  Carries the witness point."""

    def __init__(self, message: str, witness: "ChartPoint | None" = None):
        self.witness = witness
        super().__init__(message)


@dataclass(frozen=True)
class ChartPoint:
    """A base point (x, y) in a local chart, with y != 0."""

    x: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "x", np.asarray(self.x, dtype=float))
        object.__setattr__(self, "y", np.asarray(self.y, dtype=float))
        if self.x.ndim != 1 or self.y.ndim != 1 or self.x.size != self.y.size:
            raise ValueError("x and y must be 1-d arrays of equal length")
        if not np.any(self.y != 0.0):
            raise ValueError("y must be nonzero (slit tangent bundle)")

    @property
    def dim(self) -> int:
        return self.x.size

    def to_dict(self) -> dict:
        return {"x": [float(v) for v in self.x], "y": [float(v) for v in self.y]}


@dataclass(frozen=True)
class MetricFixture:
    """A named closed-form Finsler function with domain predicate."""

    name: str
    dim: int
    L: Callable
    domain: Callable[[np.ndarray, np.ndarray], bool]
    params: dict = field(default_factory=dict)
    default_x_box: tuple[float, float] = (-1.0, 1.0)
    description: str = ""

    def L_value(self, point: ChartPoint) -> float:
        return lift(self.L, point, order=0).value

    def lift_L(self, point: ChartPoint, order: int) -> Jet:
        return lift(self.L, point, order=order)

    def contains(self, point: ChartPoint) -> bool:
        return bool(self.domain(point.x, point.y))


@dataclass(frozen=True)
class SampleSpec:
    """Deterministic sampling plan: x uniform in a box, y on a scaled sphere."""

    count: int
    seed: int = 0
    x_box: tuple[float, float] | None = None  # None: fixture default
    y_norm: float = 1.0
    max_rejections: int = 1000  # per requested point

    def __post_init__(self):
        if self.count < 1:
            raise ValueError("count must be >= 1")
        if self.y_norm <= 0:
            raise ValueError("y_norm must be positive")


@dataclass
class FixtureValidationReport:
    fixture: str
    dim: int
    passed: bool
    min_eigenvalue: float
    homogeneity_max_rel: float
    samples_checked: int

    def to_dict(self) -> dict:
        return {
            "fixture": self.fixture,
            "dim": self.dim,
            "passed": self.passed,
            "min_eigenvalue": self.min_eigenvalue,
            "homogeneity_max_rel": self.homogeneity_max_rel,
            "samples_checked": self.samples_checked,
        }


# -- fixture catalog -------------------------------------------------------


def _dot(a, b):
    acc = a[0] * b[0]
    for i in range(1, len(a)):
        acc = acc + a[i] * b[i]
    return acc


def _euclidean(dim: int, params: dict) -> MetricFixture:
    def L(x, y):
        return sqrt(_dot(y, y))

    return MetricFixture(
        name="euclidean",
        dim=dim,
        L=L,
        domain=lambda x, y: True,
        description="flat Euclidean norm |y|",
    )


def _riemann_const_k(dim: int, params: dict) -> MetricFixture:
    k = float(params.get("k", 1.0))

    def L(x, y):
        return 2.0 * sqrt(_dot(y, y)) / (1.0 + k * _dot(x, x))

    def domain(x, y):
        return 1.0 + k * float(np.dot(x, x)) > 0.1

    if k >= 0:
        box = (-1.0, 1.0)
    else:
        # keep 1 + k|x|^2 comfortably positive on the whole box
        half = 0.5 / np.sqrt(abs(k) * dim)
        box = (-half, half)
    return MetricFixture(
        name="riemann-const-k",
        dim=dim,
        L=L,
        domain=domain,
        params={"k": k},
        default_x_box=box,
        description="stereographic constant-sectional-curvature-k Riemannian metric",
    )


def _quartic_minkowski(dim: int, params: dict) -> MetricFixture:
    c = float(params.get("c", 1.0))
    if c < 0:
        raise InvalidParamsError(f"quartic-minkowski requires c >= 0, got c={c}")

    def L(x, y):
        quart = _dot([yi * yi for yi in y], [yi * yi for yi in y])
        quad = _dot(y, y)
        return fpow(quart + c * quad * quad, 0.25)

    return MetricFixture(
        name="quartic-minkowski",
        dim=dim,
        L=L,
        domain=lambda x, y: True,
        params={"c": c},
        description="locally Minkowski quartic norm (sum y^4 + c (sum y^2)^2)^(1/4)",
    )


def _funk(dim: int, params: dict) -> MetricFixture:
    def L(x, y):
        xx = _dot(x, x)
        yy = _dot(y, y)
        xy = _dot(x, y)
        return (sqrt((1.0 - xx) * yy + xy * xy) + xy) / (1.0 - xx)

    def domain(x, y):
        return float(np.dot(x, x)) < 1.0

    return MetricFixture(
        name="funk",
        dim=dim,
        L=L,
        domain=domain,
        default_x_box=(-0.6, 0.6),
        description="Funk metric on the open unit ball",
    )


def _randers_generic(dim: int, params: dict) -> MetricFixture:
    q = float(params.get("q", 0.3))
    b0 = float(params.get("b0", 0.4))
    if q < 0:
        raise InvalidParamsError(f"randers-generic requires q >= 0, got q={q}")
    if not 0.0 <= b0 < 1.0:
        raise InvalidParamsError(
            f"randers-generic requires 0 <= b0 < 1 (got b0={b0}): the drift "
            "one-form must satisfy ||b||_a < 1"
        )

    def L(x, y):
        conf = 1.0 + q * _dot(x, x)
        return sqrt(conf * _dot(y, y)) + b0 * y[0]

    return MetricFixture(
        name="randers-generic",
        dim=dim,
        L=L,
        domain=lambda x, y: True,
        params={"q": q, "b0": b0},
        description="Randers metric sqrt((1+q|x|^2)|y|^2) + b0*y_1",
    )


_BUILDERS: dict[str, Callable[[int, dict], MetricFixture]] = {
    "euclidean": _euclidean,
    "riemann-const-k": _riemann_const_k,
    "quartic-minkowski": _quartic_minkowski,
    "funk": _funk,
    "randers-generic": _randers_generic,
}

FIXTURE_PARAMS: dict[str, dict[str, float]] = {
    "euclidean": {},
    "riemann-const-k": {"k": 1.0},
    "quartic-minkowski": {"c": 1.0},
    "funk": {},
    "randers-generic": {"q": 0.3, "b0": 0.4},
}


def fixture_names() -> list[str]:
    return sorted(_BUILDERS)


def builtin_fixture(
    name: str, dim: int, params: dict | None = None, validate: bool = True
) -> MetricFixture:
    """Construct a catalog fixture; optionally run the registration scan.

    The scan checks positive 1-homogeneity of L and positive definiteness
    of the fundamental tensor on a small deterministic probe set (random
    points plus the coordinate axes, which catch quartic degeneracies).
    """
    if name not in _BUILDERS:
        raise UnknownFixtureError(name)
    if dim < 2:
        raise InvalidParamsError(f"fixtures require dim >= 2, got {dim}")
    known = FIXTURE_PARAMS[name]
    params = dict(params or {})
    for key in params:
        if key not in known:
            raise InvalidParamsError(
                f"fixture {name!r} does not take parameter {key!r}; knows {sorted(known)}"
            )
    fixture = _BUILDERS[name](dim, params)
    if validate:
        validate_fixture(fixture, SampleSpec(count=12, seed=20240))
    return fixture


# -- sampling ---------------------------------------------------------------


def sample_points(fixture: MetricFixture, spec: SampleSpec) -> list[ChartPoint]:
    """Draw `spec.count` chart points, deterministic in `spec.seed`.

    x uniform in the box, y uniform on the sphere of radius y_norm, with
    rejection on the fixture's domain predicate.
    """
    rng = np.random.default_rng(spec.seed)
    lo, hi = spec.x_box if spec.x_box is not None else fixture.default_x_box
    n = fixture.dim
    points: list[ChartPoint] = []
    budget = spec.count * spec.max_rejections
    while len(points) < spec.count:
        if budget <= 0:
            raise SamplingError(
                f"rejection budget exhausted after collecting {len(points)} of "
                f"{spec.count} points for fixture {fixture.name!r}"
            )
        budget -= 1
        x = rng.uniform(lo, hi, size=n)
        y = rng.normal(size=n)
        norm = np.linalg.norm(y)
        if norm < 1e-12:
            continue
        y = y * (spec.y_norm / norm)
        if fixture.domain(x, y):
            points.append(ChartPoint(x, y))
    return points


def _probe_points(fixture: MetricFixture, spec: SampleSpec) -> list[ChartPoint]:
    """Sampled points plus axis and diagonal y-probes at a sampled x."""
    points = sample_points(fixture, spec)
    x0 = points[0].x
    n = fixture.dim
    extras = []
    for i in range(n):
        e = np.zeros(n)
        e[i] = spec.y_norm
        extras.append(e)
        extras.append(-e)
    extras.append(np.full(n, spec.y_norm / np.sqrt(n)))
    for y in extras:
        if fixture.domain(x0, y):
            points.append(ChartPoint(x0, y))
    return points


def metric_matrix(fixture: MetricFixture, point: ChartPoint) -> np.ndarray:
    """Fundamental tensor g_ij = (1/2) d2(L^2)/dy_i dy_j at `point`."""
    n = point.dim
    E = lift(lambda x, y: fixture.L(x, y) * fixture.L(x, y), point, order=2)
    g = np.empty((n, n))
    for i in range(n):
        for j in range(i, n):
            alpha = [0] * (2 * n)
            alpha[n + i] += 1
            alpha[n + j] += 1
            g[i, j] = g[j, i] = 0.5 * E.partial(alpha)
    return g


def validate_fixture(fixture: MetricFixture, spec: SampleSpec) -> FixtureValidationReport:
    """Assert 1-homogeneity of L and positive-definite g on a probe set.

    Returns the report on success; raises FixtureValidationError with the
    witness point on the first violation.
    """
    points = _probe_points(fixture, spec)
    min_eig = np.inf
    max_rel = 0.0
    for p in points:
        base = fixture.L_value(p)
        if not np.isfinite(base) or base <= 0.0:
            raise FixtureValidationError(
                f"{fixture.name}: L = {base} is not positive at a probe point", p
            )
        for lam in (0.5, 2.0, 3.0):
            scaled = fixture.L_value(ChartPoint(p.x, lam * p.y))
            rel = abs(scaled - lam * base) / abs(lam * base)
            max_rel = max(max_rel, rel)
            if rel >= 1e-10:
                raise FixtureValidationError(
                    f"{fixture.name}: L(x, {lam} y) deviates from {lam} L(x, y) "
                    f"by relative {rel:.2e}",
                    p,
                )
        try:
            g = metric_matrix(fixture, p)
        except jets.JetDomainError as exc:
            raise FixtureValidationError(
                f"{fixture.name}: fundamental tensor undefined at a probe point ({exc})", p
            ) from exc
        eigs = np.linalg.eigvalsh(g)
        min_eig = min(min_eig, float(eigs[0]))
        if eigs[0] <= 1e-10:
            raise FixtureValidationError(
                f"{fixture.name}: fundamental tensor not positive definite "
                f"(min eigenvalue {eigs[0]:.3e})",
                p,
            )
    return FixtureValidationReport(
        fixture=fixture.name,
        dim=fixture.dim,
        passed=True,
        min_eigenvalue=float(min_eig),
        homogeneity_max_rel=float(max_rel),
        samples_checked=len(points),
    )
