"""Grid scans, singular-locus detection, and divergence-exponent fits.

Scans walk a cartesian grid over the metric field's coordinates, recording
one of: curvature scalar, metric determinant, potential value, or the
intensive variables. Points where the metric degenerates or the field leaves
its domain are marked, never fatal. Root finding watches det g for sign
changes along coordinate lines and bisects; divergence exponents come from a
log-log fit of |R| against the distance to an approach point.

Reports are deterministic: the grid is enumerated row-major in coordinate
order and workers write into preallocated slots, so results are identical
for any worker count.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence, Union

import numpy as np

from . import fundeq, geometry
from .errors import DegenerateMetricError, DomainError
from .geometry import HessianMetricField, MetricField

GRID_CAP = 10**6
ROOT_TOL_FACTOR = 1e-12
NOISE_FLOOR = 1e-8

STATUS_OK = "ok"
STATUS_DEGENERATE = "degenerate"
STATUS_DOMAIN_ERROR = "domain-error"

QUANTITIES = ("curvature", "detg", "potential", "intensive")
_QUANTITY_ALIASES = {"scalar_curvature": "curvature", "det_g": "detg"}


@dataclass(frozen=True)
class Axis:
    start: float
    stop: float
    count: int

    def __post_init__(self):
        if self.count < 1:
            raise ValueError("axis count must be >= 1")
        if self.count > 1 and not self.start < self.stop:
            raise ValueError(f"axis needs start < stop, got [{self.start}, {self.stop}]")

    def values(self) -> np.ndarray:
        if self.count == 1:
            return np.array([self.start])
        return np.linspace(self.start, self.stop, self.count)


@dataclass(frozen=True)
class GridSpec:
    """Per-coordinate ranges or pinned values, in field coordinate order."""

    axes: tuple[tuple[str, Union[Axis, float]], ...]

    @classmethod
    def build(cls, field_coords: Sequence[str], spec: Mapping[str, Union[Axis, float]]) -> "GridSpec":
        missing = [c for c in field_coords if c not in spec]
        if missing:
            raise ValueError(f"grid must cover every coordinate; missing {missing}")
        extra = set(spec) - set(field_coords)
        if extra:
            raise ValueError(f"grid names unknown coordinates {sorted(extra)}")
        return cls(tuple((c, spec[c]) for c in field_coords))

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(name for name, _ in self.axes)

    def axis_values(self) -> list[np.ndarray]:
        out = []
        for _, ax in self.axes:
            out.append(ax.values() if isinstance(ax, Axis) else np.array([float(ax)]))
        return out

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(len(v) for v in self.axis_values())

    @property
    def size(self) -> int:
        return int(np.prod(self.shape))

    def points(self, cap: int = GRID_CAP) -> np.ndarray:
        """All grid points, row-major (first coordinate slowest)."""
        if self.size > cap:
            raise ValueError(f"grid of {self.size} points exceeds cap of {cap}")
        mesh = np.meshgrid(*self.axis_values(), indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=-1)

    def describe(self) -> dict:
        out = {}
        for name, ax in self.axes:
            if isinstance(ax, Axis):
                out[name] = {"start": ax.start, "stop": ax.stop, "count": ax.count}
            else:
                out[name] = {"pin": float(ax)}
        return out


@dataclass(frozen=True)
class SingularPoint:
    """A refined det-g root on a scan line.

    For Hessian-based fields the category separates zeros of the potential
    prefactor (det g = Phi^n det Hess for the natural kind) from zeros of the
    Hessian factor; only the latter mark stability limits.
    """

    coords: dict[str, float]
    det_g: float
    category: str | None = None


@dataclass(frozen=True)
class DivergenceFit:
    """Result of a log-log fit of |value| against approach distance."""

    exponent: float
    intercept: float
    correlation: float
    samples: int
    diverges: bool


@dataclass
class ScanReport:
    grid: GridSpec
    quantity: str
    columns: tuple[str, ...]
    values: np.ndarray  # (npoints, ncols), NaN where status != ok
    status: list[str]
    singular_points: list[SingularPoint] = field(default_factory=list)
    fits: list[DivergenceFit] = field(default_factory=list)


def _quantity_evaluator(
    f: MetricField, quantity: str
) -> tuple[tuple[str, ...], Callable[[Sequence[float]], np.ndarray]]:
    quantity = _QUANTITY_ALIASES.get(quantity, quantity)
    if quantity == "curvature":
        return ("R",), lambda p: np.array([geometry.scalar_curvature(f, p).scalar])
    if quantity == "detg":
        return ("det_g",), lambda p: np.array([geometry.metric_determinant(f, p)])
    if quantity in ("potential", "intensive") and not isinstance(f, HessianMetricField):
        raise ValueError(f"{quantity!r} needs a fundamental-equation system, not a direct metric")
    if quantity == "potential":
        return ("potential",), lambda p: np.array([fundeq.potential_value(f.spec, p)])
    if quantity == "intensive":
        names = tuple(f"I_{v}" for v in f.spec.variables)
        return names, lambda p: fundeq.intensive_variables(f.spec, p)
    raise ValueError(f"unknown quantity {quantity!r}; choose from {QUANTITIES}")


def grid_scan(
    f: MetricField,
    grid: GridSpec,
    quantity: str = "curvature",
    workers: int | None = None,
) -> ScanReport:
    """Evaluate `quantity` at every grid point, marking bad points."""
    columns, evaluate = _quantity_evaluator(f, quantity)
    points = grid.points()
    npoints = len(points)
    values = np.full((npoints, len(columns)), np.nan)
    status = [STATUS_OK] * npoints

    def run(i: int) -> None:
        try:
            values[i] = evaluate(points[i])
        except DegenerateMetricError:
            status[i] = STATUS_DEGENERATE
        except DomainError:
            status[i] = STATUS_DOMAIN_ERROR

    if workers is None or workers <= 1 or npoints < 2:
        for i in range(npoints):
            run(i)
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(run, range(npoints)))
    return ScanReport(grid=grid, quantity=quantity, columns=columns, values=values, status=status)


# -- singular locus ----------------------------------------------------------------


def _det_or_none(f: MetricField, point: Sequence[float]) -> float | None:
    try:
        return geometry.metric_determinant(f, point)
    except DomainError:
        return None


def _bisect_root(
    det_fn: Callable[[float], float], lo: float, hi: float, flo: float, fhi: float
) -> float:
    tol = ROOT_TOL_FACTOR * max(1.0, abs(lo), abs(hi))
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        fmid = det_fn(mid)
        if fmid == 0.0:
            return mid
        if (flo < 0.0) != (fmid < 0.0):
            hi, fhi = mid, fmid
        else:
            lo, flo = mid, fmid
    return 0.5 * (lo + hi)


def _classify_root(f: MetricField, point: np.ndarray) -> str | None:
    if not isinstance(f, HessianMetricField):
        return None
    phi = fundeq.potential_value(f.spec, point)
    det_hess = float(np.linalg.det(fundeq.hessian(f.spec, point)))
    if abs(phi) ** f.dim <= abs(det_hess):
        return "potential-zero"
    return "hessian-zero"


def find_singular_locus(f: MetricField, grid: GridSpec) -> list[SingularPoint]:
    """Bisect det g = 0 along every coordinate line of the grid."""
    axis_values = grid.axis_values()
    names = grid.names
    shape = grid.shape
    dim = len(shape)
    roots: list[SingularPoint] = []
    for axis in range(dim):
        if shape[axis] < 2:
            continue
        others = [i for i in range(dim) if i != axis]
        other_grids = [axis_values[i] for i in others]
        mesh = np.meshgrid(*other_grids, indexing="ij") if others else []
        combos = np.stack([m.ravel() for m in mesh], axis=-1) if others else np.zeros((1, 0))
        line = axis_values[axis]
        for combo in combos:
            base = np.empty(dim)
            for slot, i in enumerate(others):
                base[i] = combo[slot]

            def det_at(x: float) -> float:
                p = base.copy()
                p[axis] = x
                d = _det_or_none(f, p)
                if d is None:
                    raise DomainError("left the domain during bisection")
                return d

            dets = [_det_or_none(f, _with(base, axis, x)) for x in line]
            for k in range(len(line) - 1):
                dlo, dhi = dets[k], dets[k + 1]
                if dlo is None or dhi is None or dlo == 0.0 or (dlo < 0.0) == (dhi < 0.0):
                    continue
                try:
                    root = _bisect_root(det_at, line[k], line[k + 1], dlo, dhi)
                    residual = det_at(root)
                except DomainError:
                    continue
                point = _with(base, axis, root)
                roots.append(
                    SingularPoint(
                        coords=dict(zip(names, map(float, point))),
                        det_g=residual,
                        category=_classify_root(f, point),
                    )
                )
    return roots


def _with(base: np.ndarray, axis: int, value: float) -> np.ndarray:
    out = base.copy()
    out[axis] = value
    return out


# -- divergence exponents ------------------------------------------------------------


def geometric_offsets(base: float, count: int, factor: float = 0.5) -> np.ndarray:
    """Offsets base * factor^m for m = 0..count-1 (log-uniform spacing)."""
    return base * factor ** np.arange(count)


def fit_power_law(
    sample: Callable[[np.ndarray], float],
    center: Sequence[float],
    direction: Sequence[float],
    offsets: Sequence[float],
    noise_floor: float = NOISE_FLOOR,
) -> DivergenceFit:
    """Least-squares slope of log|sample| against log(offset).

    Samples at center + t * direction for each offset t; values below the
    noise floor (and failed evaluations) are dropped. The reported exponent
    is the negated slope, so 1/x**2 fits to 2.0.
    """
    center = np.asarray(center, dtype=float)
    direction = np.asarray(direction, dtype=float)
    logs_x, logs_y = [], []
    for t in offsets:
        try:
            value = abs(float(sample(center + t * direction)))
        except (DomainError, DegenerateMetricError):
            continue
        if not math.isfinite(value) or value <= noise_floor:
            continue
        logs_x.append(math.log(t))
        logs_y.append(math.log(value))
    if len(logs_x) < 4:
        if all(_below_floor(sample, center, direction, t, noise_floor) for t in offsets):
            return DivergenceFit(
                exponent=0.0, intercept=0.0, correlation=0.0, samples=len(logs_x), diverges=False
            )
        raise ValueError(f"only {len(logs_x)} valid samples; need at least 4")
    x = np.array(logs_x)
    y = np.array(logs_y)
    slope, intercept = np.polyfit(x, y, 1)
    corr = float(np.corrcoef(x, y)[0, 1])
    return DivergenceFit(
        exponent=-float(slope),
        intercept=float(intercept),
        correlation=corr,
        samples=len(x),
        diverges=True,
    )


def _below_floor(sample, center, direction, t, floor) -> bool:
    try:
        return abs(float(sample(center + t * direction))) <= floor
    except (DomainError, DegenerateMetricError):
        return True


def fit_divergence_exponent(
    f: MetricField,
    center: Sequence[float],
    direction: Sequence[float],
    offsets: Sequence[float],
) -> DivergenceFit:
    """Divergence exponent of the curvature scalar approaching `center`."""
    return fit_power_law(
        lambda p: geometry.scalar_curvature(f, p).scalar, center, direction, offsets
    )


# -- Reissner-Nordstrom critical points ------------------------------------------------


@dataclass(frozen=True)
class RNCriticalPoints:
    """The two critical entropies of the Reissner-Nordstrom geometry at charge Q."""

    s_extremal: float
    s_curvature_zero: float
    mass_extremal: float
    mass_curvature_zero: float
    curvature_at_zero: float
    det_g_at_extremal: float


def rn_critical_points(Q: float) -> RNCriticalPoints:
    """Critical entropies S = pi Q^2 (extremal) and S = pi Q^2 / 3 (flat point).

    Verifies numerically that the curvature vanishes at the flat point and the
    metric determinant at the extremal one.
    """
    if Q <= 0.0:
        raise ValueError("charge Q must be positive")
    spec = fundeq.builtin("reissner_nordstrom")
    f = HessianMetricField(spec)
    s_ext = math.pi * Q * Q
    s_zero = s_ext / 3.0
    m_ext = fundeq.potential_value(spec, (s_ext, Q))
    m_zero = fundeq.potential_value(spec, (s_zero, Q))
    r_zero = geometry.scalar_curvature(f, (s_zero, Q)).scalar
    det_ext = geometry.metric_determinant(f, (s_ext, Q))
    scale = max(1.0, Q**4)
    if abs(r_zero) > NOISE_FLOOR or abs(det_ext) > 1e-10 * scale:
        raise ArithmeticError(
            f"critical-point verification failed: R(S=piQ^2/3) = {r_zero:.3e}, "
            f"det g(S=piQ^2) = {det_ext:.3e}"
        )
    return RNCriticalPoints(
        s_extremal=s_ext,
        s_curvature_zero=s_zero,
        mass_extremal=m_ext,
        mass_curvature_zero=m_zero,
        curvature_at_zero=r_zero,
        det_g_at_extremal=det_ext,
    )
