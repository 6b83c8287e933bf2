"""Metric fields on the equilibrium manifold and their curvature.

The central object is a metric field: a symmetric matrix g_ab(E) over the
extensive coordinates. Fields come in two flavours:

* Hessian-based, built from a fundamental equation. The `natural` kind is
  g_ab = Phi * d2Phi/dE^a dE^b (the Legendre-invariant choice this package
  is about); `weinhold` is the bare Hessian and `ruppeiner` the Hessian
  divided by the temperature T = dPhi/dE^1.
* Direct, a matrix of expressions (or callables) over named coordinates,
  used for closed-form metrics and curvature oracles such as the sphere.

Everything downstream of g (Christoffel symbols, Riemann and Ricci tensors,
the curvature scalar) is assembled from metric components carried as
order-2 jets, so first and second derivatives of g are exact to rounding.
No finite differences appear anywhere; curvature stays usable arbitrarily
close to the singular loci the analysis module hunts for.

Index conventions: Gamma[a, b, c] = Gamma^a_bc, riemann[a, b, c, d] =
R^a_bcd = d_c Gamma^a_db - d_d Gamma^a_cb + Gamma^a_ce Gamma^e_db
- Gamma^a_de Gamma^e_cb, ricci[b, d] = R^a_bad, and the scalar is
R = g^bd R_bd. A closed-form cross term c dx dy (x != y) contributes c/2 to
each of the two off-diagonal slots.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Mapping, Sequence, Union

import numpy as np

from . import fundeq, jets
from .errors import DegenerateMetricError, DomainError, ParseError
from .fundeq import Expr, SystemSpec
from .jets import Jet

DEGENERACY_FACTOR = 1e-12

Point = Sequence[float]


class MetricKind(enum.Enum):
    NATURAL = "natural"
    WEINHOLD = "weinhold"
    RUPPEINER = "ruppeiner"
    DIRECT = "direct"


@dataclass(frozen=True)
class MetricValue:
    """Metric components at a single equilibrium point."""

    point: tuple[float, ...]
    components: np.ndarray
    kind: MetricKind


@dataclass(frozen=True)
class CurvatureReport:
    """Connection and curvature data at a point.

    christoffel has shape (n, n, n), riemann (n, n, n, n), ricci (n, n);
    `scalar` is the full contraction g^bd R_bd.
    """

    point: tuple[float, ...]
    christoffel: np.ndarray
    riemann: np.ndarray
    ricci: np.ndarray
    scalar: float
    det_g: float


ComponentFn = Callable[[Mapping[str, Jet]], Union[Jet, float]]


class HessianMetricField:
    """Metric field derived from a fundamental equation.

    The metric components at a point are extracted from a jet of the
    potential of order (2 + requested g-order), so the components themselves
    come out as jets and stay differentiable.
    """

    def __init__(self, spec: SystemSpec, kind: MetricKind = MetricKind.NATURAL):
        if kind is MetricKind.DIRECT:
            raise ValueError("direct metrics are built with DirectMetricField")
        self.spec = spec
        self.kind = kind

    @property
    def coordinates(self) -> tuple[str, ...]:
        return self.spec.variables

    @property
    def dim(self) -> int:
        return self.spec.dim

    @property
    def name(self) -> str:
        return f"{self.spec.name}[{self.kind.value}]"

    def in_domain(self, point: Point) -> bool:
        return self.spec.in_domain(point)

    def component_jets(self, point: Point, gorder: int = 2) -> list[list[Jet]]:
        n = self.dim
        phi = fundeq.evaluate(self.spec, point, order=gorder + 2)
        hess = [[None] * n for _ in range(n)]
        for a in range(n):
            for b in range(a, n):
                alpha = tuple((1 if i == a else 0) + (1 if i == b else 0) for i in range(n))
                hess[a][b] = hess[b][a] = jets.derive(phi, alpha)
        if self.kind is MetricKind.WEINHOLD:
            return hess
        if self.kind is MetricKind.RUPPEINER:
            temp = jets.derive(phi, tuple(1 if i == 0 else 0 for i in range(n)))
            temp = jets.truncate(temp, gorder)
            if temp.value == 0.0:
                raise DomainError("Ruppeiner metric undefined where the temperature vanishes")
            out = [[None] * n for _ in range(n)]
            for a in range(n):
                for b in range(a, n):
                    out[a][b] = out[b][a] = hess[a][b] / temp
            return out
        phi_g = jets.truncate(phi, gorder)
        out = [[None] * n for _ in range(n)]
        for a in range(n):
            for b in range(a, n):
                out[a][b] = out[b][a] = phi_g * hess[a][b]
        return out

    def values(self, point: Point) -> np.ndarray:
        return _constant_terms(self.component_jets(point, gorder=0))


class DirectMetricField:
    """Metric field given componentwise over named coordinates.

    Components may be expression strings, parsed Expr trees, numbers, or
    callables taking the coordinate-jet environment. The evaluated matrix
    must be symmetric; the upper triangle is mirrored so downstream algebra
    sees exact symmetry.
    """

    def __init__(
        self,
        coordinates: Sequence[str],
        components: Sequence[Sequence[Union[str, float, Expr, ComponentFn]]],
        parameters: Mapping[str, float] | None = None,
        name: str = "direct",
        domain: fundeq.DomainPredicate | None = None,
    ):
        self.coordinates = tuple(coordinates)
        n = len(self.coordinates)
        if len(components) != n or any(len(row) != n for row in components):
            raise ValueError(f"component matrix must be {n}x{n}")
        self.components = [[_as_component(c) for c in row] for row in components]
        self.parameters = dict(parameters or {})
        self.name = name
        self.domain = domain

    @property
    def dim(self) -> int:
        return len(self.coordinates)

    def in_domain(self, point: Point) -> bool:
        env = dict(zip(self.coordinates, map(float, point)))
        if self.domain is not None and not self.domain(env):
            return False
        try:
            self.values(point)
        except DomainError:
            return False
        return True

    def component_jets(self, point: Point, gorder: int = 2) -> list[list[Jet]]:
        n = self.dim
        if len(point) != n:
            raise ValueError(f"expected {n} coordinates, got {len(point)}")
        env_floats = dict(zip(self.coordinates, map(float, point)))
        if self.domain is not None and not self.domain(env_floats):
            raise DomainError(f"point {tuple(env_floats.values())} outside domain of {self.name}")
        env: dict[str, Union[Jet, float]] = dict(self.parameters)
        for i, cname in enumerate(self.coordinates):
            env[cname] = jets.seed_variable(i, env_floats[cname], n, gorder)
        out = [[None] * n for _ in range(n)]
        for a in range(n):
            for b in range(n):
                val = self.components[a][b](env)
                if not isinstance(val, Jet):
                    val = jets.constant(float(val), n, gorder)
                out[a][b] = val
        _check_symmetry(out, self.name)
        for a in range(n):
            for b in range(a + 1, n):
                out[b][a] = out[a][b]
        return out

    def values(self, point: Point) -> np.ndarray:
        return _constant_terms(self.component_jets(point, gorder=0))


MetricField = Union[HessianMetricField, DirectMetricField]


def _as_component(c) -> ComponentFn:
    if callable(c) and not isinstance(c, (str, int, float)):
        return c
    if isinstance(c, str):
        c = fundeq.parse(c)
    if isinstance(c, (int, float)):
        value = float(c)
        return lambda env: value
    expr = c
    return lambda env: fundeq.eval_jet(expr, env)


def _constant_terms(gjets: list[list[Jet]]) -> np.ndarray:
    n = len(gjets)
    return np.array([[gjets[a][b].value for b in range(n)] for a in range(n)])


def _check_symmetry(gjets, name: str) -> None:
    n = len(gjets)
    scale = max(1.0, max(abs(gjets[a][b].value) for a in range(n) for b in range(n)))
    for a in range(n):
        for b in range(a + 1, n):
            if not np.allclose(gjets[a][b].coeffs, gjets[b][a].coeffs, rtol=1e-9, atol=1e-9 * scale):
                raise ValueError(f"direct metric {name!r} is not symmetric in ({a}, {b})")


# -- pointwise evaluation ---------------------------------------------------------


def metric_at(field: MetricField, point: Point) -> MetricValue:
    """Metric components at a point."""
    kind = field.kind if isinstance(field, HessianMetricField) else MetricKind.DIRECT
    return MetricValue(tuple(float(v) for v in point), field.values(point), kind)


def metric_determinant(field: MetricField, point: Point) -> float:
    return float(np.linalg.det(field.values(point)))


def degeneracy_threshold(g: np.ndarray) -> float:
    """Scale-aware cutoff below which |det g| counts as degenerate."""
    n = g.shape[0]
    return DEGENERACY_FACTOR * max(1.0, float(np.max(np.abs(g))) ** n)


def _geometry_arrays(field: MetricField, point: Point, gorder: int):
    """Metric values and derivatives: g, dg[c,a,b] = d_c g_ab, d2g[c,d,a,b]."""
    n = field.dim
    gjets = field.component_jets(point, gorder=gorder)
    g = _constant_terms(gjets)
    dg = np.empty((n, n, n))
    for c in range(n):
        ec = tuple(1 if i == c else 0 for i in range(n))
        for a in range(n):
            for b in range(n):
                dg[c, a, b] = jets.extract_partial(gjets[a][b], ec)
    if gorder < 2:
        return g, dg, None
    d2g = np.empty((n, n, n, n))
    for c in range(n):
        for d in range(n):
            ecd = tuple((1 if i == c else 0) + (1 if i == d else 0) for i in range(n))
            for a in range(n):
                for b in range(n):
                    d2g[c, d, a, b] = jets.extract_partial(gjets[a][b], ecd)
    return g, dg, d2g


def _checked_inverse(g: np.ndarray, point) -> tuple[np.ndarray, float]:
    det = float(np.linalg.det(g))
    threshold = degeneracy_threshold(g)
    if abs(det) < threshold:
        raise DegenerateMetricError(
            f"metric degenerate at {tuple(point)}: |det g| = {abs(det):.3e} < {threshold:.3e}",
            det=det,
            threshold=threshold,
        )
    return np.linalg.inv(g), det


def _christoffel_from(g_inv: np.ndarray, dg: np.ndarray) -> np.ndarray:
    # T[d,b,c] = d_b g_dc + d_c g_db - d_d g_bc; symmetric in (b, c) exactly
    # because g_ab and g_ba are the same jet.
    term = np.einsum("bdc->dbc", dg) + np.einsum("cdb->dbc", dg) - dg
    return 0.5 * np.einsum("ad,dbc->abc", g_inv, term)


def christoffel(field: MetricField, point: Point) -> np.ndarray:
    """Christoffel symbols Gamma^a_bc of the Levi-Civita connection."""
    g, dg, _ = _geometry_arrays(field, point, gorder=1)
    g_inv, _ = _checked_inverse(g, point)
    return _christoffel_from(g_inv, dg)


def scalar_curvature(field: MetricField, point: Point) -> CurvatureReport:
    """Connection, Riemann and Ricci tensors, and the curvature scalar."""
    n = field.dim
    g, dg, d2g = _geometry_arrays(field, point, gorder=2)
    g_inv, det = _checked_inverse(g, point)
    gamma = _christoffel_from(g_inv, dg)
    # d_e g^ad = -g^ax (d_e g_xy) g^yd
    dg_inv = -np.einsum("ax,exy,yd->ead", g_inv, dg, g_inv)
    term = np.einsum("bdc->dbc", dg) + np.einsum("cdb->dbc", dg) - dg
    dterm = (
        np.einsum("ebdc->edbc", d2g) + np.einsum("ecdb->edbc", d2g) - np.einsum("edbc->edbc", d2g)
    )
    dgamma = 0.5 * (
        np.einsum("ead,dbc->eabc", dg_inv, term) + np.einsum("ad,edbc->eabc", g_inv, dterm)
    )
    # half[a,b,c,d] = d_c Gamma^a_db + Gamma^a_ce Gamma^e_db; antisymmetrizing
    # the pair (c, d) as a single subtraction keeps R^a_bcd = -R^a_bdc exact.
    half = np.einsum("cadb->abcd", dgamma) + np.einsum("ace,edb->abcd", gamma, gamma)
    riemann = half - np.swapaxes(half, 2, 3)
    ricci = np.einsum("abad->bd", riemann)
    scalar = float(np.einsum("bd,bd->", g_inv, ricci))
    return CurvatureReport(
        point=tuple(float(v) for v in point),
        christoffel=gamma,
        riemann=riemann,
        ricci=ricci,
        scalar=scalar,
        det_g=det,
    )


def hessian_positive_semidefinite(spec: SystemSpec, point: Point, tol: float = 1e-10) -> bool:
    """Local convexity of the potential (the second-law check)."""
    eigenvalues = np.linalg.eigvalsh(fundeq.hessian(spec, point))
    scale = max(1.0, float(np.max(np.abs(eigenvalues))))
    return bool(np.all(eigenvalues >= -tol * scale))


# -- closed-form metrics ---------------------------------------------------------
#
# The printed metrics for the four systems, encoded as direct fields. They are
# used as oracles against the Hessian pipeline: both must agree componentwise
# at every domain point.

_VDW_PHI = "((exp(S/k)/(V-b))^(2/3) - a/V)"
_VDW_U = "(exp(S/k)/(V-b))^(2/3)"  # Phi + a/V
_KN_M2 = "(pi*J^2/S + (S/(4*pi))*(1 + pi*Q^2/S)^2)"


def _vdw_closed(a: float = 1.0, b: float = 0.1, k: float = 1.0) -> DirectMetricField:
    bval = b
    return DirectMetricField(
        coordinates=("S", "V"),
        components=[
            [
                f"(4/(9*k^2)) * {_VDW_PHI} * {_VDW_U}",
                f"-(4/(9*k)) * {_VDW_PHI} * {_VDW_U} / (V-b)",
            ],
            [
                f"-(4/(9*k)) * {_VDW_PHI} * {_VDW_U} / (V-b)",
                f"(10/9) * {_VDW_PHI} * {_VDW_U} / (V-b)^2 - 2*a*{_VDW_PHI}/V^3",
            ],
        ],
        parameters={"a": a, "b": b, "k": k},
        name="vdw_closed",
        domain=lambda env, _b=bval: env["V"] > _b,
    )


def _kn_closed() -> DirectMetricField:
    g_ss = (
        f"(-S^4 + pi^2*(4*J^2+Q^4)*(6*S^2 + 8*pi*S*Q^2 + 3*pi^2*(4*J^2+Q^4)))"
        f" / (64*pi^2*S^4*{_KN_M2})"
    )
    g_sj = f"-J*(2*pi*{_KN_M2} + pi*Q^2 + S) / (4*S^2*{_KN_M2})"
    g_sq = f"Q*(2*pi*J^2 - (pi*Q^2+S)*{_KN_M2}) / (4*S^2*{_KN_M2})"
    g_jj = f"(pi*Q^2+S)^2 / (4*S^2*{_KN_M2})"
    g_jq = f"-pi*J*Q*(pi*Q^2+S) / (2*S^2*{_KN_M2})"
    g_qq = f"(4*pi^2*J^2*(3*pi*Q^2+S) + (pi*Q^2+S)^3) / (8*pi*S^2*{_KN_M2})"
    return DirectMetricField(
        coordinates=("S", "J", "Q"),
        components=[[g_ss, g_sj, g_sq], [g_sj, g_jj, g_jq], [g_sq, g_jq, g_qq]],
        name="kn_closed",
        domain=lambda env: env["S"] > 0.0,
    )


def _rn_closed() -> DirectMetricField:
    pref = "((pi*Q^2+S)/(2*S^2))"
    return DirectMetricField(
        coordinates=("S", "Q"),
        components=[
            [f"{pref} * (3*pi*Q^2 - S)/(8*pi*S)", f"-{pref} * Q/2"],
            [f"-{pref} * Q/2", f"{pref} * S"],
        ],
        name="rn_closed",
        domain=lambda env: env["S"] > 0.0,
    )


def _kerr_closed() -> DirectMetricField:
    pref = "(pi*S/(S^2+4*pi^2*J^2))"
    return DirectMetricField(
        coordinates=("S", "J"),
        components=[
            [
                f"{pref} * (3*pi^2*J^4/S^4 + 3*J^2/(2*S^2) - 1/(16*pi^2))",
                f"-{pref} * J*(3*S^2+4*pi^2*J^2)/(2*S^3)",
            ],
            [f"-{pref} * J*(3*S^2+4*pi^2*J^2)/(2*S^3)", pref],
        ],
        name="kerr_closed",
        domain=lambda env: env["S"] > 0.0,
    )


_CLOSED_FORMS: dict[str, Callable[..., DirectMetricField]] = {
    "kerr_closed": _kerr_closed,
    "kn_closed": _kn_closed,
    "rn_closed": _rn_closed,
    "vdw_closed": _vdw_closed,
}

CLOSED_FORM_NAMES = tuple(sorted(_CLOSED_FORMS))


def closed_form_metric(name: str, **parameters: float) -> DirectMetricField:
    """One of the printed metrics (vdw_closed, kn_closed, rn_closed, kerr_closed)."""
    try:
        factory = _CLOSED_FORMS[name]
    except KeyError:
        raise ValueError(
            f"unknown closed-form metric {name!r}; choose from {CLOSED_FORM_NAMES}"
        ) from None
    return factory(**parameters)


def sphere_metric(radius: float = 1.0) -> DirectMetricField:
    """Round 2-sphere of given radius in (theta, phi); curvature oracle R = 2/r^2."""
    r2 = radius * radius
    return DirectMetricField(
        coordinates=("theta", "phi"),
        components=[[r2, 0.0], [0.0, f"{r2!r}*sin(theta)^2"]],
        name=f"sphere(r={radius})",
    )


def load_metric_file(path: str | Path) -> DirectMetricField:
    """Load a direct metric from a sectioned key-value file.

    Expected layout (rows of the component matrix are separated by ';')::

        [metric]
        name = sphere
        coordinates = theta, phi
        components = 1, 0; 0, sin(theta)^2

        [parameters]
        r = 1.0
    """
    cp = fundeq._read_sections(path)
    if not cp.has_section("metric"):
        raise ParseError(f"{path}: missing [metric] section")
    sec = cp["metric"]
    for key in ("coordinates", "components"):
        if key not in sec:
            raise ParseError(f"{path}: [metric] is missing {key!r}")
    coords = tuple(fundeq._split_list(sec["coordinates"]))
    rows = [r.strip() for r in sec["components"].split(";")]
    components = [fundeq._split_list(r) for r in rows if r]
    n = len(coords)
    if len(components) != n or any(len(row) != n for row in components):
        raise ParseError(f"{path}: components must form a {n}x{n} matrix")
    params = {k: float(v) for k, v in cp.items("parameters")} if cp.has_section("parameters") else {}
    return DirectMetricField(
        coordinates=coords,
        components=components,
        parameters=params,
        name=sec.get("name", Path(path).stem).strip(),
    )
