"""
Desired steady states of the flotation column.

A desired steady state carries no aggregates below the feed level and no
solids above it.  Zone 2 holds a constant pulp fraction ``phi_bar2`` up to the
pulp-froth interface ``z_fr``; above it the froth fraction rises continuously
from ``phi_c`` to the effluent value ``phi_E``.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass, field, fields
from enum import Enum
import logging
import math
from typing import Any, Callable, Dict, List, NamedTuple, Optional, Tuple, Union
import warnings

import numpy as np
import pandas as pd
from scipy.integrate import quad, solve_ivp
from scipy.optimize import bisect

from .column import (
    DEFAULT_GEOMETRY,
    BulkVelocities,
    ColumnGeometry,
    Flows,
    bulk_velocities,
)
from .constitutive import (
    ConstitutiveParams,
    FluxKind,
    _d_high,
    _fb,
    _jb,
    critical_points,
)
from .containers import Desc
from .errors import (
    FrothConditionViolated,
    Infeasible,
    MarginalIntegralWarning,
    NonPositiveEffluentFlow,
    NonPositiveParameter,
    NoRoot,
    PhiEOutOfRange,
    SolidsOverload,
    ZeroUnderflow,
)

logger = logging.getLogger(__name__)

#: absolute tolerance of the feed jump-condition roots
JUMP_XTOL = 1e-15
#: below this froth-integrand denominator at phi_E [m/s] the endpoint is singular
MARGINAL_DENOMINATOR = 1e-14
QUAD_TOL = 1e-10
DENOMINATOR_SAMPLES = 2049


class FrothInterface(Enum):
    OUT_OF_COLUMN = "out_of_column"


#: returned by `z_fr` when the froth would reach below the bottom of the column
OUT_OF_COLUMN = FrothInterface.OUT_OF_COLUMN


def effluent_fraction(op: Flows) -> float:
    """``phi_E = Q_F*phi_F / (Q_W + Q_F - Q_U)``."""
    Q_E = op.Q_W + op.Q_F - op.Q_U
    if not Q_E > 0:
        raise NonPositiveEffluentFlow(
            f"Q_E = Q_W + Q_F - Q_U must be positive, got {Q_E!r}"
        )
    return op.Q_F * op.phi_F / Q_E


def _j2(v: BulkVelocities, p: ConstitutiveParams) -> Callable[[float], float]:
    return lambda x: v.q_2 * x + float(_jb(x, p))


def solve_fjc(
    op: Flows, p: ConstitutiveParams, geom: ColumnGeometry = DEFAULT_GEOMETRY
) -> float:
    """
    Zone-2 pulp fraction from the jump condition at the feed level.

    Returns the smallest root of ``j_2(phi) = s_F`` on ``[0, phi_2^M]``.

    Raises
    ------
    NoRoot
        If ``s_F`` exceeds the local maximum of ``j_2``.
    """
    v = bulk_velocities(geom, op)
    j2 = _j2(v, p)
    sup_M = critical_points(v.q_2, p).phi_sup_M
    capacity = j2(sup_M)
    if capacity < v.s_F:
        raise NoRoot(
            f"feed flux s_F={v.s_F:.6g} m/s exceeds the zone-2 capacity "
            f"j_2(phi_2^M)={capacity:.6g} m/s"
        )
    if v.s_F == 0:
        return 0.0
    return bisect(lambda x: j2(x) - v.s_F, 0.0, sup_M, xtol=JUMP_XTOL)


def solve_fjcs(
    op: Flows, p: ConstitutiveParams, geom: ColumnGeometry = DEFAULT_GEOMETRY
) -> Tuple[float, float]:
    """
    Zone-1 and underflow solids fractions of the suspension.

    Returns
    -------
    varphi_1, varphi_U : float
        ``varphi_1`` is the smallest root of ``Q_F*psi_F = A_U*f_1(varphi, 0)``;
        ``varphi_U = varphi_1 + A_U*f_b(varphi_1)/Q_U``.

    Raises
    ------
    SolidsOverload
        When the solids feed exceeds the zone-1 limiting flux.
    ZeroUnderflow
        When ``Q_U = 0`` while solids are fed.
    """
    load = op.Q_F * op.psi_F
    if op.Q_U == 0:
        if op.psi_F == 0:
            return 0.0, 0.0
        raise ZeroUnderflow(
            f"solids are fed (psi_F={op.psi_F!r}) but the underflow is closed"
        )
    q_s = op.Q_U / geom.A_U
    cp = critical_points(q_s, p, FluxKind.SOLIDS)

    def excess(x):
        return geom.A_U * (float(_fb(x, p)) + q_s * x) - load

    capacity = excess(cp.phi_sub_M) + load
    if capacity < load:
        raise SolidsOverload(
            f"solids feed {load:.6g} m³/s exceeds the zone-1 limiting flux "
            f"{capacity:.6g} m³/s"
        )
    if load == 0:
        return 0.0, 0.0
    # phi_m carries the same flux as phi_sub_M on the dilute branch, so at
    # capacity == load the root is phi_m itself
    if excess(cp.phi_m) <= 0:
        varphi_1 = cp.phi_m
    else:
        varphi_1 = bisect(excess, 0.0, cp.phi_m, xtol=JUMP_XTOL)
    varphi_U = varphi_1 + geom.A_U * float(_fb(varphi_1, p)) / op.Q_U
    return varphi_1, varphi_U


class _FrothContext(NamedTuple):
    p: ConstitutiveParams
    v: BulkVelocities
    phi_E: float
    sub_M: Optional[float]
    marginal: bool

    def denominator(self, phi):
        return self.v.q_2 * phi + _jb(phi, self.p) - self.v.s_F

    def integrand(self, phi: float) -> float:
        return float(_d_high(phi, self.p) / self.denominator(phi))

    def slope(self, z, y):
        phi = min(max(y[0], self.p.phi_c), 1.0)
        return [float(self.denominator(phi) / _d_high(phi, self.p))]


def _froth_context(
    op: Flows, p: ConstitutiveParams, geom: ColumnGeometry
) -> _FrothContext:
    if not p.d_cap > 0:
        raise NonPositiveParameter(
            "the froth interface needs capillarity, got d_cap=0"
        )
    phi_E = effluent_fraction(op)
    if not p.phi_c < phi_E <= 1:
        raise PhiEOutOfRange(
            f"phi_E={phi_E:.6g} must lie in (phi_c, 1] = ({p.phi_c!r}, 1]"
        )
    v = bulk_velocities(geom, op)
    sub_M = critical_points(v.q_2, p).phi_sub_M
    ctx = _FrothContext(p=p, v=v, phi_E=phi_E, sub_M=sub_M, marginal=False)

    samples = np.linspace(p.phi_c, phi_E, DENOMINATOR_SAMPLES)[1:-1]
    if sub_M is not None and p.phi_c < sub_M < phi_E:
        samples = np.append(samples, sub_M)
    lowest = float(np.min(ctx.denominator(samples))) if samples.size else np.inf
    at_top = float(ctx.denominator(phi_E))
    if lowest <= 0 or at_top < 0:
        raise FrothConditionViolated(
            f"j_2 - s_F must stay positive on (phi_c, phi_E); smallest sampled "
            f"value {min(lowest, at_top):.6g} m/s"
        )
    return ctx._replace(marginal=at_top < MARGINAL_DENOMINATOR)


def _quad(func, lo: float, hi: float, points: List[float]) -> float:
    result = quad(
        func,
        lo,
        hi,
        points=points or None,
        epsabs=QUAD_TOL,
        epsrel=QUAD_TOL,
        limit=500,
        full_output=1,
    )
    if len(result) > 3:
        logger.debug("quadrature on [%.12g, %.12g]: %s", lo, hi, result[3])
    return result[0]


def _froth_integral(ctx: _FrothContext, lo: float, hi: float) -> float:
    """``int_lo^hi d / (j_2 - s_F)``, the froth thickness between two levels."""
    if hi <= lo:
        return 0.0
    points = [x for x in (ctx.sub_M,) if x is not None and lo < x < hi]
    if not (ctx.marginal and hi >= ctx.phi_E):
        return _quad(ctx.integrand, lo, hi, points)
    # phi = hi - t**2 removes the square-root type endpoint singularity
    split = hi - 0.1 * (hi - lo)
    head = _quad(ctx.integrand, lo, split, [x for x in points if x < split])
    tail = _quad(
        lambda t: 2.0 * t * ctx.integrand(hi - t * t),
        0.0,
        math.sqrt(hi - split),
        [],
    )
    return head + tail


def _z_fr_ode(ctx: _FrothContext, geom: ColumnGeometry):
    if ctx.phi_E >= 1:
        raise PhiEOutOfRange("the ODE route needs phi_E < 1")

    def reaches_phi_c(z, y):
        return y[0] - ctx.p.phi_c

    reaches_phi_c.terminal = True
    reaches_phi_c.direction = -1
    sol = solve_ivp(
        ctx.slope,
        (geom.z_E, geom.z_U),
        [ctx.phi_E],
        method="DOP853",
        events=reaches_phi_c,
        rtol=1e-11,
        atol=1e-13,
    )
    if sol.t_events[0].size:
        return float(sol.t_events[0][0])
    return OUT_OF_COLUMN


def _z_fr(
    op: Flows, p: ConstitutiveParams, geom: ColumnGeometry, method: str
) -> Tuple[Union[float, FrothInterface], bool]:
    ctx = _froth_context(op, p, geom)
    if method == "ode":
        return _z_fr_ode(ctx, geom), ctx.marginal
    if method != "quad":
        raise ValueError(f"method must be 'quad' or 'ode', got {method!r}")
    thickness = _froth_integral(ctx, p.phi_c, ctx.phi_E)
    logger.debug("froth thickness %.12g m (phi_E=%.6g)", thickness, ctx.phi_E)
    if not np.isfinite(thickness) or thickness > geom.H:
        return OUT_OF_COLUMN, ctx.marginal
    return geom.z_E - thickness, ctx.marginal


def z_fr(
    op: Flows,
    p: ConstitutiveParams,
    geom: ColumnGeometry = DEFAULT_GEOMETRY,
    *,
    method: str = "quad",
) -> Union[float, FrothInterface]:
    """
    Height of the pulp-froth interface [m].

    Parameters
    ----------
    op : OperatingPoint
    p : ConstitutiveParams
    geom : ColumnGeometry
    method : {"quad", "ode"}
        ``"quad"`` integrates ``d/(j_2 - s_F)`` over ``[phi_c, phi_E]``;
        ``"ode"`` marches the froth equation down from ``z_E`` until the
        profile reaches ``phi_c``.

    Returns
    -------
    float or FrothInterface
        `OUT_OF_COLUMN` when the froth would extend below ``z_U``.

    Raises
    ------
    PhiEOutOfRange
        When ``phi_E`` is not in ``(phi_c, 1]``.
    FrothConditionViolated
        When ``j_2 - s_F`` is not positive on ``(phi_c, phi_E)``.
    """
    value, marginal = _z_fr(op, p, geom, method)
    if marginal:
        warnings.warn(
            "j_2(phi_E) - s_F is below "
            f"{MARGINAL_DENOMINATOR:g} m/s; endpoint singularity integrated "
            "by substitution",
            MarginalIntegralWarning,
            stacklevel=2,
        )
    return value


def froth_height(
    phi_level: float,
    op: Flows,
    p: ConstitutiveParams,
    geom: ColumnGeometry = DEFAULT_GEOMETRY,
) -> float:
    """Height where the froth branch takes the value ``phi_level`` [m]."""
    ctx = _froth_context(op, p, geom)
    if not p.phi_c <= phi_level <= ctx.phi_E:
        raise PhiEOutOfRange(
            f"phi_level={phi_level!r} outside [phi_c, phi_E] = "
            f"[{p.phi_c!r}, {ctx.phi_E:.6g}]"
        )
    return geom.z_E - _froth_integral(ctx, phi_level, ctx.phi_E)


class FrothProfile(NamedTuple):
    z: np.ndarray
    phi: np.ndarray


def froth_profile(
    op: Flows, p: ConstitutiveParams, geom: ColumnGeometry, grid
) -> FrothProfile:
    """
    The continuous froth branch between ``z_fr`` and ``z_E``.

    Returns the profile at ``z_fr``, at every grid node strictly between
    ``z_fr`` and ``z_E``, and at ``z_E``.
    """
    value, marginal = _z_fr(op, p, geom, "quad")
    if value is OUT_OF_COLUMN or not value > geom.z_F:
        raise FrothConditionViolated(
            f"the froth interface must lie above the feed level z_F={geom.z_F!r}, "
            f"got {value}"
        )
    ctx = _froth_context(op, p, geom)
    grid = np.asarray(grid, dtype=float)
    inner = np.unique(grid[(grid > value) & (grid < geom.z_E)])
    z = np.concatenate([[value], inner, [geom.z_E]])

    if marginal or ctx.phi_E >= 1:
        # invert z(phi) on a level grid clustered towards phi_E
        s = np.linspace(0.0, 1.0, 2049)
        levels = p.phi_c + (ctx.phi_E - p.phi_c) * (1.0 - (1.0 - s) ** 2)
        pieces = [_froth_integral(ctx, a, b) for a, b in zip(levels[:-1], levels[1:])]
        heights = geom.z_E - np.concatenate([np.cumsum(pieces[::-1])[::-1], [0.0]])
        heights[0] = value
        phi = np.interp(z, heights, levels)
    else:
        sol = solve_ivp(
            ctx.slope,
            (geom.z_E, value),
            [ctx.phi_E],
            method="DOP853",
            t_eval=z[::-1],
            rtol=1e-11,
            atol=1e-13,
        )
        if not sol.success:
            raise FrothConditionViolated(f"froth integration failed: {sol.message}")
        phi = sol.y[0][::-1]
    phi = np.clip(phi, p.phi_c, ctx.phi_E)
    phi[0], phi[-1] = p.phi_c, ctx.phi_E
    return FrothProfile(z=z, phi=phi)


@dataclass(frozen=True)
class FeasibilityReport:
    """
    Outcome of the necessary conditions for a desired steady state.

    Margins are signed so that a non-negative value (positive for strict
    inequalities) means the condition holds; ``None`` marks a margin that is
    undefined at this operating point.
    """

    fib_ok: bool
    fias_ok: bool
    froth1_ok: bool
    froth2_ok: bool
    froth3_ok: bool
    phi_E: float
    phi_bar2: Optional[float]
    z_fr: Optional[float]
    varphi_1: Optional[float]
    varphi_U: Optional[float]
    fib_margin: Optional[float]
    fias_margin: Optional[float]
    froth1_margin: Optional[float]
    froth2_margin: Optional[float]
    froth3_margin: Optional[float]
    notes: Tuple[str, ...] = field(default=())

    @property
    def feasible(self) -> bool:
        return all(
            (self.fib_ok, self.fias_ok, self.froth1_ok, self.froth2_ok, self.froth3_ok)
        )

    @property
    def z_fr_code(self) -> float:
        """``z_fr`` with ``+inf`` for no froth and ``-inf`` for a column full of it."""
        if self.z_fr is not None:
            return self.z_fr
        return math.inf if not self.froth1_ok and self.phi_E <= 1 else -math.inf

    def to_dict(self) -> Dict[str, Any]:
        out = asdict(self)
        out["notes"] = list(self.notes)
        out["feasible"] = self.feasible
        return out

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "FeasibilityReport":
        names = {f.name for f in fields(cls)}
        kwargs = {k: v for k, v in data.items() if k in names}
        kwargs["notes"] = tuple(kwargs.get("notes", ()))
        return cls(**kwargs)


def check_conditions(
    op: Flows, p: ConstitutiveParams, geom: ColumnGeometry = DEFAULT_GEOMETRY
) -> FeasibilityReport:
    """
    Evaluate the five necessary conditions for a desired steady state.

    (FIb) the zone-2 pulp fraction does not exceed the positive zero of the
    zone-1 flux; (FIas) the zone-1 solids flux can carry the solids feed;
    (Froth1) ``phi_c < phi_E <= 1``; (Froth2) the interface lies above the
    feed; (Froth3) ``j_2`` stays above ``s_F`` up to ``phi_E``.

    Never raises for a valid operating point; failures are reported per
    condition.
    """
    v = bulk_velocities(geom, op)
    j2 = _j2(v, p)
    notes: List[str] = []
    phi_E = effluent_fraction(op)

    try:
        phi_bar2: Optional[float] = solve_fjc(op, p, geom)
    except NoRoot as exc:
        phi_bar2 = None
        notes.append(f"FIa violated: {exc}")

    phi_Z = critical_points(v.q_1, p).phi_Z
    if phi_Z is None:
        phi_Z = 0.0
        notes.append(
            f"zone-1 flux has no positive zero at q_1={v.q_1:.6g} m/s; "
            "FIb requires phi_bar2 = 0"
        )
    fib_margin = None if phi_bar2 is None else phi_Z - phi_bar2
    fib_ok = fib_margin is not None and fib_margin >= 0

    q_s = op.Q_U / geom.A_U
    sub_M = critical_points(q_s, p, FluxKind.SOLIDS).phi_sub_M
    fias_margin = geom.A_U * (float(_fb(sub_M, p)) + q_s * sub_M) - op.Q_F * op.psi_F
    fias_ok = fias_margin >= 0
    varphi_1 = varphi_U = None
    if fias_ok:
        try:
            varphi_1, varphi_U = solve_fjcs(op, p, geom)
        except ZeroUnderflow as exc:
            notes.append(str(exc))

    froth1_margin = min(phi_E - p.phi_c, 1.0 - phi_E)
    froth1_ok = phi_E > p.phi_c and phi_E <= 1

    sub_M2 = critical_points(v.q_2, p).phi_sub_M
    if sub_M2 is None:
        sub_M2 = 1.0
    if sub_M2 < phi_E:
        froth3_margin = j2(sub_M2) - v.s_F
        froth3_ok = froth3_margin > 0
    else:
        froth3_margin = j2(phi_E) - v.s_F
        froth3_ok = froth3_margin > 0 or (froth3_margin == 0 and sub_M2 == phi_E)

    interface: Optional[float] = None
    froth2_margin: Optional[float] = None
    froth2_ok = False
    if froth1_ok and froth3_ok:
        try:
            value, marginal = _z_fr(op, p, geom, "quad")
        except (FrothConditionViolated, NonPositiveParameter) as exc:
            value, marginal = OUT_OF_COLUMN, False
            notes.append(str(exc))
        if marginal:
            notes.append("marginal: endpoint singularity in the froth integral")
        if value is OUT_OF_COLUMN:
            notes.append("froth fills the column")
        else:
            interface = value
            froth2_margin = value - geom.z_F
            froth2_ok = froth2_margin > 0
    elif not phi_E > p.phi_c:
        notes.append("no froth: phi_E <= phi_c")

    report = FeasibilityReport(
        fib_ok=fib_ok,
        fias_ok=fias_ok,
        froth1_ok=froth1_ok,
        froth2_ok=froth2_ok,
        froth3_ok=froth3_ok,
        phi_E=phi_E,
        phi_bar2=phi_bar2,
        z_fr=interface,
        varphi_1=varphi_1,
        varphi_U=varphi_U,
        fib_margin=fib_margin,
        fias_margin=fias_margin,
        froth1_margin=froth1_margin,
        froth2_margin=froth2_margin,
        froth3_margin=froth3_margin,
        notes=tuple(notes),
    )
    logger.debug("conditions at %r: feasible=%s", op, report.feasible)
    return report


@dataclass(frozen=True, eq=False)
class SteadyProfile:
    """Desired steady state sampled on a height grid."""

    z: np.ndarray
    phi: np.ndarray
    psi: np.ndarray
    phi_E: float
    varphi_U: float
    z_fr: Optional[float]
    report: FeasibilityReport

    def describe(self) -> Dict[str, Desc]:
        return {
            "z": Desc(self.z.shape, self.z.dtype, "m"),
            "phi": Desc(self.phi.shape, self.phi.dtype, "1"),
            "psi": Desc(self.psi.shape, self.psi.dtype, "1"),
        }

    def to_dataframe(self) -> pd.DataFrame:
        return pd.DataFrame({"z": self.z, "phi": self.phi, "psi": self.psi})


def desired_steady_state(
    op: Flows,
    p: ConstitutiveParams,
    geom: ColumnGeometry = DEFAULT_GEOMETRY,
    grid=None,
) -> SteadyProfile:
    """
    Assemble the desired steady state on ``grid``.

    Parameters
    ----------
    grid : array-like, optional
        Heights [m]; defaults to 3200 points spanning the column plus one
        tenth of its height below and above.

    Raises
    ------
    Infeasible
        When any necessary condition fails.
    """
    report = check_conditions(op, p, geom)
    if not report.feasible:
        failing = [
            name
            for name in ("fib", "fias", "froth1", "froth2", "froth3")
            if not getattr(report, f"{name}_ok")
        ]
        raise Infeasible(
            f"no desired steady state at {op!r}; failing conditions: "
            f"{', '.join(failing)}"
        )
    if grid is None:
        pad = 0.1 * geom.H
        grid = np.linspace(geom.z_U - pad, geom.z_E + pad, 3200)
    z = np.asarray(grid, dtype=float)
    phi = np.zeros_like(z)
    varphi = np.zeros_like(z)

    interface = report.z_fr
    pulp = (z >= geom.z_F) & (z < interface)
    froth = (z >= interface) & (z < geom.z_E)
    phi[pulp] = report.phi_bar2
    phi[z >= geom.z_E] = report.phi_E
    if froth.any():
        branch = froth_profile(op, p, geom, z[froth])
        phi[froth] = np.interp(z[froth], branch.z, branch.phi)

    varphi[z < geom.z_U] = report.varphi_U
    varphi[(z >= geom.z_U) & (z < geom.z_F)] = report.varphi_1
    psi = varphi * (1.0 - phi)
    return SteadyProfile(
        z=z,
        phi=phi,
        psi=psi,
        phi_E=report.phi_E,
        varphi_U=report.varphi_U,
        z_fr=interface,
        report=report,
    )
