"""
Arc algebra and the model arcs.

This module provides one-parameter families of torus maps (arcs), their
smooth product, reversal and conjugation, the blended saddle-node families
H1 and H2, the explicit twist maps that rotate separatrices, and the
assembled arcs Gamma1, Gamma2, H_{0,1} and H_{n,n+1}.

Every model slice is a skew product over phi0 (first coordinate), possibly
followed by a vertical twist, so slices carry analytic Jacobians and exact
inverses.
"""

import logging
import re
from dataclasses import dataclass, field, replace
from functools import lru_cache
from typing import Any, Callable, Dict, List, Optional, Tuple

import numpy as np
from scipy.optimize import brentq

from .config import RunConfig
from .errors import CompositionError, MapSpecError, PreconditionError, SupportError, UnknownNameError
from .model_maps_1d import (
    interpolate,
    inverse_lift,
    model_lift,
    sigmoid,
    sigmoid_derivative,
    tau_blend,
)
from .torus_dynamics import (
    TorusMap,
    compose,
    conjugate,
    product_map,
    skew_product,
    torus_distance,
)
from .unimodular import UnimodularMatrix, shear

# Configure logging
logger = logging.getLogger(__name__)

KAPPA = 1.0 / 32.0
DEFAULT_TWIST_INTERVAL = (-0.25 + KAPPA, -KAPPA)
BUMP_REGION = (1.0 / 8.0, 3.0 / 8.0)
# z-level at which the unstable separatrix of (3/4, 1/4) should reach the
# column x = 1/4 after the first twist: between the new saddle and the new sink
TWIST_TARGET_LEVEL = 0.56
TWIST_FALLBACK = 0.35
JUNCTION_SAMPLES = 100
JUNCTION_TOL = 1e-9


@dataclass(frozen=True)
class BifurcationStub:
    """Expected event of an arc: time, approximate location and type."""

    t: float
    location: Optional[Tuple[float, float]]
    kind: str = "saddle-node"
    note: str = ""
    approximate: bool = False

    def to_dict(self) -> Dict[str, Any]:
        return {
            "t": self.t,
            "location": list(self.location) if self.location is not None else None,
            "kind": self.kind,
            "note": self.note,
            "approximate": self.approximate,
        }


@dataclass(frozen=True)
class ArcFamily:
    """t in [0, 1] -> TorusMap, with expected bifurcations and provenance."""

    name: str
    rule: Callable[[float], TorusMap]
    events: Tuple[BifurcationStub, ...] = ()
    provenance: str = "model"
    metadata: Dict[str, Any] = field(default_factory=dict, compare=False)

    def __call__(self, t: float) -> TorusMap:
        t = float(t)
        if t < -1e-12 or t > 1.0 + 1e-12:
            raise PreconditionError(f"Arc parameter must lie in [0, 1], got {t}")
        return self.rule(min(max(t, 0.0), 1.0))

    def with_provenance(self, provenance: str, name: Optional[str] = None) -> "ArcFamily":
        return replace(self, provenance=provenance, name=name or self.name)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "name": self.name,
            "provenance": self.provenance,
            "events": [e.to_dict() for e in self.events],
            "metadata": dict(self.metadata),
        }


def smooth_step(t: Any) -> Any:
    """tau(t): 0 for t <= 1/3, 1 for t >= 2/3."""
    return sigmoid(1.0 / 3.0, 2.0 / 3.0, t)


def smooth_ramp(a: float, b: float, x: Any) -> Any:
    """Flat step from 0 at a to 1 at b, the unit sigmoid rescaled to [a, b]."""
    if not a < b:
        raise PreconditionError(f"ramp needs a < b, got a={a}, b={b}")
    return sigmoid(0.0, 1.0, (np.asarray(x, dtype=float) - a) / (b - a))


def smooth_ramp_derivative(a: float, b: float, x: Any) -> Any:
    return np.asarray(sigmoid_derivative(0.0, 1.0, (np.asarray(x, dtype=float) - a) / (b - a))) / (b - a)


def _invert_smooth_step(target: float) -> float:
    """Time t in [1/3, 2/3] with smooth_step(t) = target."""
    if target <= 0.0:
        return 1.0 / 3.0
    if target >= 1.0:
        return 2.0 / 3.0
    return brentq(lambda t: smooth_step(t) - target, 1.0 / 3.0, 2.0 / 3.0, xtol=1e-15)


def constant_arc(f: TorusMap, name: Optional[str] = None) -> ArcFamily:
    return ArcFamily(name or f"const({f.name})", lambda t: f, (), "model")


def _junction_matches(f: TorusMap, g: TorusMap) -> bool:
    rng = np.random.default_rng(0)
    p = rng.random((JUNCTION_SAMPLES, 2))
    return bool(np.max(torus_distance(f(p), g(p))) <= JUNCTION_TOL)


def smooth_product(
    a1: ArcFamily,
    a2: ArcFamily,
    junction: str = "pointwise",
    config: Optional[RunConfig] = None,
) -> ArcFamily:
    """
    Concatenate two arcs with the flat reparametrization tau.

    The result runs a1 at 2 tau(t) for t <= 1/2 and a2 at 2 tau(t) - 1
    after, so it is constant near both ends.

    Args:
        a1: First arc
        a2: Second arc
        junction: "pointwise" requires a1(1) = a2(0) on random samples;
            "certified" also accepts endpoints with equal invariant matrices
        config: Used to measure invariant matrices for certified junctions

    Returns:
        ArcFamily with remapped event times

    Raises:
        CompositionError: if the junction cannot be established
    """
    if junction not in ("pointwise", "certified"):
        raise PreconditionError(f"junction must be 'pointwise' or 'certified', got {junction!r}")
    left, right = a1(1.0), a2(0.0)
    metadata: Dict[str, Any] = {"junction": "pointwise", "parts": [a1.name, a2.name]}
    if not _junction_matches(left, right):
        if junction == "pointwise":
            raise CompositionError(
                f"Arcs {a1.name} and {a2.name} do not meet pointwise",
                {"left": a1.name, "right": a2.name},
            )
        from .torus_dynamics import invariant_matrix

        config = config or RunConfig()
        m_left = invariant_matrix(left, config).matrix
        m_right = invariant_matrix(right, config).matrix
        if m_left != m_right:
            raise CompositionError(
                f"Junction of {a1.name} and {a2.name} joins invariant matrices {m_left} and {m_right}",
                {"left": list(m_left.entries), "right": list(m_right.entries)},
            )
        metadata = {"junction": "certified", "matrix": list(m_left.entries), "parts": [a1.name, a2.name]}
        logger.info(f"Certified junction {a1.name} | {a2.name} at invariant matrix {m_left}")

    def rule(t: float) -> TorusMap:
        s = 2.0 * float(smooth_step(t))
        if t <= 0.5:
            return a1(min(s, 1.0))
        return a2(max(s - 1.0, 0.0))

    events = tuple(
        replace(e, t=_invert_smooth_step(e.t / 2.0)) for e in a1.events
    ) + tuple(replace(e, t=_invert_smooth_step((e.t + 1.0) / 2.0)) for e in a2.events)
    return ArcFamily(f"{a1.name}*{a2.name}", rule, events, "product", metadata)


def reverse(a: ArcFamily) -> ArcFamily:
    """reverse(a)(t) = a(1 - t)."""
    events = tuple(replace(e, t=1.0 - e.t, note=_reverse_note(e.note)) for e in reversed(a.events))
    return ArcFamily(f"rev({a.name})", lambda t: a(1.0 - t), events, "reversed", dict(a.metadata))


def _reverse_note(note: str) -> str:
    swap = {"birth": "annihilation", "annihilation": "birth"}
    return swap.get(note, note)


def conjugate_arc(J: UnimodularMatrix, a: ArcFamily) -> ArcFamily:
    """conjugate_arc(J, a)(t) = J a(t) J^{-1}; event locations are moved by J."""
    A = J.as_array()

    def move(e: BifurcationStub) -> BifurcationStub:
        if e.location is None:
            return e
        q = np.mod(A @ np.array(e.location), 1.0)
        return replace(e, location=(float(q[0]), float(q[1])))

    if J.entries == (1, 0, 0, 1):
        return replace(a, name=f"conj[{J}]({a.name})", provenance="conjugated")
    return ArcFamily(
        f"conj[{J}]({a.name})",
        lambda t: conjugate(J, a(t)),
        tuple(move(e) for e in a.events),
        "conjugated",
        {**a.metadata, "conjugator": list(J.entries)},
    )


# Blended saddle-node families

def bump(x: Any) -> Any:
    """B(x) = sigmoid(0, 1, (8x - 2)^2) on x mod 1: 0 at 1/4, 1 outside (1/8, 3/8)."""
    xr = np.mod(np.asarray(x, dtype=float), 1.0)
    return sigmoid(0.0, 1.0, (8.0 * xr - 2.0) ** 2)


def bump_derivative(x: Any) -> Any:
    xr = np.mod(np.asarray(x, dtype=float), 1.0)
    u = 8.0 * xr - 2.0
    return np.asarray(sigmoid_derivative(0.0, 1.0, u**2)) * 16.0 * u


def blended_slice(family_name: str, t: float) -> TorusMap:
    """
    (x, z) -> (phi0(x), (1 - B(x)) eta_t(z) + B(x) phi0(z)).

    ``family_name`` selects eta: "eta1" = interpolate(phi0, g1),
    "eta2" = interpolate(g1, g2).
    """
    phi0 = model_lift("phi0")
    family = _families()[family_name]
    blend = tau_blend(family, phi0)

    def fiber(x, z):
        return blend(t, bump(x), z)

    def fiber_dx(x, z):
        return np.asarray(blend.dtau(t, bump(x), z)) * bump_derivative(x)

    def fiber_dz(x, z):
        return blend.dx(t, bump(x), z)

    return skew_product(phi0, fiber, fiber_dx, fiber_dz, f"{family_name}-blend@{t:.6g}")


@lru_cache(maxsize=None)
def _families():
    phi0, g1, g2 = model_lift("phi0"), model_lift("g1"), model_lift("g2")
    return {"eta1": interpolate(phi0, g1), "eta2": interpolate(g1, g2)}


def model_arc_H1() -> ArcFamily:
    """
    Birth of a sink and a saddle on the column x = 1/4.

    Slice t = 3/4 has a saddle-node at (1/4, 1/2) with eigenvalues {0.5, 1}.
    """
    return ArcFamily(
        "h1",
        lambda t: blended_slice("eta1", t),
        (BifurcationStub(0.75, (0.25, 0.5), note="birth"),),
    )


def _h2_stub() -> BifurcationStub:
    return BifurcationStub(annihilation_time_estimate(), (0.25, 0.67), note="annihilation", approximate=True)


def model_arc_H2() -> ArcFamily:
    """Annihilation of the born sink with the saddle (1/4, 3/4), after the first twist."""
    twist = twist_map(twist_calibration())
    return ArcFamily(
        "h2",
        lambda t: compose(twist, blended_slice("eta2", t)),
        (_h2_stub(),),
    )


# Twists

@dataclass(frozen=True)
class TwistMap:
    """
    Vertical shear (x, z) -> (x, z + amount * R(x)) (axis "x"), or the
    horizontal one with the roles of x and z swapped (axis "z").

    R(x) = s(x) - s(phi0^{-1}(x)) with s a flat step from lo to
    phi0^{-1}(hi), so every phi0-orbit through the annulus picks up a
    total shift of exactly ``amount``.
    """

    amount: float
    axis: str = "x"
    interval: Tuple[float, float] = DEFAULT_TWIST_INTERVAL

    def __post_init__(self):
        check_twist_support(self.interval)
        if self.axis not in ("x", "z"):
            raise SupportError(f"Twist axis must be 'x' or 'z', got {self.axis!r}")

    @property
    def ramp_end(self) -> float:
        return float(inverse_lift(model_lift("phi0"), self.interval[1]))

    def domain_support(self) -> Tuple[float, float]:
        """Interval of base points whose image falls in the annulus."""
        phi0 = model_lift("phi0")
        return (float(inverse_lift(phi0, self.interval[0])), self.ramp_end)

    def _step(self, u):
        return smooth_ramp(self.interval[0], self.ramp_end, u)

    def _dstep(self, u):
        return smooth_ramp_derivative(self.interval[0], self.ramp_end, u)

    def profile(self, x: Any) -> np.ndarray:
        """R(x), periodic with period 1."""
        phi0 = model_lift("phi0")
        u = _centered(x)
        back = np.asarray(inverse_lift(phi0, u))
        return np.asarray(self._step(u)) - np.asarray(self._step(back))

    def profile_derivative(self, x: Any) -> np.ndarray:
        phi0 = model_lift("phi0")
        u = _centered(x)
        back = np.asarray(inverse_lift(phi0, u))
        return np.asarray(self._dstep(u)) - np.asarray(self._dstep(back)) / np.asarray(phi0.derivative(back))

    def as_torus_map(self) -> TorusMap:
        i, j = (0, 1) if self.axis == "x" else (1, 0)
        amount = self.amount

        def lift(p):
            out = np.array(p, dtype=float, copy=True)
            out[..., j] = p[..., j] + amount * self.profile(p[..., i])
            return out

        def jac(p):
            out = np.zeros(p.shape[:-1] + (2, 2))
            out[..., 0, 0] = 1.0
            out[..., 1, 1] = 1.0
            out[..., j, i] = amount * self.profile_derivative(p[..., i])
            return out

        def inverse(q):
            out = np.array(q, dtype=float, copy=True)
            out[..., j] = q[..., j] - amount * self.profile(q[..., i])
            return out

        return TorusMap(
            f"twist[{self.axis},{amount:.6g}]",
            lift,
            jac,
            structure="twist",
            metadata={"amount": amount, "axis": self.axis, "interval": list(self.interval)},
            inverse_rule=inverse,
        )


def _centered(x: Any) -> np.ndarray:
    """Representative of x mod 1 in [-1/2, 1/2)."""
    xs = np.asarray(x, dtype=float)
    return xs - np.floor(xs + 0.5)


def check_twist_support(interval: Tuple[float, float]) -> None:
    """
    Check that a twist annulus lies where phi0 moves points toward 1/4.

    Raises:
        SupportError: if the interval touches 1/4 or 3/4, leaves
            (-1/4, 1/4) mod 1, or is shorter than one phi0 step
    """
    lo, hi = (float(v) for v in interval)
    shift = np.floor(lo + 0.5)
    lo, hi = lo - shift, hi - shift
    if not lo < hi:
        raise SupportError(f"Twist interval {interval} is empty")
    if lo <= -0.25 or hi >= 0.25:
        raise SupportError(
            f"Twist interval {interval} must lie strictly between the fixed points 3/4 and 1/4 of phi0",
            {"interval": list(interval)},
        )
    phi0 = model_lift("phi0")
    if hi <= phi0.value(lo):
        raise SupportError(
            f"Twist interval {interval} is shorter than one phi0 step",
            {"interval": list(interval), "phi0_lo": float(phi0.value(lo))},
        )


def twist_map(amount: float, axis: str = "x", interval: Tuple[float, float] = DEFAULT_TWIST_INTERVAL) -> TorusMap:
    return TwistMap(amount, axis, interval).as_torus_map()


def twist_arc(n: int, axis: str = "x", interval: Tuple[float, float] = DEFAULT_TWIST_INTERVAL) -> ArcFamily:
    """
    Slice t is w_{n t} after f0: a separatrix crossing the annulus once gains n
    windings at t = 1. The annulus contains no fixed point, so every slice
    keeps the four fixed points of f0.
    """
    if int(n) != n:
        raise PreconditionError(f"Twist count must be an integer, got {n}")
    check_twist_support(interval)
    phi0 = model_lift("phi0")
    f0 = product_map(phi0, phi0)
    if n == 0:
        return replace(constant_arc(f0, name="twist(0)"), metadata={"twist": 0})

    def rule(t: float) -> TorusMap:
        return compose(twist_map(n * t, axis, interval), f0)

    return ArcFamily(f"twist({n})", rule, (), "model", {"twist": int(n), "axis": axis, "interval": list(interval)})


@lru_cache(maxsize=None)
def twist_calibration_report(target: float = TWIST_TARGET_LEVEL) -> Dict[str, Any]:
    """
    First twist amount d1 and how it was obtained.

    Follows the unstable separatrix of (3/4, 1/4), which is the line z = 1/4
    until the annulus, under the twisted H1 slice at t = 1 until it reaches
    the column x = 1/4, and picks d1 so that it arrives at height ``target``.
    When no amount in [0, 0.6] reaches the target, d1 is TWIST_FALLBACK and
    the report says so.
    """
    slice_1 = blended_slice("eta1", 1.0)
    x0 = DEFAULT_TWIST_INTERVAL[0] + 1.0 - 0.02

    def arrival(d: float) -> float:
        f = compose(twist_map(d), slice_1)
        p = np.array([x0, 0.25])
        for _ in range(400):
            p = f.lift(p)
            if abs(p[0] - 1.25) < 0.02:
                return float(p[1])
        raise CompositionError("Calibration orbit did not reach the column x = 1/4")

    try:
        d1 = brentq(lambda d: arrival(d) - target, 0.0, 0.6, xtol=1e-12)
    except (ValueError, CompositionError) as e:
        logger.warning(f"Twist calibration failed ({e}); using {TWIST_FALLBACK}")
        return {"d1": TWIST_FALLBACK, "target": target, "fallback": True, "reason": str(e)}
    logger.info(f"Calibrated first twist amount d1 = {d1:.12f}")
    return {"d1": float(d1), "target": target, "fallback": False, "reason": ""}


def twist_calibration(target: float = TWIST_TARGET_LEVEL) -> float:
    return float(twist_calibration_report(target)["d1"])


@lru_cache(maxsize=None)
def annihilation_time_estimate(grid_n: int = 8192) -> float:
    """
    Time at which eta2_t loses its two roots above 1/2, from the 1-D root
    count on a coarse-to-fine t bracket.
    """
    from .model_maps_1d import fixed_point_count_1d

    family = _families()["eta2"]
    lo, hi = 0.0, 1.0
    before = fixed_point_count_1d(family, lo, grid_n)
    if before <= fixed_point_count_1d(family, hi, grid_n):
        logger.warning("eta2 root count does not drop across [0, 1]")
        return 0.5
    for _ in range(30):
        mid = 0.5 * (lo + hi)
        if fixed_point_count_1d(family, mid, grid_n) >= before:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


# Assembled arcs

def model_arc_Gamma1() -> ArcFamily:
    """
    H1 with the first twist switched on during [0, 1/2], before the birth at 3/4.

    The twist annulus and the bump region are disjoint, so the two pieces
    act on separate parts of the torus.
    """
    calibration = twist_calibration_report()
    d1 = calibration["d1"]
    _check_disjoint(DEFAULT_TWIST_INTERVAL)

    def rule(t: float) -> TorusMap:
        amount = d1 * float(smooth_ramp(0.0, 0.5, t))
        return compose(twist_map(amount), blended_slice("eta1", t))

    metadata = {"d1": d1, "twist_calibration": dict(calibration)}
    return ArcFamily("gamma1", rule, (BifurcationStub(0.75, (0.25, 0.5), note="birth"),), "model", metadata)


def model_arc_Gamma2() -> ArcFamily:
    """H2 with the second twist (up to a total of one turn) during [1/2, 1], after the annihilation."""
    calibration = twist_calibration_report()
    d1 = calibration["d1"]
    _check_disjoint(DEFAULT_TWIST_INTERVAL)

    def rule(t: float) -> TorusMap:
        amount = d1 + (1.0 - d1) * float(smooth_ramp(0.5, 1.0, t))
        return compose(twist_map(amount), blended_slice("eta2", t))

    metadata = {"d1": d1, "twist_calibration": dict(calibration)}
    return ArcFamily("gamma2", rule, (_h2_stub(),), "model", metadata)


def _check_disjoint(interval: Tuple[float, float]) -> None:
    lo, hi = (float(_centered(v)) for v in interval)
    pre_lo = float(inverse_lift(model_lift("phi0"), lo))
    # the annulus moves base points in [phi0^{-1}(lo), hi], inside (-1/4, 0)
    if hi > BUMP_REGION[0] or pre_lo < BUMP_REGION[1] - 1.0:
        raise CompositionError(f"Twist annulus {interval} overlaps the bump region {BUMP_REGION}")


@lru_cache(maxsize=None)
def model_arc_H01() -> ArcFamily:
    """f0 to a map with invariant matrix J_1 through two saddle-node events."""
    arc = smooth_product(model_arc_Gamma1(), model_arc_Gamma2())
    metadata = {**arc.metadata, "twist_calibration": dict(twist_calibration_report())}
    return replace(arc, name="h01", provenance="model", metadata=metadata)


def model_arc_H(n: int) -> ArcFamily:
    """H_{n,n+1} = J_n H_{0,1} J_n^{-1}."""
    return replace(conjugate_arc(shear(n), model_arc_H01()), name=f"h:{n}")


_MODEL_ARCS: Dict[str, Callable[[], ArcFamily]] = {
    "h1": model_arc_H1,
    "h2": model_arc_H2,
    "gamma1": model_arc_Gamma1,
    "gamma2": model_arc_Gamma2,
    "h01": model_arc_H01,
    "twist": lambda: twist_arc(1),
}


def model_arc(name: str) -> ArcFamily:
    if name not in _MODEL_ARCS:
        raise UnknownNameError(f"Unknown model arc: {name}", {"known": sorted(_MODEL_ARCS)})
    return _MODEL_ARCS[name]()


def list_arcs() -> List[str]:
    return sorted(_MODEL_ARCS) + ["h:<n>", "plan:<a,b,c,d>"]


def get_arc(arc_id: str, config: Optional[RunConfig] = None) -> ArcFamily:
    """
    Resolve an arc id: a model arc name, ``h:<n>`` or ``plan:<a,b,c,d>``.
    """
    arc_id = arc_id.strip()
    if arc_id in _MODEL_ARCS:
        return model_arc(arc_id)
    match = re.fullmatch(r"h:(-?\d+)", arc_id)
    if match:
        return model_arc_H(int(match.group(1)))
    if arc_id.startswith("plan:"):
        from .arc_planner import plan, realize

        J = UnimodularMatrix.parse(arc_id[len("plan:"):])
        return realize(plan(J), config)
    raise MapSpecError(f"Unknown arc id {arc_id!r}", {"known": list_arcs()})
