"""
One-dimensional building blocks.

This module provides the circle-map lifts of the model diffeomorphisms, the
flat sigmoid used to glue them together, linear interpolation families
between lifts, and fixed-point analysis of a single lift.

All rules are vectorized: they accept floats or numpy arrays and return the
same shape.
"""

import logging
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional

import numpy as np
from scipy.optimize import brentq
from scipy.special import expit

from .errors import InvalidIntervalError, PreconditionError, UnknownNameError

# Configure logging
logger = logging.getLogger(__name__)

ArrayLike = Any
Rule = Callable[[np.ndarray], np.ndarray]

TWO_PI = 2.0 * np.pi


def _restore(x: ArrayLike, out: np.ndarray) -> ArrayLike:
    """Return a float for scalar input, the array otherwise."""
    if np.ndim(x) == 0:
        return float(out)
    return out


def wrap01(x: ArrayLike) -> ArrayLike:
    """Reduce an angle to the circle representative in [0, 1)."""
    out = np.mod(np.asarray(x, dtype=float), 1.0)
    # mod can round 1 - 1e-17 up to exactly 1.0
    out = np.where(out >= 1.0, 0.0, out)
    return _restore(x, out)


def circle_distance(x: ArrayLike, y: ArrayLike) -> ArrayLike:
    """Distance between two circle points given by their angles."""
    d = np.abs(np.mod(np.asarray(x, dtype=float) - np.asarray(y, dtype=float) + 0.5, 1.0) - 0.5)
    return _restore(np.asarray(x) + np.asarray(y), d)


def sigmoid(a: float, b: float, x: ArrayLike) -> ArrayLike:
    """
    Flat sigmoid step from 0 (x <= a) to 1 (x >= b).

    Strictly between the endpoints the value is
    1 / (1 + exp(((a+b)/2 - x) / ((x-a)^2 (x-b)^2))), which is infinitely
    flat at both ends.

    Args:
        a: Left end of the transition
        b: Right end of the transition
        x: Evaluation point(s)

    Returns:
        Values in [0, 1], same shape as x
    """
    if not a < b:
        raise InvalidIntervalError(f"sigmoid needs a < b, got a={a}, b={b}", {"a": a, "b": b})
    xs = np.asarray(x, dtype=float)
    out = np.where(xs >= b, 1.0, 0.0)
    inner = (xs > a) & (xs < b)
    if np.any(inner):
        xi = xs[inner] if xs.ndim else xs
        with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
            arg = (xi - 0.5 * (a + b)) / ((xi - a) ** 2 * (xi - b) ** 2)
        vals = expit(arg)
        if xs.ndim:
            out[inner] = vals
        else:
            out = np.asarray(vals)
    return _restore(x, out)


def sigmoid_derivative(a: float, b: float, x: ArrayLike) -> ArrayLike:
    """Analytic derivative of ``sigmoid(a, b, x)``; zero outside (a, b)."""
    if not a < b:
        raise InvalidIntervalError(f"sigmoid needs a < b, got a={a}, b={b}", {"a": a, "b": b})
    xs = np.atleast_1d(np.asarray(x, dtype=float))
    out = np.zeros_like(xs)
    inner = (xs > a) & (xs < b)
    if np.any(inner):
        xi = xs[inner]
        m = 0.5 * (a + b)
        with np.errstate(divide="ignore", over="ignore", invalid="ignore", under="ignore"):
            den = (xi - a) ** 2 * (xi - b) ** 2
            arg = (xi - m) / den
            s = expit(arg)
            weight = s * (1.0 - s)
            dden = 2.0 * (xi - a) * (xi - b) * (2.0 * xi - a - b)
            darg = (den - (xi - m) * dden) / den**2
            vals = np.where(weight > 0.0, weight * darg, 0.0)
        out[inner] = np.nan_to_num(vals, nan=0.0, posinf=0.0, neginf=0.0)
    return _restore(x, out.reshape(np.shape(x)) if np.ndim(x) else out[0])


@dataclass(frozen=True)
class LiftMap:
    """
    A real lift of an orientation-preserving circle map.

    ``periodic`` marks lifts of degree one; non-periodic rules are helper
    pieces that are only meaningful on a sub-interval of [0, 1].
    """

    name: str
    rule: Rule
    derivative_rule: Optional[Rule] = None
    periodic: bool = True
    h_d: float = 1e-5

    def __call__(self, x: ArrayLike) -> ArrayLike:
        return self.value(x)

    def value(self, x: ArrayLike) -> ArrayLike:
        return _restore(x, np.asarray(self.rule(np.asarray(x, dtype=float)), dtype=float))

    def derivative(self, x: ArrayLike) -> ArrayLike:
        xs = np.asarray(x, dtype=float)
        if self.derivative_rule is not None:
            return _restore(x, np.asarray(self.derivative_rule(xs), dtype=float))
        return _restore(x, self.fd_derivative(xs))

    def fd_derivative(self, x: ArrayLike, h: Optional[float] = None) -> ArrayLike:
        """Centered finite-difference derivative with step ``h`` (default h_d)."""
        h = self.h_d if h is None else h
        xs = np.asarray(x, dtype=float)
        out = (np.asarray(self.rule(xs + h)) - np.asarray(self.rule(xs - h))) / (2.0 * h)
        return _restore(x, out)


@dataclass(frozen=True)
class FixedPoint1D:
    location: float
    multiplier: float
    kind: str
    tangential: bool = False

    def to_dict(self) -> Dict[str, Any]:
        return {
            "location": self.location,
            "multiplier": self.multiplier,
            "kind": self.kind,
            "tangential": self.tangential,
        }


# Model lifts

def _phi0(x):
    return x - np.sin(TWO_PI * (x - 0.25)) / (4.0 * np.pi)


def _dphi0(x):
    return 1.0 - 0.5 * np.cos(TWO_PI * (x - 0.25))


def _phi1(x):
    return x - np.sin(6.0 * np.pi * (x - 0.25)) / (12.0 * np.pi)


def _dphi1(x):
    return 1.0 - 0.5 * np.cos(6.0 * np.pi * (x - 0.25))


_PHI2_FREQ = 5.0 * np.pi / 6.0


def _phi2(x):
    return x + np.sin(_PHI2_FREQ * (x - 5.0 / 12.0)) / (4.0 * np.pi)


def _dphi2(x):
    return 1.0 + _PHI2_FREQ * np.cos(_PHI2_FREQ * (x - 5.0 / 12.0)) / (4.0 * np.pi)


# glue windows: (rise start, rise end, fall start, fall end)
G1_WINDOW = (0.26, 0.27, 0.76, 0.77)
G2_WINDOW = (0.42, 0.43, 0.98, 0.99)


def _window(w, x):
    return sigmoid(w[0], w[1], x) - sigmoid(w[2], w[3], x)


def _dwindow(w, x):
    return sigmoid_derivative(w[0], w[1], x) - sigmoid_derivative(w[2], w[3], x)


def _on_unit_interval(rule01: Rule) -> Rule:
    """Extend a rule given on [0, 1) by value(x + 1) = value(x) + 1."""

    def rule(x):
        n = np.floor(x)
        return rule01(x - n) + n

    return rule


def _periodic_part(rule01: Rule) -> Rule:
    def rule(x):
        return rule01(x - np.floor(x))

    return rule


def _g1_01(x):
    w = _window(G1_WINDOW, x)
    return _phi0(x) + w * (_phi1(x) - _phi0(x))


def _dg1_01(x):
    w = _window(G1_WINDOW, x)
    dw = _dwindow(G1_WINDOW, x)
    return _dphi0(x) + dw * (_phi1(x) - _phi0(x)) + w * (_dphi1(x) - _dphi0(x))


def _g2_01(x):
    w = _window(G2_WINDOW, x)
    g1 = _g1_01(x)
    return g1 + w * (_phi2(x) - g1)


def _dg2_01(x):
    w = _window(G2_WINDOW, x)
    dw = _dwindow(G2_WINDOW, x)
    g1 = _g1_01(x)
    dg1 = _dg1_01(x)
    return dg1 + dw * (_phi2(x) - g1) + w * (_dphi2(x) - dg1)


_REGISTRY: Dict[str, LiftMap] = {
    "phi0": LiftMap("phi0", _phi0, _dphi0),
    "phi1": LiftMap("phi1", _phi1, _dphi1),
    "phi2": LiftMap("phi2", _phi2, _dphi2, periodic=False),
    "g1": LiftMap("g1", _on_unit_interval(_g1_01), _periodic_part(_dg1_01)),
    "g2": LiftMap("g2", _on_unit_interval(_g2_01), _periodic_part(_dg2_01)),
}
# F0 of the torus construction and phi0 of the arc construction are one lift
_ALIASES = {"F0": "phi0", "f0": "phi0"}


def model_lift_names() -> List[str]:
    return sorted(_REGISTRY)


def model_lift(name: str) -> LiftMap:
    """
    Look up a model lift by name.

    Args:
        name: One of phi0 (alias F0), phi1, phi2, g1, g2

    Returns:
        The registered LiftMap

    Raises:
        UnknownNameError: for any other name
    """
    key = _ALIASES.get(name, name)
    if key not in _REGISTRY:
        raise UnknownNameError(f"Unknown model lift: {name}", {"known": model_lift_names()})
    return _REGISTRY[key]


def check_lift(f: LiftMap, samples: int = 4096) -> Dict[str, Any]:
    """
    Check the degree-one identity and monotonicity of a lift on a grid.

    Args:
        f: Lift to check
        samples: Grid size on [0, 1)

    Returns:
        Report with the maximal degree-one defect and minimal derivative
    """
    xs = np.arange(samples, dtype=float) / samples
    degree_error = None
    if f.periodic:
        degree_error = float(np.max(np.abs(np.asarray(f.value(xs + 1.0)) - np.asarray(f.value(xs)) - 1.0)))
    min_derivative = float(np.min(f.derivative(xs)))
    valid = min_derivative > 0.0 and (degree_error is None or degree_error <= 1e-10)
    return {
        "name": f.name,
        "degree_one_error": degree_error,
        "min_derivative": min_derivative,
        "valid": valid,
    }


def solve_monotone(
    value: Rule,
    derivative: Rule,
    y: np.ndarray,
    bound: float,
    tol: float = 1e-12,
    max_iter: int = 100,
) -> np.ndarray:
    """
    Solve value(x) = y for an increasing rule whose root lies in [y - bound, y + bound].

    Newton steps that leave the current bracket are replaced by bisection.
    """
    ys = np.atleast_1d(np.asarray(y, dtype=float))
    lo = ys - bound
    hi = ys + bound
    x = ys.copy()
    for _ in range(max_iter):
        r = np.asarray(value(x)) - ys
        lo = np.where(r < 0.0, x, lo)
        hi = np.where(r > 0.0, x, hi)
        d = np.asarray(derivative(x))
        with np.errstate(divide="ignore", invalid="ignore"):
            step = np.where(d > 0.0, r / d, np.inf)
        cand = x - step
        bad = ~np.isfinite(cand) | (cand <= lo) | (cand >= hi)
        cand = np.where(bad, 0.5 * (lo + hi), cand)
        done = (np.abs(cand - x) <= tol) | (r == 0.0)
        x = np.where(r == 0.0, x, cand)
        if np.all(done):
            break
    return x


def inverse_lift(
    f: LiftMap,
    y: ArrayLike,
    tol: float = 1e-12,
    max_iter: int = 100,
) -> ArrayLike:
    """
    Invert a monotone degree-one lift by safeguarded Newton iteration.

    The root of f(x) = y is bracketed in [y - B, y + B] where B bounds
    |f(x) - x|; Newton steps leaving the bracket are replaced by bisection.

    Args:
        f: Strictly increasing lift
        y: Target value(s)
        tol: Absolute tolerance on x
        max_iter: Iteration cap

    Returns:
        x with f(x) = y, same shape as y
    """
    grid = np.arange(1024, dtype=float) / 1024.0
    bound = float(np.max(np.abs(np.asarray(f.value(grid)) - grid))) + 1e-3
    x = solve_monotone(f.value, f.derivative, y, bound, tol, max_iter)
    return _restore(y, x if np.ndim(y) else x[0])


@dataclass(frozen=True)
class Family1D:
    """
    A one-parameter family of lifts, t in [0, 1].

    ``rule(t, x)`` is the slice value; ``dx`` and ``dt`` are its partial
    derivatives.
    """

    name: str
    rule: Callable[[float, np.ndarray], np.ndarray]
    dx_rule: Callable[[float, np.ndarray], np.ndarray]
    dt_rule: Callable[[float, np.ndarray], np.ndarray]

    def __call__(self, t: float, x: ArrayLike) -> ArrayLike:
        return _restore(x, np.asarray(self.rule(t, np.asarray(x, dtype=float)), dtype=float))

    def dx(self, t: float, x: ArrayLike) -> ArrayLike:
        return _restore(x, np.asarray(self.dx_rule(t, np.asarray(x, dtype=float)), dtype=float))

    def dt(self, t: float, x: ArrayLike) -> ArrayLike:
        return _restore(x, np.asarray(self.dt_rule(t, np.asarray(x, dtype=float)), dtype=float))

    def slice(self, t: float) -> LiftMap:
        return LiftMap(
            f"{self.name}@{t:g}",
            lambda x: self.rule(t, x),
            lambda x: self.dx_rule(t, x),
        )

    def check_slice(self, t: float, samples: int = 4096) -> Dict[str, Any]:
        report = check_lift(self.slice(t), samples)
        report["t"] = t
        return report


def interpolate(f: LiftMap, g: LiftMap) -> Family1D:
    """
    Straight-line family eta_t = (1 - t) f + t g.

    Args:
        f: Slice at t = 0
        g: Slice at t = 1

    Returns:
        Family1D with analytic x- and t-derivatives
    """
    return Family1D(
        f"interp({f.name},{g.name})",
        lambda t, x: (1.0 - t) * np.asarray(f.value(x)) + t * np.asarray(g.value(x)),
        lambda t, x: (1.0 - t) * np.asarray(f.derivative(x)) + t * np.asarray(g.derivative(x)),
        lambda t, x: np.asarray(g.value(x)) - np.asarray(f.value(x)),
    )


@dataclass(frozen=True)
class TauBlend:
    """eta_{t,tau} = (1 - tau) eta_t + tau * base, with partial derivatives."""

    family: Family1D
    base: LiftMap
    name: str = field(default="")

    @staticmethod
    def _check_tau(tau: ArrayLike) -> np.ndarray:
        taus = np.asarray(tau, dtype=float)
        if np.any(taus < 0.0) or np.any(taus > 1.0):
            raise PreconditionError("tau must lie in [0, 1]", {"tau_min": float(np.min(taus)), "tau_max": float(np.max(taus))})
        return taus

    def __call__(self, t: float, tau: ArrayLike, x: ArrayLike) -> ArrayLike:
        taus = self._check_tau(tau)
        out = (1.0 - taus) * np.asarray(self.family(t, x)) + taus * np.asarray(self.base.value(x))
        return _restore(np.asarray(x) + taus, out)

    def dx(self, t: float, tau: ArrayLike, x: ArrayLike) -> ArrayLike:
        taus = self._check_tau(tau)
        out = (1.0 - taus) * np.asarray(self.family.dx(t, x)) + taus * np.asarray(self.base.derivative(x))
        return _restore(np.asarray(x) + taus, out)

    def dtau(self, t: float, tau: ArrayLike, x: ArrayLike) -> ArrayLike:
        self._check_tau(tau)
        out = np.asarray(self.base.value(x)) - np.asarray(self.family(t, x))
        return _restore(np.asarray(x) + np.asarray(tau, dtype=float), out)


def tau_blend(family: Family1D, base: LiftMap) -> TauBlend:
    return TauBlend(family, base, f"blend({family.name},{base.name})")


def _classify_1d(multiplier: float, tol_hyp: float) -> str:
    if abs(multiplier) < 1.0 - tol_hyp:
        return "sink"
    if abs(multiplier) > 1.0 + tol_hyp:
        return "source"
    return "nonhyperbolic"


def fixed_points_1d(
    f: LiftMap,
    grid_n: int = 8192,
    tol: float = 1e-11,
    tol_hyp: float = 1e-6,
    tol_touch: float = 1e-9,
) -> List[FixedPoint1D]:
    """
    Locate the fixed points of the circle map lifted by ``f``.

    Roots of h(x) = f(x) - x are bracketed by sign changes on a uniform grid
    of [0, 1] and polished with brentq. Cells where h' changes sign without
    a sign change of h are inspected at the extremum of h: a touch within
    tol_touch is reported as one tangential root, a double crossing as two
    tangential roots.

    Args:
        f: Lift to analyze
        grid_n: Number of grid cells (at least 256)
        tol: Required residual |f(x) - x|
        tol_hyp: Hyperbolicity margin around multiplier 1
        tol_touch: Residual under which an extremum counts as a touch

    Returns:
        Fixed points sorted by location in [0, 1)
    """
    if grid_n < 256:
        raise PreconditionError("grid_n must be >= 256", {"grid_n": grid_n})

    def h(x):
        return np.asarray(f.value(x)) - x

    def dh(x):
        return np.asarray(f.derivative(x)) - 1.0

    xs = np.arange(grid_n + 1, dtype=float) / grid_n
    hs = h(xs)
    ds = dh(xs)
    roots: List[tuple] = []

    for i in np.flatnonzero(hs[:-1] == 0.0):
        roots.append((float(xs[i]), False))

    for i in np.flatnonzero(hs[:-1] * hs[1:] < 0.0):
        root = brentq(lambda s: float(h(s)), xs[i], xs[i + 1], xtol=1e-14, rtol=4 * np.finfo(float).eps)
        roots.append((float(root), False))

    same_sign = hs[:-1] * hs[1:] > 0.0
    turning = ds[:-1] * ds[1:] < 0.0
    for i in np.flatnonzero(same_sign & turning):
        xe = brentq(lambda s: float(dh(s)), xs[i], xs[i + 1], xtol=1e-15)
        he = float(h(xe))
        if abs(he) <= tol_touch:
            logger.debug(f"Tangential fixed point of {f.name} near {xe:.12f}")
            roots.append((float(xe), True))
        elif he * hs[i] < 0.0:
            for lo, hi in ((xs[i], xe), (xe, xs[i + 1])):
                root = brentq(lambda s: float(h(s)), lo, hi, xtol=1e-14, rtol=4 * np.finfo(float).eps)
                roots.append((float(root), True))

    points: List[FixedPoint1D] = []
    for x, tangential in sorted(roots):
        location = float(wrap01(x))
        if any(circle_distance(location, p.location) < 1e-12 for p in points):
            continue
        residual = abs(float(h(x)))
        if residual > tol and not tangential:
            logger.warning(f"Fixed point of {f.name} at {x:.12f} has residual {residual:.2e} > tol")
        multiplier = float(f.derivative(x))
        kind = "nonhyperbolic" if tangential and abs(multiplier - 1.0) <= max(tol_hyp, 1e-3) else _classify_1d(multiplier, tol_hyp)
        points.append(FixedPoint1D(location, multiplier, kind, tangential))

    points.sort(key=lambda p: p.location)
    return points


def fixed_point_count_1d(family: Family1D, t: float, grid_n: int = 8192) -> int:
    """Number of fixed points of one slice of a family."""
    return len(fixed_points_1d(family.slice(t), grid_n=grid_n))
