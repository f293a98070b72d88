"""
Dynamics of diffeomorphisms of the 2-torus.

This module provides vectorized torus maps (products of circle lifts,
algebraic automorphisms, conjugations, compositions), the 2-D fixed point
search, separatrix tracing on the planar lift, homotopy types of separatrix
closures, and the invariant matrix of a polar gradient-like map.

Points are numpy arrays whose last axis has length 2: (x, z).
"""

import logging
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from ..utils import parallel_map
from .arc_planner import canonical_transform
from .config import RunConfig
from .errors import (
    NotInClassGError,
    PreconditionError,
    TracingError,
    TracingInconsistencyError,
)
from .model_maps_1d import LiftMap, model_lift, solve_monotone
from .model_maps_1d import inverse_lift as inverse_lift_1d
from .unimodular import UnimodularMatrix

# Configure logging
logger = logging.getLogger(__name__)

LiftRule = Callable[[np.ndarray], np.ndarray]
JacobianRule = Callable[[np.ndarray], np.ndarray]

DEDUP_RADIUS = 1e-6
# sort keys are rounded so last-bit noise cannot reorder points on a shared row
SORT_DECIMALS = 9
MAX_NEWTON_STEP = 0.05
MAX_SEEDS_PER_DOMAIN = 1024


def _points(p: Any) -> np.ndarray:
    arr = np.asarray(p, dtype=float)
    if arr.shape[-1] != 2:
        raise PreconditionError(f"Torus points need a trailing axis of length 2, got shape {arr.shape}")
    return arr


def wrap_centered(v: np.ndarray) -> np.ndarray:
    """Representative of a displacement in [-1/2, 1/2)."""
    return v - np.round(v)


def torus_distance(p: Any, q: Any) -> np.ndarray:
    """Max of the per-coordinate circle distances."""
    d = np.abs(wrap_centered(_points(p) - _points(q)))
    return np.max(d, axis=-1)


@dataclass(frozen=True)
class TorusMap:
    """
    A self-map of the torus given by its planar lift.

    ``lift_rule`` maps (..., 2) arrays to (..., 2) arrays;
    ``jacobian_rule`` maps (..., 2) arrays to (..., 2, 2) arrays, or is None
    for centered finite differences with step ``h_J``.
    """

    name: str
    lift_rule: LiftRule
    jacobian_rule: Optional[JacobianRule] = None
    structure: str = "composition"
    h_J: float = 1e-6
    metadata: Dict[str, Any] = field(default_factory=dict, compare=False)
    inverse_rule: Optional[LiftRule] = field(default=None, compare=False)

    def lift(self, p: Any) -> np.ndarray:
        return np.asarray(self.lift_rule(_points(p)), dtype=float)

    def __call__(self, p: Any) -> np.ndarray:
        out = np.mod(self.lift(p), 1.0)
        return np.where(out >= 1.0, 0.0, out)

    def jacobian(self, p: Any) -> np.ndarray:
        pts = _points(p)
        if self.jacobian_rule is not None:
            return np.asarray(self.jacobian_rule(pts), dtype=float)
        return self.fd_jacobian(pts)

    def fd_jacobian(self, p: Any, h: Optional[float] = None) -> np.ndarray:
        h = self.h_J if h is None else h
        pts = _points(p)
        cols = []
        for i in range(2):
            e = np.zeros(2)
            e[i] = h
            cols.append((self.lift(pts + e) - self.lift(pts - e)) / (2.0 * h))
        return np.stack(cols, axis=-1)

    def residual(self, p: Any) -> np.ndarray:
        """Fixed-point residual wrap(lift(p) - p)."""
        pts = _points(p)
        return wrap_centered(self.lift(pts) - pts)

    def inverse_lift(self, q: Any, tol: float = 1e-12, max_iter: int = 50) -> Tuple[np.ndarray, np.ndarray]:
        """
        Solve lift(p) = q.

        Maps built from invertible pieces carry an exact ``inverse_rule``;
        otherwise Newton iteration is used.

        Returns:
            (p, converged mask)
        """
        qs = _points(q)
        if self.inverse_rule is not None:
            p = np.asarray(self.inverse_rule(qs), dtype=float)
            return p, np.all(np.isfinite(p), axis=-1)
        p = qs - (self.lift(qs) - qs)
        converged = np.zeros(qs.shape[:-1], dtype=bool)
        for _ in range(max_iter):
            r = self.lift(p) - qs
            converged = np.max(np.abs(r), axis=-1) <= tol
            if np.all(converged):
                break
            step = _solve2(self.jacobian(p), r)
            step = np.nan_to_num(step, nan=0.0, posinf=0.0, neginf=0.0)
            p = p - _cap(step, 0.25)
        return p, converged


def _solve2(M: np.ndarray, r: np.ndarray) -> np.ndarray:
    """Batched solve of 2x2 systems M x = r; singular rows give nan."""
    a, b = M[..., 0, 0], M[..., 0, 1]
    c, d = M[..., 1, 0], M[..., 1, 1]
    det = a * d - b * c
    with np.errstate(divide="ignore", invalid="ignore"):
        x0 = (d * r[..., 0] - b * r[..., 1]) / det
        x1 = (a * r[..., 1] - c * r[..., 0]) / det
    return np.stack([x0, x1], axis=-1)


def _cap(step: np.ndarray, limit: float) -> np.ndarray:
    norm = np.max(np.abs(step), axis=-1, keepdims=True)
    with np.errstate(divide="ignore", invalid="ignore"):
        scale = np.where(norm > limit, limit / norm, 1.0)
    return step * scale


# Constructors

def automorphism(J: UnimodularMatrix) -> TorusMap:
    """The algebraic automorphism p -> J p (mod 1)."""
    A = J.as_array()
    Ainv = J.inverse().as_array()

    def lift(p):
        return p @ A.T

    def jac(p):
        return np.broadcast_to(A, p.shape[:-1] + (2, 2)).copy()

    def inverse(q):
        return q @ Ainv.T

    return TorusMap(f"L{J}", lift, jac, structure="automorphism", inverse_rule=inverse)


def product_map(fa: LiftMap, fb: LiftMap) -> TorusMap:
    """(x, z) -> (fa(x), fb(z))."""

    def lift(p):
        return np.stack([np.asarray(fa.value(p[..., 0])), np.asarray(fb.value(p[..., 1]))], axis=-1)

    def jac(p):
        out = np.zeros(p.shape[:-1] + (2, 2))
        out[..., 0, 0] = fa.derivative(p[..., 0])
        out[..., 1, 1] = fb.derivative(p[..., 1])
        return out

    def inverse(q):
        x = np.reshape(inverse_lift_1d(fa, np.ravel(q[..., 0])), q.shape[:-1])
        z = np.reshape(inverse_lift_1d(fb, np.ravel(q[..., 1])), q.shape[:-1])
        return np.stack([x, z], axis=-1)

    return TorusMap(f"{fa.name}x{fb.name}", lift, jac, structure="product", inverse_rule=inverse)


def skew_product(
    base: LiftMap,
    fiber: Callable[[np.ndarray, np.ndarray], np.ndarray],
    fiber_dx: Callable[[np.ndarray, np.ndarray], np.ndarray],
    fiber_dz: Callable[[np.ndarray, np.ndarray], np.ndarray],
    name: str,
    fiber_bound: float = 0.5,
) -> TorusMap:
    """
    (x, z) -> (base(x), fiber(x, z)) with fiber increasing in z.

    ``fiber(x, z) - z`` must stay below ``fiber_bound`` in absolute value;
    the inverse solves the fiber equation by bracketed Newton iteration.
    """

    def lift(p):
        x, z = p[..., 0], p[..., 1]
        return np.stack([np.asarray(base.value(x)), fiber(x, z)], axis=-1)

    def jac(p):
        x, z = p[..., 0], p[..., 1]
        out = np.zeros(p.shape[:-1] + (2, 2))
        out[..., 0, 0] = base.derivative(x)
        out[..., 1, 0] = fiber_dx(x, z)
        out[..., 1, 1] = fiber_dz(x, z)
        return out

    def inverse(q):
        shape = q.shape[:-1]
        x = np.asarray(inverse_lift_1d(base, np.ravel(q[..., 0])))
        z = solve_monotone(
            lambda s: fiber(x, s),
            lambda s: fiber_dz(x, s),
            np.ravel(q[..., 1]),
            fiber_bound,
        )
        return np.stack([x.reshape(shape), z.reshape(shape)], axis=-1)

    return TorusMap(name, lift, jac, structure="arc-slice", inverse_rule=inverse)


def conjugate(J: UnimodularMatrix, f: TorusMap) -> TorusMap:
    """
    f_J = J f J^{-1}.

    Fixed points of the result are the J-images of those of f, with the same
    eigenvalues.
    """
    A = J.as_array()
    Ainv = J.inverse().as_array()

    def lift(p):
        return f.lift(p @ Ainv.T) @ A.T

    jac = None
    if f.jacobian_rule is not None:

        def jac(p):
            return A @ f.jacobian(p @ Ainv.T) @ Ainv

    inverse = None
    if f.inverse_rule is not None:

        def inverse(q):
            return f.inverse_rule(q @ Ainv.T) @ A.T

    return TorusMap(
        f"conj[{J}]({f.name})",
        lift,
        jac,
        structure="conjugated",
        h_J=f.h_J,
        metadata={"conjugator": list(J.entries)},
        inverse_rule=inverse,
    )


def compose(f: TorusMap, g: TorusMap) -> TorusMap:
    """f after g."""

    def lift(p):
        return f.lift(g.lift(p))

    jac = None
    if f.jacobian_rule is not None and g.jacobian_rule is not None:

        def jac(p):
            return f.jacobian(g.lift(p)) @ g.jacobian(p)

    inverse = None
    if f.inverse_rule is not None and g.inverse_rule is not None:

        def inverse(q):
            return g.inverse_rule(f.inverse_rule(q))

    return TorusMap(
        f"{f.name}*{g.name}", lift, jac, structure="composition", h_J=min(f.h_J, g.h_J), inverse_rule=inverse
    )


def lift_displacement_matrix(f: TorusMap, samples: int = 16, seed: int = 0) -> np.ndarray:
    """
    Integer matrix D with lift(p + e_i) = lift(p) + D e_i.

    Raises:
        TracingInconsistencyError: if the displacement is not integral or
            not constant over the samples
    """
    rng = np.random.default_rng(seed)
    p = rng.random((samples, 2))
    base = f.lift(p)
    cols = [f.lift(p + np.eye(2)[i]) - base for i in range(2)]
    D = np.stack(cols, axis=-1)
    rounded = np.round(D)
    if np.max(np.abs(D - rounded)) > 1e-8:
        raise TracingInconsistencyError(f"Lift of {f.name} is not equivariant", {"max_defect": float(np.max(np.abs(D - rounded)))})
    if np.any(rounded != rounded[0]):
        raise TracingInconsistencyError(f"Lift displacement of {f.name} varies over the torus")
    return rounded[0].astype(int)


# Fixed points

@dataclass(frozen=True)
class FixedPoint2D:
    location: Tuple[float, float]
    eigenvalues: Tuple[complex, complex]
    kind: str
    jacobian: Tuple[Tuple[float, float], Tuple[float, float]] = field(compare=False, default=((0.0, 0.0), (0.0, 0.0)))

    @property
    def point(self) -> np.ndarray:
        return np.array(self.location, dtype=float)

    @property
    def moduli(self) -> Tuple[float, float]:
        return tuple(sorted(abs(v) for v in self.eigenvalues))

    def real_eigenvalues(self) -> Tuple[float, float]:
        return tuple(sorted(float(np.real(v)) for v in self.eigenvalues))

    def to_dict(self) -> Dict[str, Any]:
        eig = [float(np.real(v)) if abs(np.imag(v)) == 0 else [float(np.real(v)), float(np.imag(v))] for v in self.eigenvalues]
        return {"location": list(self.location), "eigenvalues": eig, "kind": self.kind}


def classify_eigenvalues(eigenvalues: Sequence[complex], tol_hyp: float, tol_sn: float) -> str:
    m1, m2 = sorted(abs(v) for v in eigenvalues)
    if m2 < 1.0 - tol_hyp:
        return "sink"
    if m1 > 1.0 + tol_hyp:
        return "source"
    if m1 < 1.0 - tol_hyp and m2 > 1.0 + tol_hyp:
        return "saddle"
    near_one = [v for v in eigenvalues if abs(np.imag(v)) == 0 and abs(np.real(v) - 1.0) <= tol_sn]
    others = [v for v in eigenvalues if not (abs(np.imag(v)) == 0 and abs(np.real(v) - 1.0) <= tol_sn)]
    if len(near_one) == 1 and abs(abs(others[0]) - 1.0) > tol_hyp:
        return "saddle-node"
    return "nonhyperbolic-other"


def _make_fixed_point(f: TorusMap, p: np.ndarray, config: RunConfig) -> FixedPoint2D:
    J = f.jacobian(p)
    eig = np.linalg.eigvals(J)
    eig = tuple(complex(v) if abs(np.imag(v)) > 1e-14 else complex(float(np.real(v)), 0.0) for v in eig)
    kind = classify_eigenvalues(eig, config.tol_hyp, config.tol_sn)
    return FixedPoint2D(
        location=(float(p[0]), float(p[1])),
        eigenvalues=eig,
        kind=kind,
        jacobian=((float(J[0, 0]), float(J[0, 1])), (float(J[1, 0]), float(J[1, 1]))),
    )


def newton_fixed_points(
    f: TorusMap,
    seeds: np.ndarray,
    tol: float,
    max_iter: int = 50,
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Vectorized Newton on the wrapped residual from many seeds.

    Returns:
        (final points reduced mod 1, converged mask)
    """
    p = np.array(seeds, dtype=float)
    active = np.ones(p.shape[0], dtype=bool)
    converged = np.zeros(p.shape[0], dtype=bool)
    I = np.eye(2)
    for _ in range(max_iter):
        idx = np.flatnonzero(active)
        if idx.size == 0:
            break
        q = p[idx]
        r = f.residual(q)
        ok = np.max(np.abs(r), axis=-1) <= tol
        converged[idx[ok]] = True
        step = _solve2(f.jacobian(q) - I, r)
        bad = ~np.all(np.isfinite(step), axis=-1)
        active[idx[ok | bad]] = False
        move = ~(ok | bad)
        p[idx[move]] = q[move] - _cap(step[move], MAX_NEWTON_STEP)
    remaining = np.flatnonzero(active)
    if remaining.size:
        r = f.residual(p[remaining])
        converged[remaining[np.max(np.abs(r), axis=-1) <= tol]] = True
    p = np.mod(p, 1.0)
    p = np.where(p >= 1.0, 0.0, p)
    return p, converged


def fixed_points_2d(f: TorusMap, config: Optional[RunConfig] = None, grid_n: Optional[int] = None) -> List[FixedPoint2D]:
    """
    Find and classify all fixed points of a torus map.

    Every cell center of a grid_n x grid_n grid seeds a Newton iteration on
    the wrapped residual; converged points are deduplicated within a torus
    distance of 1e-6 and classified by the eigenvalues of the Jacobian.

    Args:
        f: Map to analyze
        config: Tolerances (defaults to RunConfig())
        grid_n: Seeds per axis (defaults to config.grid_2d)

    Returns:
        Fixed points sorted by (x, z)
    """
    config = config or RunConfig()
    n = grid_n or config.grid_2d
    if n < 64:
        raise PreconditionError("grid_n must be >= 64 per axis", {"grid_n": n})
    c = (np.arange(n) + 0.5) / n
    seeds = np.stack(np.meshgrid(c, c, indexing="ij"), axis=-1).reshape(-1, 2)
    p, converged = newton_fixed_points(f, seeds, config.tol, config.newton_max_iter)
    dropped = int(np.count_nonzero(~converged))
    if dropped:
        logger.debug(f"{f.name}: {dropped} of {len(seeds)} Newton seeds did not converge")

    found: List[np.ndarray] = []
    for q in p[converged]:
        if found and np.min(torus_distance(np.array(found), q)) <= DEDUP_RADIUS:
            continue
        found.append(q)

    points = [_make_fixed_point(f, q, config) for q in found]
    points.sort(key=lambda fp: sort_key(fp.location))
    logger.debug(f"{f.name}: {len(points)} fixed points")
    return points


def sort_key(location: Sequence[float]) -> Tuple[float, ...]:
    """(x, z) rounded to SORT_DECIMALS and reduced mod 1."""
    return tuple(round(float(c), SORT_DECIMALS) % 1.0 for c in location)


def census(points: Sequence[FixedPoint2D]) -> Dict[str, Any]:
    """Counts per kind and the Euler count #sinks - #saddles + #sources."""
    kinds = ("sink", "source", "saddle", "saddle-node", "nonhyperbolic-other")
    counts = {k: sum(1 for p in points if p.kind == k) for k in kinds}
    return {
        "count": len(points),
        "kinds": counts,
        "euler": counts["sink"] - counts["saddle"] + counts["source"],
        "hyperbolic": counts["saddle-node"] == 0 and counts["nonhyperbolic-other"] == 0,
    }


# Separatrices

@dataclass(frozen=True)
class SeparatrixCurve:
    points: np.ndarray
    saddle: Tuple[float, float]
    stability: str
    branch: int
    node: Optional[Tuple[float, float]]
    complete: bool = True
    iterations: int = 0

    @property
    def start(self) -> np.ndarray:
        return self.points[0]

    @property
    def end(self) -> np.ndarray:
        return self.points[-1]

    def max_gap(self) -> float:
        if len(self.points) < 2:
            return 0.0
        return float(np.max(np.abs(np.diff(self.points, axis=0))))

    def to_dict(self) -> Dict[str, Any]:
        return {
            "saddle": list(self.saddle),
            "stability": self.stability,
            "branch": self.branch,
            "node": list(self.node) if self.node is not None else None,
            "complete": self.complete,
            "iterations": self.iterations,
            "points": self.points.tolist(),
        }


@dataclass(frozen=True)
class HomotopyType:
    mu: int
    nu: int

    @property
    def vector(self) -> Tuple[int, int]:
        return (self.mu, self.nu)

    def to_list(self) -> List[int]:
        return [self.mu, self.nu]


def normalize_type(mu: int, nu: int) -> HomotopyType:
    """Orient so that mu > 0, or nu > 0 when mu == 0."""
    if mu < 0 or (mu == 0 and nu < 0):
        mu, nu = -mu, -nu
    return HomotopyType(int(mu), int(nu))


def _saddle_directions(saddle: FixedPoint2D) -> Tuple[float, float, np.ndarray, np.ndarray]:
    J = np.array(saddle.jacobian, dtype=float)
    vals, vecs = np.linalg.eig(J)
    if np.any(np.abs(np.imag(vals)) > 0):
        raise TracingError(f"Saddle at {saddle.location} has complex eigenvalues")
    vals = np.real(vals)
    vecs = np.real(vecs)
    if np.any(vals <= 0.0):
        raise TracingError(f"Saddle at {saddle.location} has a negative multiplier", {"eigenvalues": vals.tolist()})
    order = np.argsort(vals)
    ls, lu = vals[order]
    vs, vu = vecs[:, order[0]], vecs[:, order[1]]
    # deterministic orientation: first nonzero component positive
    vs = vs / np.linalg.norm(vs) * (1.0 if vs[np.argmax(np.abs(vs))] > 0 else -1.0)
    vu = vu / np.linalg.norm(vu) * (1.0 if vu[np.argmax(np.abs(vu))] > 0 else -1.0)
    return float(ls), float(lu), vs, vu


def trace_separatrix(
    f: TorusMap,
    saddle: FixedPoint2D,
    stability: str,
    branch: int,
    nodes: Sequence[FixedPoint2D],
    config: Optional[RunConfig] = None,
    allow_partial: bool = False,
) -> SeparatrixCurve:
    """
    Trace one separatrix of a hyperbolic saddle on the planar lift.

    A fundamental domain along the eigenvector is seeded geometrically and
    iterated forward (unstable) or backward by Newton inversion (stable).
    The seed count doubles until consecutive polyline points are at most
    h_sep apart. The polyline stops at the first point within eps_node of
    a node.

    Args:
        f: Map with the saddle
        saddle: Hyperbolic saddle
        stability: "stable" or "unstable"
        branch: +1 or -1 along the eigenvector
        nodes: Candidate end points (sinks for unstable, sources for stable)
        config: Tracing parameters
        allow_partial: Return an incomplete curve instead of raising

    Returns:
        SeparatrixCurve starting at the saddle
    """
    config = config or RunConfig()
    if saddle.kind != "saddle":
        raise PreconditionError(f"Point {saddle.location} is a {saddle.kind}, not a saddle")
    if stability not in ("stable", "unstable"):
        raise PreconditionError(f"stability must be 'stable' or 'unstable', got {stability!r}")
    if branch not in (1, -1):
        raise PreconditionError("branch must be +1 or -1")
    if config.eps0 > 1e-6:
        raise PreconditionError("eps0 must be <= 1e-6", {"eps0": config.eps0})

    ls, lu, vs, vu = _saddle_directions(saddle)
    if stability == "unstable":
        lam, v = lu, vu
    else:
        lam, v = 1.0 / ls, vs
    node_pts = np.array([n.point for n in nodes], dtype=float).reshape(-1, 2)
    p0 = saddle.point

    m = 16
    last_error: Optional[TracingError] = None
    while m <= MAX_SEEDS_PER_DOMAIN:
        try:
            curve = _trace_with_seeds(f, p0, v, lam, branch, stability, m, node_pts, config)
        except TracingError as e:
            last_error = e
            break
        if curve.max_gap() <= config.h_sep or not curve.complete:
            break
        m *= 2
    else:
        logger.warning(f"Separatrix of {saddle.location} still has gaps > h_sep at {MAX_SEEDS_PER_DOMAIN} seeds")

    if last_error is not None:
        if allow_partial:
            logger.warning(f"Partial trace from {saddle.location}: {last_error.message}")
            return SeparatrixCurve(np.array([p0]), saddle.location, stability, branch, None, complete=False)
        raise last_error
    if not curve.complete and not allow_partial:
        raise TracingError(
            f"{stability} separatrix of {saddle.location} (branch {branch}) did not reach a node in {config.max_iter} iterations",
            {"saddle": list(saddle.location), "stability": stability, "branch": branch},
        )
    return curve


def _trace_with_seeds(
    f: TorusMap,
    p0: np.ndarray,
    v: np.ndarray,
    lam: float,
    branch: int,
    stability: str,
    m: int,
    node_pts: np.ndarray,
    config: RunConfig,
) -> SeparatrixCurve:
    radii = config.eps0 * lam ** (np.arange(m) / m)
    current = p0 + branch * radii[:, None] * v[None, :]
    chunks = [p0[None, :], current.copy()]

    def step(q):
        if stability == "unstable":
            return f.lift(q)
        out, ok = f.inverse_lift(q, config.tol_newton_inverse, config.newton_max_iter)
        if not np.all(ok):
            raise TracingError("Newton inversion of the lift failed while tracing a stable separatrix")
        return out

    node = None
    for k in range(1, config.max_iter + 1):
        if node_pts.size:
            dist = np.min(torus_distance(current[:, None, :], node_pts[None, :, :]), axis=1)
            hit = np.flatnonzero(dist <= config.eps_node)
            if hit.size:
                j = int(hit[0])
                chunks[-1] = current[: j + 1]
                nearest = int(np.argmin(torus_distance(node_pts, current[j])))
                node = (float(node_pts[nearest][0]), float(node_pts[nearest][1]))
                pts = np.concatenate(chunks, axis=0)
                return SeparatrixCurve(pts, (float(p0[0]), float(p0[1])), stability, branch, node, True, k)
        current = step(current)
        chunks.append(current.copy())

    pts = np.concatenate(chunks, axis=0)
    return SeparatrixCurve(pts, (float(p0[0]), float(p0[1])), stability, branch, None, False, config.max_iter)


def loop_displacement(plus: SeparatrixCurve, minus: SeparatrixCurve) -> Tuple[int, int]:
    """
    Integer displacement of the closed curve node <- saddle -> node.

    Both branches start at the same lift of the saddle; their ends are lifts
    of the same node, so end(minus) - end(plus) is an integer vector.

    Raises:
        TracingInconsistencyError: if the residue is 0.1 or more
    """
    if plus.node is None or minus.node is None or torus_distance(np.array(plus.node), np.array(minus.node)) > 1e-6:
        raise PreconditionError("Both branches must end at the same node")
    d = minus.end - plus.end
    rounded = np.round(d)
    residue = float(np.max(np.abs(d - rounded)))
    if residue >= 0.1:
        raise TracingInconsistencyError(
            f"Loop displacement {d.tolist()} is not integral (residue {residue:.3f})",
            {"displacement": d.tolist()},
        )
    return int(rounded[0]), int(rounded[1])


def homotopy_type(plus: SeparatrixCurve, minus: SeparatrixCurve) -> HomotopyType:
    """Normalized homotopy type of the closure of two branches."""
    return normalize_type(*loop_displacement(plus, minus))


@dataclass(frozen=True)
class InvariantMatrixReport:
    matrix: UnimodularMatrix
    raw: UnimodularMatrix
    transform: UnimodularMatrix
    stable_types: List[List[int]]
    unstable_types: List[List[int]]
    saddles: List[Tuple[float, float]]
    fixed_points: List[FixedPoint2D]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "matrix": self.matrix.to_list(),
            "det": self.matrix.det,
            "raw": self.raw.to_list(),
            "transform": self.transform.to_list(),
            "stable_types": self.stable_types,
            "unstable_types": self.unstable_types,
            "saddles": [list(s) for s in self.saddles],
            "fixed_points": [p.to_dict() for p in self.fixed_points],
        }


def _branch_pair(f, saddle, stability, nodes, config) -> Tuple[SeparatrixCurve, SeparatrixCurve]:
    return (
        trace_separatrix(f, saddle, stability, 1, nodes, config),
        trace_separatrix(f, saddle, stability, -1, nodes, config),
    )


def invariant_matrix(f: TorusMap, config: Optional[RunConfig] = None, points: Optional[List[FixedPoint2D]] = None) -> InvariantMatrixReport:
    """
    Measure the invariant matrix of a polar gradient-like torus map.

    The columns are the homotopy types of the closures of the stable
    manifolds of the two saddles; the matrix is then brought to normal form
    by canonicalize.

    Args:
        f: Map with one sink, one source and two saddles
        config: Tolerances and tracing parameters
        points: Precomputed fixed points (optional)

    Returns:
        InvariantMatrixReport with the canonical and raw matrices

    Raises:
        NotInClassGError: on any other fixed-point census
        TracingInconsistencyError: if the raw matrix is not unimodular
    """
    config = config or RunConfig()
    points = points if points is not None else fixed_points_2d(f, config)
    summary = census(points)
    kinds = summary["kinds"]
    if not (summary["count"] == 4 and kinds["sink"] == 1 and kinds["source"] == 1 and kinds["saddle"] == 2):
        raise NotInClassGError(
            f"{f.name} has census {kinds}, expected one sink, one source and two saddles",
            {"census": kinds},
        )
    sinks = [p for p in points if p.kind == "sink"]
    sources = [p for p in points if p.kind == "source"]
    saddles = [p for p in points if p.kind == "saddle"]

    jobs = [(s, "stable", sources) for s in saddles] + [(s, "unstable", sinks) for s in saddles]
    pairs = parallel_map(lambda job: _branch_pair(f, job[0], job[1], job[2], config), jobs, config.threads)
    stable = [list(loop_displacement(*pairs[i])) for i in range(2)]
    unstable = [homotopy_type(*pairs[i]).to_list() for i in range(2, 4)]

    raw_det = stable[0][0] * stable[1][1] - stable[1][0] * stable[0][1]
    if raw_det not in (1, -1):
        raise TracingInconsistencyError(
            f"Measured separatrix types {stable} give determinant {raw_det}",
            {"stable_types": stable},
        )
    raw = UnimodularMatrix.from_columns(stable[0], stable[1])
    transform = canonical_transform(raw)
    matrix = raw @ transform
    logger.info(f"Invariant matrix of {f.name}: {matrix} (raw {raw})")
    return InvariantMatrixReport(
        matrix=matrix,
        raw=raw,
        transform=transform,
        stable_types=[normalize_type(*s).to_list() for s in stable],
        unstable_types=unstable,
        saddles=[s.location for s in saddles],
        fixed_points=list(points),
    )


def model_f0() -> TorusMap:
    """f_0 = phi0 x phi0."""
    phi0 = model_lift("phi0")
    return product_map(phi0, phi0)


def model_fJ(J: UnimodularMatrix) -> TorusMap:
    """f_J = J f_0 J^{-1}."""
    return conjugate(J, model_f0())
