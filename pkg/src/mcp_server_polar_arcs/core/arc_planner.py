"""
Arc planning for the class of polar gradient-like torus maps.

This module canonicalizes invariant matrices, decomposes them by the
negative continued fraction (Euclid ladder), and assembles the chain of
conjugated and reversed copies of the elementary arc H_{0,1} that joins
f_J to f_0. All arithmetic is exact integer arithmetic.
"""

import logging
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Tuple

from .errors import CanonicalFormError, PreconditionError, RealizationError
from .unimodular import E, UnimodularMatrix, shear

# Configure logging
logger = logging.getLogger(__name__)

# The 8 column transforms: optional swap, then a sign per column.
_SWAPS = (UnimodularMatrix(1, 0, 0, 1), UnimodularMatrix(0, 1, 1, 0))
_SIGNS = tuple(
    UnimodularMatrix(s1, 0, 0, s2) for s1 in (1, -1) for s2 in (1, -1)
)
COLUMN_TRANSFORMS: Tuple[UnimodularMatrix, ...] = tuple(sw @ sg for sw in _SWAPS for sg in _SIGNS)

# rotation of the columns left after one Euclid step: L_{i-1} J_{-n_i} = L_i P
LADDER_ROTATION = UnimodularMatrix(0, 1, -1, 0)
ORIENTATION_FLIP = UnimodularMatrix(1, 0, 0, -1)

ELEMENTARY_ARC = "h01"
SN_PER_ELEMENTARY_ARC = 2


def satisfies_normal_conditions(m: UnimodularMatrix) -> bool:
    """mu1 >= mu2 >= 0; nu1 > nu2 when mu1 == mu2; nu2 == 1 when mu2 == 0."""
    mu1, mu2, nu1, nu2 = m.a, m.b, m.c, m.d
    if not (mu1 >= mu2 >= 0):
        return False
    if mu1 == mu2 and not nu1 > nu2:
        return False
    if mu2 == 0 and nu2 != 1:
        return False
    return True


def canonical_transform(raw: UnimodularMatrix) -> UnimodularMatrix:
    """
    Find the unique column transform T with raw @ T in normal form.

    Raises:
        CanonicalFormError: if no transform or more than one qualifies
    """
    hits = [T for T in COLUMN_TRANSFORMS if satisfies_normal_conditions(raw @ T)]
    if len(hits) != 1:
        raise CanonicalFormError(
            f"Matrix {raw} has {len(hits)} normal forms, expected exactly one",
            {"entries": list(raw.entries), "candidates": [list((raw @ T).entries) for T in hits]},
        )
    return hits[0]


def canonicalize(raw: UnimodularMatrix) -> UnimodularMatrix:
    """
    Bring a unimodular matrix to the normal form fixed by numbering and
    orienting the saddles.

    Args:
        raw: Any unimodular matrix

    Returns:
        The unique column-sign/swap variant satisfying the normal conditions
    """
    return raw @ canonical_transform(raw)


@dataclass(frozen=True)
class EuclidDecomposition:
    n: List[int]
    k: List[int]
    l: List[int]
    L: List[UnimodularMatrix]

    @property
    def m(self) -> int:
        return len(self.n)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "n": list(self.n),
            "k": list(self.k),
            "l": list(self.l),
            "L": [list(M.entries) for M in self.L],
        }


def euclid_decompose(J: UnimodularMatrix) -> EuclidDecomposition:
    """
    Negative continued fraction of the first row of a canonical matrix.

    Starting from k_{-1} = mu1, k_0 = mu2 (and l_{-1} = nu1, l_0 = nu2) the
    ladder runs n_{i+1} = ceil(k_{i-1} / k_i), k_{i+1} = n_{i+1} k_i - k_{i-1}
    with the same recurrence for l, until k reaches 0.

    Args:
        J: Canonical matrix with mu1 > mu2 > 0

    Returns:
        EuclidDecomposition with L_i = (k_{i-1} k_i; l_{i-1} l_i)
    """
    if not satisfies_normal_conditions(J):
        raise PreconditionError(f"Matrix {J} is not canonical", {"entries": list(J.entries)})
    if not J.a > J.b > 0:
        raise PreconditionError(f"Euclid ladder needs mu1 > mu2 > 0, got {J}", {"entries": list(J.entries)})

    k = [J.a, J.b]
    l = [J.c, J.d]
    n: List[int] = []
    while k[-1] != 0:
        step = -(-k[-2] // k[-1])
        n.append(step)
        k.append(step * k[-1] - k[-2])
        l.append(step * l[-1] - l[-2])
        if not 0 <= k[-1] < k[-2]:
            raise PreconditionError("Euclid ladder failed to decrease", {"k": k})
    L = [UnimodularMatrix(k[i], k[i + 1], l[i], l[i + 1]) for i in range(len(k) - 1)]
    logger.debug(f"Euclid ladder of {J}: n={n}, k={k}, l={l}")
    return EuclidDecomposition(n=n, k=k, l=l, L=L)


@dataclass(frozen=True)
class PlanSegment:
    """
    One conjugated copy of the elementary arc.

    Run forward, the arc goes from raw matrix ``conjugator`` to
    ``conjugator @ J_1``; ``reversed`` swaps the two ends.
    ``renormalize`` is the column transform that turns this segment's end
    matrix into the next segment's start matrix.
    """

    conjugator: UnimodularMatrix
    reversed: bool
    base: str = ELEMENTARY_ARC
    sn_count: int = SN_PER_ELEMENTARY_ARC
    renormalize: UnimodularMatrix = E

    @property
    def start(self) -> UnimodularMatrix:
        return self.conjugator @ shear(1) if self.reversed else self.conjugator

    @property
    def end(self) -> UnimodularMatrix:
        return self.conjugator if self.reversed else self.conjugator @ shear(1)

    @property
    def transition(self) -> UnimodularMatrix:
        return shear(-1) if self.reversed else shear(1)

    def flipped(self, renormalize: UnimodularMatrix = E) -> "PlanSegment":
        return PlanSegment(self.conjugator, not self.reversed, self.base, self.sn_count, renormalize)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "conjugator": list(self.conjugator.entries),
            "base": self.base,
            "reversed": self.reversed,
            "sn_count": self.sn_count,
            "start": list(self.start.entries),
            "end": list(self.end.entries),
            "renormalize": list(self.renormalize.entries),
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "PlanSegment":
        return cls(
            conjugator=UnimodularMatrix.from_entries(data["conjugator"]),
            reversed=bool(data["reversed"]),
            base=str(data.get("base", ELEMENTARY_ARC)),
            sn_count=int(data.get("sn_count", SN_PER_ELEMENTARY_ARC)),
            renormalize=UnimodularMatrix.from_entries(data.get("renormalize", [1, 0, 0, 1])),
        )


@dataclass(frozen=True)
class ArcPlan:
    start: UnimodularMatrix
    end: UnimodularMatrix
    segments: List[PlanSegment]
    case: int
    metadata: Dict[str, Any] = field(default_factory=dict)

    @property
    def total_sn(self) -> int:
        return sum(s.sn_count for s in self.segments)

    def reversed_plan(self) -> "ArcPlan":
        """The same chain run backwards, from ``end`` to ``start``."""
        flipped: List[PlanSegment] = []
        segs = self.segments
        for i in range(len(segs) - 1, -1, -1):
            renorm = segs[i - 1].renormalize.inverse() if i > 0 else E
            flipped.append(segs[i].flipped(renorm))
        # a final renormalization of this plan is undone by starting at the raw end
        start = segs[-1].end if segs else self.end
        return ArcPlan(start, self.start, flipped, self.case, {**self.metadata, "reversed": True})

    def check_chain(self) -> None:
        """Raise if adjacent segments do not chain or the ends do not match."""
        if not self.segments:
            if self.start != self.end:
                raise RealizationError(f"Empty plan cannot join {self.start} to {self.end}")
            return
        if self.segments[0].start != self.start:
            raise RealizationError(f"First segment starts at {self.segments[0].start}, plan at {self.start}")
        for i, (prev, nxt) in enumerate(zip(self.segments, self.segments[1:])):
            if prev.end @ prev.renormalize != nxt.start:
                raise RealizationError(
                    f"Segment {i} ends at {prev.end} but segment {i + 1} starts at {nxt.start}",
                    {"index": i},
                )
            if canonicalize(prev.end) != canonicalize(nxt.start):
                raise RealizationError(f"Renormalization after segment {i} changes the invariant matrix")
        last = self.segments[-1]
        if last.end @ last.renormalize != self.end:
            raise RealizationError(f"Last segment ends at {last.end @ last.renormalize}, plan at {self.end}")

    def to_dict(self) -> Dict[str, Any]:
        return {
            "start": list(self.start.entries),
            "end": list(self.end.entries),
            "case": self.case,
            "segments": [s.to_dict() for s in self.segments],
            "total_sn": self.total_sn,
            "metadata": dict(self.metadata),
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "ArcPlan":
        return cls(
            start=UnimodularMatrix.from_entries(data["start"]),
            end=UnimodularMatrix.from_entries(data["end"]),
            segments=[PlanSegment.from_dict(s) for s in data["segments"]],
            case=int(data["case"]),
            metadata=dict(data.get("metadata", {})),
        )


def telescope(plan: ArcPlan) -> UnimodularMatrix:
    """start @ T_1 @ R_1 @ T_2 @ ... with T_i the segment transitions."""
    out = plan.start
    for segment in plan.segments:
        out = out @ segment.transition @ segment.renormalize
    return out


def _shear_segments(n: int) -> List[PlanSegment]:
    """Chain from J_n down to E."""
    if n > 0:
        return [PlanSegment(shear(k), reversed=True) for k in range(n - 1, -1, -1)]
    return [PlanSegment(shear(k), reversed=False) for k in range(n, 0)]


def _with_renormalize(segments: List[PlanSegment], renormalize: UnimodularMatrix) -> List[PlanSegment]:
    if not segments:
        return segments
    last = segments[-1]
    return segments[:-1] + [PlanSegment(last.conjugator, last.reversed, last.base, last.sn_count, renormalize)]


def classify_case(J: UnimodularMatrix) -> int:
    """1: mu2 = 0; 2: mu1 = mu2; 3: mu1 > mu2 > 0 (J canonical)."""
    if J.b == 0:
        return 1
    if J.a == J.b:
        return 2
    return 3


def plan(J: UnimodularMatrix) -> ArcPlan:
    """
    Plan the chain of elementary arcs joining f_J to f_0.

    Args:
        J: Unimodular matrix (canonicalized internally)

    Returns:
        ArcPlan from canonicalize(J) to E whose segments chain exactly
    """
    raw = J
    J = canonicalize(J)
    case = classify_case(J)
    metadata: Dict[str, Any] = {"input": list(raw.entries)}
    segments: List[PlanSegment] = []

    if case == 1:
        n = J.c
        segments = _shear_segments(n)
        metadata["shear"] = n
    elif case == 2:
        nu2 = J.d
        # J J_{-1} = (0 1; 1 nu2); swapping the columns gives J_{nu2}
        first = PlanSegment(J @ shear(-1), reversed=True, renormalize=UnimodularMatrix(0, 1, 1, 0))
        segments = [first] + _shear_segments(nu2)
        metadata["case2_orientation"] = "reversed"
        metadata["shear"] = nu2
    else:
        decomposition = euclid_decompose(J)
        metadata["euclid"] = decomposition.to_dict()
        for i, n_i in enumerate(decomposition.n, start=1):
            L_prev = decomposition.L[i - 1]
            step = [PlanSegment(L_prev @ shear(k), reversed=True) for k in range(-1, -n_i - 1, -1)]
            renorm = LADDER_ROTATION.inverse()
            if i == decomposition.m and decomposition.L[-1].det == -1:
                renorm = renorm @ ORIENTATION_FLIP
                metadata["orientation_adjusted"] = True
            segments.extend(_with_renormalize(step, renorm))
        tail_shear = decomposition.l[-2]
        metadata["shear"] = tail_shear
        segments.extend(_shear_segments(tail_shear))

    result = ArcPlan(start=J, end=E, segments=segments, case=case, metadata=metadata)
    result.check_chain()
    if telescope(result) != E:
        raise RealizationError(f"Plan for {J} does not telescope to E", {"telescope": list(telescope(result).entries)})
    logger.info(f"Planned {J}: case {case}, {len(segments)} segments, {result.total_sn} saddle-node events")
    return result


def compose_plans(J_from: UnimodularMatrix, J_to: UnimodularMatrix) -> ArcPlan:
    """
    Chain f_{J_from} -> f_0 -> f_{J_to}: plan(J_from) then plan(J_to) reversed.

    Args:
        J_from: Invariant matrix at the start
        J_to: Invariant matrix at the end

    Returns:
        ArcPlan whose total is the sum of both plans
    """
    first = plan(J_from)
    second = plan(J_to).reversed_plan()
    segments = list(first.segments)
    if segments and second.segments:
        # both sides of the junction are raw forms of E
        segments = _with_renormalize(segments, segments[-1].end.inverse() @ second.start)
    segments += list(second.segments)
    composed = ArcPlan(
        start=first.start if first.segments else second.start,
        end=second.end,
        segments=segments,
        case=0,
        metadata={"from": first.to_dict()["metadata"], "to": second.to_dict()["metadata"], "composed": True},
    )
    composed.check_chain()
    return composed


def realize(arc_plan: ArcPlan, config=None, verify: bool = False):
    """
    Build the ArcFamily of a plan from conjugated elementary arcs.

    Consecutive segments are joined with certified junctions: the maps on
    both sides share the invariant matrix but are not pointwise equal.

    Args:
        arc_plan: Plan to realize
        config: RunConfig for junction certification and verification
        verify: Measure the invariant matrices at both ends

    Returns:
        ArcFamily with provenance "planned"
    """
    from .arc_engine import conjugate_arc, constant_arc, model_arc, reverse, smooth_product
    from .config import RunConfig
    from .torus_dynamics import conjugate, invariant_matrix, product_map
    from .model_maps_1d import model_lift

    config = config or RunConfig()
    arc_plan.check_chain()

    if not arc_plan.segments:
        phi0 = model_lift("phi0")
        base = conjugate(arc_plan.start, product_map(phi0, phi0)) if arc_plan.start != E else product_map(phi0, phi0)
        family = constant_arc(base, name="plan:E")
    else:
        family = None
        for segment in arc_plan.segments:
            piece = conjugate_arc(segment.conjugator, model_arc(segment.base))
            if segment.reversed:
                piece = reverse(piece)
            family = piece if family is None else smooth_product(family, piece, junction="certified", config=config)
    family = family.with_provenance("planned", name=f"plan:{','.join(str(v) for v in arc_plan.start.entries)}")

    if verify:
        for t, expected in ((0.0, arc_plan.start), (1.0, arc_plan.end)):
            measured = invariant_matrix(family(t), config).matrix
            if measured != canonicalize(expected):
                raise RealizationError(
                    f"Realized arc has invariant matrix {measured} at t={t}, plan expects {canonicalize(expected)}",
                    {"t": t, "measured": list(measured.entries), "expected": list(expected.entries)},
                )
    return family
