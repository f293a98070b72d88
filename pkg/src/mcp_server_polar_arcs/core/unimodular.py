"""
Integer 2x2 matrices with determinant +1 or -1.

Entries are stored row-wise as (a b; c d); the columns are the images of
the generators <1,0> and <0,1> of the torus homology.
"""

from dataclasses import dataclass
from typing import Any, Dict, Iterable, List, Sequence, Tuple

import numpy as np

from .errors import MapSpecError, NonUnimodularError

INT_LIMIT = 2**62


def _check_int(value: Any) -> int:
    if isinstance(value, bool) or int(value) != value:
        raise NonUnimodularError(f"Matrix entries must be integers, got {value!r}")
    v = int(value)
    if abs(v) > INT_LIMIT:
        raise NonUnimodularError(f"Matrix entry {v} exceeds 2^62")
    return v


@dataclass(frozen=True)
class UnimodularMatrix:
    a: int
    b: int
    c: int
    d: int

    def __post_init__(self):
        for name in ("a", "b", "c", "d"):
            object.__setattr__(self, name, _check_int(getattr(self, name)))
        if self.det not in (1, -1):
            raise NonUnimodularError(
                f"Matrix ({self.a} {self.b}; {self.c} {self.d}) has determinant {self.det}",
                {"entries": self.entries, "det": self.det},
            )

    @classmethod
    def from_entries(cls, entries: Sequence[int]) -> "UnimodularMatrix":
        if len(entries) != 4:
            raise MapSpecError(f"Expected 4 matrix entries, got {len(entries)}")
        return cls(*entries)

    @classmethod
    def from_columns(cls, first: Sequence[int], second: Sequence[int]) -> "UnimodularMatrix":
        return cls(first[0], second[0], first[1], second[1])

    @classmethod
    def parse(cls, text: str) -> "UnimodularMatrix":
        """Parse ``"a,b,c,d"`` (row-wise)."""
        try:
            entries = [int(part) for part in text.replace(" ", "").split(",")]
        except ValueError as e:
            raise MapSpecError(f"Malformed matrix {text!r}: expected four integers a,b,c,d") from e
        return cls.from_entries(entries)

    @property
    def det(self) -> int:
        return self.a * self.d - self.b * self.c

    @property
    def entries(self) -> Tuple[int, int, int, int]:
        return (self.a, self.b, self.c, self.d)

    @property
    def columns(self) -> Tuple[Tuple[int, int], Tuple[int, int]]:
        return ((self.a, self.c), (self.b, self.d))

    def inverse(self) -> "UnimodularMatrix":
        s = self.det
        return UnimodularMatrix(s * self.d, -s * self.b, -s * self.c, s * self.a)

    def __matmul__(self, other: "UnimodularMatrix") -> "UnimodularMatrix":
        return UnimodularMatrix(
            self.a * other.a + self.b * other.c,
            self.a * other.b + self.b * other.d,
            self.c * other.a + self.d * other.c,
            self.c * other.b + self.d * other.d,
        )

    def apply(self, vector: Sequence[int]) -> Tuple[int, int]:
        return (self.a * vector[0] + self.b * vector[1], self.c * vector[0] + self.d * vector[1])

    def as_array(self) -> np.ndarray:
        return np.array([[self.a, self.b], [self.c, self.d]], dtype=float)

    def to_list(self) -> List[List[int]]:
        return [[self.a, self.b], [self.c, self.d]]

    def to_dict(self) -> Dict[str, Any]:
        return {"entries": list(self.entries), "det": self.det}

    def __str__(self) -> str:
        return f"({self.a} {self.b}; {self.c} {self.d})"


E = UnimodularMatrix(1, 0, 0, 1)


def shear(n: int) -> UnimodularMatrix:
    """J_n = (1 0; n 1)."""
    return UnimodularMatrix(1, 0, n, 1)


def product(matrices: Iterable[UnimodularMatrix]) -> UnimodularMatrix:
    out = E
    for m in matrices:
        out = out @ m
    return out
