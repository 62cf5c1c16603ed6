from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .lattice import InvalidInputError


def to_fraction(v) -> Fraction:
    """Parse ``"p/q"``, ints, decimal strings or floats into a Fraction.

    Floats go through their shortest repr so ``0.55`` becomes ``11/20``.
    """
    if isinstance(v, Fraction):
        return v
    if isinstance(v, int):
        return Fraction(v)
    if isinstance(v, float):
        return Fraction(repr(v))
    if isinstance(v, str):
        try:
            return Fraction(v.strip())
        except (ValueError, ZeroDivisionError) as exc:
            raise InvalidInputError(f"cannot parse rational {v!r}") from exc
    raise InvalidInputError(f"cannot parse rational {v!r}")


def parse_triple(text: str) -> tuple[Fraction, Fraction, Fraction]:
    parts = [p for p in text.split(",") if p.strip()]
    if len(parts) != 3:
        raise InvalidInputError(f"expected three comma-separated values, got {text!r}")
    return tuple(to_fraction(p) for p in parts)


def positive_part(a: Fraction) -> Fraction:
    return a if a > 0 else Fraction(0)


SIGN_PATTERNS = (("+", "+", "-"), ("-", "-", "+"))


@dataclass(frozen=True)
class ExponentTuple:
    """``(s1, s2, s3, b1, b2, b3)`` with the sign pattern ``(+,+,-)`` or ``(-,-,+)``."""

    s1: Fraction
    s2: Fraction
    s3: Fraction
    b1: Fraction
    b2: Fraction
    b3: Fraction
    signs: tuple = ("+", "+", "-")

    def __post_init__(self):
        for name in ("s1", "s2", "s3", "b1", "b2", "b3"):
            object.__setattr__(self, name, to_fraction(getattr(self, name)))
        signs = tuple(self.signs)
        if signs not in SIGN_PATTERNS:
            raise InvalidInputError(f"sign pattern must be (+,+,-) or (-,-,+), got {signs}")
        object.__setattr__(self, "signs", signs)

    @classmethod
    def from_lists(cls, s, b, signs=("+", "+", "-")):
        return cls(*s, *b, signs=signs)

    @property
    def s(self) -> tuple[Fraction, Fraction, Fraction]:
        return (self.s1, self.s2, self.s3)

    @property
    def b(self) -> tuple[Fraction, Fraction, Fraction]:
        return (self.b1, self.b2, self.b3)

    @property
    def sign_values(self) -> tuple[int, int, int]:
        return tuple(1 if c == "+" else -1 for c in self.signs)

    def swapped12(self) -> ExponentTuple:
        """Exchange the roles of the first two factors (they share a sign)."""
        return ExponentTuple(self.s2, self.s1, self.s3, self.b2, self.b1, self.b3, signs=self.signs)

    def as_floats(self) -> dict:
        return {k: float(getattr(self, k)) for k in ("s1", "s2", "s3", "b1", "b2", "b3")}

    def to_dict(self) -> dict:
        d = {k: str(getattr(self, k)) for k in ("s1", "s2", "s3", "b1", "b2", "b3")}
        d["signs"] = "".join(self.signs)
        return d
