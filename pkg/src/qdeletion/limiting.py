"""Closed-form fidelities of the one- and two-transformer machines in their limiting regime."""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Optional

from .linalg import ALGEBRAIC_TOL, DensityOperator, fidelity_against
from .machines import SQRT2, BlankState, Branch, MachineError, sigma

TWO_TRANSFORMER_COHERENCE = 0.25 * (1.0 / SQRT2 - 1.0)
TABLE_GRID: tuple[float, ...] = tuple(round(0.1 * step, 1) for step in range(11))

# Published two-decimal values per m1^2, ordered (m1*m2 > 0, m1*m2 < 0). A single value is
# either a degenerate row or, at m1^2 = 0.5, the positive-product value alone.
REFERENCE_TABLE1: dict[float, tuple[float, ...]] = {
    0.0: (0.85,),
    0.1: (0.93, 0.63),
    0.2: (0.91, 0.51),
    0.3: (0.87, 0.41),
    0.4: (0.81, 0.32),
    0.5: (0.75,),
    0.6: (0.67, 0.18),
    0.7: (0.58, 0.12),
    0.8: (0.48, 0.08),
    0.9: (0.36, 0.06),
    1.0: (0.14,),
}
REFERENCE_TABLE2: dict[float, tuple[float, ...]] = {
    0.0: (0.57,),
    0.1: (0.48, 0.63),
    0.2: (0.44, 0.64),
    0.3: (0.41, 0.64),
    0.4: (0.39, 0.63),
    0.5: (0.37,),
    0.6: (0.36, 0.60),
    0.7: (0.35, 0.58),
    0.8: (0.35, 0.55),
    0.9: (0.36, 0.51),
    1.0: (0.42,),
}


class LimitingError(Exception):
    """Raised when a limiting formula is evaluated outside its stated scope."""


class TableKind(str, Enum):
    ONE_TRANSFORMER = "table1"
    TWO_TRANSFORMER = "table2"


class Reference(str, Enum):
    """Target state the two-transformer output is compared with."""

    SIGMA_PRIME = "sigma-prime"
    SIGMA = "sigma"


@dataclass(frozen=True, slots=True)
class BranchedFidelity:
    positive_branch: float
    negative_branch: float
    degenerate: bool = False

    def __post_init__(self) -> None:
        for value in (self.positive_branch, self.negative_branch):
            if not -ALGEBRAIC_TOL <= value <= 1.0 + ALGEBRAIC_TOL:
                raise LimitingError(f"Fidelity {value!r} lies outside [0, 1].")
        if self.degenerate and abs(self.positive_branch - self.negative_branch) > ALGEBRAIC_TOL:
            raise LimitingError("Degenerate branches must coincide.")

    def value(self, branch: Optional[Branch]) -> float:
        if branch is Branch.NEGATIVE_PRODUCT:
            return self.negative_branch
        return self.positive_branch


@dataclass(frozen=True, slots=True)
class TableRow:
    m1_sq: float
    m2_sq: float
    diff: float
    fidelity: BranchedFidelity


def _require_real(blank: BlankState) -> float:
    if not blank.is_real:
        raise LimitingError(f"Formula is stated for real m2 only, got m2={blank.m2!r}.")
    return blank.m2.real


def f1_from_blank(blank: BlankState) -> float:
    """One-transformer limiting fidelity on the blank's own sign branch."""

    m1, m2 = blank.m1, _require_real(blank)
    return 0.5 * (1.0 + m1 * m2 - (m1 * m1 - m2 * m2) / SQRT2)


def f1_limiting(blank: BlankState) -> BranchedFidelity:
    """Both sign branches of the one-transformer fidelity for the blank's magnitudes."""

    m1, m2 = blank.m1, _require_real(blank)
    diff = m1 * m1 - m2 * m2
    if abs(m1 * m2) <= ALGEBRAIC_TOL:
        value = 0.5 * (1.0 - diff / SQRT2)
        return BranchedFidelity(value, value, degenerate=True)
    product = math.sqrt(max(0.0, 1.0 - diff * diff)) / 2.0
    return BranchedFidelity(
        0.5 * (1.0 + product - diff / SQRT2),
        0.5 * (1.0 - product - diff / SQRT2),
    )


def rho2_two_transformer_limit() -> DensityOperator:
    """Input-independent mode-2 state behind two transformers."""

    return DensityOperator(
        (2,),
        [
            [5.0 / 8.0, TWO_TRANSFORMER_COHERENCE],
            [TWO_TRANSFORMER_COHERENCE, 3.0 / 8.0],
        ],
    )


def f_two_transformer(blank: BlankState) -> float:
    """Two-transformer limiting fidelity against the equal superposition of |S> and |S_perp>.

    Valid for complex ``m2``; agrees with the matrix element of
    :func:`rho2_two_transformer_limit` between :func:`~qdeletion.machines.sigma_prime` states.
    """

    m1, m2 = blank.m1, blank.m2
    m2c = m2.conjugate()
    value = 0.5 * (
        5.0 / 8.0 * (1.0 - m1 * m2c - m1 * m2)
        + 0.25 * (1.0 / SQRT2 - 1.0) * (2.0 * m1 * m1 - m2c**2 - m2**2)
        + 3.0 / 8.0 * (1.0 + m1 * m2c + m1 * m2)
    )
    if abs(value.imag) > ALGEBRAIC_TOL:
        raise LimitingError(f"Fidelity picked up an imaginary part {value.imag:.3e}.")
    return value.real


def f_two_transformer_against_sigma(blank: BlankState) -> float:
    """Same output state measured against plain |S> instead."""

    return fidelity_against(rho2_two_transformer_limit(), sigma(blank))


def _checked_squares(m1_sq: float, m2_sq: float) -> None:
    if m1_sq < 0.0 or m2_sq < 0.0 or abs(m1_sq + m2_sq - 1.0) > ALGEBRAIC_TOL:
        raise LimitingError(f"Need m1^2, m2^2 >= 0 summing to 1, got {m1_sq!r}, {m2_sq!r}.")


def _blank_pair(m1_sq: float) -> tuple[BlankState, BlankState]:
    try:
        return BlankState.from_squares(m1_sq), BlankState.from_squares(m1_sq, negative=True)
    except MachineError as exc:
        raise LimitingError(str(exc)) from exc


def f1_branched(m1_sq: float, m2_sq: float) -> BranchedFidelity:
    _checked_squares(m1_sq, m2_sq)
    positive, _ = _blank_pair(m1_sq)
    return f1_limiting(positive)


def f_two_transformer_branched(
    m1_sq: float, m2_sq: float, reference: Reference = Reference.SIGMA_PRIME
) -> BranchedFidelity:
    """Evaluate the two-transformer fidelity at both sign assignments of real amplitudes."""

    _checked_squares(m1_sq, m2_sq)
    positive, negative = _blank_pair(m1_sq)
    if reference is Reference.SIGMA_PRIME:
        measure = f_two_transformer
    else:
        measure = f_two_transformer_against_sigma
    degenerate = abs(positive.m1 * positive.m2.real) <= ALGEBRAIC_TOL
    return BranchedFidelity(measure(positive), measure(negative), degenerate=degenerate)


def table_rows(
    kind: TableKind,
    m1_sq_values: Iterable[float],
    *,
    reference: Reference = Reference.SIGMA_PRIME,
) -> list[TableRow]:
    """Limiting fidelity rows over an arbitrary m1^2 grid."""

    if kind is TableKind.ONE_TRANSFORMER and reference is not Reference.SIGMA_PRIME:
        raise LimitingError("The one-transformer table is always measured against |S>.")
    rows: list[TableRow] = []
    for m1_sq in m1_sq_values:
        if not 0.0 <= m1_sq <= 1.0:
            raise LimitingError(f"m1^2 must lie in [0, 1], got {m1_sq!r}.")
        m2_sq = 1.0 - m1_sq
        if kind is TableKind.ONE_TRANSFORMER:
            fidelity = f1_branched(m1_sq, m2_sq)
        else:
            fidelity = f_two_transformer_branched(m1_sq, m2_sq, reference)
        rows.append(TableRow(m1_sq, m2_sq, m1_sq - m2_sq, fidelity))
    return rows


def table1() -> list[TableRow]:
    return table_rows(TableKind.ONE_TRANSFORMER, TABLE_GRID)


def table2() -> list[TableRow]:
    return table_rows(TableKind.TWO_TRANSFORMER, TABLE_GRID)


def reference_deviation(row: TableRow, published: tuple[float, ...]) -> float:
    """Largest gap between a computed row and its published two-decimal values."""

    if len(published) == 1:
        return abs(row.fidelity.positive_branch - published[0])
    return max(
        abs(row.fidelity.positive_branch - published[0]),
        abs(row.fidelity.negative_branch - published[1]),
    )
