"""Parameter grids, sweep configuration and delimited-text emission."""

from __future__ import annotations

import csv
import io
import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import Any, Iterable, Optional, Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from .limiting import TableKind, TableRow
from .linalg import DEFAULT_TOLERANCES, DensityOperator, Tolerances, fidelity_against
from .machines import (
    BlankState,
    InputQubit,
    Machine,
    pb_f2_closed_form,
    pb_rho2_closed_form,
    pb_with_transformer_rho2,
    sigma,
)

logger = logging.getLogger(__name__)

TABLE_HEADER = ("m1_sq", "m2_sq", "diff", "f_positive", "f_negative")
VERIFY_HEADER = ("check", "status", "deviation", "tolerance", "anchor")
PB_HEADER = (
    "alpha",
    "rho_00",
    "rho_01_re",
    "rho_01_im",
    "rho_11",
    "closed_rho_00",
    "closed_rho_01_re",
    "closed_rho_01_im",
    "closed_rho_11",
    "f2_simulated",
    "f2_closed_form",
    "deviation",
)
AVERAGE_HEADER = ("machine", "m1", "m2", "samples", "quadrature", "monte_carlo", "reference")


class SweepConfigError(Exception):
    """Raised when a grid or sweep configuration is invalid."""


class OutputFormat(str, Enum):
    CSV = "csv"
    TSV = "tsv"

    @property
    def delimiter(self) -> str:
        return "\t" if self is OutputFormat.TSV else ","


class BranchSelection(str, Enum):
    POSITIVE = "positive"
    NEGATIVE = "negative"
    BOTH = "both"


class GridSpec(BaseModel):
    """Inclusive evenly spaced grid ``start:stop:step``."""

    model_config = ConfigDict(frozen=True)

    start: float
    stop: float
    step: float = Field(1.0, gt=0)

    @model_validator(mode="after")
    def _ordered(self) -> GridSpec:
        if self.start > self.stop:
            raise ValueError(f"grid start {self.start} exceeds stop {self.stop}")
        return self

    @classmethod
    def parse(cls, text: str) -> GridSpec:
        """Parse ``start:stop:step`` or a single number."""

        parts = [part.strip() for part in text.split(":")]
        try:
            numbers = [float(part) for part in parts]
        except ValueError as exc:
            raise SweepConfigError(f"Grid '{text}' is not numeric.") from exc
        if not all(math.isfinite(number) for number in numbers):
            raise SweepConfigError(f"Grid '{text}' contains non-finite values.")
        try:
            if len(numbers) == 1:
                return cls(start=numbers[0], stop=numbers[0])
            if len(numbers) == 3:
                return cls(start=numbers[0], stop=numbers[1], step=numbers[2])
        except ValidationError as exc:
            raise SweepConfigError(f"Grid '{text}' is invalid: {_first_error(exc)}") from exc
        raise SweepConfigError(f"Grid '{text}' must be a number or start:stop:step.")

    def values(self) -> list[float]:
        count = int(math.floor((self.stop - self.start) / self.step + 1e-9)) + 1
        return [round(self.start + index * self.step, 12) for index in range(count)]

    def within(self, low: float, high: float) -> bool:
        return low <= self.start and self.stop <= high


DEFAULT_M1_SQ_GRID = GridSpec(start=0.0, stop=1.0, step=0.1)


class SweepConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    machine: Machine
    m1_sq: GridSpec = DEFAULT_M1_SQ_GRID
    alpha: Optional[GridSpec] = None
    branch: BranchSelection = BranchSelection.BOTH
    output_format: OutputFormat = OutputFormat.CSV
    precision: int = Field(4, ge=1, le=15)
    tolerances: Tolerances = DEFAULT_TOLERANCES

    @model_validator(mode="after")
    def _unit_interval(self) -> SweepConfig:
        if not self.m1_sq.within(0.0, 1.0):
            raise ValueError("m1_sq grid must stay within [0, 1]")
        if self.alpha is not None and not self.alpha.within(0.0, 1.0):
            raise ValueError("alpha grid must stay within [0, 1]")
        return self

    @property
    def table_kind(self) -> TableKind:
        """Limiting table produced by this sweep's machine."""

        kinds = {
            Machine.ONE_TRANSFORMER_LIMIT: TableKind.ONE_TRANSFORMER,
            Machine.TWO_TRANSFORMER_LIMIT: TableKind.TWO_TRANSFORMER,
        }
        if self.machine not in kinds:
            raise SweepConfigError(f"{self.machine.value} has no limiting table.")
        return kinds[self.machine]

    @classmethod
    def build(cls, **values: Any) -> SweepConfig:
        try:
            return cls(**values)
        except ValidationError as exc:
            raise SweepConfigError(_first_error(exc)) from exc


def _first_error(exc: ValidationError) -> str:
    error = exc.errors()[0]
    location = ".".join(str(part) for part in error["loc"])
    message = error["msg"].removeprefix("Value error, ")
    return f"{location}: {message}" if location else message


def format_number(value: float, precision: int) -> str:
    text = f"{value:.{precision}f}"
    # -0.0000 and 0.0000 are the same table entry
    if text.startswith("-") and float(text) == 0.0:
        return text[1:]
    return text


def format_deviation(value: float) -> str:
    if math.isnan(value) or math.isinf(value):
        return str(value)
    return f"{value:.3e}"


def render_delimited(
    header: Sequence[str], records: Iterable[Sequence[str]], output_format: OutputFormat
) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, delimiter=output_format.delimiter, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(records)
    return buffer.getvalue()


def table_records(
    rows: Iterable[TableRow], *, branch: BranchSelection, precision: int
) -> list[list[str]]:
    """Table rows as text; an unselected branch leaves its column empty."""

    records: list[list[str]] = []
    for row in rows:
        positive = format_number(row.fidelity.positive_branch, precision)
        negative = format_number(row.fidelity.negative_branch, precision)
        records.append(
            [
                format_number(row.m1_sq, precision),
                format_number(row.m2_sq, precision),
                format_number(row.diff, precision),
                positive if branch is not BranchSelection.NEGATIVE else "",
                negative if branch is not BranchSelection.POSITIVE else "",
            ]
        )
    return records


@dataclass(frozen=True, slots=True)
class PbPoint:
    """Deleter + transformer output at one input, simulated and closed form side by side."""

    input: InputQubit
    simulated: DensityOperator
    closed_form: DensityOperator
    f2_simulated: float
    f2_closed_form: float

    @property
    def deviation(self) -> float:
        entrywise = float(np.max(np.abs(self.simulated.mat - self.closed_form.mat)))
        return max(entrywise, abs(self.f2_simulated - self.f2_closed_form))


def pb_points(blank: BlankState, alphas: Iterable[float], phase: float = 0.0) -> list[PbPoint]:
    points: list[PbPoint] = []
    reference = sigma(blank)
    for alpha in alphas:
        qubit = InputQubit.from_alpha(alpha, phase)
        simulated = pb_with_transformer_rho2(qubit, blank)
        points.append(
            PbPoint(
                input=qubit,
                simulated=simulated,
                closed_form=pb_rho2_closed_form(qubit, blank),
                f2_simulated=fidelity_against(simulated, reference),
                f2_closed_form=pb_f2_closed_form(qubit, blank),
            )
        )
    logger.debug("evaluated %d deleter + transformer points", len(points))
    return points


def _rho_entries(mat: np.ndarray, precision: int) -> list[str]:
    return [
        format_number(mat[0, 0].real, precision),
        format_number(mat[0, 1].real, precision),
        format_number(mat[0, 1].imag, precision),
        format_number(mat[1, 1].real, precision),
    ]


def pb_records(points: Iterable[PbPoint], precision: int) -> list[list[str]]:
    """Simulated entries first, then the closed-form entries of the same matrix."""

    records: list[list[str]] = []
    for point in points:
        records.append(
            [
                format_number(point.input.alpha, precision),
                *_rho_entries(point.simulated.mat, precision),
                *_rho_entries(point.closed_form.mat, precision),
                format_number(point.f2_simulated, precision),
                format_number(point.f2_closed_form, precision),
                format_deviation(point.deviation),
            ]
        )
    return records
