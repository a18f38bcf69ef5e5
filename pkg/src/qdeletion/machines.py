"""Deletion machines: blank states, the transformer gate and the Pati-Braunstein deleter.

Composite states live on dims ``(2, 2, 3)``: the retained qubit (mode 1), the qubit being
deleted (mode 2) and a three-level machine register with ordered basis ``|A>, |A0>, |A1>``.
"""

from __future__ import annotations

import cmath
import logging
import math
from dataclasses import dataclass
from enum import Enum
from functools import reduce
from typing import Optional, Union

import numpy as np
import numpy.typing as npt
from scipy.integrate import trapezoid

from .linalg import (
    ALGEBRAIC_TOL,
    ComplexArray,
    DensityOperator,
    PureState,
    UnitaryOperator,
    apply,
    fidelity_against,
    outer,
    partial_trace,
    tensor_product,
)

logger = logging.getLogger(__name__)

FloatArray = npt.NDArray[np.float64]
FloatLike = Union[float, FloatArray]

SQRT2 = math.sqrt(2.0)
MACHINE_DIM = 3
REGISTER_READY, REGISTER_ZERO, REGISTER_ONE = 0, 1, 2
PIPELINE_DIMS = (2, 2, MACHINE_DIM)
DELETED_MODE = 1

SPECIAL_BLANK_FIDELITY = 0.5 + 1.0 / (2.0 * SQRT2)
PB_ALONE_AVERAGE = 5.0 / 6.0


class MachineError(Exception):
    """Raised for invalid machine parameters or a failed closed-form cross-check."""


class Machine(str, Enum):
    ONE_TRANSFORMER_LIMIT = "one-transformer-limit"
    TWO_TRANSFORMER_LIMIT = "two-transformer-limit"
    PB_WITH_TRANSFORMER = "pb-with-transformer"
    PB_ALONE = "pb-alone"

    @property
    def is_limiting(self) -> bool:
        return self in (Machine.ONE_TRANSFORMER_LIMIT, Machine.TWO_TRANSFORMER_LIMIT)


class Branch(str, Enum):
    """Sign of ``m1 * m2`` selecting a table column."""

    POSITIVE_PRODUCT = "positive"
    NEGATIVE_PRODUCT = "negative"


@dataclass(frozen=True, slots=True)
class BlankState:
    """Amplitudes of the blank ``|S> = m1|0> + m2|1>`` with ``m1`` real."""

    m1: float
    m2: complex = 0j

    def __post_init__(self) -> None:
        m1 = float(self.m1)
        m2 = complex(self.m2)
        if not (math.isfinite(m1) and cmath.isfinite(m2)):
            raise MachineError("Blank amplitudes must be finite.")
        total = m1 * m1 + abs(m2) ** 2
        if abs(total - 1.0) > ALGEBRAIC_TOL:
            raise MachineError(f"Blank state needs m1^2 + |m2|^2 = 1, got {total!r}.")
        object.__setattr__(self, "m1", m1)
        object.__setattr__(self, "m2", m2)

    @classmethod
    def from_squares(cls, m1_sq: float, *, negative: bool = False) -> BlankState:
        """Blank with ``m1 = sqrt(m1_sq)`` and real ``m2 = +-sqrt(1 - m1_sq)``."""

        if not 0.0 <= m1_sq <= 1.0:
            raise MachineError(f"m1^2 must lie in [0, 1], got {m1_sq!r}.")
        m2 = math.sqrt(1.0 - m1_sq)
        return cls(math.sqrt(m1_sq), -m2 if negative else m2)

    @property
    def is_real(self) -> bool:
        return abs(self.m2.imag) <= ALGEBRAIC_TOL

    @property
    def branch(self) -> Optional[Branch]:
        """Sign branch of ``m1 * m2`` for real blanks; ``None`` when the product vanishes."""

        if not self.is_real:
            return None
        product = self.m1 * self.m2.real
        if abs(product) <= ALGEBRAIC_TOL:
            return None
        return Branch.POSITIVE_PRODUCT if product > 0 else Branch.NEGATIVE_PRODUCT

    def negated(self) -> BlankState:
        return BlankState(-self.m1, -self.m2)


@dataclass(frozen=True, slots=True)
class InputQubit:
    """Unknown input ``|psi> = alpha|0> + beta|1>`` with the global phase fixed by alpha >= 0."""

    alpha: float
    beta: complex

    def __post_init__(self) -> None:
        alpha = float(self.alpha)
        beta = complex(self.beta)
        if not (math.isfinite(alpha) and cmath.isfinite(beta)):
            raise MachineError("Input amplitudes must be finite.")
        if alpha < 0.0:
            raise MachineError(f"alpha must be non-negative, got {alpha!r}.")
        total = alpha * alpha + abs(beta) ** 2
        if abs(total - 1.0) > ALGEBRAIC_TOL:
            raise MachineError(f"Input state needs alpha^2 + |beta|^2 = 1, got {total!r}.")
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "beta", beta)

    @classmethod
    def from_alpha(cls, alpha: float, phase: float = 0.0) -> InputQubit:
        if not 0.0 <= alpha <= 1.0:
            raise MachineError(f"alpha must lie in [0, 1], got {alpha!r}.")
        return cls(alpha, math.sqrt(max(0.0, 1.0 - alpha * alpha)) * cmath.exp(1j * phase))

    @classmethod
    def from_weight(cls, alpha_sq: float, phase: float = 0.0) -> InputQubit:
        """Input with ``alpha^2 = alpha_sq``."""

        if not 0.0 <= alpha_sq <= 1.0:
            raise MachineError(f"alpha^2 must lie in [0, 1], got {alpha_sq!r}.")
        return cls(math.sqrt(alpha_sq), math.sqrt(1.0 - alpha_sq) * cmath.exp(1j * phase))

    @property
    def overlap_weight(self) -> float:
        """``alpha^2 |beta|^2``, the weight of the mixed-parity terms of ``|psi>|psi>``."""

        return self.alpha**2 * abs(self.beta) ** 2

    def state(self) -> PureState:
        return PureState((2,), [self.alpha, self.beta])


@dataclass(frozen=True, slots=True)
class Transformer:
    """Two-qubit gate applied to modes 1 and 2 after the deleter."""

    gate: UnitaryOperator

    def __post_init__(self) -> None:
        if self.gate.dims != (2, 2):
            raise MachineError(f"Transformer acts on dims (2, 2), got {self.gate.dims}.")

    def on_register(self) -> UnitaryOperator:
        """The gate extended by the identity on the machine register."""

        return tensor_product(self.gate, UnitaryOperator.identity((MACHINE_DIM,)))

    def squared(self) -> UnitaryOperator:
        return UnitaryOperator(self.gate.dims, self.gate.mat @ self.gate.mat)


@dataclass(frozen=True, slots=True)
class FidelityReport:
    machine: Machine
    blank: BlankState
    fidelity: float
    input: Optional[InputQubit] = None
    branch: Optional[Branch] = None

    def __post_init__(self) -> None:
        if not -ALGEBRAIC_TOL <= self.fidelity <= 1.0 + ALGEBRAIC_TOL:
            raise MachineError(f"Fidelity {self.fidelity!r} lies outside [0, 1].")
        if self.machine.is_limiting and self.input is not None:
            raise MachineError(f"{self.machine.value} is input independent; drop the input.")
        if not self.machine.is_limiting and self.input is None:
            raise MachineError(f"{self.machine.value} reports need the input qubit.")


SPECIAL_BLANK = BlankState(1.0 / SQRT2, -1.0 / SQRT2)


def sigma(blank: BlankState) -> PureState:
    return PureState((2,), [blank.m1, blank.m2])


def sigma_perp(blank: BlankState) -> PureState:
    return PureState((2,), [-blank.m2.conjugate(), blank.m1])


def sigma_prime(blank: BlankState) -> PureState:
    """Equal-weight superposition of ``|S>`` and its orthogonal complement."""

    return PureState((2,), (sigma(blank).amps + sigma_perp(blank).amps) / SQRT2)


def transformer_matrix() -> ComplexArray:
    """Columns are the images of ``|00>, |01>, |10>, |11>``: ``|psi+>, |11>, |psi->, |00>``."""

    s = 1.0 / SQRT2
    return np.array(
        [
            [0.0, 0.0, 0.0, 1.0],
            [s, 0.0, s, 0.0],
            [s, 0.0, -s, 0.0],
            [0.0, 1.0, 0.0, 0.0],
        ],
        dtype=np.complex128,
    )


def transformer() -> Transformer:
    return Transformer(UnitaryOperator((2, 2), transformer_matrix()))


def _ket(dim: int, index: int) -> npt.NDArray[np.complex128]:
    vector = np.zeros(dim, dtype=np.complex128)
    vector[index] = 1.0
    return vector


def _kron(*vectors: npt.NDArray[np.complex128]) -> npt.NDArray[np.complex128]:
    return reduce(np.kron, vectors)


def deleter_isometry(blank: BlankState) -> ComplexArray:
    """Conditional deleter as a 12x12 partial isometry.

    Only the four inputs ``|ab>|A>`` are mapped; every other column is zero because no other
    vector ever reaches the deleter.
    """

    zero, one = _ket(2, 0), _ket(2, 1)
    ready = _ket(MACHINE_DIM, REGISTER_READY)
    blank_amps = sigma(blank).amps
    rules = (
        (_kron(zero, zero, ready), _kron(zero, blank_amps, _ket(MACHINE_DIM, REGISTER_ZERO))),
        (_kron(one, one, ready), _kron(one, blank_amps, _ket(MACHINE_DIM, REGISTER_ONE))),
        (_kron(zero, one, ready), _kron(zero, one, ready)),
        (_kron(one, zero, ready), _kron(one, zero, ready)),
    )
    side = 4 * MACHINE_DIM
    isometry = np.zeros((side, side), dtype=np.complex128)
    for source, image in rules:
        isometry += np.outer(image, source.conj())
    return isometry


def deleter_input(input: InputQubit) -> PureState:
    """``|psi>|psi>|A>`` on the pipeline dims."""

    psi = input.state()
    ready = PureState.basis((MACHINE_DIM,), (REGISTER_READY,))
    return tensor_product(tensor_product(psi, psi), ready)


def pb_delete(input: InputQubit, blank: BlankState) -> PureState:
    """Run two copies of ``input`` through the conditional deleter."""

    source = deleter_input(input)
    return PureState(PIPELINE_DIMS, deleter_isometry(blank) @ source.amps)


def pb_alone_rho2(input: InputQubit, blank: BlankState) -> DensityOperator:
    """Reduced state of mode 2 straight out of the deleter."""

    return partial_trace(outer(pb_delete(input, blank)), keep={DELETED_MODE})


def pb_with_transformer_rho2(input: InputQubit, blank: BlankState) -> DensityOperator:
    """Reduced state of mode 2 after the deleter and one transformer, by full simulation."""

    deleted = pb_delete(input, blank)
    transformed = apply(transformer().on_register(), deleted)
    logger.debug("simulated deleter + transformer for alpha=%r blank=%r", input.alpha, blank)
    return partial_trace(outer(transformed), keep={DELETED_MODE})


def pb_rho2_closed_form(input: InputQubit, blank: BlankState) -> DensityOperator:
    """Mode-2 reduced state of the deleter + transformer machine written out entrywise."""

    a4 = input.alpha**4
    b4 = abs(input.beta) ** 4
    w = input.overlap_weight
    m1, m2 = blank.m1, blank.m2
    m2c = m2.conjugate()
    m2_sq = abs(m2) ** 2
    rho00 = a4 * m1 * m1 / 2 + w / 2 + b4 * m1 * m1 / 2 + b4 * m2_sq
    rho01 = a4 * m1 * m2c / SQRT2 - w / SQRT2 + b4 * m1 * m2 / SQRT2
    rho10 = a4 * m1 * m2 / SQRT2 - w / SQRT2 + b4 * m1 * m2c / SQRT2
    rho11 = a4 * m1 * m1 / 2 + 3 * w / 2 + b4 * m1 * m1 / 2 + a4 * m2_sq
    return DensityOperator((2,), [[rho00, rho01], [rho10, rho11]])


def pb_f2_closed_form(input: InputQubit, blank: BlankState) -> float:
    """Deletion fidelity of the deleter + transformer machine as a polynomial (real m2 only)."""

    if not blank.is_real:
        raise MachineError("The closed-form fidelity polynomial only covers real m2.")
    return float(
        _f2_polynomial(
            blank.m1, blank.m2.real, input.alpha**4, abs(input.beta) ** 4, input.overlap_weight
        )
    )


def _f2_polynomial(m1: float, m2: float, a4: FloatLike, b4: FloatLike, w: FloatLike) -> FloatLike:
    return (
        m1**2 * (m1**2 / 2 + w * (1 - 2 * m1**2) / 2 + b4 * m2**2)
        + 2 * m1 * m2 * (m1 * m2 / SQRT2 - w * (2 * m1 * m2 + 1) / SQRT2)
        + m2**2 * (m1**2 / 2 + w * (3 - 2 * m1**2) / 2 + a4 * m2**2)
    )


def pb_with_transformer_fidelity(input: InputQubit, blank: BlankState) -> FidelityReport:
    fidelity = fidelity_against(pb_with_transformer_rho2(input, blank), sigma(blank))
    if blank.is_real:
        closed = pb_f2_closed_form(input, blank)
        if abs(fidelity - closed) > ALGEBRAIC_TOL:
            raise MachineError(
                f"Simulated fidelity {fidelity!r} diverges from the polynomial {closed!r}."
            )
    return FidelityReport(Machine.PB_WITH_TRANSFORMER, blank, fidelity, input=input)


def pb_alone_fidelity(input: InputQubit, blank: BlankState) -> FidelityReport:
    fidelity = fidelity_against(pb_alone_rho2(input, blank), sigma(blank))
    expected = 1.0 - input.overlap_weight
    if abs(fidelity - expected) > ALGEBRAIC_TOL:
        raise MachineError(
            f"Deleter-only fidelity {fidelity!r} differs from 1 - alpha^2|beta|^2 = {expected!r}."
        )
    return FidelityReport(Machine.PB_ALONE, blank, fidelity, input=input)


def one_transformer_report(blank: BlankState) -> FidelityReport:
    from . import limiting

    return FidelityReport(
        Machine.ONE_TRANSFORMER_LIMIT, blank, limiting.f1_from_blank(blank), branch=blank.branch
    )


def two_transformer_report(blank: BlankState) -> FidelityReport:
    from . import limiting

    return FidelityReport(
        Machine.TWO_TRANSFORMER_LIMIT,
        blank,
        limiting.f_two_transformer(blank),
        branch=blank.branch,
    )


def _resolve_machine(machine: Union[Machine, str]) -> Machine:
    try:
        return Machine(machine)
    except ValueError as exc:
        known = ", ".join(item.value for item in Machine)
        raise MachineError(f"Unknown machine '{machine}'. Known machines: {known}.") from exc


def machine_fidelity(
    machine: Union[Machine, str], blank: BlankState, input: InputQubit
) -> float:
    """Deletion fidelity of ``machine`` for one input; limiting machines ignore the input."""

    resolved = _resolve_machine(machine)
    if resolved is Machine.ONE_TRANSFORMER_LIMIT:
        return one_transformer_report(blank).fidelity
    if resolved is Machine.TWO_TRANSFORMER_LIMIT:
        return two_transformer_report(blank).fidelity
    if resolved is Machine.PB_WITH_TRANSFORMER:
        return pb_with_transformer_fidelity(input, blank).fidelity
    return pb_alone_fidelity(input, blank).fidelity


def pb_rho2_batch(
    machine: Union[Machine, str],
    blank: BlankState,
    alphas: npt.ArrayLike,
    betas: npt.ArrayLike,
) -> ComplexArray:
    """Mode-2 reduced states for many inputs at once, shape ``(N, 2, 2)``.

    Runs the same pipeline as ``pb_alone_rho2``/``pb_with_transformer_rho2`` on an
    ``(N, 12)`` stack of ``|psi>|psi>|A>`` amplitudes.
    """

    resolved = _resolve_machine(machine)
    if resolved.is_limiting:
        raise MachineError(f"{resolved.value} has no per-input reduced state.")
    psi = np.stack(
        [np.asarray(alphas, dtype=np.complex128), np.asarray(betas, dtype=np.complex128)], axis=1
    )
    pairs = np.einsum("ni,nj->nij", psi, psi).reshape(-1, 4)
    source = np.zeros((len(psi), 4 * MACHINE_DIM), dtype=np.complex128)
    source[:, REGISTER_READY::MACHINE_DIM] = pairs
    outputs = source @ deleter_isometry(blank).T
    if resolved is Machine.PB_WITH_TRANSFORMER:
        outputs = outputs @ np.kron(transformer_matrix(), np.eye(MACHINE_DIM)).T
    modes = outputs.reshape(-1, 2, 2, MACHINE_DIM)
    return np.einsum("nikm,nilm->nkl", modes, modes.conj())


def _fidelities(
    machine: Machine, blank: BlankState, alpha_sq: FloatArray, phases: FloatArray
) -> FloatArray:
    if machine.is_limiting:
        value = machine_fidelity(machine, blank, InputQubit.from_weight(1.0))
        return np.full(len(alpha_sq), value)
    alphas = np.sqrt(alpha_sq)
    betas = np.sqrt(np.clip(1.0 - alpha_sq, 0.0, None)) * np.exp(1j * phases)
    rho = pb_rho2_batch(machine, blank, alphas, betas)
    # the mean of valid states is a valid state
    DensityOperator((2,), rho.mean(axis=0))
    reference = sigma(blank).amps
    fidelities = np.einsum("k,nkl,l->n", reference.conj(), rho, reference).real
    weights = alpha_sq * np.abs(betas) ** 2
    if machine is Machine.PB_ALONE:
        expected: Optional[FloatLike] = 1.0 - weights
    elif blank.is_real:
        expected = _f2_polynomial(
            blank.m1, blank.m2.real, alpha_sq**2, np.abs(betas) ** 4, weights
        )
    else:
        expected = None
    if expected is not None:
        worst = float(np.max(np.abs(fidelities - expected)))
        if worst > ALGEBRAIC_TOL:
            raise MachineError(
                f"Simulated fidelities diverge from the closed form by {worst!r}."
            )
    return fidelities


def average_fidelity(machine: Union[Machine, str], blank: BlankState, samples: int) -> float:
    """Mean fidelity over inputs with alpha^2 uniform on [0, 1] by trapezoid quadrature.

    ``samples`` grid points span [0, 1] evenly; a single sample is the point alpha = 1.
    """

    resolved = _resolve_machine(machine)
    if samples < 1:
        raise MachineError(f"samples must be a positive integer, got {samples!r}.")
    grid = np.array([1.0]) if samples == 1 else np.linspace(0.0, 1.0, samples)
    logger.debug("averaging %s over %d quadrature points", resolved.value, samples)
    values = _fidelities(resolved, blank, grid, np.zeros_like(grid))
    if samples == 1:
        return float(values[0])
    return float(trapezoid(values, grid))


def monte_carlo_average(
    machine: Union[Machine, str], blank: BlankState, samples: int, *, seed: int = 0
) -> float:
    """Mean fidelity over Haar-random inputs (alpha^2 uniform, beta phase uniform)."""

    resolved = _resolve_machine(machine)
    if samples < 1:
        raise MachineError(f"samples must be a positive integer, got {samples!r}.")
    rng = np.random.default_rng(seed)
    weights = rng.uniform(0.0, 1.0, samples)
    phases = rng.uniform(0.0, 2.0 * math.pi, samples)
    return float(np.mean(_fidelities(resolved, blank, weights, phases)))
