"""Dense complex linear algebra for states and operators on labelled product spaces.

Subsystem 0 is the leftmost ket label and basis indices are row-major, so ``|ab>`` on
dims ``(2, 2)`` sits at index ``2 * a + b``. Every value type checks its invariants at
construction and is immutable afterwards; nothing is renormalised silently.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from math import prod
from typing import Iterable, Sequence, TypeVar, Union

import numpy as np
import numpy.typing as npt
from pydantic import BaseModel, ConfigDict, Field

logger = logging.getLogger(__name__)

ALGEBRAIC_TOL = 1e-12
EIGEN_TOL = 1e-10

ComplexArray = npt.NDArray[np.complex128]


class LinalgError(Exception):
    """Raised when a state or operator violates its invariants."""


class Tolerances(BaseModel):
    """Comparison thresholds shared by the library, the CLI and the verification suite."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    algebraic: float = Field(ALGEBRAIC_TOL, gt=0)
    eigen: float = Field(EIGEN_TOL, gt=0)
    table: float = Field(0.01, gt=0)
    quadrature: float = Field(1e-6, gt=0)
    cli_normalization: float = Field(1e-7, gt=0)


DEFAULT_TOLERANCES = Tolerances()


def _checked_dims(dims: Iterable[int]) -> tuple[int, ...]:
    resolved = tuple(int(d) for d in dims)
    if not resolved:
        raise LinalgError("At least one subsystem dimension is required.")
    if any(d < 2 for d in resolved):
        raise LinalgError(f"Subsystem dimensions must be >= 2, got {resolved}.")
    return resolved


def _frozen_array(values: npt.ArrayLike, label: str) -> ComplexArray:
    array = np.array(values, dtype=np.complex128, copy=True)
    if not np.all(np.isfinite(array)):
        raise LinalgError(f"{label} contains NaN or infinite entries.")
    array.setflags(write=False)
    return array


def _checked_square(mat: ComplexArray, dims: tuple[int, ...], label: str) -> None:
    side = prod(dims)
    if mat.shape != (side, side):
        raise LinalgError(f"{label} must be {side}x{side} for dims {dims}, got {mat.shape}.")


def hermiticity_deviation(mat: npt.ArrayLike) -> float:
    """Largest entrywise distance between a matrix and its conjugate transpose."""

    array = np.asarray(mat, dtype=np.complex128)
    return float(np.max(np.abs(array - array.conj().T)))


def unitarity_deviation(mat: npt.ArrayLike) -> float:
    """Largest entrywise distance between ``U^dagger U`` and the identity."""

    array = np.asarray(mat, dtype=np.complex128)
    if array.ndim != 2 or array.shape[0] != array.shape[1]:
        raise LinalgError(f"Expected a square matrix, got shape {array.shape}.")
    gram = array.conj().T @ array
    return float(np.max(np.abs(gram - np.eye(array.shape[0]))))


def _min_eigenvalue(mat: ComplexArray) -> float:
    return float(np.linalg.eigvalsh(mat)[0])


@dataclass(frozen=True, slots=True, eq=False)
class PureState:
    """Normalised amplitude vector over a product basis."""

    dims: tuple[int, ...]
    amps: ComplexArray

    def __post_init__(self) -> None:
        dims = _checked_dims(self.dims)
        amps = _frozen_array(self.amps, "State amplitudes")
        if amps.shape != (prod(dims),):
            raise LinalgError(
                f"State on dims {dims} needs {prod(dims)} amplitudes, got shape {amps.shape}."
            )
        norm = float(np.linalg.norm(amps))
        if abs(norm - 1.0) > ALGEBRAIC_TOL:
            raise LinalgError(f"State is not normalised (norm {norm!r}).")
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "amps", amps)

    @classmethod
    def basis(cls, dims: Sequence[int], labels: Sequence[int]) -> PureState:
        """Computational basis ket ``|labels>`` on ``dims``."""

        dims_t = _checked_dims(dims)
        if len(labels) != len(dims_t) or any(
            not 0 <= label < dim for label, dim in zip(labels, dims_t)
        ):
            raise LinalgError(f"Basis labels {tuple(labels)} do not fit dims {dims_t}.")
        amps = np.zeros(prod(dims_t), dtype=np.complex128)
        amps[np.ravel_multi_index(tuple(labels), dims_t)] = 1.0
        return cls(dims_t, amps)

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amps))


@dataclass(frozen=True, slots=True, eq=False)
class DensityOperator:
    """Hermitian, unit-trace, positive semidefinite matrix on a product space."""

    dims: tuple[int, ...]
    mat: ComplexArray

    def __post_init__(self) -> None:
        dims = _checked_dims(self.dims)
        mat = _frozen_array(self.mat, "Density matrix")
        _checked_square(mat, dims, "Density matrix")
        deviation = hermiticity_deviation(mat)
        if deviation > ALGEBRAIC_TOL:
            raise LinalgError(f"Density matrix is not Hermitian (deviation {deviation:.3e}).")
        trace = complex(np.trace(mat))
        if abs(trace - 1.0) > ALGEBRAIC_TOL:
            raise LinalgError(f"Density matrix trace is {trace!r}, expected 1.")
        smallest = _min_eigenvalue(mat)
        if smallest < -EIGEN_TOL:
            raise LinalgError(
                f"Density matrix is not positive semidefinite (min eig {smallest!r})."
            )
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "mat", mat)

    def trace(self) -> complex:
        return complex(np.trace(self.mat))


@dataclass(frozen=True, slots=True, eq=False)
class UnitaryOperator:
    """Square matrix satisfying ``U^dagger U = I`` entrywise within tolerance."""

    dims: tuple[int, ...]
    mat: ComplexArray

    def __post_init__(self) -> None:
        dims = _checked_dims(self.dims)
        mat = _frozen_array(self.mat, "Unitary matrix")
        _checked_square(mat, dims, "Unitary matrix")
        deviation = unitarity_deviation(mat)
        if deviation > ALGEBRAIC_TOL:
            raise LinalgError(f"Operator is not unitary (deviation {deviation:.3e}).")
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "mat", mat)

    @classmethod
    def identity(cls, dims: Sequence[int]) -> UnitaryOperator:
        dims_t = _checked_dims(dims)
        return cls(dims_t, np.eye(prod(dims_t), dtype=np.complex128))

    def adjoint(self) -> UnitaryOperator:
        return UnitaryOperator(self.dims, self.mat.conj().T)


Operand = TypeVar("Operand", PureState, DensityOperator, UnitaryOperator)


def tensor_product(a: Operand, b: Operand) -> Operand:
    """Kronecker product of two values of the same kind; dims concatenate."""

    if type(a) is not type(b):
        raise LinalgError(
            f"Cannot form a tensor product of {type(a).__name__} and {type(b).__name__}."
        )
    dims = a.dims + b.dims
    if isinstance(a, PureState):
        return PureState(dims, np.kron(a.amps, b.amps))  # type: ignore[return-value]
    if isinstance(a, DensityOperator):
        return DensityOperator(dims, np.kron(a.mat, b.mat))  # type: ignore[return-value]
    return UnitaryOperator(dims, np.kron(a.mat, b.mat))  # type: ignore[return-value]


def apply(unitary: UnitaryOperator, state: PureState) -> PureState:
    """Return ``U|state>``."""

    if unitary.dims != state.dims:
        raise LinalgError(f"Operator dims {unitary.dims} do not match state dims {state.dims}.")
    return PureState(state.dims, unitary.mat @ state.amps)


def outer(phi: PureState) -> DensityOperator:
    """Rank-one projector ``|phi><phi|``."""

    return DensityOperator(phi.dims, np.outer(phi.amps, phi.amps.conj()))


def partial_trace(rho: DensityOperator, keep: Iterable[int]) -> DensityOperator:
    """Trace out every subsystem not listed in ``keep``.

    The kept subsystems stay in their original order whatever order ``keep`` lists them in.
    """

    kept = sorted(set(keep))
    if not kept:
        raise LinalgError("partial_trace needs at least one subsystem to keep.")
    count = len(rho.dims)
    out_of_range = [index for index in kept if not 0 <= index < count]
    if out_of_range:
        raise LinalgError(f"Subsystem indices {out_of_range} are out of range for {rho.dims}.")

    tensor = rho.mat.reshape(rho.dims + rho.dims)
    remaining = count
    # highest axis first so lower row axes keep their positions
    for axis in reversed([index for index in range(count) if index not in kept]):
        tensor = np.trace(tensor, axis1=axis, axis2=axis + remaining)
        remaining -= 1

    kept_dims = tuple(rho.dims[index] for index in kept)
    side = prod(kept_dims)
    logger.debug("partial_trace %s -> %s", rho.dims, kept_dims)
    return DensityOperator(kept_dims, tensor.reshape(side, side))


def fidelity_against(rho: DensityOperator, phi: PureState) -> float:
    """Overlap ``<phi|rho|phi>`` of a density operator with a pure reference state."""

    if rho.dims != phi.dims:
        raise LinalgError(f"Density dims {rho.dims} do not match state dims {phi.dims}.")
    value = complex(np.vdot(phi.amps, rho.mat @ phi.amps))
    if abs(value.imag) > ALGEBRAIC_TOL:
        raise LinalgError(
            f"Quadratic form has imaginary part {value.imag:.3e}; the operator is not Hermitian."
        )
    return min(1.0, max(0.0, value.real))


def eigen_min(rho: Union[DensityOperator, npt.ArrayLike]) -> float:
    """Smallest eigenvalue of a Hermitian matrix."""

    if isinstance(rho, DensityOperator):
        return _min_eigenvalue(rho.mat)
    mat = np.asarray(rho, dtype=np.complex128)
    if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
        raise LinalgError(f"Expected a square matrix, got shape {mat.shape}.")
    deviation = hermiticity_deviation(mat)
    if deviation > ALGEBRAIC_TOL:
        raise LinalgError(f"Matrix is not Hermitian (deviation {deviation:.3e}).")
    return _min_eigenvalue(mat)
