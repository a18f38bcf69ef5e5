import numpy as np
import pytest

from qdeletion.linalg import (
    DEFAULT_TOLERANCES,
    DensityOperator,
    LinalgError,
    PureState,
    UnitaryOperator,
    apply,
    eigen_min,
    fidelity_against,
    outer,
    partial_trace,
    tensor_product,
)


def random_state(rng: np.random.Generator, dims: tuple[int, ...]) -> PureState:
    size = int(np.prod(dims))
    amps = rng.normal(size=size) + 1j * rng.normal(size=size)
    return PureState(dims, amps / np.linalg.norm(amps))


def test_basis_ket_is_row_major() -> None:
    ket = PureState.basis((2, 2, 3), (1, 0, 2))

    assert ket.amps[1 * 6 + 0 * 3 + 2] == 1.0
    assert ket.norm == pytest.approx(1.0)


def test_basis_rejects_labels_outside_dims() -> None:
    with pytest.raises(LinalgError, match="do not fit"):
        PureState.basis((2, 3), (0, 3))


def test_pure_state_requires_normalisation() -> None:
    with pytest.raises(LinalgError, match="not normalised"):
        PureState((2,), [1.0, 1.0])


def test_pure_state_rejects_wrong_length_and_nan() -> None:
    with pytest.raises(LinalgError, match="needs 4 amplitudes"):
        PureState((2, 2), [1.0, 0.0])
    with pytest.raises(LinalgError, match="NaN"):
        PureState((2,), [np.nan, 0.0])


def test_values_are_read_only() -> None:
    state = PureState.basis((2,), (0,))

    with pytest.raises(ValueError):
        state.amps[0] = 0.5


def test_density_operator_invariants() -> None:
    with pytest.raises(LinalgError, match="not Hermitian"):
        DensityOperator((2,), [[0.5, 0.1], [0.2, 0.5]])
    with pytest.raises(LinalgError, match="trace"):
        DensityOperator((2,), [[0.5, 0.0], [0.0, 0.6]])
    with pytest.raises(LinalgError, match="positive semidefinite"):
        DensityOperator((2,), [[1.2, 0.0], [0.0, -0.2]])


def test_unitary_operator_rejects_non_unitary() -> None:
    with pytest.raises(LinalgError, match="not unitary"):
        UnitaryOperator((2,), [[1.0, 0.0], [0.0, 1.01]])


def test_identity_and_adjoint() -> None:
    hadamard = UnitaryOperator((2,), np.array([[1, 1], [1, -1]]) / np.sqrt(2))

    product = hadamard.adjoint().mat @ hadamard.mat

    np.testing.assert_allclose(product, UnitaryOperator.identity((2,)).mat, atol=1e-12)


def test_tensor_product_concatenates_dims() -> None:
    joined = tensor_product(PureState.basis((2,), (1,)), PureState.basis((3,), (2,)))

    assert joined.dims == (2, 3)
    assert joined.amps[5] == 1.0


def test_tensor_product_rejects_mixed_kinds() -> None:
    ket = PureState.basis((2,), (0,))

    with pytest.raises(LinalgError, match="Cannot form"):
        tensor_product(ket, outer(ket))


def test_apply_checks_dims() -> None:
    with pytest.raises(LinalgError, match="do not match"):
        apply(UnitaryOperator.identity((2, 2)), PureState.basis((2,), (0,)))


def test_partial_trace_of_product_state() -> None:
    rng = np.random.default_rng(7)
    for _ in range(10):
        a = random_state(rng, (2,))
        b = random_state(rng, (2, 3))

        reduced = partial_trace(outer(tensor_product(a, b)), keep={0})

        np.testing.assert_allclose(reduced.mat, outer(a).mat, atol=1e-12)


def test_partial_trace_keeps_original_order() -> None:
    rng = np.random.default_rng(11)
    a, b, c = random_state(rng, (2,)), random_state(rng, (2,)), random_state(rng, (3,))
    rho = outer(tensor_product(tensor_product(a, b), c))

    reduced = partial_trace(rho, keep=[2, 0])

    assert reduced.dims == (2, 3)
    np.testing.assert_allclose(reduced.mat, np.kron(outer(a).mat, outer(c).mat), atol=1e-12)


def test_partial_trace_preserves_trace() -> None:
    rng = np.random.default_rng(3)
    rho = outer(random_state(rng, (2, 2, 3)))

    for keep in ({0}, {1}, {2}, {1, 2}):
        assert partial_trace(rho, keep).trace() == pytest.approx(1.0, abs=1e-12)


def test_partial_trace_rejects_bad_keep_sets() -> None:
    rho = outer(PureState.basis((2, 2), (0, 1)))

    with pytest.raises(LinalgError, match="at least one"):
        partial_trace(rho, keep=set())
    with pytest.raises(LinalgError, match="out of range"):
        partial_trace(rho, keep={2})


def test_self_fidelity_is_one() -> None:
    rng = np.random.default_rng(5)
    phi = random_state(rng, (2, 2, 3))

    assert fidelity_against(outer(phi), phi) == pytest.approx(1.0, abs=1e-12)


def test_fidelity_against_orthogonal_state_is_zero() -> None:
    rho = outer(PureState.basis((2,), (0,)))

    assert fidelity_against(rho, PureState.basis((2,), (1,))) == 0.0


def test_eigen_min_of_mixture() -> None:
    rng = np.random.default_rng(9)
    weights = rng.dirichlet(np.ones(4))
    mixture = sum(w * outer(random_state(rng, (2, 3))).mat for w in weights)

    assert eigen_min(mixture) >= -1e-10
    assert eigen_min(DensityOperator((2,), np.diag([0.3, 0.7]))) == pytest.approx(0.3)


def test_eigen_min_rejects_non_hermitian_arrays() -> None:
    with pytest.raises(LinalgError, match="not Hermitian"):
        eigen_min([[0.0, 1.0], [0.0, 0.0]])


def test_default_tolerances() -> None:
    assert DEFAULT_TOLERANCES.algebraic == 1e-12
    assert DEFAULT_TOLERANCES.eigen == 1e-10
    assert DEFAULT_TOLERANCES.table == 0.01


def test_product_amplitudes() -> None:
    psi = PureState((2,), [0.6, 0.8])

    np.testing.assert_allclose(tensor_product(psi, psi).amps, [0.36, 0.48, 0.48, 0.64])


def test_bell_state_marginal_is_maximally_mixed() -> None:
    bell = PureState((2, 2), np.array([1, 0, 0, 1]) / np.sqrt(2))

    np.testing.assert_allclose(partial_trace(outer(bell), keep={1}).mat, np.eye(2) / 2)


def test_outer_of_psi_plus() -> None:
    psi_plus = PureState((2, 2), np.array([0, 1, 1, 0]) / np.sqrt(2))

    expected = np.zeros((4, 4))
    expected[1:3, 1:3] = 0.5

    np.testing.assert_allclose(outer(psi_plus).mat, expected, atol=1e-15)
