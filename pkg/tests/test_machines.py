import math

import numpy as np
import pytest
from scipy.integrate import trapezoid

from qdeletion import machines
from qdeletion.linalg import fidelity_against, unitarity_deviation
from qdeletion.machines import (
    PB_ALONE_AVERAGE,
    SPECIAL_BLANK,
    SPECIAL_BLANK_FIDELITY,
    BlankState,
    Branch,
    FidelityReport,
    InputQubit,
    Machine,
    MachineError,
    average_fidelity,
    machine_fidelity,
    monte_carlo_average,
    pb_alone_rho2,
    pb_delete,
    pb_rho2_batch,
    pb_f2_closed_form,
    pb_rho2_closed_form,
    pb_with_transformer_fidelity,
    pb_with_transformer_rho2,
    sigma,
    sigma_perp,
    sigma_prime,
)

EQUAL_BLANK = BlankState(1 / math.sqrt(2), 1 / math.sqrt(2))


def random_blank(rng: np.random.Generator, *, real: bool = False) -> BlankState:
    m1 = float(rng.uniform(-1, 1))
    magnitude = math.sqrt(1 - m1 * m1)
    if real:
        return BlankState(m1, magnitude if rng.uniform() < 0.5 else -magnitude)
    return BlankState(m1, magnitude * np.exp(1j * rng.uniform(0, 2 * math.pi)))


def random_input(rng: np.random.Generator) -> InputQubit:
    return InputQubit.from_weight(float(rng.uniform()), float(rng.uniform(0, 2 * math.pi)))


def test_transformer_is_unitary() -> None:
    assert unitarity_deviation(machines.transformer_matrix()) <= 1e-12


def test_transformer_applied_twice() -> None:
    squared = machines.transformer().squared()

    np.testing.assert_allclose(
        squared.mat[:, 0], [0.0, 0.5, -0.5, 1 / math.sqrt(2)], atol=1e-12
    )


def test_transformer_on_register_acts_on_qubits_only() -> None:
    extended = machines.transformer().on_register()

    assert extended.dims == (2, 2, 3)
    np.testing.assert_allclose(
        extended.mat, np.kron(machines.transformer_matrix(), np.eye(3)), atol=1e-15
    )


def test_blank_state_validation() -> None:
    with pytest.raises(MachineError, match="m1\\^2 \\+ \\|m2\\|\\^2"):
        BlankState(0.6, 0.6)
    with pytest.raises(MachineError, match="\\[0, 1\\]"):
        BlankState.from_squares(1.5)


def test_blank_state_branches() -> None:
    assert BlankState.from_squares(0.3).branch is Branch.POSITIVE_PRODUCT
    assert BlankState.from_squares(0.3, negative=True).branch is Branch.NEGATIVE_PRODUCT
    assert BlankState(1.0, 0.0).branch is None
    assert BlankState(0.6, 0.8j).branch is None
    assert BlankState(0.6, -0.8).negated() == BlankState(-0.6, 0.8)


def test_input_qubit_validation() -> None:
    with pytest.raises(MachineError, match="non-negative"):
        InputQubit(-0.6, 0.8)
    with pytest.raises(MachineError, match="alpha\\^2 \\+ \\|beta\\|\\^2"):
        InputQubit(0.6, 0.6)
    assert InputQubit.from_alpha(0.6).overlap_weight == pytest.approx(0.36 * 0.64)


def test_sigma_perp_is_orthogonal() -> None:
    rng = np.random.default_rng(1)
    for _ in range(10):
        blank = random_blank(rng)
        assert abs(np.vdot(sigma(blank).amps, sigma_perp(blank).amps)) <= 1e-12


def test_sigma_prime_for_real_blank() -> None:
    blank = BlankState(0.6, -0.8)

    expected = [(0.6 + 0.8) / math.sqrt(2), (0.6 - 0.8) / math.sqrt(2)]

    np.testing.assert_allclose(sigma_prime(blank).amps, expected, atol=1e-12)


def test_deleter_output_is_normalised() -> None:
    rng = np.random.default_rng(2)
    for _ in range(50):
        assert pb_delete(random_input(rng), random_blank(rng)).norm == pytest.approx(1.0)


def test_deleter_is_isometric_on_its_inputs() -> None:
    columns = [0, 3, 6, 9]
    block = machines.deleter_isometry(BlankState(0.6, 0.8j))[:, columns]

    np.testing.assert_allclose(block.conj().T @ block, np.eye(4), atol=1e-12)


def test_deleter_writes_register_zero_for_input_zero() -> None:
    blank = BlankState(0.6, 0.8j)

    deleted = pb_delete(InputQubit.from_alpha(1.0), blank)

    expected = np.zeros(12, dtype=complex)
    expected[1], expected[4] = 0.6, 0.8j
    np.testing.assert_allclose(deleted.amps, expected, atol=1e-15)


def test_deleter_writes_register_one_for_input_one() -> None:
    blank = BlankState(0.6, 0.8j)

    deleted = pb_delete(InputQubit.from_alpha(0.0), blank)

    expected = np.zeros(12, dtype=complex)
    expected[8], expected[11] = 0.6, 0.8j
    np.testing.assert_allclose(deleted.amps, expected, atol=1e-15)
    assert deleted.amps.reshape(2, 2, 3)[1, :, 2].tolist() == [0.6, 0.8j]


def test_deleter_leaves_mixed_parity_inputs_untouched() -> None:
    isometry = machines.deleter_isometry(BlankState(0.6, -0.8))

    assert isometry[3, 3] == 1.0
    assert isometry[6, 6] == 1.0
    assert np.count_nonzero(isometry[:, [1, 2, 4, 5, 7, 8, 10, 11]]) == 0


def test_simulated_state_matches_closed_form() -> None:
    rng = np.random.default_rng(3)
    for _ in range(50):
        qubit, blank = random_input(rng), random_blank(rng)

        simulated = pb_with_transformer_rho2(qubit, blank)
        closed = pb_rho2_closed_form(qubit, blank)

        np.testing.assert_allclose(simulated.mat, closed.mat, atol=1e-12)


def test_fidelity_polynomial_matches_simulation_for_real_blanks() -> None:
    rng = np.random.default_rng(4)
    for _ in range(50):
        qubit, blank = random_input(rng), random_blank(rng, real=True)

        simulated = fidelity_against(pb_with_transformer_rho2(qubit, blank), sigma(blank))

        assert simulated == pytest.approx(pb_f2_closed_form(qubit, blank), abs=1e-12)


def test_fidelity_polynomial_refuses_complex_blanks() -> None:
    with pytest.raises(MachineError, match="real m2"):
        pb_f2_closed_form(InputQubit.from_alpha(0.5), BlankState(0.6, 0.8j))


@pytest.mark.parametrize("alpha", [0.0, 0.1, 0.5, 0.6, 0.9, 1.0])
def test_special_blank_fidelity_is_input_independent(alpha: float) -> None:
    for phase in (0.0, 1.3, 4.0):
        report = pb_with_transformer_fidelity(InputQubit.from_alpha(alpha, phase), SPECIAL_BLANK)

        assert report.fidelity == pytest.approx(0.5 + 1 / (2 * math.sqrt(2)), abs=1e-12)


def test_trivial_blank_at_alpha_one() -> None:
    report = pb_with_transformer_fidelity(InputQubit.from_alpha(1.0), BlankState(1.0, 0.0))

    assert report.fidelity == pytest.approx(0.5, abs=1e-12)


def test_closed_form_at_input_zero() -> None:
    m1, m2 = 0.6, 0.8j
    rho = pb_with_transformer_rho2(InputQubit.from_alpha(1.0), BlankState(m1, m2))

    expected = [
        [m1 * m1 / 2, m1 * np.conj(m2) / math.sqrt(2)],
        [m1 * m2 / math.sqrt(2), m1 * m1 / 2 + abs(m2) ** 2],
    ]
    np.testing.assert_allclose(rho.mat, expected, atol=1e-12)


def test_closed_form_at_input_one() -> None:
    m1, m2 = 0.6, 0.8j
    rho = pb_with_transformer_rho2(InputQubit.from_alpha(0.0), BlankState(m1, m2))

    expected = [
        [m1 * m1 / 2 + abs(m2) ** 2, m1 * m2 / math.sqrt(2)],
        [m1 * np.conj(m2) / math.sqrt(2), m1 * m1 / 2],
    ]
    np.testing.assert_allclose(rho.mat, expected, atol=1e-12)


def test_blank_one_is_deleted_perfectly_at_input_zero() -> None:
    report = pb_with_transformer_fidelity(InputQubit.from_alpha(1.0), BlankState(0.0, 1.0))

    assert report.fidelity == pytest.approx(1.0, abs=1e-12)


def test_deleter_alone_fidelity() -> None:
    rng = np.random.default_rng(5)
    blank = random_blank(rng)
    for alpha in np.linspace(0, 1, 11):
        qubit = InputQubit.from_alpha(float(alpha))

        fidelity = fidelity_against(pb_alone_rho2(qubit, blank), sigma(blank))

        assert fidelity == pytest.approx(1 - qubit.overlap_weight, abs=1e-12)


def test_average_of_deleter_alone() -> None:
    average = average_fidelity(Machine.PB_ALONE, EQUAL_BLANK, 1001)

    assert average == pytest.approx(PB_ALONE_AVERAGE, abs=1e-6)


def test_average_of_deleter_alone_full_grid() -> None:
    average = average_fidelity(Machine.PB_ALONE, EQUAL_BLANK, 10001)

    assert average == pytest.approx(5 / 6, abs=1e-6)


def test_average_with_two_samples_uses_endpoints() -> None:
    assert average_fidelity(Machine.PB_ALONE, EQUAL_BLANK, 2) == pytest.approx(1.0)


def test_average_with_transformer_beats_deleter_alone() -> None:
    with_transformer = average_fidelity(Machine.PB_WITH_TRANSFORMER, SPECIAL_BLANK, 101)

    assert with_transformer == pytest.approx(SPECIAL_BLANK_FIDELITY, abs=1e-12)
    assert with_transformer > PB_ALONE_AVERAGE


@pytest.mark.parametrize("machine", [Machine.PB_ALONE, Machine.PB_WITH_TRANSFORMER])
def test_batched_states_match_single_runs(machine: Machine) -> None:
    rng = np.random.default_rng(6)
    blank = random_blank(rng)
    inputs = [random_input(rng) for _ in range(20)]
    single = pb_alone_rho2 if machine is Machine.PB_ALONE else pb_with_transformer_rho2

    batch = pb_rho2_batch(
        machine, blank, [q.alpha for q in inputs], [q.beta for q in inputs]
    )

    for qubit, rho in zip(inputs, batch):
        np.testing.assert_allclose(rho, single(qubit, blank).mat, atol=1e-12)


def test_batched_states_follow_patched_transformer(monkeypatch: pytest.MonkeyPatch) -> None:
    monkeypatch.setattr(machines, "transformer_matrix", lambda: np.eye(4, dtype=complex))
    qubit = InputQubit.from_alpha(0.6, 0.4)

    batch = pb_rho2_batch(Machine.PB_WITH_TRANSFORMER, EQUAL_BLANK, [qubit.alpha], [qubit.beta])

    np.testing.assert_allclose(batch[0], pb_alone_rho2(qubit, EQUAL_BLANK).mat, atol=1e-12)


def test_batched_states_need_a_simulated_machine() -> None:
    with pytest.raises(MachineError, match="no per-input"):
        pb_rho2_batch(Machine.TWO_TRANSFORMER_LIMIT, EQUAL_BLANK, [1.0], [0.0])


def test_average_matches_pointwise_trapezoid() -> None:
    blank = BlankState(0.6, -0.8)
    grid = np.linspace(0, 1, 21)
    pointwise = [
        pb_with_transformer_fidelity(InputQubit.from_weight(float(x)), blank).fidelity
        for x in grid
    ]

    average = average_fidelity(Machine.PB_WITH_TRANSFORMER, blank, 21)

    assert average == pytest.approx(float(trapezoid(pointwise, grid)), abs=1e-12)


def test_averages_do_not_run_the_pipeline_per_point(monkeypatch: pytest.MonkeyPatch) -> None:
    def refuse(*args: object) -> None:
        raise AssertionError("per-point pipeline used")

    monkeypatch.setattr(machines, "pb_with_transformer_rho2", refuse)
    monkeypatch.setattr(machines, "pb_alone_rho2", refuse)

    quadrature = average_fidelity(Machine.PB_WITH_TRANSFORMER, SPECIAL_BLANK, 10001)
    sampled = monte_carlo_average(Machine.PB_ALONE, EQUAL_BLANK, 10001, seed=1)

    assert quadrature == pytest.approx(SPECIAL_BLANK_FIDELITY, abs=1e-12)
    assert sampled == pytest.approx(PB_ALONE_AVERAGE, abs=0.01)


def test_monte_carlo_average_is_seeded() -> None:
    first = monte_carlo_average("pb-alone", EQUAL_BLANK, 2000, seed=42)
    second = monte_carlo_average("pb-alone", EQUAL_BLANK, 2000, seed=42)

    assert first == second
    assert first == pytest.approx(5 / 6, abs=0.01)


def test_unknown_machine_is_rejected() -> None:
    with pytest.raises(MachineError, match="Unknown machine 'cloner'"):
        average_fidelity("cloner", EQUAL_BLANK, 11)


def test_limiting_machines_ignore_input() -> None:
    blank = BlankState.from_squares(0.1)
    values = {
        machine_fidelity(Machine.ONE_TRANSFORMER_LIMIT, blank, InputQubit.from_alpha(alpha))
        for alpha in (0.0, 0.5, 1.0)
    }

    assert len(values) == 1
    assert values.pop() == pytest.approx(0.93, abs=0.01)


def test_fidelity_report_input_rules() -> None:
    with pytest.raises(MachineError, match="input independent"):
        FidelityReport(
            Machine.ONE_TRANSFORMER_LIMIT, EQUAL_BLANK, 0.75, input=InputQubit.from_alpha(1.0)
        )
    with pytest.raises(MachineError, match="need the input"):
        FidelityReport(Machine.PB_ALONE, EQUAL_BLANK, 0.9)
    with pytest.raises(MachineError, match="outside"):
        FidelityReport(Machine.ONE_TRANSFORMER_LIMIT, EQUAL_BLANK, 1.5)
