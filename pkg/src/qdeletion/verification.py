"""Deterministic check suite behind ``qdeletion verify``.

Each check measures a deviation and compares it with a tolerance; the suite never stops at
the first failure. Randomised checks draw from a seeded generator so reruns are identical.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Callable, Iterable, Literal

import numpy as np

from . import limiting, machines
from .linalg import (
    DEFAULT_TOLERANCES,
    PureState,
    Tolerances,
    eigen_min,
    fidelity_against,
    hermiticity_deviation,
    outer,
    partial_trace,
    tensor_product,
    unitarity_deviation,
)

logger = logging.getLogger(__name__)

DEFAULT_SEED = 20051121
DEFAULT_SAMPLES = 10001

ToleranceKind = Literal["algebraic", "eigen", "table", "quadrature", "ordering"]


@dataclass(frozen=True, slots=True)
class VerificationOutcome:
    check: str
    deviation: float
    tolerance: float
    anchor: str

    @property
    def passed(self) -> bool:
        # NaN never passes
        return self.deviation <= self.tolerance

    @property
    def status(self) -> str:
        return "pass" if self.passed else "fail"


@dataclass(frozen=True, slots=True)
class SuiteContext:
    tolerances: Tolerances
    samples: int
    seed: int

    def rng(self, offset: int) -> np.random.Generator:
        return np.random.default_rng(self.seed + offset)

    def tolerance(self, kind: ToleranceKind) -> float:
        if kind == "ordering":
            return 0.0
        return float(getattr(self.tolerances, kind))


@dataclass(frozen=True, slots=True)
class _Check:
    name: str
    anchor: str
    kind: ToleranceKind
    measure: Callable[[SuiteContext], float]


_CHECKS: list[_Check] = []


def _check(name: str, anchor: str, kind: ToleranceKind):
    def register(func: Callable[[SuiteContext], float]) -> Callable[[SuiteContext], float]:
        _CHECKS.append(_Check(name, anchor, kind, func))
        return func

    return register


def _random_state(rng: np.random.Generator, dims: tuple[int, ...]) -> PureState:
    size = math.prod(dims)
    amps = rng.normal(size=size) + 1j * rng.normal(size=size)
    return PureState(dims, amps / np.linalg.norm(amps))


def _random_blank(rng: np.random.Generator, *, complex_phase: bool = True) -> machines.BlankState:
    m1 = float(rng.uniform(-1.0, 1.0))
    phase = float(rng.uniform(0.0, 2.0 * math.pi)) if complex_phase else 0.0
    magnitude = math.sqrt(1.0 - m1 * m1)
    if not complex_phase and rng.uniform() < 0.5:
        magnitude = -magnitude
    return machines.BlankState(m1, magnitude * complex(math.cos(phase), math.sin(phase)))


def _random_input(rng: np.random.Generator) -> machines.InputQubit:
    return machines.InputQubit.from_weight(
        float(rng.uniform(0.0, 1.0)), float(rng.uniform(0.0, 2.0 * math.pi))
    )


def _alpha_grid(points: int = 101) -> list[machines.InputQubit]:
    return [machines.InputQubit.from_alpha(float(a)) for a in np.linspace(0.0, 1.0, points)]


@_check("linalg.product_state_trace", "Tr_B(|a><a| x |b><b|) = |a><a|", "algebraic")
def _product_state_trace(ctx: SuiteContext) -> float:
    rng = ctx.rng(1)
    worst = 0.0
    for _ in range(20):
        a, b = _random_state(rng, (2,)), _random_state(rng, (2, 3))
        reduced = partial_trace(outer(tensor_product(a, b)), keep={0})
        worst = max(worst, float(np.max(np.abs(reduced.mat - outer(a).mat))))
    return worst


@_check("linalg.trace_preserved", "trace of every reduced state is 1", "algebraic")
def _trace_preserved(ctx: SuiteContext) -> float:
    rng = ctx.rng(2)
    worst = 0.0
    for _ in range(20):
        rho = outer(_random_state(rng, machines.PIPELINE_DIMS))
        for keep in ({0}, {1}, {2}, {0, 2}, {1, 2}):
            worst = max(worst, abs(partial_trace(rho, keep).trace() - 1.0))
    return worst


@_check("linalg.self_fidelity", "<phi|phi><phi|phi> = 1", "algebraic")
def _self_fidelity(ctx: SuiteContext) -> float:
    rng = ctx.rng(3)
    states = [_random_state(rng, machines.PIPELINE_DIMS) for _ in range(20)]
    return max(abs(fidelity_against(outer(phi), phi) - 1.0) for phi in states)


@_check("linalg.mixture_psd", "convex mixtures of projectors are PSD", "eigen")
def _mixture_psd(ctx: SuiteContext) -> float:
    rng = ctx.rng(4)
    worst = 0.0
    for _ in range(20):
        weights = rng.dirichlet(np.ones(5))
        mixture = sum(
            w * outer(_random_state(rng, machines.PIPELINE_DIMS)).mat for w in weights
        )
        worst = max(worst, -eigen_min(mixture))
    return max(0.0, worst)


@_check("transformer.unitarity", "T^dagger T = I", "algebraic")
def _transformer_unitarity(ctx: SuiteContext) -> float:
    return unitarity_deviation(machines.transformer_matrix())


@_check("transformer.double_application", "T^2|00> = |01>/2 - |10>/2 + |11>/sqrt2", "algebraic")
def _transformer_squared(ctx: SuiteContext) -> float:
    squared = machines.transformer().squared()
    start = PureState.basis((2, 2), (0, 0))
    expected = np.array([0.0, 0.5, -0.5, 1.0 / machines.SQRT2])
    return float(np.max(np.abs(squared.mat @ start.amps - expected)))


@_check("pb_delete.norm_grid", "deleter output has unit norm", "algebraic")
def _deleter_norm(ctx: SuiteContext) -> float:
    rng = ctx.rng(5)
    blanks = [_random_blank(rng) for _ in range(20)]
    inputs = [_random_input(rng) for _ in range(20)]
    return max(
        abs(machines.pb_delete(qubit, blank).norm - 1.0) for blank in blanks for qubit in inputs
    )


@_check("pb_delete.isometry", "deleter is isometric on |ab>|A>", "algebraic")
def _deleter_isometry(ctx: SuiteContext) -> float:
    rng = ctx.rng(6)
    columns = [3 * (2 * a + b) + machines.REGISTER_READY for a in (0, 1) for b in (0, 1)]
    worst = 0.0
    for _ in range(20):
        block = machines.deleter_isometry(_random_blank(rng))[:, columns]
        worst = max(worst, float(np.max(np.abs(block.conj().T @ block - np.eye(4)))))
    return worst


@_check("pb.rho2_oracle", "simulated mode-2 state equals the entrywise closed form", "algebraic")
def _rho2_oracle(ctx: SuiteContext) -> float:
    rng = ctx.rng(7)
    worst = 0.0
    for _ in range(100):
        qubit, blank = _random_input(rng), _random_blank(rng)
        simulated = machines.pb_with_transformer_rho2(qubit, blank)
        closed = machines.pb_rho2_closed_form(qubit, blank)
        worst = max(worst, float(np.max(np.abs(simulated.mat - closed.mat))))
    return worst


@_check("pb.rho2_density", "mode-2 states are Hermitian with unit trace", "algebraic")
def _rho2_density(ctx: SuiteContext) -> float:
    rng = ctx.rng(8)
    worst = 0.0
    for _ in range(50):
        qubit, blank = _random_input(rng), _random_blank(rng)
        for rho in (
            machines.pb_with_transformer_rho2(qubit, blank),
            machines.pb_alone_rho2(qubit, blank),
            machines.pb_rho2_closed_form(qubit, blank),
        ):
            worst = max(worst, hermiticity_deviation(rho.mat), abs(rho.trace() - 1.0))
    return worst


@_check("pb.rho2_psd", "mode-2 states are positive semidefinite", "eigen")
def _rho2_psd(ctx: SuiteContext) -> float:
    rng = ctx.rng(9)
    worst = -eigen_min(limiting.rho2_two_transformer_limit())
    for _ in range(50):
        qubit, blank = _random_input(rng), _random_blank(rng)
        worst = max(
            worst,
            -eigen_min(machines.pb_with_transformer_rho2(qubit, blank)),
            -eigen_min(machines.pb_alone_rho2(qubit, blank)),
        )
    return max(0.0, worst)


@_check("pb.f2_polynomial", "simulated F2 equals the real-amplitude polynomial", "algebraic")
def _f2_polynomial(ctx: SuiteContext) -> float:
    rng = ctx.rng(10)
    worst = 0.0
    for _ in range(50):
        qubit, blank = _random_input(rng), _random_blank(rng, complex_phase=False)
        simulated = fidelity_against(
            machines.pb_with_transformer_rho2(qubit, blank), machines.sigma(blank)
        )
        worst = max(worst, abs(simulated - machines.pb_f2_closed_form(qubit, blank)))
    return worst


@_check("pb.special_blank_alpha", "F2 = 1/2 + 1/(2 sqrt2) for every alpha", "algebraic")
def _special_blank_alpha(ctx: SuiteContext) -> float:
    return max(
        abs(
            machines.pb_with_transformer_fidelity(qubit, machines.SPECIAL_BLANK).fidelity
            - machines.SPECIAL_BLANK_FIDELITY
        )
        for qubit in _alpha_grid()
    )


@_check("pb.special_blank_phase", "F2 at the special blank ignores the phase of beta", "algebraic")
def _special_blank_phase(ctx: SuiteContext) -> float:
    rng = ctx.rng(11)
    return max(
        abs(
            machines.pb_with_transformer_fidelity(
                _random_input(rng), machines.SPECIAL_BLANK
            ).fidelity
            - machines.SPECIAL_BLANK_FIDELITY
        )
        for _ in range(20)
    )


@_check("pb_alone.identity", "deleter-only fidelity is 1 - alpha^2|beta|^2", "algebraic")
def _pb_alone_identity(ctx: SuiteContext) -> float:
    rng = ctx.rng(12)
    blanks = [_random_blank(rng, complex_phase=False) for _ in range(5)]
    worst = 0.0
    for blank in blanks:
        for qubit in _alpha_grid():
            rho = machines.pb_alone_rho2(qubit, blank)
            simulated = fidelity_against(rho, machines.sigma(blank))
            worst = max(worst, abs(simulated - (1.0 - qubit.overlap_weight)))
    return worst


@_check("average.pb_alone", "deleter-only average fidelity 5/6 (printed 0.83)", "quadrature")
def _average_pb_alone(ctx: SuiteContext) -> float:
    blank = machines.BlankState(1.0 / machines.SQRT2, 1.0 / machines.SQRT2)
    average = machines.average_fidelity(machines.Machine.PB_ALONE, blank, ctx.samples)
    return abs(average - machines.PB_ALONE_AVERAGE)


@_check(
    "average.pb_with_transformer", "average F2 at the special blank (printed 0.85)", "algebraic"
)
def _average_pb_with_transformer(ctx: SuiteContext) -> float:
    average = machines.average_fidelity(
        machines.Machine.PB_WITH_TRANSFORMER, machines.SPECIAL_BLANK, 101
    )
    return abs(average - machines.SPECIAL_BLANK_FIDELITY)


@_check("comparison.transformer_gain", "adding the transformer raises the average", "ordering")
def _transformer_gain(ctx: SuiteContext) -> float:
    blank = machines.SPECIAL_BLANK
    alone = machines.average_fidelity(machines.Machine.PB_ALONE, blank, 101)
    with_t = machines.average_fidelity(machines.Machine.PB_WITH_TRANSFORMER, blank, 101)
    return max(0.0, alone - with_t)


@_check("limiting.rho2_eigen", "min eigenvalue of the two-transformer state", "eigen")
def _two_transformer_eigen(ctx: SuiteContext) -> float:
    expected = (1.0 - math.sqrt(1.0 / 16.0 + (1.0 / machines.SQRT2 - 1.0) ** 2 / 4.0)) / 2.0
    return abs(eigen_min(limiting.rho2_two_transformer_limit()) - expected)


@_check("limiting.matrix_element", "two-transformer polynomial = <S'|rho'|S'>", "algebraic")
def _two_transformer_matrix_element(ctx: SuiteContext) -> float:
    rng = ctx.rng(13)
    rho = limiting.rho2_two_transformer_limit()
    worst = 0.0
    for index in range(100):
        blank = _random_blank(rng, complex_phase=index % 2 == 0)
        direct = fidelity_against(rho, machines.sigma_prime(blank))
        worst = max(worst, abs(limiting.f_two_transformer(blank) - direct))
    return worst


@_check("limiting.branch_symmetry", "(m1, m2) -> (-m1, -m2) leaves both fidelities", "algebraic")
def _branch_symmetry(ctx: SuiteContext) -> float:
    rng = ctx.rng(14)
    worst = 0.0
    for _ in range(50):
        blank = _random_blank(rng, complex_phase=False)
        flipped = blank.negated()
        worst = max(
            worst,
            abs(limiting.f1_from_blank(blank) - limiting.f1_from_blank(flipped)),
            abs(limiting.f_two_transformer(blank) - limiting.f_two_transformer(flipped)),
        )
    return worst


@_check("headline.f1_equal_weight", "F1 = 3/4 at m1 = m2 = 1/sqrt2", "algebraic")
def _f1_equal_weight(ctx: SuiteContext) -> float:
    blank = machines.BlankState(1.0 / machines.SQRT2, 1.0 / machines.SQRT2)
    return abs(limiting.f1_from_blank(blank) - 0.75)


@_check("headline.f2_special_blank", "F2 = 1/2 + 1/(2 sqrt2) at m1 = -m2 = 1/sqrt2", "algebraic")
def _f2_special_blank(ctx: SuiteContext) -> float:
    qubit = machines.InputQubit(0.6, 0.8)
    report = machines.pb_with_transformer_fidelity(qubit, machines.SPECIAL_BLANK)
    return abs(report.fidelity - (0.5 + 1.0 / (2.0 * math.sqrt(2.0))))


def _table_check(kind: limiting.TableKind, m1_sq: float, published: tuple[float, ...]) -> _Check:
    def measure(ctx: SuiteContext) -> float:
        (row,) = limiting.table_rows(kind, [m1_sq])
        return limiting.reference_deviation(row, published)

    printed = " or ".join(f"{value:.2f}" for value in published)
    return _Check(f"{kind.value}.m1_sq={m1_sq:.1f}", f"printed {printed}", "table", measure)


for _m1_sq, _published in limiting.REFERENCE_TABLE1.items():
    _CHECKS.append(_table_check(limiting.TableKind.ONE_TRANSFORMER, _m1_sq, _published))
for _m1_sq, _published in limiting.REFERENCE_TABLE2.items():
    _CHECKS.append(_table_check(limiting.TableKind.TWO_TRANSFORMER, _m1_sq, _published))


def _split_rows(rows: Iterable[limiting.TableRow]) -> list[limiting.TableRow]:
    return [row for row in rows if not row.fidelity.degenerate]


@_check("table1.branch_order", "one transformer favours m1*m2 > 0", "ordering")
def _table1_branch_order(ctx: SuiteContext) -> float:
    rows = _split_rows(limiting.table1())
    return max(0.0, *(row.fidelity.negative_branch - row.fidelity.positive_branch for row in rows))


@_check("table2.branch_reversal", "two transformers favour m1*m2 < 0", "ordering")
def _table2_branch_reversal(ctx: SuiteContext) -> float:
    rows = _split_rows(limiting.table2())
    return max(0.0, *(row.fidelity.positive_branch - row.fidelity.negative_branch for row in rows))


@_check("comparison.transformer_count", "one T wins for m1*m2 > 0, two T win for < 0", "ordering")
def _transformer_count(ctx: SuiteContext) -> float:
    worst = 0.0
    for one, two in zip(_split_rows(limiting.table1()), _split_rows(limiting.table2())):
        worst = max(
            worst,
            two.fidelity.positive_branch - one.fidelity.positive_branch,
            one.fidelity.negative_branch - two.fidelity.negative_branch,
        )
    return worst


@_check("conclusion.f1_maximum", "highest F1 0.93 at m1^2 = 0.1, m1*m2 > 0", "table")
def _conclusion_f1_maximum(ctx: SuiteContext) -> float:
    rows = limiting.table1()
    best = max(rows, key=lambda row: row.fidelity.positive_branch)
    if not math.isclose(best.m1_sq, 0.1):
        return math.inf
    return abs(best.fidelity.positive_branch - 0.93)


@_check("conclusion.f1_negative", "F1 0.63 at m1 = 0.31, m2 = -0.94", "table")
def _conclusion_f1_negative(ctx: SuiteContext) -> float:
    blank = machines.BlankState.from_squares(0.1, negative=True)
    return abs(limiting.f1_from_blank(blank) - 0.63)


@_check("conclusion.two_transformer_single", "two-transformer F 0.57 at m1 = 0, m2 = 1", "table")
def _conclusion_two_single(ctx: SuiteContext) -> float:
    return abs(limiting.f_two_transformer(machines.BlankState(0.0, 1.0)) - 0.57)


@_check(
    "conclusion.two_transformer_band",
    "two-transformer F 0.63 at (0.31, -0.94) and (0.63, -0.77)",
    "table",
)
def _conclusion_two_band(ctx: SuiteContext) -> float:
    values = [
        limiting.f_two_transformer(machines.BlankState.from_squares(m1_sq, negative=True))
        for m1_sq in (0.1, 0.4)
    ]
    return max(abs(value - 0.63) for value in values)


def check_names() -> list[str]:
    return [check.name for check in _CHECKS]


def run_verification(
    tolerances: Tolerances = DEFAULT_TOLERANCES,
    *,
    samples: int = DEFAULT_SAMPLES,
    seed: int = DEFAULT_SEED,
) -> list[VerificationOutcome]:
    """Run every registered check in a fixed order."""

    ctx = SuiteContext(tolerances=tolerances, samples=samples, seed=seed)
    outcomes: list[VerificationOutcome] = []
    for check in _CHECKS:
        try:
            deviation = float(check.measure(ctx))
        except Exception as exc:  # a broken machine must not hide later checks
            logger.warning("check %s raised %s: %s", check.name, type(exc).__name__, exc)
            deviation = math.inf
        outcome = VerificationOutcome(
            check.name, deviation, ctx.tolerance(check.kind), check.anchor
        )
        logger.debug("%s %s deviation=%r", outcome.check, outcome.status, deviation)
        outcomes.append(outcome)
    return outcomes


def all_passed(outcomes: Iterable[VerificationOutcome]) -> bool:
    return all(outcome.passed for outcome in outcomes)
