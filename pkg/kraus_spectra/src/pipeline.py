"""Step runner that turns one channel fixture into an analysis report."""

from typing import Callable, Dict, List, Optional

import numpy as np
import structlog

from .. import __version__
from .algebra import block_decompose, generate_basis, is_star_closed
from .channel import (
    KrausChannel,
    full_rank_fixed_point,
    spectrum,
    validate,
)
from .criteria import (
    DISCRIMINANT_TOL,
    INVERTIBILITY_CUTOFF,
    PeripheralPrediction,
    generalized_shemesh,
    predict_peripheral,
    primitivity,
    shemesh,
)
from .dynamics import detect_cycle, iterate
from .exceptions import (
    ChannelAnalysisError,
    NumericalFailure,
    PreconditionError,
    StructureError,
)
from .families import random_density_matrix
from .schemas import (
    AlgebraSection,
    AnalysisReport,
    BlocksSection,
    CertificateModel,
    ChannelFixture,
    ConsistencySection,
    DynamicsSection,
    FixedPointSection,
    PredictionSection,
    PrimitivitySection,
    ShemeshSection,
    SpectrumSection,
    ValidationSection,
    plain,
    to_pair_matrix,
    to_pairs,
)
from .settings import AnalysisSettings

COMMANDS = (
    "validate",
    "spectrum",
    "algebra",
    "shemesh",
    "primitivity",
    "predict",
    "simulate",
    "report",
)


def _fix_phase(v: np.ndarray) -> np.ndarray:
    pivot = v[int(np.argmax(np.abs(v)))]
    return v * (abs(pivot) / pivot) if abs(pivot) > 0 else v


class AnalysisPipeline:
    """Runs the analysis steps for one fixture and assembles the report.

    Each step fills one report section and is recorded in
    ``steps_completed``; errors are logged with the step name and re-raised.
    """

    def __init__(
        self,
        settings: Optional[AnalysisSettings] = None,
        include_identity: bool = True,
    ):
        self.settings = settings or AnalysisSettings()
        self.include_identity = include_identity
        self.logger = structlog.get_logger(__name__)

    def tolerances(self) -> Dict[str, float]:
        tols = self.settings.tolerances()
        tols["discriminant_tol"] = DISCRIMINANT_TOL
        tols["invertibility_cutoff"] = INVERTIBILITY_CUTOFF
        return tols

    def _run_step(
        self, name: str, report: AnalysisReport, step: Callable[[], None]
    ) -> None:
        self.logger.info("Starting step", step=name, fixture=report.fixture)
        try:
            step()
        except ChannelAnalysisError as e:
            self.logger.error(
                "Step failed",
                step=name,
                fixture=report.fixture,
                error_code=e.error_code.value,
                message=e.message,
            )
            raise
        report.steps_completed.append(name)

    def validate_channel(self, ch: KrausChannel) -> ValidationSection:
        flags = validate(ch)
        return ValidationSection(
            trace_preserving=flags.trace_preserving,
            unital=flags.unital,
            tp_residual=flags.tp_residual,
            unital_residual=flags.unital_residual,
        )

    def compute_spectrum(self, ch: KrausChannel) -> SpectrumSection:
        result = spectrum(ch, self.settings.peripheral_eps)
        return SpectrumSection(
            eigenvalues=to_pairs(result.eigenvalues),
            peripheral=to_pairs(result.peripheral),
            spectral_radius=result.spectral_radius,
            epsilon=result.epsilon,
        )

    def compute_fixed_point(self, ch: KrausChannel) -> FixedPointSection:
        result = full_rank_fixed_point(
            ch,
            tol=self.settings.fixed_point_tol,
            positivity_cutoff=self.settings.positivity_cutoff,
            max_doublings=self.settings.max_doublings,
        )
        return FixedPointSection(
            full_rank=result.full_rank,
            min_eigenvalue=result.min_eigenvalue,
            residual=result.residual,
            state=to_pair_matrix(result.state),
            notes=result.notes,
        )

    def analyze_algebra(self, ch: KrausChannel) -> AlgebraSection:
        wb = generate_basis(
            ch.kraus,
            include_identity=self.include_identity,
            tol=self.settings.rank_tol,
        )
        closure = is_star_closed(wb, self.settings.closure_tol)
        return AlgebraSection(
            dimension=wb.dimension,
            include_identity=wb.include_identity,
            star_closed=closure.closed,
            closure_residual=closure.max_residual,
            labels=wb.labels,
            level_dims=wb.level_dims,
            adjoint_coefficients=[
                to_pairs(c) for c in closure.adjoint_coefficients
            ],
        )

    def decompose_blocks(self, ch: KrausChannel) -> BlocksSection:
        try:
            blocks = block_decompose(
                ch.kraus,
                tol=self.settings.rank_tol,
                closure_tol=self.settings.closure_tol,
                leakage_tol=self.settings.leakage_tol,
                seed=self.settings.seed,
            )
        except (StructureError, NumericalFailure) as e:
            # The full report documents the failure instead of aborting.
            self.logger.warning(
                "Block decomposition unavailable",
                error_code=e.error_code.value,
            )
            return BlocksSection(error=e.to_dict())
        return BlocksSection(
            dims=blocks.block_dims,
            leakage=blocks.leakage,
            irreducible=blocks.block_irreducible,
        )

    def find_common_eigenvectors(self, ch: KrausChannel) -> ShemeshSection:
        kraus = ch.kraus
        tol = self.settings.rank_tol
        if len(kraus) <= 2:
            a, b = kraus[0], kraus[-1]
            space = shemesh(a, b, tol)
            method, operators = "shemesh", [1, len(kraus)]
        else:
            space = None
            for idx in reversed(range(len(kraus))):
                others = [m for j, m in enumerate(kraus) if j != idx]
                try:
                    space = generalized_shemesh(h=kraus[idx], others=others,
                                                tol=tol)
                except PreconditionError:
                    continue
                method, operators = "generalized_shemesh", [idx + 1]
                break
            if space is None:
                return ShemeshSection(
                    method="unavailable",
                    note="no Kraus operator has pairwise distinct eigenvalues",
                )
        return ShemeshSection(
            method=method,
            operators=operators,
            dimension=space.dim,
            basis=[to_pairs(_fix_phase(v)) for v in space.as_list()],
        )

    def certify_primitivity(self, ch: KrausChannel) -> PrimitivitySection:
        result = primitivity(ch, self.settings.m_max, self.settings.rank_tol)
        return PrimitivitySection(
            certified=result.certified,
            witness_m=result.witness_m,
            span_dims=result.span_dims,
            m_max=result.m_max,
        )

    def predict(self, ch: KrausChannel) -> PeripheralPrediction:
        return predict_peripheral(
            ch,
            seed=self.settings.seed,
            rank_tol=self.settings.rank_tol,
            closure_tol=self.settings.closure_tol,
            leakage_tol=self.settings.leakage_tol,
            trials=self.settings.invertibility_trials,
            m_max=self.settings.m_max,
        )

    @staticmethod
    def prediction_section(pred: PeripheralPrediction) -> PredictionSection:
        return PredictionSection(
            structure=pred.structure.value,
            block_dims=pred.block_dims,
            order_bounds=pred.order_bounds,
            period_bound=pred.period_bound,
            longest_period=pred.longest_period,
            global_orders=pred.global_orders,
            certificates=[
                CertificateModel(name=c.name, detail=plain(c.detail))
                for c in pred.certificates
            ],
        )

    def simulate(
        self, ch: KrausChannel, steps: Optional[int] = None
    ) -> DynamicsSection:
        cycle = detect_cycle(
            ch, self.settings.cycle_tol, self.settings.peripheral_eps
        )
        section = DynamicsSection(
            period=cycle.period,
            angles=[f"{a.numerator}/{a.denominator}" for a in cycle.angles],
            non_cyclic=to_pairs(cycle.non_cyclic),
        )
        if steps is None:
            return section
        rng = np.random.default_rng(self.settings.seed)
        trajectory = iterate(ch, random_density_matrix(ch.dim, rng), steps)
        lag_distances = {}
        for lag in (1, 2):
            if steps >= lag:
                lag_distances[str(lag)] = trajectory.distances(lag)[-1]
        section.steps = steps
        section.lag_distances = lag_distances
        section.trace_drift = float(
            np.max(np.abs(trajectory.traces() - trajectory.traces()[0]))
        )
        return section

    def run(
        self,
        command: str,
        fixture: ChannelFixture,
        steps: Optional[int] = None,
    ) -> AnalysisReport:
        """Run one command on a fixture.

        Args:
            command: One of COMMANDS; ``report`` runs every step
            fixture: Parsed channel fixture
            steps: Trajectory length for ``simulate`` and ``report``

        Returns:
            AnalysisReport with the sections the command produces
        """
        if command not in COMMANDS:
            raise PreconditionError(
                f"Unknown command: {command}",
                hypothesis=f"command in {list(COMMANDS)}",
            )
        ch = fixture.to_channel()
        report = AnalysisReport(
            fixture=fixture.name,
            command=command,
            tool_version=__version__,
            seed=self.settings.seed,
            tolerances=self.tolerances(),
        )
        steps = self.settings.simulate_steps if steps is None else steps
        plan = self._plan(command)
        prediction: List[PeripheralPrediction] = []

        def set_section(name: str, fn: Callable[[], object]) -> Callable[[], None]:
            return lambda: setattr(report, name, fn())

        actions: Dict[str, Callable[[], None]] = {
            "validate": set_section("validation",
                                    lambda: self.validate_channel(ch)),
            "spectrum": set_section("spectrum",
                                    lambda: self.compute_spectrum(ch)),
            "fixed_point": set_section("fixed_point",
                                       lambda: self.compute_fixed_point(ch)),
            "algebra": set_section("algebra",
                                   lambda: self.analyze_algebra(ch)),
            "blocks": set_section("blocks",
                                  lambda: self.decompose_blocks(ch)),
            "shemesh": set_section("shemesh",
                                   lambda: self.find_common_eigenvectors(ch)),
            "primitivity": set_section("primitivity",
                                       lambda: self.certify_primitivity(ch)),
            "predict": lambda: prediction.append(self.predict(ch)),
            "simulate": set_section("dynamics",
                                    lambda: self.simulate(ch, steps)),
        }

        tp_or_unital = validate(ch).tp_or_unital
        for name in plan:
            if (
                command == "report"
                and name in ("fixed_point", "predict", "simulate")
                and not tp_or_unital
            ):
                self.logger.info("Skipping step", step=name,
                                 reason="neither trace preserving nor unital")
                continue
            self._run_step(name, report, actions[name])

        if prediction:
            report.prediction = self.prediction_section(prediction[0])
        if prediction and report.spectrum is not None:
            report.consistency = self._consistency(report, prediction[0])
        return report

    @staticmethod
    def _plan(command: str) -> List[str]:
        if command == "report":
            return [
                "validate",
                "spectrum",
                "fixed_point",
                "algebra",
                "blocks",
                "shemesh",
                "primitivity",
                "predict",
                "simulate",
            ]
        if command == "spectrum":
            return ["validate", "spectrum"]
        if command == "predict":
            return ["validate", "predict"]
        return [command]

    def _consistency(
        self, report: AnalysisReport, pred: PeripheralPrediction
    ) -> ConsistencySection:
        tol = self.settings.consistency_tol
        allowed = all(
            pred.is_allowed(complex(re, im), tol)
            for re, im in report.spectrum.peripheral
        )
        divides = None
        if (
            report.dynamics is not None
            and report.dynamics.period is not None
            and pred.period_bound is not None
        ):
            divides = pred.period_bound % report.dynamics.period == 0
        return ConsistencySection(
            peripheral_allowed=allowed,
            period_divides_bound=divides,
            tolerance=tol,
        )
