"""
Command pipelines behind the CLI.
Each run_* method turns a validated RunConfig into a CommandResult.
"""

import atexit
import math
import os
from concurrent.futures import ThreadPoolExecutor
from fractions import Fraction
from typing import Any, Callable, Dict, List, Optional

import numpy as np

from .base.error_handling import ConfigurationError, handle_pipeline_errors
from .bounds import (
    asymptotic_bound,
    birkhoff_threshold,
    expansion_time_m1,
    leakage_sets,
    spectral_gap_bound,
)
from .cocycle import (
    contraction_schedule,
    eta_bracket,
    first_contraction_time,
    lambda2_power_iteration,
    pullback_density,
)
from .cone_metric import ConeParams, cone_contains, random_cone_element
from .configuration import DrivingConfig, RunConfig
from .driving import DrivingStream, describe, make_driving, map_at, step_map
from .interval_maps import PairedTentParams, compose_second_iterate, graph_samples, make_paired_tent
from .logging_config import PipelineLogger, get_logger
from .markov import exact_lambda2, loglog_slope
from .schemas import (
    BOUND_COLUMNS,
    MARKOV_COLUMNS,
    CommandResult,
    EtaCheckSummary,
    LYSweepSummary,
    ScheduleRow,
    SimulationSummary,
    rows_from,
    write_graph,
)
from .step_functions import integral, l1_norm, ly_check, pf_apply, random_step_function, to_csv_rows

logger = get_logger(__name__)
pipeline_logger = PipelineLogger(__name__)

# Random cases per task handed to the pool.
SWEEP_BATCH = 250
FLOAT_CHECK_TOL = 1e-9
MAX_CONTRACTION_STEPS = 64


def _random_epsilon(rng: np.random.Generator, exact: bool, upper: Fraction):
    if exact:
        return Fraction(int(rng.integers(0, 16 * upper.numerator // upper.denominator + 1)), 16)
    return float(rng.uniform(0.0, float(upper)))


def ly_sweep_batch(seed: np.random.SeedSequence, count: int, exact: bool, cone: ConeParams) -> Dict[str, Any]:
    """Check the Lasota-Yorke inequality and cone invariance on ``count`` random cases.

    Half of the cases draw every eps from [0, 1/2] so the sharp constants are
    exercised as well.
    """
    rng = np.random.default_rng(seed)
    tol = 0.0 if exact else FLOAT_CHECK_TOL
    stats = {"violations_general": 0, "sharp_cases": 0, "violations_sharp": 0,
             "max_ratio_general": 0.0, "cone_violations": 0}
    for _ in range(count):
        upper = Fraction(1, 2) if rng.random() < 0.5 else Fraction(1)
        eps = [_random_epsilon(rng, exact, upper) for _ in range(4)]
        second_iterate = compose_second_iterate(
            make_paired_tent(PairedTentParams(eps[0], eps[1])),
            make_paired_tent(PairedTentParams(eps[2], eps[3])),
        )
        f = random_step_function(rng, n_cells=int(rng.integers(2, 9)), exact=exact)
        report = ly_check(second_iterate, f, tol=tol)
        if not report.holds_general:
            stats["violations_general"] += 1
            logger.debug(f"Lasota-Yorke violation for eps={eps}: {report}")
        if report.rhs_sharp is not None:
            stats["sharp_cases"] += 1
            if not report.holds_sharp:
                stats["violations_sharp"] += 1
        if report.rhs_general > 0:
            stats["max_ratio_general"] = max(stats["max_ratio_general"], float(report.lhs / report.rhs_general))

        h = random_cone_element(rng, cone, n_cells=int(rng.integers(2, 9)), exact=exact)
        if not cone_contains(pf_apply(second_iterate, h), cone, scale=cone.nu, tol=tol):
            stats["cone_violations"] += 1
    return stats


class PipelineOrchestrator:
    """Runs one CLI command against its configuration."""

    def __init__(self, config: RunConfig):
        """Initialize the orchestrator with a validated run configuration."""
        self.config = config
        self.settings = config.settings

        # Lazy-initialized inputs (built on first access)
        self._stream: Optional[DrivingStream] = None
        self._cone: Optional[ConeParams] = None

        self._thread_pool: Optional[ThreadPoolExecutor] = None
        self._init_thread_pool()

    def _init_thread_pool(self):
        """Initialize the thread pool used for sweep points."""
        max_workers = min(max((os.cpu_count() or 1) * 2, 4), 10)
        self._thread_pool = ThreadPoolExecutor(max_workers=max_workers)

        # Register cleanup on exit
        atexit.register(self._cleanup_thread_pool)

    def _cleanup_thread_pool(self):
        """Clean up thread pool resources."""
        if self._thread_pool and not self._thread_pool._shutdown:
            self._thread_pool.shutdown(wait=True)

    @property
    def stream(self) -> DrivingStream:
        """Lazy-loaded driving stream (constant eps = 1 when none is configured)."""
        if self._stream is None:
            driving = self.config.driving or DrivingConfig(seed=self.settings.seed)
            self._stream = make_driving(driving, mode=self.settings.mode)
        return self._stream

    @property
    def cone(self) -> ConeParams:
        """Lazy-loaded cone parameters."""
        if self._cone is None:
            self._cone = self.settings.cone_params()
        return self._cone

    def _map(self, fn: Callable, items: List) -> List:
        """Apply ``fn`` over sweep points in parallel, keeping input order."""
        if not items:
            return []
        return list(self._thread_pool.map(fn, items))

    def _metadata(self, **extra) -> Dict[str, Any]:
        metadata: Dict[str, Any] = {
            "command": self.config.command,
            "seed": self.settings.seed,
            "mode": self.settings.mode,
        }
        metadata.update(extra)
        return metadata

    def run(self) -> CommandResult:
        """Dispatch on the configured command."""
        dispatch = {
            "markov": self.run_markov,
            "bound": self.run_bound,
            "simulate": self.run_simulate,
            "ly-sweep": self.run_ly_sweep,
            "eta-check": self.run_eta_check,
            "schedule": self.run_schedule,
        }
        command = self.config.command
        if command not in dispatch:
            raise ConfigurationError(f"unknown command '{command}'")
        pipeline_logger.info(f"running {command}", seed=self.settings.seed, mode=self.settings.mode)
        try:
            return dispatch[command]()
        finally:
            self._cleanup_thread_pool()

    @handle_pipeline_errors(context="Markov analysis")
    def run_markov(self) -> CommandResult:
        lo, hi = self.config.n_range
        models = self._map(exact_lambda2, list(range(lo, hi + 1)))
        asymptotic = [m for m in models if m.asymptotic]
        slope = None
        if len(asymptotic) >= 2:
            slope = loglog_slope([m.kappa for m in asymptotic], [m.lambda2 for m in asymptotic])
        pipeline_logger.info_success(f"Markov data for n = {lo}..{hi}")
        return CommandResult(
            command="markov",
            rows=rows_from(models),
            columns=MARKOV_COLUMNS,
            metadata=self._metadata(
                loglog_slope=slope,
                real_roots={str(m.n): m.real_roots for m in models},
            ),
        )

    @handle_pipeline_errors(context="spectral gap bound")
    def run_bound(self) -> CommandResult:
        stream, cone = self.stream, self.cone
        report = spectral_gap_bound(stream, cone, self.settings.orbit_length)
        rows = [report.csv_row()]
        details = []
        if self.config.kappa:
            threshold = birkhoff_threshold(stream.with_kappa(1), delta=self.settings.delta)
            bounds = self._map(
                lambda k: asymptotic_bound(stream, cone, k, threshold=threshold), list(self.config.kappa)
            )
            for bound in bounds:
                scaled = report.model_copy(update={
                    "kappa": bound.kappa, "gamma": bound.gamma, "C1": bound.C1, "c2": bound.c2,
                })
                rows.append(scaled.csv_row())
                details.append(bound.model_dump())
        return CommandResult(
            command="bound",
            rows=rows,
            columns=BOUND_COLUMNS,
            metadata=self._metadata(
                driving=describe(stream), a=float(cone.a), nu=float(cone.nu), asymptotic=details
            ),
        )

    @handle_pipeline_errors(context="cocycle simulation")
    def run_simulate(self) -> CommandResult:
        stream, settings = self.stream, self.settings
        density = pullback_density(stream, 0, settings.pullback_depth)
        spectrum = lambda2_power_iteration(
            stream,
            0,
            settings.n_steps,
            renorm_every=settings.renorm_every,
            burn_in=settings.burn_in,
            depth=settings.pullback_depth,
        )
        first = first_contraction_time(stream, 0, MAX_CONTRACTION_STEPS, self.cone)
        summary = SimulationSummary(
            driving=describe(stream),
            omega_index=0,
            pullback_depth=settings.pullback_depth,
            phi=density.phi,
            residual=density.residual,
            increment=density.increment,
            lambda1=spectrum.lambda1,
            lambda2=spectrum.lambda2,
            stderr=spectrum.stderr,
            first_contraction_time=first,
        )
        if self.config.emit_graph:
            first_iterate = graph_samples(map_at(stream, 0))
            second_iterate = graph_samples(step_map(stream, 0))
            write_graph(
                [{"x": x, "first_iterate": y1, "second_iterate": y2}
                 for (x, y1), (_, y2) in zip(first_iterate, second_iterate)],
                self.config.emit_graph,
            )
            logger.info(f"map graph written to {self.config.emit_graph}")
        return CommandResult(
            command="simulate",
            rows=[summary.csv_row()],
            metadata=self._metadata(
                lambda2_stderr=spectrum.lambda2_stderr, density=to_csv_rows(density.density)
            ),
        )

    @handle_pipeline_errors(context="Lasota-Yorke sweep")
    def run_ly_sweep(self) -> CommandResult:
        samples = self.config.samples
        exact = self.config.rational or self.settings.mode == "rational"
        cone = self.cone
        counts = [SWEEP_BATCH] * (samples // SWEEP_BATCH)
        if samples % SWEEP_BATCH:
            counts.append(samples % SWEEP_BATCH)
        seeds = np.random.SeedSequence(self.settings.seed).spawn(len(counts))
        batches = self._map(
            lambda job: ly_sweep_batch(job[0], job[1], exact, cone), list(zip(seeds, counts))
        )
        summary = LYSweepSummary(
            samples=samples,
            mode="rational" if exact else "float",
            violations_general=sum(b["violations_general"] for b in batches),
            sharp_cases=sum(b["sharp_cases"] for b in batches),
            violations_sharp=sum(b["violations_sharp"] for b in batches),
            max_ratio_general=max(b["max_ratio_general"] for b in batches),
            cone_violations=sum(b["cone_violations"] for b in batches),
        )
        if summary.violations_general or summary.violations_sharp or summary.cone_violations:
            pipeline_logger.warning_skip(f"Lasota-Yorke sweep found violations: {summary}")
        else:
            pipeline_logger.info_success(f"no violations over {samples} cases")
        return CommandResult(
            command="ly-sweep",
            rows=[summary.csv_row()],
            metadata=self._metadata(a=float(cone.a), nu=float(cone.nu)),
        )

    @handle_pipeline_errors(context="eta check")
    def run_eta_check(self) -> CommandResult:
        stream, cone, settings = self.stream, self.cone, self.settings
        density = pullback_density(stream, 0, settings.pullback_depth).density
        steps = settings.pullback_depth
        rng = np.random.default_rng(settings.seed)
        probes = [
            random_step_function(rng, n_cells=6, low=-0.25, high=1.0) for _ in range(self.config.samples)
        ]
        brackets = self._map(
            lambda x: eta_bracket(stream, 0, x, steps, cone, density=density, check_density=False), probes
        )
        mass = float(integral(density))
        errors = [
            abs(b.eta * mass - float(integral(x))) / float(l1_norm(x)) for b, x in zip(brackets, probes)
        ]
        # against a pullback twice as deep
        normalization = eta_bracket(
            stream, 0, density, steps, cone, depth=2 * settings.pullback_depth, density=density
        ).normalization
        summary = EtaCheckSummary(
            samples=self.config.samples,
            monotone_failures=sum(not b.monotone for b in brackets),
            unclosed=sum(not b.closed for b in brackets),
            normalization=normalization,
            max_relative_error=max(errors) if errors else 0.0,
        )
        return CommandResult(command="eta-check", rows=[summary.csv_row()], metadata=self._metadata())

    @handle_pipeline_errors(context="contraction schedule")
    def run_schedule(self) -> CommandResult:
        config, stream = self.config, self.stream
        k_P, D_P = config.k_p, config.d_p
        report = None
        if k_P is None or D_P is None:
            report = spectral_gap_bound(stream, self.cone, self.settings.orbit_length)
            k_P = k_P if k_P is not None else report.k_P
            D_P = D_P if D_P is not None else report.D_P

        if config.g_every:
            every = config.g_every

            def predicate(b: int) -> bool:
                return (b // 2) % every == 0
        else:
            d = report.d if report is not None else None
            m1 = report.m1 if report is not None else expansion_time_m1(self.cone.a)
            predicate = leakage_sets(stream, d=d, m1=m1).g_p

        schedule = contraction_schedule(stream, 0, config.horizon, predicate, k_P, D_P)
        rows = [
            ScheduleRow(
                n=n,
                l_plus=schedule.l_plus[n],
                j_plus=schedule.j_plus[n],
                l_minus=schedule.l_minus[n],
                j_minus=schedule.j_minus[n],
                predicted_diam=schedule.predicted_diam[n],
            ).csv_row()
            for n in range(config.horizon + 1)
        ]
        final = schedule.predicted_diam[-1]
        logger.info(f"schedule: predicted diameter {final:.6g} after {config.horizon} steps")
        return CommandResult(
            command="schedule",
            rows=rows,
            metadata=self._metadata(k_P=k_P, D_P=D_P, finite=not math.isinf(final)),
        )


def create_orchestrator(config: RunConfig) -> PipelineOrchestrator:
    """Create a new orchestrator for one command."""
    return PipelineOrchestrator(config)
