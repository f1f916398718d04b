from dataclasses import dataclass
from enum import IntEnum
from pathlib import Path
from typing import Optional, Sequence
import argparse
import logging

from .messages import CliMessages
from ..application.services import (
    CohortSummary,
    CountingProcessService,
    ReportFormatterService,
    SimulationService,
    ValidationService,
)
from ..domain.exceptions import BoundViolationError, ExplosionError, ScenarioError
from ..domain.taxonomy import ScenarioCatalog
from ..domain.value_objects import EngineKind, ScenarioConfig
from ..infrastructure.scenario_file import load_scenario, render_scenario
from ..infrastructure.writers import write_atomically, write_dataset, write_summary


logger = logging.getLogger(__name__)


class ExitStatus(IntEnum):
    OK = 0
    CHECKS_FAILED = 1
    CONFIG_ERROR = 2
    EXPLOSION = 3
    IO_ERROR = 4
    INTERNAL_ERROR = 70


@dataclass(frozen=True)
class CliInvocation:
    subcommand: str
    scenario: Optional[Path] = None
    out: Optional[Path] = None
    seed: Optional[int] = None
    engine: Optional[EngineKind] = None
    dt: Optional[float] = None
    emit_frailty: bool = False
    format: str = "text"
    oracle: Optional[Path] = None
    workers: Optional[int] = None


def _seed(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"seed must be an integer, got {text!r}")
    if not 0 <= value < 2 ** 64:
        raise argparse.ArgumentTypeError("seed must fit in 64 unsigned bits")
    return value


def _positive_float(text: str) -> float:
    value = float(text)
    if not value > 0:
        raise argparse.ArgumentTypeError(f"expected a positive number, got {text!r}")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="recsim", description=CliMessages.DESCRIPTION)
    subcommands = parser.add_subparsers(dest="subcommand", required=True)

    def add_run_options(command: argparse.ArgumentParser, out_required: bool):
        command.add_argument("--scenario", type=Path, required=True)
        command.add_argument("--out", type=Path, required=out_required)
        command.add_argument("--seed", type=_seed)
        command.add_argument(
            "--engine",
            type=EngineKind,
            choices=list(EngineKind),
            metavar="{" + ",".join(kind.value for kind in EngineKind) + "}",
        )
        command.add_argument("--dt", type=_positive_float)
        command.add_argument("--workers", type=int)

    simulate = subcommands.add_parser("simulate", help="write a counting-process CSV")
    add_run_options(simulate, out_required=True)
    simulate.add_argument("--emit-frailty", action="store_true")

    validate = subcommands.add_parser("validate", help="run the oracle suite")
    add_run_options(validate, out_required=False)
    validate.add_argument("--format", choices=["text", "summary"], default="text")
    validate.add_argument(
        "--oracle", type=Path, help="scenario whose model the oracles assume"
    )

    scenarios = subcommands.add_parser("scenarios", help="print the scenario taxonomy")
    scenarios.add_argument("--out", type=Path, help="directory for preset scenario files")
    return parser


def parse_invocation(argv: Optional[Sequence[str]] = None) -> CliInvocation:
    args = build_parser().parse_args(argv)
    return CliInvocation(
        subcommand=args.subcommand,
        scenario=getattr(args, "scenario", None),
        out=getattr(args, "out", None),
        seed=getattr(args, "seed", None),
        engine=getattr(args, "engine", None),
        dt=getattr(args, "dt", None),
        emit_frailty=getattr(args, "emit_frailty", False),
        format=getattr(args, "format", "text"),
        oracle=getattr(args, "oracle", None),
        workers=getattr(args, "workers", None),
    )


class CliHandlers:

    def __init__(
        self,
        simulation_service: SimulationService,
        validation_service: ValidationService
    ):
        self.simulation_service = simulation_service
        self.validation_service = validation_service
        self.formatter = ReportFormatterService()
        self.messages = CliMessages()

    async def dispatch(self, invocation: CliInvocation) -> int:
        if invocation.subcommand == "simulate":
            return await self.run_simulate(invocation)
        if invocation.subcommand == "validate":
            return await self.run_validate(invocation)
        return self.run_scenarios(invocation)

    def _load_config(self, invocation: CliInvocation) -> ScenarioConfig:
        config = load_scenario(invocation.scenario)
        try:
            return config.with_overrides(
                seed=invocation.seed, engine=invocation.engine, dt=invocation.dt
            )
        except ValueError as e:
            raise ScenarioError(str(e))

    async def run_simulate(self, invocation: CliInvocation) -> int:
        try:
            config = self._load_config(invocation)
            cohort = await self.simulation_service.simulate_cohort(config)
            records = CountingProcessService.to_counting_process(
                cohort, emit_frailty=invocation.emit_frailty
            )
            write_dataset(
                invocation.out,
                records,
                len(config.covariates),
                emit_frailty=invocation.emit_frailty,
            )
        except ExplosionError as e:
            return self._fail(ExitStatus.EXPLOSION, self.messages.EXPLOSION_ERROR, e)
        except BoundViolationError as e:
            return self._fail(ExitStatus.INTERNAL_ERROR, self.messages.INTERNAL_ERROR, e)
        except ValueError as e:
            return self._fail(ExitStatus.CONFIG_ERROR, self.messages.CONFIG_ERROR, e)
        except OSError as e:
            return self._fail(ExitStatus.IO_ERROR, self.messages.IO_ERROR, e)

        summary = self.formatter.format_cohort_summary(CohortSummary.of(cohort))
        print(self.messages.SIMULATION_SUMMARY.format(summary=summary))
        return ExitStatus.OK

    async def run_validate(self, invocation: CliInvocation) -> int:
        try:
            config = self._load_config(invocation)
            oracle_model = (
                load_scenario(invocation.oracle).model if invocation.oracle else None
            )
            reports = await self.validation_service.run_suite(config, oracle_model)
            if invocation.out is not None:
                write_summary(
                    invocation.out,
                    (self.formatter.format_summary_line(r) for r in reports),
                )
        except ExplosionError as e:
            return self._fail(ExitStatus.EXPLOSION, self.messages.EXPLOSION_ERROR, e)
        except BoundViolationError as e:
            return self._fail(ExitStatus.INTERNAL_ERROR, self.messages.INTERNAL_ERROR, e)
        except ValueError as e:
            return self._fail(ExitStatus.CONFIG_ERROR, self.messages.CONFIG_ERROR, e)
        except OSError as e:
            return self._fail(ExitStatus.IO_ERROR, self.messages.IO_ERROR, e)

        if invocation.format == "summary":
            print("\n".join(self.formatter.format_summary_line(r) for r in reports))
        else:
            print(self.formatter.format_suite(reports))

        failed = [r for r in reports if not r.passed]
        if failed:
            print(self.messages.VALIDATION_FAILED.format(
                failed=len(failed), total=len(reports)
            ))
            return ExitStatus.CHECKS_FAILED
        return ExitStatus.OK

    def run_scenarios(self, invocation: CliInvocation) -> int:
        battery = ScenarioCatalog.get_recommended_battery()
        print(self.messages.TAXONOMY_HEADER)
        print(self.formatter.format_taxonomy())
        print(self.messages.BATTERY_HEADER)
        print(self.formatter.format_battery(battery))

        if invocation.out is not None:
            try:
                invocation.out.mkdir(parents=True, exist_ok=True)
                for name, config in battery.items():
                    write_atomically(
                        invocation.out / f"{name}.scenario", render_scenario(config)
                    )
            except OSError as e:
                return self._fail(ExitStatus.IO_ERROR, self.messages.IO_ERROR, e)
            print(self.messages.BATTERY_WRITTEN.format(
                count=len(battery), directory=invocation.out
            ))
        return ExitStatus.OK

    def _fail(self, status: ExitStatus, template: str, error: Exception) -> int:
        logger.error(f"{status.name}: {error}")
        print(template.format(error=error))
        return status
