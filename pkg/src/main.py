import asyncio
import logging
import sys
from typing import Optional, Sequence

from .infrastructure.config import get_settings
from .application.services import SimulationService, ValidationService
from .presentation.cli import CliHandlers, ExitStatus, parse_invocation


def setup_logging(log_level: str, log_file: Optional[str] = None):
    # stdout carries the CSV summary line and reports
    handlers = [logging.StreamHandler(sys.stderr)]
    if log_file:
        handlers.append(logging.FileHandler(log_file))
    logging.basicConfig(
        level=getattr(logging, log_level),
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
        handlers=handlers
    )


async def main(argv: Optional[Sequence[str]] = None) -> int:
    settings = get_settings()
    setup_logging(settings.log_level, settings.log_file)

    logger = logging.getLogger(__name__)
    invocation = parse_invocation(argv)
    logger.info(f"Starting recsim {invocation.subcommand} ({settings.environment})")

    simulation_service = SimulationService(
        tolerances=settings.tolerances(),
        workers=invocation.workers or settings.workers
    )
    validation_service = ValidationService(
        simulation_service,
        significance=settings.significance,
        discrete_significance=settings.discrete_significance,
        moment_tolerance=settings.moment_tolerance,
        agreement_sample_size=settings.agreement_sample_size
    )

    handlers = CliHandlers(simulation_service, validation_service)
    return await handlers.dispatch(invocation)


def run():
    try:
        status = asyncio.run(main())
    except KeyboardInterrupt:
        logging.info("Stopped by user")
        status = 130
    except Exception as e:
        logging.error(f"Critical error: {e}")
        status = ExitStatus.INTERNAL_ERROR
    sys.exit(int(status))


if __name__ == "__main__":
    run()
