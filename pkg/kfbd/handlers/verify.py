"""
Verify Handler

Runs a property suite and writes its JSON report.
Exit code 1 when any property fails.
"""

import argparse

from kfbd.generators.base import get_generator
from kfbd.handlers.commands import emit, resolve_config
from kfbd.services.verification_service import VerificationService
from kfbd.utils.logger import get_logger

logger = get_logger(__name__)


def cmd_verify(args: argparse.Namespace) -> int:
    """Handle `kfbd verify --suite findim|sandwich|estimation-smoke`"""
    config = resolve_config(args)
    generators = [get_generator(config.generator)] if args.generator else None
    dims = [m for group in args.dims for m in group] if args.dims else (2, 5)
    service = VerificationService(
        seed=config.seed,
        trials=config.trials,
        dims=dims,
        generators=generators,
    )
    report = service.run(args.suite)

    for failure in report.failures:
        logger.warning(f"Property failed: {failure}")

    payload = report.to_dict()
    emit(payload, [p.to_dict() for p in report.properties], config)
    return 0 if report.passed else 1
