"""
Error notification utility for failed simulator runs.

Formats a failure the same way for every stage (topology, formation,
delivery, output) and sends it to the log and to stderr.
"""

import logging
import sys
from typing import Optional, TextIO

logger = logging.getLogger(__name__)


def notify_error(
    stage: str,
    request_info: str,
    error_code: Optional[str],
    error_message: str,
    stream: Optional[TextIO] = None,
) -> str:
    """
    Report a failure to the operator.

    Args:
        stage: Name of the failing stage (e.g. "formation", "report")
        request_info: What was being processed (scenario point, path, ...)
        error_code: Short machine readable code if available
        error_message: Error message

    Returns:
        The formatted message
    """
    message = (
        f"Simulation error\n"
        f"  Stage: {stage}\n"
        f"  Request: {request_info}\n"
    )
    if error_code:
        message += f"  Error Code: {error_code}\n"
    message += f"  Error: {error_message}"

    logger.error(f"{stage} failed for {request_info}: {error_message[:200]}")
    try:
        print(message, file=stream or sys.stderr)
    except Exception as e:
        # Reporting must never mask the original failure.
        logger.error(f"Failed to write error report: {e}", exc_info=True)
    return message
