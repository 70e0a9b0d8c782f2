"""
Handlers module for the MBSFN area formation simulator.

This module contains the command-line command handlers that turn parsed
arguments into harness runs.
"""

from .commands import build_parser, format_summary, run_command

__all__ = [
    'build_parser',
    'format_summary',
    'run_command',
]
