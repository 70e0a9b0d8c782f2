"""
Utilities module for the MBSFN area formation simulator.

This module contains common helpers used throughout the application,
including range parsing, the exception hierarchy and failure reporting.
"""

from .range_parser import parse_int_range, parse_int_list, parse_name_list
from .error_notifier import notify_error

__all__ = ['parse_int_range', 'parse_int_list', 'parse_name_list', 'notify_error']
