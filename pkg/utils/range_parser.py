"""
Parsing utilities for sweep ranges and value lists.

Command-line flags and config files describe sweeps either as an inclusive
range with a step (``200..400:50``) or as a comma separated list (``0,1,5``).
"""

import re
import logging
from typing import List, Sequence, Union

from utils.errors import InvalidArgumentError

logger = logging.getLogger(__name__)

_RANGE_PATTERN = re.compile(r'^\s*(-?\d+)\s*\.\.\s*(-?\d+)\s*(?::\s*(\d+))?\s*$')


def parse_int_range(text: str) -> List[int]:
    """
    Parse an inclusive integer range or list.

    Args:
        text: ``A..B:step``, ``A..B`` (step 1), ``A,B,C`` or a single integer

    Returns:
        Ascending list of integers

    Raises:
        InvalidArgumentError: If the text is not a range or list, or is empty

    Examples:
        >>> parse_int_range("200..400:50")
        [200, 250, 300, 350, 400]
        >>> parse_int_range("10..14:2")
        [10, 12, 14]
        >>> parse_int_range("0,1,5")
        [0, 1, 5]
    """
    text = str(text).strip()
    match = _RANGE_PATTERN.match(text)
    if match:
        start, stop = int(match.group(1)), int(match.group(2))
        step = int(match.group(3)) if match.group(3) else 1
        if step <= 0 or stop < start:
            raise InvalidArgumentError(f"Empty or descending range: {text}")
        return list(range(start, stop + 1, step))
    return parse_int_list(text)


def parse_int_list(text: Union[str, Sequence[int]]) -> List[int]:
    """
    Parse a comma separated list of integers (a sequence is accepted as-is).

    Examples:
        >>> parse_int_list("5,10,50")
        [5, 10, 50]
        >>> parse_int_list([3, 1])
        [1, 3]
    """
    if not isinstance(text, str):
        values = [int(v) for v in text]
    else:
        parts = [p.strip() for p in text.split(',') if p.strip()]
        try:
            values = [int(p) for p in parts]
        except ValueError as e:
            raise InvalidArgumentError(f"Invalid integer list: {text}") from e
    if not values:
        raise InvalidArgumentError(f"Empty value list: {text!r}")
    return sorted(set(values))


def parse_name_list(text: Union[str, Sequence[str]], allowed: Sequence[str]) -> List[str]:
    """
    Parse a comma separated list of names, keeping the order given.

    Examples:
        >>> parse_name_list("d2d-maf,scf", ["d2d-maf", "scf"])
        ['d2d-maf', 'scf']
    """
    if isinstance(text, str):
        names = [p.strip().lower() for p in text.split(',') if p.strip()]
    else:
        names = [str(p).strip().lower() for p in text]
    unknown = [n for n in names if n not in allowed]
    if unknown:
        raise InvalidArgumentError(f"Unknown name(s) {unknown}; expected any of {list(allowed)}")
    if not names:
        raise InvalidArgumentError("Empty name list")
    result: List[str] = []
    for name in names:
        if name not in result:
            result.append(name)
    return result
