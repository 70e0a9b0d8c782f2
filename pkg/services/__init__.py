"""
Formation services: RB allocation, ADR accounting, constraint checks and the
D2D-MAF / SCF formation loop.
"""

from .allocation import allocate_downlink, allocate_uplink, compute_adr
from .formation import build_basic_configuration, d2d_maf, run_formation, scf
from .validation import validate

__all__ = [
    'allocate_downlink',
    'allocate_uplink',
    'build_basic_configuration',
    'compute_adr',
    'd2d_maf',
    'run_formation',
    'scf',
    'validate',
]
