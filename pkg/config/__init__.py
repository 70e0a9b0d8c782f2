"""
Configuration module for the MBSFN area formation simulator.

This module provides centralized configuration management,
including environment variables, logging setup, and harness defaults.
"""

from .settings import Config

__all__ = ['Config']
