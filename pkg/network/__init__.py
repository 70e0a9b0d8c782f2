"""
Network model: deployment geometry, radio link budget and TDD frame timing.
"""
