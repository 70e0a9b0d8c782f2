"""
Content delivery simulation over formation configurations.
"""

from .delivery import DeliveryState, MetricsReport, RelayBuffer, simulate_delivery, used_rb_for_d2d

__all__ = ['DeliveryState', 'MetricsReport', 'RelayBuffer', 'simulate_delivery', 'used_rb_for_d2d']
