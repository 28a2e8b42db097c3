"""
Run-wide settings of one simulation.
"""
from dataclasses import dataclass, replace

from django.conf import settings

from lifecycle.models import FailbackMode


@dataclass(frozen=True)
class RunSettings:
    """
    Timers and knobs of a run, all times in microseconds.

    ``until`` of ``None`` means "run to the end of the last workload".
    """

    seed: int = 0
    until: int = None
    takeover_time: int = 2_000_000
    geoplex_detect: int = 1_000_000
    provision_time: int = 1_000_000
    copy_rate: int = 100_000_000
    failback: FailbackMode = FailbackMode.NONE
    window: int = 1_000_000
    trace: bool = False

    @classmethod
    def from_settings(cls, **overrides):
        """Defaults from the ``FARMSIM_*`` settings, then ``overrides``."""
        values = {
            'seed': getattr(settings, 'FARMSIM_DEFAULT_SEED', 0),
            'takeover_time': getattr(settings, 'FARMSIM_TAKEOVER_TIME_US', 2_000_000),
            'geoplex_detect': getattr(settings, 'FARMSIM_GEOPLEX_DETECT_US', 1_000_000),
            'provision_time': getattr(settings, 'FARMSIM_PROVISION_TIME_US', 1_000_000),
            'copy_rate': getattr(settings, 'FARMSIM_COPY_RATE_BPS', 100_000_000),
            'window': getattr(settings, 'FARMSIM_WINDOW_US', 1_000_000),
        }
        values.update({key: value for key, value in overrides.items() if value is not None})
        return cls(**values)

    def with_overrides(self, **overrides):
        return replace(self, **{key: value for key, value in overrides.items() if value is not None})
