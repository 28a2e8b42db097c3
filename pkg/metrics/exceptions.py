from core.exceptions import MetricsError


class NoTraffic(MetricsError):
    """The scope was never presented a request."""
    pass


class EmptySample(MetricsError):
    """A percentile was asked of an empty latency sample."""
    pass


class NoWrites(MetricsError):
    """The service received no client writes."""
    pass
