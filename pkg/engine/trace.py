"""
Run trace: one line per lifecycle event, ownership change and, with tracing
enabled, per routing decision and request outcome.
"""
from typing import NamedTuple


class TraceRecord(NamedTuple):
    time: int
    kind: str
    subject: str
    detail: str = ''

    def render(self):
        if self.detail:
            return f"{self.time} {self.kind} {self.subject} {self.detail}"
        return f"{self.time} {self.kind} {self.subject}"


class TraceLog:
    """
    Append-only list of ``TraceRecord``.

    ``verbose`` adds per-request records (``Route``, ``Done``, ``Fail``);
    lifecycle records are always kept.
    """

    def __init__(self, verbose=False):
        self.verbose = verbose
        self.records = []

    def __len__(self):
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    def record(self, time, kind, subject, detail=''):
        self.records.append(TraceRecord(time, kind, subject, detail))

    def render(self):
        """Deterministic text form, one record per line."""
        if not self.records:
            return ''
        return '\n'.join(record.render() for record in self.records) + '\n'

    @staticmethod
    def parse(text):
        """Rebuild records from rendered text."""
        records = []
        for line in text.splitlines():
            if not line.strip():
                continue
            parts = line.split(' ', 3)
            detail = parts[3] if len(parts) > 3 else ''
            records.append(TraceRecord(int(parts[0]), parts[1], parts[2], detail))
        return records
