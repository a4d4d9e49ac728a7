from __future__ import annotations

from dataclasses import dataclass, field


@dataclass
class CheckReport:
    """Outcome of one identity or bound check.

    ``values`` holds both sides of every asserted relation so a failing
    report can be read without rerunning anything.
    """

    name: str
    passed: bool
    values: dict = field(default_factory=dict)
    failures: list = field(default_factory=list)

    def __bool__(self):
        return self.passed

    def fail(self, message):
        self.passed = False
        self.failures.append(message)

    def to_dict(self):
        return {
            "name": self.name,
            "passed": self.passed,
            "values": {k: _plain(v) for k, v in self.values.items()},
            "failures": list(self.failures),
        }


def _plain(v):
    if isinstance(v, complex):
        return [v.real, v.imag]
    if hasattr(v, "item") and getattr(v, "ndim", 1) == 0:
        return _plain(v.item())
    if isinstance(v, (list, tuple)):
        return [_plain(x) for x in v]
    return v
