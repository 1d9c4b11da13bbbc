"""Process-wide counters used by tests to observe allocation and dispatch.

Counting is cheap (integer increments from Python code only) and always on.
"""

from __future__ import annotations

from dataclasses import dataclass, fields


@dataclass
class Counters:
    # storage objects constructed (each one owns matrix-sized arrays)
    matrix_allocs: int = 0
    fused_trace: int = 0
    fused_diagmat: int = 0
    # size of the dense accumulator used by the most recent sparse product
    last_workspace: int = 0
    # element writes made by the most recent COO<->CSC conversion
    last_conversion_writes: int = 0
    # nodes touched by the most recent RBT -> CSC traversal
    last_traversal_visits: int = 0

    def reset(self) -> None:
        for f in fields(self):
            setattr(self, f.name, 0)


counters = Counters()
