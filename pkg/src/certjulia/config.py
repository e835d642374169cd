"""Runtime knobs: precision schedule, budgets, period caps."""
from __future__ import annotations

import os
from dataclasses import dataclass, field

DEFAULT_MAX_BITS = 1 << 16


def max_bits() -> int:
    """Hard cap on working precision, overridable via JULIA_MAX_BITS."""
    raw = os.environ.get("JULIA_MAX_BITS")
    if raw is None:
        return DEFAULT_MAX_BITS
    try:
        value = int(raw)
    except ValueError as exc:
        raise ValueError(f"JULIA_MAX_BITS must be an integer, got {raw!r}") from exc
    if value < 16:
        raise ValueError("JULIA_MAX_BITS must be at least 16")
    return value


def precision_schedule(start: int):
    """Yield working precisions start, 2*start, ... up to the bit cap."""
    cap = max_bits()
    bits = max(start, 16)
    while True:
        yield min(bits, cap)
        if bits >= cap:
            return
        bits *= 2


@dataclass
class EngineConfig:
    """Budgets and caps for the semi-decision machinery."""

    cycle_steps: int = 10**6          # budget per round-robin cycle
    global_steps: int = 10**9         # total cap before Inconclusive
    period_cap: int = 8               # enumeration cap for bare streams
    pipeline_period_cap: int = 12     # cover pipeline may enumerate deeper
    family_period_cap: int = 10       # stages for the parameter-family scan
    ext_extra_depth: int = 2          # kept-set may refine below pitch 2^-(n+4)
    stall_rounds: int = 3             # rounds with no progress => machine exhausted
    jobs: int = 1                     # worker threads for grid sweeps

    def budgets(self):
        budget = 1024
        total = 0
        while total < self.global_steps:
            yield min(budget, self.global_steps - total)
            total += budget
            budget *= 2

    def replace(self, **kw) -> "EngineConfig":
        data = self.__dict__.copy()
        data.update(kw)
        return EngineConfig(**data)


DEFAULT_CONFIG = EngineConfig()
