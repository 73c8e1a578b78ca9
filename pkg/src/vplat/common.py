"""Shared time base, power-state vocabulary and sample types.

Simulated time is an integer count of nanoseconds since t=0. An unsigned
64-bit range covers more than 500 simulated years, so plain Python ints are
used everywhere and never wrapped.
"""

from __future__ import annotations

from dataclasses import dataclass
from decimal import Decimal, InvalidOperation

SimTime = int  # nanoseconds since t=0

NS = 1
US = 1_000
MS = 1_000_000
SEC = 1_000_000_000
MINUTE = 60 * SEC
HOUR = 3600 * SEC

# Core power states, mirroring the sleep/active/cluster phases of the
# modeled SoC. Peripherals use their own PSM labels.
SLEEP_WAIT = "SLEEP_WAIT"
ACTIVE = "ACTIVE"
CLUSTER_ACTIVE = "CLUSTER_ACTIVE"
CORE_STATES = (SLEEP_WAIT, ACTIVE, CLUSTER_ACTIVE)


class SimulationError(Exception):
    """Base class for all simulation-side failures."""


# Order matters: "min" must be tried before "n"/"s" suffixed units.
_UNITS = (("min", MINUTE), ("ns", NS), ("us", US), ("ms", MS), ("h", HOUR), ("s", SEC))


def parse_duration(spec: int | str) -> int:
    """Parse a duration into integer nanoseconds.

    Accepts a bare int (nanoseconds) or a string with one of the suffixes
    ns/us/ms/s/min/h, e.g. "100us", "1.5ms", "24h". Fractions are exact in
    decimal; anything that does not land on a whole nanosecond is rejected.
    """
    if isinstance(spec, bool):
        raise TypeError(f"invalid duration: {spec!r}")
    if isinstance(spec, int):
        if spec < 0:
            raise ValueError(f"duration must be >= 0, got {spec}")
        return spec
    if not isinstance(spec, str):
        raise TypeError(f"invalid duration: {spec!r}")
    text = spec.strip().lower()
    for suffix, factor in _UNITS:
        if text.endswith(suffix):
            number = text[: -len(suffix)].strip()
            try:
                value = Decimal(number) * factor
            except InvalidOperation:
                raise ValueError(f"invalid duration: {spec!r}") from None
            if value != value.to_integral_value():
                raise ValueError(f"duration {spec!r} is not a whole number of ns")
            ns = int(value)
            if ns < 0:
                raise ValueError(f"duration must be >= 0, got {spec!r}")
            return ns
    try:
        return parse_duration(int(text))
    except ValueError:
        raise ValueError(f"invalid duration: {spec!r} (expected suffix ns/us/ms/s/min/h)") from None


def format_duration(ns: int) -> str:
    """Render nanoseconds with the largest exact unit, for messages."""
    for suffix, factor in (("h", HOUR), ("min", MINUTE), ("s", SEC), ("ms", MS), ("us", US)):
        if ns >= factor and ns % factor == 0:
            return f"{ns // factor}{suffix}"
    return f"{ns}ns"


def ns_to_s(ns: int) -> float:
    return ns * 1e-9


@dataclass(frozen=True)
class PowerSample:
    """Average power reported by a functional model over one tick window."""

    dynamic_w: float
    leakage_w: float
    state_tag: str

    @property
    def total_w(self) -> float:
        return self.dynamic_w + self.leakage_w
