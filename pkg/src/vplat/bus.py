"""Functional bus: address-decoded routing between the core and peripherals.

Requests are synchronous; a peripheral handler returns its response
immediately and the initiating core accounts for the latency. Decode is a
pure function of the address map, implemented as binary search over
non-overlapping sorted regions.
"""

from __future__ import annotations

import bisect
from dataclasses import dataclass
from typing import Callable

from .common import SimulationError


class OverlapError(SimulationError):
    """A peripheral region overlaps an already registered one."""


@dataclass(frozen=True)
class BusRequest:
    address: int
    write: bool
    data: int = 0
    width: int = 4  # bytes: 1, 2 or 4
    origin: str = "core"


@dataclass(frozen=True)
class BusResponse:
    data: int = 0
    error: bool = False
    latency_ns: int = 0
    # Extension over the plain read/write protocol: a handler may park the
    # initiator (blocking wait on peripheral data). `block_until` is a hint
    # of the wake-up time when the handler knows it.
    block: bool = False
    block_until: int | None = None


Handler = Callable[[BusRequest], BusResponse]


@dataclass(frozen=True)
class Region:
    base: int
    size: int
    peripheral: str

    @property
    def end(self) -> int:
        return self.base + self.size


class FuncBus:
    def __init__(self) -> None:
        self._regions: list[Region] = []  # sorted by base
        self._bases: list[int] = []
        self._handlers: dict[str, Handler] = {}

    @property
    def regions(self) -> tuple[Region, ...]:
        return tuple(self._regions)

    def register_peripheral(self, peripheral: str, base: int, size: int, handler: Handler) -> None:
        if size <= 0:
            raise ValueError(f"region size must be > 0, got {size}")
        if base % 4 or size % 4:
            raise ValueError(f"region {peripheral} must be 4-byte aligned: base={base:#x} size={size:#x}")
        region = Region(base, size, peripheral)
        idx = bisect.bisect_left(self._bases, base)
        for neighbor in self._regions[max(0, idx - 1) : idx + 1]:
            if neighbor.base < region.end and region.base < neighbor.end:
                raise OverlapError(
                    f"region {peripheral} [{base:#x},{region.end:#x}) overlaps "
                    f"{neighbor.peripheral} [{neighbor.base:#x},{neighbor.end:#x})"
                )
        self._regions.insert(idx, region)
        self._bases.insert(idx, base)
        self._handlers[peripheral] = handler

    def decode(self, address: int, width: int = 1) -> Region | None:
        """Region containing [address, address+width), or None on a decode miss."""
        idx = bisect.bisect_right(self._bases, address) - 1
        if idx < 0:
            return None
        region = self._regions[idx]
        if address >= region.base and address + width <= region.end:
            return region
        return None

    def route(self, req: BusRequest) -> BusResponse:
        """Dispatch a request to the single peripheral owning its address.

        An unmapped or region-straddling access is a decode error reported
        in-band (error response); the initiator decides how to react.
        """
        region = self.decode(req.address, req.width)
        if region is None:
            return BusResponse(error=True)
        return self._handlers[region.peripheral](req)
