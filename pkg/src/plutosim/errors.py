"""Exception hierarchy.

Simulation errors (illegal command sequences, bad LUT state) derive from
``SimulationError``; malformed inputs (config files, traces, LUT builder
arguments) derive from ``InputError``. The CLI maps them to exit codes 1 and 2.
"""


class PlutoError(Exception):
    """Base class for every error raised by the simulator."""


class SimulationError(PlutoError):
    pass


class InputError(PlutoError, ValueError):
    pass


# dram-core
class ActivateWhileOpen(SimulationError):
    pass


class InvalidRow(SimulationError):
    pass


class BufferClosed(SimulationError):
    pass


class AddressError(SimulationError):
    pass


class NotLinked(SimulationError):
    """Row-buffer movement between subarrays of different banks."""


# pluto subarray
class WidthMismatch(SimulationError):
    pass


class SweepOutOfRange(SimulationError):
    pass


class GSAInvalidLUT(SimulationError):
    pass


class LUTNotLoaded(SimulationError):
    pass


class OverlappingClasses(SimulationError):
    pass


class PartitionTooSmall(SimulationError):
    pass


class CapacityExceeded(SimulationError):
    pass


# pum ops
class RowsNotDistinct(SimulationError):
    pass


class UnsupportedAmount(SimulationError):
    pass


# inputs
class ConfigError(InputError):
    pass


class TraceFormatError(InputError):
    pass


class DomainTooLarge(InputError):
    pass


class RangeOverflow(InputError):
    pass


class NotClassConstant(InputError):
    pass
