"""Exception hierarchy.

Every domain error derives from :class:`BatdegError`; the class name doubles
as the machine-readable error code the CLI prints.
"""

from __future__ import annotations


class BatdegError(Exception):
    """Base class for all domain errors."""

    @property
    def code(self) -> str:
        return type(self).__name__


# ingest
class MissingColumn(BatdegError):
    pass


class MalformedRow(BatdegError):
    def __init__(self, row: int, message: str):
        super().__init__(f"row {row}: {message}")
        self.row = row


class DuplicateCycleIndex(BatdegError):
    pass


class UnrecognizedName(BatdegError):
    pass


class FileUnreadable(BatdegError):
    pass


class InvalidMetadata(BatdegError):
    pass


class MissingMetadata(BatdegError):
    pass


# preprocess
class SeriesTooShort(BatdegError):
    pass


class EmptySeries(BatdegError):
    pass


class InvalidParams(BatdegError):
    pass


# models
class InvalidEcon(BatdegError):
    pass


class InvalidSchedule(BatdegError):
    pass


class EmptyGroup(BatdegError):
    pass


class EmptyTable(BatdegError):
    pass


class DodOutOfRange(BatdegError):
    pass


class EmptyInput(BatdegError):
    pass


class ScenarioMismatch(BatdegError):
    pass


# schedule / cycles
class SocOutOfBounds(BatdegError):
    def __init__(self, step: int, soc: float):
        super().__init__(f"SOC {soc!r} leaves [0, 1] after step {step}")
        self.step = step
        self.soc = soc


class DegenerateProfile(BatdegError):
    pass


# reporting
class IncomparableScenarios(BatdegError):
    pass


class EmptyPlot(BatdegError):
    pass


class ConfigError(BatdegError):
    pass
