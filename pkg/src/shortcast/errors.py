"""Exception hierarchy. Every pipeline failure derives from ``ShortcastError``."""

from __future__ import annotations


class ShortcastError(Exception):
    """Base class; ``stage`` names the pipeline stage for CLI messages."""

    stage = "pipeline"


# numcore
class RankDeficient(ShortcastError):
    stage = "numcore"

    def __init__(self, message: str = "design matrix is rank deficient", columns: list[int] | None = None):
        super().__init__(message)
        self.columns = columns or []


class EmptyInput(ShortcastError, ValueError):
    stage = "numcore"


# ingest
class IngestError(ShortcastError):
    stage = "ingest"


class MissingColumn(IngestError):
    def __init__(self, name: str):
        super().__init__(f"missing required column {name!r}")
        self.name = name


class EmptyFile(IngestError):
    pass


class AreaNotFound(IngestError):
    def __init__(self, area: str):
        super().__init__(f"no records for area {area!r}")
        self.area = area


class DuplicateCell(IngestError):
    def __init__(self, item: str, element: str, year: int):
        super().__init__(f"duplicate record for ({item!r}, {element!r}, {year})")
        self.item, self.element, self.year = item, element, year


class AllColumnsDropped(IngestError):
    pass


class UnknownProduct(ShortcastError, KeyError):
    stage = "shortage"

    def __init__(self, product: str):
        super().__init__(product)
        self.product = product

    def __str__(self) -> str:
        return f"unknown product {self.product!r}"


# stationarity
class SeriesTooShort(ShortcastError, ValueError):
    stage = "stationarity"


class ConstantSeries(ShortcastError, ValueError):
    stage = "stationarity"


class OrderMismatch(ShortcastError, ValueError):
    stage = "stationarity"


# causality
class TooFewRows(ShortcastError, ValueError):
    stage = "causality"


class UnknownVariable(ShortcastError, KeyError):
    stage = "causality"


# var
class InsufficientData(ShortcastError):
    stage = "var"

    def __init__(self, needed: int, have: int, detail: str = ""):
        msg = f"insufficient data: need {needed} rows, have {have}"
        if detail:
            msg += f" ({detail})"
        super().__init__(msg)
        self.needed, self.have = needed, have


# evaluation
class LengthMismatch(ShortcastError, ValueError):
    stage = "evaluation"


class DegenerateSplit(ShortcastError, ValueError):
    stage = "evaluation"
