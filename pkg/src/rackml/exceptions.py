"""Exception types raised across the package."""


class RackmlError(Exception):
    """Base class for all package-specific errors."""


# --- dataset ingestion / cleaning ---

class MissingColumn(RackmlError):
    def __init__(self, name: str):
        self.name = name
        super().__init__(f"required column missing from CSV header: {name!r}")


class ParseError(RackmlError):
    def __init__(self, row: int, col: str, cell: str):
        self.row = row
        self.col = col
        super().__init__(f"cell at data row {row}, column {col!r} is not a number: {cell!r}")


class EmptyDataset(RackmlError):
    pass


class AllMissingColumn(RackmlError):
    def __init__(self, name: str):
        self.name = name
        super().__init__(f"column {name!r} has no observed values to impute from")


class EmptyAfterFilter(RackmlError):
    pass


# --- numerics / model fitting ---

class ShapeMismatch(RackmlError):
    pass


class DomainError(RackmlError):
    pass


class ZeroVariance(RackmlError):
    pass


class KTooLarge(RackmlError):
    pass


class InvalidHyperparameter(RackmlError):
    def __init__(self, key: str, family: str = ""):
        self.key = key
        suffix = f" for family {family!r}" if family else ""
        super().__init__(f"unknown hyperparameter {key!r}{suffix}")


class ComponentOverflow(RackmlError):
    pass


class UnknownFamily(RackmlError):
    def __init__(self, name: str, known):
        self.name = name
        super().__init__(f"unknown model family {name!r}; supported: {', '.join(sorted(known))}")


# --- explanation ---

class UnsupportedModel(RackmlError):
    pass


class TooManyFeatures(RackmlError):
    pass


# --- persistence ---

class UnknownFormatVersion(RackmlError):
    pass


class SchemaViolation(RackmlError):
    pass


class CorruptPayload(RackmlError):
    pass
