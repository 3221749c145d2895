class PlotError(Exception):
    """Base for everything this package raises on purpose."""


class SchemaError(PlotError):
    """An input file does not look like the table or report it must be."""


class HashMismatch(PlotError):
    """Input files were produced under different configurations."""
