"""Exception hierarchy shared by the library and the CLI."""


class VFogError(Exception):
    """Base class for all package errors."""


class ConfigurationError(VFogError, ValueError):
    """Invalid scenario, path or solver configuration."""


class InfeasibleInstanceError(VFogError):
    """No assignment satisfies every constraint of the instance."""


class ProblemSizeError(VFogError):
    """The enumeration oracle refuses an instance larger than its budget."""


class SearchBudgetError(VFogError):
    """A budgeted search ended before finding any feasible assignment."""
