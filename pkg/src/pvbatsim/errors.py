"""Exception types shared across the package."""


class PvBatSimError(Exception):
    """Base class for all package errors."""


class MalformedRow(PvBatSimError):
    """A CSV row failed parsing or a record invariant.

    Carries the 1-based line numbers of the offending rows.
    """

    def __init__(self, lines, message):
        self.lines = list(lines)
        super().__init__(f"{message} (line{'s' if len(self.lines) != 1 else ''} "
                         f"{', '.join(str(n) for n in self.lines)})")


class DuplicateTimestamp(PvBatSimError):
    pass


class EmptyFile(PvBatSimError):
    pass


class GapTooLong(PvBatSimError):
    pass


class InsufficientHistory(PvBatSimError):
    pass


class InsufficientData(PvBatSimError):
    pass


class DegenerateInput(PvBatSimError):
    pass


class UnfittedModel(PvBatSimError):
    pass


class NonConvergence(PvBatSimError):
    """Raised only when no candidate model could be fitted at all.

    Partial convergence failures are reported through the fitted model's
    ``converged`` flag instead.
    """


class SeriesMisaligned(PvBatSimError):
    pass


class EmptySpan(PvBatSimError):
    pass
