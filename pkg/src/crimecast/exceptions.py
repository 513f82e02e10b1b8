"""Exception hierarchy for crimecast."""


class CrimecastError(Exception):
    """Base class for all errors raised by this package."""


class InvalidArgument(CrimecastError, ValueError):
    pass


class MalformedRow(CrimecastError, ValueError):
    def __init__(self, line: int, message: str):
        self.line = line
        super().__init__(f"line {line}: {message}")


class UnknownPoliticalStatus(MalformedRow):
    pass


class DuplicateStateYear(CrimecastError, ValueError):
    def __init__(self, state: str, year: int, line: int | None = None):
        self.state = state
        self.year = year
        self.line = line
        where = f"line {line}: " if line is not None else ""
        super().__init__(f"{where}duplicate record for {state} {year}")


class WindowTooLarge(CrimecastError, ValueError):
    pass


class InsufficientHistory(CrimecastError, ValueError):
    def __init__(self, state: str, message: str):
        self.state = state
        super().__init__(f"{state}: {message}")


class EmptyTrainingSet(CrimecastError, ValueError):
    pass


class EmptyInput(CrimecastError, ValueError):
    pass


class ShapeMismatch(CrimecastError, ValueError):
    pass


class InvalidRate(CrimecastError, ValueError):
    pass


class EmptySplit(CrimecastError, ValueError):
    pass


class NonFiniteLoss(CrimecastError, FloatingPointError):
    def __init__(self, epoch: int, message: str = "training diverged"):
        self.epoch = epoch
        super().__init__(f"epoch {epoch}: {message}")


class ZeroActual(CrimecastError, ZeroDivisionError):
    pass


class InconsistentStateSets(CrimecastError, ValueError):
    pass


class TrialError(CrimecastError):
    def __init__(self, trial_id: int, cause: Exception):
        self.trial_id = trial_id
        self.cause = cause
        super().__init__(f"trial {trial_id}: {cause}")
