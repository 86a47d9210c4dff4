"""Exception hierarchy shared by all simulator layers."""


class DramError(Exception):
    """Base class for simulator errors."""


class ConfigError(DramError):
    """Invalid geometry, parameter set or configuration file."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class AddressError(DramError):
    """A row address is out of range or illegal for the requested command."""


class ProtocolError(DramError):
    """A command was issued in a bank state that does not allow it."""


class ParameterError(DramError):
    """Non-physical device parameters (e.g. non-positive capacitance)."""


class TraceError(DramError):
    """A trace failed; carries the index of the failing command."""

    def __init__(self, index: int, cause: DramError):
        self.index = index
        self.cause = cause
        super().__init__(f"command {index}: {cause}")


class TraceParseError(DramError):
    """Malformed line in a command-trace text file."""

    def __init__(self, message: str, line: int):
        self.line = line
        super().__init__(f"line {line}: {message}")
