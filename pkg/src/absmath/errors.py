"""Error taxonomy shared across the toolkit.

Every domain failure raised by this package derives from AbsMathError so
callers (and the CLI) can map the whole family to a single exit path.
Parsing and retrieval errors carry enough payload to state what was
malformed and where.
"""


class AbsMathError(Exception):
    """Base class for all domain errors."""

    def describe(self) -> str:
        name = type(self).__name__
        msg = str(self)
        return f"{name}({msg})" if msg else name


class MalformedNumber(AbsMathError):
    pass


class MalformedExpression(AbsMathError):
    pass


class NoNumbersFound(AbsMathError):
    pass


class UnboundPlaceholder(AbsMathError):
    pass


class MalformedDerivation(AbsMathError):
    def __init__(self, index: int, reason: str = ""):
        self.index = index
        self.reason = reason
        detail = f"derivation {index}"
        if reason:
            detail += f": {reason}"
        super().__init__(detail)


class DuplicateDefinition(AbsMathError):
    def __init__(self, symbol):
        self.symbol = symbol
        super().__init__(str(symbol))


class UndefinedSymbol(AbsMathError):
    def __init__(self, symbol):
        self.symbol = symbol
        super().__init__(str(symbol))


class CyclicDependency(AbsMathError):
    pass


class DivisionByZero(AbsMathError):
    # index of the derivation whose evaluation divided by zero
    def __init__(self, index: int):
        self.index = index
        super().__init__(f"derivation {index}")


class GoldInvalid(AbsMathError):
    pass


class GroupTooSmall(AbsMathError):
    pass


class InvalidTemplate(AbsMathError):
    pass


class ExhaustedRetries(AbsMathError):
    def __init__(self, attempts: int, detail: str = ""):
        self.attempts = attempts
        msg = f"gave up after {attempts} attempts"
        if detail:
            msg += f" ({detail})"
        super().__init__(msg)


class EmptyRound(AbsMathError):
    pass


class ZeroBaseline(AbsMathError):
    pass


class ClientError(AbsMathError):
    """Base for reasoner-endpoint failures."""


class RequestTimeout(ClientError):
    pass


class HttpStatusError(ClientError):
    def __init__(self, status: int, detail: str = ""):
        self.status = status
        msg = f"HTTP {status}"
        if detail:
            msg += f": {detail}"
        super().__init__(msg)


class BudgetExceeded(ClientError):
    pass
