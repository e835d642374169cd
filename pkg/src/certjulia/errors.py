"""Exception taxonomy shared across the library."""


class InputError(ValueError):
    """Malformed user input (parse errors, bad parameters)."""


class DomainError(ValueError):
    """Structurally valid input outside an operation's domain."""


class WidthBlowup(ArithmeticError):
    """Interval iteration lost all precision before reaching the target width.

    Carries the working precision that failed so callers can retry or bail.
    """

    def __init__(self, msg: str = "", bits: int = 0):
        super().__init__(msg or f"enclosure width blew up at {bits} bits")
        self.bits = bits


class PrecisionExhausted(ArithmeticError):
    """The precision schedule hit its hard cap without converging."""


class PeriodCapExceeded(Exception):
    """Periodic-orbit work was requested beyond the configured period cap."""


class MultipleRootUnresolved(ArithmeticError):
    """A root cluster could not be separated at the working precision."""


class CertificateInvalid(ValueError):
    """An orbit certificate failed validation or refinement."""


class Inconclusive(Exception):
    """The global step cap was exhausted with no machine halting.

    Never substitutes for a wrong bit: raised instead of guessing.
    """

    def __init__(self, msg: str = "budget exhausted before any machine halted", steps: int = 0):
        super().__init__(msg)
        self.steps = steps
