"""Exception hierarchy shared by the kernel modules and mapped to CLI exit codes."""


class KernelError(Exception):
    exit_code = 1


class ParseError(KernelError, ValueError):
    exit_code = 1


class IncompatibleRingError(KernelError, ValueError):
    exit_code = 3


class DirectionError(KernelError, ValueError):
    exit_code = 3


class UnsupportedRootError(KernelError, ValueError):
    exit_code = 3


class PrecisionExhausted(KernelError, ArithmeticError):
    exit_code = 2


class HypothesisViolation(KernelError, ValueError):
    exit_code = 3


class ExtensionRequired(HypothesisViolation):
    """A residue-field equation has no root in the working field F_q.

    ``degree`` is the degree of the extension of F_q that contains a root.
    """

    def __init__(self, message, degree):
        super().__init__(message)
        self.degree = degree


class Divergence(PrecisionExhausted):
    def __init__(self, message, contraction):
        super().__init__(message)
        self.contraction = contraction
