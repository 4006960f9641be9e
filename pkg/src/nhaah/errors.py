"""Exception hierarchy shared by every module of the package."""


class AAHError(Exception):
    """Base class for all errors raised by nhaah."""


class ConfigError(AAHError, ValueError):
    """Invalid model or run configuration."""


class DomainError(AAHError, ValueError):
    pass


class EmptyRequestError(AAHError, ValueError):
    pass


class PrecisionError(AAHError, ValueError):
    """The supplied number does not carry enough digits for the request."""


class UnsupportedError(AAHError):
    pass


class DegenerateDerivativeError(AAHError, ArithmeticError):
    pass


class NearPoleError(AAHError, ArithmeticError):
    pass


class MultiplicityError(AAHError, ArithmeticError):
    """Two roots coincide to working resolution where simple roots are required."""


class WrongPhaseError(AAHError):
    pass


class NotLocalizedError(AAHError):
    pass


class ChainTooShortError(AAHError):
    pass


class SkinEffectError(AAHError):
    """Hoppings with |rho| != |t|; the Thouless-type relation does not apply."""


class BranchCutError(AAHError, ValueError):
    pass


class NonConvergenceError(AAHError, ArithmeticError):
    def __init__(self, message: str, worst_residual: float, index: int, sweeps: int):
        super().__init__(f"{message} (worst residual {worst_residual:.3e} at root {index}, {sweeps} sweeps)")
        self.worst_residual = worst_residual
        self.index = index
        self.sweeps = sweeps
