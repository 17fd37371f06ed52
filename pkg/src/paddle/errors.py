"""Exception types shared across the package."""


class ContractError(ValueError):
    """An argument violates a documented precondition (shape, range, value)."""


class FormatError(ValueError):
    """A file does not conform to its on-disk format.

    ``offset`` is the byte position at which parsing failed.
    """

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (byte offset {offset})")
        self.offset = int(offset)


class DivergenceError(ArithmeticError):
    """An iterative solver produced a non-finite iterate.

    ``iteration`` is the 1-based inner iteration at which the blow-up was
    detected.
    """

    def __init__(self, message: str, iteration: int):
        super().__init__(f"{message} (iteration {iteration})")
        self.iteration = int(iteration)
