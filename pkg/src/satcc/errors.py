class SatccError(Exception):
    """Base class for all optimizer errors."""


class KernelSyntaxError(SatccError):
    def __init__(self, message: str, line: int = 0, col: int = 0):
        self.line = line
        self.col = col
        super().__init__(f"{line}:{col}: {message}")


class UnsupportedConstructError(SatccError):
    def __init__(self, construct: str, line: int = 0, col: int = 0):
        self.construct = construct
        self.line = line
        self.col = col
        super().__init__(f"{line}:{col}: unsupported construct: {construct}")


class CapacityExceeded(SatccError):
    pass


class ExtractionError(SatccError):
    pass


class ContractViolation(SatccError):
    pass


class CodegenError(SatccError):
    pass


class EvalError(SatccError):
    pass
