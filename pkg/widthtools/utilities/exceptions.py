# FEATURE EXCEPTIONS

class CapacityViolationError(ValueError):
    """ This exception is raised when a feature index does not fit the feature space """
    def __init__(self, index, capacity):
        self.index = index
        self.capacity = capacity
        super().__init__(f"Feature index {index} out of range for feature space of size {capacity}")

class DegenerateInputError(ValueError):
    """ This exception is raised when an operation receives an empty feature set """
    def __init__(self, operation):
        super().__init__(f"{operation} requires a nonempty feature set")

# SCREEN EXCEPTIONS

class DimensionMismatchError(ValueError):
    """ This exception is raised when screen dimensions disagree with a tiling or background map """
    def __init__(self, expected, actual):
        self.expected = expected
        self.actual = actual
        super().__init__(f"Dimension mismatch: expected {expected}, got {actual}")

class ScreenFormatError(ValueError):
    """ This exception is raised when a screen file cannot be decoded """
    def __init__(self, reason):
        super().__init__(f"Malformed screen file: {reason}")

# SIMULATOR EXCEPTIONS

class SimulatorUsageError(RuntimeError):
    """ This exception is raised when the simulator contract is violated by the caller """
    def __init__(self, reason):
        super().__init__(f"Simulator usage error: {reason}")

class BudgetExhaustedError(Exception):
    """ This exception is raised when a lookahead would exceed its simulator-call budget """
    def __init__(self, used, limit):
        self.used = used
        self.limit = limit
        super().__init__(f"Simulator call budget exhausted: {used} of {limit} calls used")

# SEARCH EXCEPTIONS

class InternalInvariantError(AssertionError):
    """ This exception is raised when a search reaches a state its invariants rule out """
    def __init__(self, reason):
        super().__init__(f"Internal invariant violated: {reason}")

# CONFIGURATION EXCEPTIONS

class ConfigurationError(ValueError):
    """ This exception is raised for invalid episode or run configuration """
    def __init__(self, reason):
        super().__init__(f"Invalid configuration: {reason}")
