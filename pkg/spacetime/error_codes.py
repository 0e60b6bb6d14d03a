from enum import Enum, auto
from typing import Optional


class ErrorCodes(Enum):
    """Error codes used to identify the status of an analysis
    """
    SUCCESS = auto()
    # Architecture construction
    INVALID_RANK = auto()
    INVALID_WIDTH = auto()
    INVALID_ARCHITECTURE = auto()
    UNSUPPORTED_ARCHITECTURE = auto()
    INVALID_PERMUTATION = auto()
    INVALID_GATE = auto()
    ODD_WIDTH = auto()
    # Configurations, ranking and enumeration
    INVALID_CONFIGURATION = auto()
    LENGTH_MISMATCH = auto()
    INDEX_OUT_OF_RANGE = auto()
    CAP_EXCEEDED = auto()
    # Tilings
    INVALID_TILING = auto()
    INVALID_HVTREE = auto()
    REJECTED_FLIP = auto()
    # Markov chains and spectra
    DISCONNECTED_GRAPH = auto()
    NON_REVERSIBLE_CHAIN = auto()
    CONVERGENCE_FAILURE = auto()
    INVALID_CUT = auto()
    NON_COVERING_DECOMPOSITION = auto()
    # Hamiltonians
    INVALID_TIME = auto()
    ODD_DEPTH = auto()
    NON_CIRCULAR_ARCHITECTURE = auto()
    OUT_OF_RANGE_INPUT = auto()
    INVALID_EPSILON = auto()
    SHORT_PAD_REGION = auto()
    DIMENSION_MISMATCH = auto()
    # Batch front-end
    UNKNOWN_COMMAND = auto()
    INVALID_PARAMETERS = auto()

    def __str__(self) -> str:
        """Override the str method
        :return: the name of the enum as string
        """
        return self.name


class SpacetimeError(Exception):
    """ Base exception of the library, it always carries an ErrorCodes member """

    def __init__(self, code: ErrorCodes, message: str):
        super(SpacetimeError, self).__init__(f"{code}: {message}")
        self.code = code
        self.message = message


class CapExceededError(SpacetimeError):
    """ Raised when an enumeration would exceed the configured state cap """

    def __init__(self, cap: int, message: Optional[str] = None):
        super(CapExceededError, self).__init__(ErrorCodes.CAP_EXCEEDED,
                                               message if message else f"more than {cap} states")
        self.cap = cap


# Process exit status for the batch front-end
EXIT_SUCCESS = 0
EXIT_VALIDATION_ERROR = 2
EXIT_CAP_EXCEEDED = 3


def exit_code(error: Optional[Exception]) -> int:
    """ Map an exception raised by a run to the process exit status
    :param error: exception or None for a successful run
    :return: 0 on success, 3 when a cap was exceeded, 2 for any other SpacetimeError
    """
    if error is None:
        return EXIT_SUCCESS
    if isinstance(error, CapExceededError):
        return EXIT_CAP_EXCEEDED
    if isinstance(error, SpacetimeError):
        return EXIT_VALIDATION_ERROR
    raise error
