__all__ = [
    "architecture",
    "clifford",
    "configurations",
    "detection",
    "error_codes",
    "experiment_runner",
    "hamiltonian",
    "logger_formatter",
    "markov",
    "pauli",
    "statevector",
    "tilings",
    "weighted_fk"
]
