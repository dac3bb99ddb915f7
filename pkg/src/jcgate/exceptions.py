class CutoffError(ValueError):
    """Fock cutoff too small for the requested state."""


class DegenerateStateError(ValueError):
    """A superposition collapsed to (numerically) zero norm."""


class UnsupportedGateError(ValueError):
    """Gate/state combination outside the supported set."""


class MemoryBudgetError(RuntimeError):
    """Requested simulation would exceed the configured memory budget."""
