"""process-evolution: version, diff and mine the history of process model descriptions."""

__version__ = "0.1.0"
