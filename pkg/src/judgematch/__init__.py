"""Judge-venture matching engine: similarity ensembles, fair assignment, cohort statistics."""

__version__ = "0.1.0"
