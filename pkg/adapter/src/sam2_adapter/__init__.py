"""SAM2 backend for the trackfuse propagator stdio protocol."""

__version__ = "0.1.0"
