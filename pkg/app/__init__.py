"""Hash chain based secure vehicle clusters."""

__version__ = "0.3.0"
