"""Mutual RFID authentication with proof-of-possession credentials."""

__version__ = "0.1.0"
