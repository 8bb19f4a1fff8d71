"""Blockchain-style accounts payable platform for goods trade."""

__version__ = "0.1.0"
