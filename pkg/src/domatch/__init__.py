"""Domain matching for reference-based image matching under a domain gap."""

__version__ = "0.1.0"
