"""Matrix-product steady states of boundary-driven spin chains."""

__version__ = "0.1.0"
