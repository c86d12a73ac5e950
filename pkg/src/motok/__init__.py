"""Motion tokenization and text-to-motion generation toolkit."""

__version__ = "0.1.0"
