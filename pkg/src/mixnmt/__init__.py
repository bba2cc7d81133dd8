"""Mixture-of-components translation training on multi-domain parallel corpora."""

__version__ = "0.1.0"
