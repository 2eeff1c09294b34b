"""apparent-loci: exact trivializations of vector bundles on hyperelliptic curves."""

__version__ = "0.1.0"
