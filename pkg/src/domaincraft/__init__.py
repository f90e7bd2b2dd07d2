"""Toolkit for studying how auxiliary-domain parallel data helps low-resource NMT.

Modules map onto the experimental workflow: ``corpus`` and ``mixing`` build
training data, ``divergence`` measures domain distance, ``strategy`` compiles
fine-tuning strategies into stage schedules, ``model`` trains a compact
encoder-decoder on them, ``evaluation`` scores translations and ``analysis``
turns result rows into correlations, tables and recommendations.
"""

__version__ = "0.1.0"


class DomaincraftError(Exception):
    """Base class for errors reported by the toolkit."""
