"""Region labeling and lexical / embedding analysis of multilingual tweet corpora."""

__version__ = "0.1.0"
