"""Chemical-patent NER toolkit: BRAT I/O, CRF tagging, voting ensembles, span evaluation."""

__version__ = "0.1.0"
