"""Collaborative termino-ontology workbench: term candidates in, OBO out."""

__version__ = "0.1.0"
