"""Satisfiability toolkit for a four-level stratified fragment of set theory."""

__version__ = "0.1.0"
