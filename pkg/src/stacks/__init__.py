"""Desk-scale digital library core.

A union catalog of metadata records fed by a staged ingest pipeline,
exposed over an OAI-PMH provider to a ranked search service and a
rights-brokering access layer, with one CLI tying the pieces together.
"""

__version__ = "0.1.0"
