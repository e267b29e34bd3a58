"""Coupled epidemic demand and oxygen-concentrator supply chain simulator."""

__version__ = "0.1.0"
