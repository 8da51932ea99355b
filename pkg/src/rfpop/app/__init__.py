"""Deployable layer: configuration, wire framing, database files, networking, CLI."""
