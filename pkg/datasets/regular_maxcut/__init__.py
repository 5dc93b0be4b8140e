"""Dataset directories produced by `run-all`: file schema and validation.

A dataset directory is self-describing (manifest.json + provenance line in
every CSV), so it can be validated without the manifest file it came from.
"""
