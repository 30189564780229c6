"""svglens_sidecar: concept listing and grounding service for svglens."""

__version__ = "0.1.0"
