"""HTTP sidecar exposing a sentence-embedding model.

Implements the wire protocol described in PROTOCOL.md at the repository
root; the corpus-drift pipeline's remote embedding backend is the client.
"""

__version__ = "0.1.0"
