"""Self-directed teaching engine.

Prerequisite-gated course roadmaps, frozen per-user lesson decks with
narrated delivery and doubt resolution, quiz-gated progression,
embedding-similarity exam grading, a flat-cosine retrieval layer with
RAFT dataset tooling, and a ROUGE/BLEU/cosine evaluation harness.
"""

__version__ = "0.1.0"
