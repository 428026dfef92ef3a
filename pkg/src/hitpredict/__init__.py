"""hitpredict: hit-song prediction from Spotify audio features.

Ingest tracks from the Spotify Web API (or recorded fixtures), label hits by
popularity threshold, train five from-scratch classifiers and evaluate them
with imbalance-aware metrics. See the CLI (``hitpredict --help``) for the
end-to-end pipeline.
"""

__version__ = "0.1.0"
