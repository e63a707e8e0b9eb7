"""Pretrained-encoder feature extraction companion for the curation toolkit."""

from .extract import ExtractionConfig, extract, extract_vectors, read_manifest_entries, write_feature_table

__version__ = "0.1.0"
