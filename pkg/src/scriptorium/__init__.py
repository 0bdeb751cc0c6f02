"""Toolkit for aligning graphemic manuscript transcriptions with normalized
editions, mining normalization training pairs from the alignments, applying
pluggable normalizers, and evaluating their output."""

__version__ = "0.1.0"
