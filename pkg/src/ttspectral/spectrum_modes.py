"""Spectrum mode names, split out to avoid import cycles."""

IDENTITY = "identity"
LEARNED = "learned"
LEARNED_REGULARIZED = "learned_regularized"

SPECTRUM_MODES = (IDENTITY, LEARNED, LEARNED_REGULARIZED)
