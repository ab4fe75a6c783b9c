"""USQL document schema."""
