"""Flip-graph constructions for weak symmetry breaking in three IIS rounds."""
