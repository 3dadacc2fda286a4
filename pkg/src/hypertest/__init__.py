"""Hypergraph regularity tools and sampling-based property testers."""
