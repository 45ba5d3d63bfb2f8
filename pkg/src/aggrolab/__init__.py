"""Aggression identification for social-media text.

Text normalization, handcrafted psycho-linguistic features, three deep text
classifiers on a small reverse-mode autodiff core, unweighted model
averaging, and weighted macro-F1 evaluation.
"""

__version__ = "0.1.0"
