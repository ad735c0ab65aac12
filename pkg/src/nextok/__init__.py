"""nextok: a local code-completion engine for the MiniDart mini-language.

Ranks statically valid suggestions with a subtoken-input, token-output
recurrent language model plus a repetition-detection head, under
interactive-latency and model-size constraints.
"""

__version__ = "0.1.0"
