"""plagshield: obfuscation-resilient token-based source-code plagiarism detection.

Core pieces: a MiniLang frontend with a checkable interpreter, a greedy
string tiling matcher, two layerable defenses (token sequence normalization
and subsequence match merging), red-team obfuscation generators, a
provider-agnostic LLM attack client, and a statistical evaluation harness.
"""

__version__ = "0.1.0"

from .tokens import (EnrichedSequence, GroupKind, Program, StatementGroup,
                     Token, TokenSequence, TokenType)

__all__ = [
    "EnrichedSequence",
    "GroupKind",
    "Program",
    "StatementGroup",
    "Token",
    "TokenSequence",
    "TokenType",
    "__version__",
]
