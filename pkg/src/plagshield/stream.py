"""Token-stream file interchange.

One record per line: ``<TOKEN_TAG> <line:int>``, with an optional leading
``#program <id>`` header. External tokenizers for real languages can target
this format; imported sequences carry no semantics, so normalization is
unavailable for them while baseline matching and match merging still apply.
"""

from __future__ import annotations

import os

from .errors import ImportFormatError
from .tokens import TOKEN_TAGS, EnrichedSequence, Token, TokenSequence


def import_token_stream(path: str) -> TokenSequence:
    program_id = os.path.splitext(os.path.basename(path))[0]
    tokens: list[Token] = []
    with open(path, "r", encoding="utf-8") as handle:
        for lineno, raw in enumerate(handle, start=1):
            line = raw.strip()
            if not line:
                continue
            if line.startswith("#program"):
                parts = line.split(None, 1)
                if len(parts) == 2 and lineno == 1:
                    program_id = parts[1].strip()
                    continue
                raise ImportFormatError("misplaced or malformed #program header", lineno)
            if line.startswith("#"):
                continue
            parts = line.split()
            if len(parts) != 2:
                raise ImportFormatError(f"expected '<TAG> <line>', got {line!r}", lineno)
            tag, line_str = parts
            if tag not in TOKEN_TAGS:
                raise ImportFormatError(f"unknown token tag {tag!r}", lineno)
            try:
                src_line = int(line_str)
            except ValueError:
                raise ImportFormatError(f"line number {line_str!r} is not an integer", lineno)
            if src_line < 1:
                raise ImportFormatError(f"line number must be >= 1, got {src_line}", lineno)
            tokens.append(Token(TOKEN_TAGS[tag], os.path.basename(path), src_line))
    return TokenSequence(tuple(tokens), program_id)


def import_as_enriched(path: str) -> EnrichedSequence:
    """Imported streams have no statement groups."""
    return EnrichedSequence(import_token_stream(path), ())


def export_token_stream(seq: TokenSequence, path: str) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        handle.write(f"#program {seq.program_id}\n")
        for tok in seq.tokens:
            handle.write(f"{tok.type.name} {tok.line}\n")
