"""Corpus ingestion and the manifest of program roles.

Submission layout: one directory per submission (or a loose single source
file); every regular file with a configured extension is included, sorted by
path. Unparseable submissions are excluded and logged, mirroring the usual
remove-what-does-not-compile preprocessing. ``.tokens`` files import as
semantics-free token streams.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from typing import Optional

from .errors import (DuplicateProgramId, EmptyCorpus, ImportFormatError,
                     MiniLangSyntaxError)
from .minilang.tokenizer import parse_program
from .stream import import_token_stream
from .tokens import EnrichedSequence, Program, TokenSequence

SOURCE_EXTENSIONS = (".mini",)
STREAM_EXTENSION = ".tokens"


@dataclass(frozen=True)
class ManifestEntry:
    program_id: str
    role: str  # original | plagiarism | generated
    source_id: Optional[str] = None  # plagiarized original, when role == plagiarism
    provenance: str = ""  # attack recipe or llm job identifier
    language: str = "minilang"

    def to_record(self) -> dict:
        return {"program_id": self.program_id, "role": self.role,
                "source_id": self.source_id, "provenance": self.provenance,
                "language": self.language}


@dataclass
class CorpusManifest:
    entries: list[ManifestEntry] = field(default_factory=list)
    excluded: list[dict] = field(default_factory=list)

    def __post_init__(self):
        originals = {e.program_id for e in self.entries if e.role == "original"}
        for entry in self.entries:
            if entry.role == "plagiarism" and entry.source_id not in originals:
                raise ValueError(
                    f"plagiarism entry {entry.program_id!r} references missing "
                    f"original {entry.source_id!r}")

    def ids(self, role: Optional[str] = None) -> list[str]:
        return [e.program_id for e in self.entries if role is None or e.role == role]

    def to_record(self) -> dict:
        return {"entries": [e.to_record() for e in self.entries],
                "excluded": self.excluded}

    def save(self, path: str) -> None:
        with open(path, "w", encoding="utf-8") as handle:
            json.dump(self.to_record(), handle, indent=2, sort_keys=True)
            handle.write("\n")

    @classmethod
    def load(cls, path: str) -> "CorpusManifest":
        with open(path, "r", encoding="utf-8") as handle:
            record = json.load(handle)
        entries = [ManifestEntry(**e) for e in record["entries"]]
        return cls(entries, record.get("excluded", []))


def _submission_paths(corpus_dir: str, extensions: tuple[str, ...]) -> list[tuple[str, list[str]]]:
    """(program_id, file paths) per submission, deterministically ordered."""
    submissions: list[tuple[str, list[str]]] = []
    for name in sorted(os.listdir(corpus_dir)):
        full = os.path.join(corpus_dir, name)
        if os.path.isdir(full):
            files = sorted(
                os.path.join(full, f) for f in os.listdir(full)
                if os.path.isfile(os.path.join(full, f))
                and f.endswith(extensions + (STREAM_EXTENSION,)))
            if files:
                submissions.append((name, files))
        elif name.endswith(extensions + (STREAM_EXTENSION,)):
            submissions.append((os.path.splitext(name)[0], [full]))
    return submissions


def load_submission(program_id: str, paths: list[str],
                    corpus_dir: str) -> Program | EnrichedSequence:
    if len(paths) == 1 and paths[0].endswith(STREAM_EXTENSION):
        seq = import_token_stream(paths[0])
        # the submission name wins over any #program header
        return EnrichedSequence(TokenSequence(seq.tokens, program_id), ())
    files = []
    for path in paths:
        with open(path, "r", encoding="utf-8") as handle:
            files.append((os.path.relpath(path, corpus_dir), handle.read()))
    return Program(program_id, tuple(files))


def ingest_corpus(corpus_dir: str,
                  extensions: tuple[str, ...] = SOURCE_EXTENSIONS) -> CorpusManifest:
    """Scan a corpus directory, exclude unparseable submissions, build the manifest."""
    if not os.path.isdir(corpus_dir):
        raise EmptyCorpus(f"corpus directory {corpus_dir!r} does not exist")
    submissions = _submission_paths(corpus_dir, extensions)
    if not submissions:
        raise EmptyCorpus(f"no submissions with extensions {extensions} under {corpus_dir!r}")

    seen: set[str] = set()
    for program_id, _ in submissions:
        if program_id in seen:
            raise DuplicateProgramId(f"duplicate submission name {program_id!r}")
        seen.add(program_id)

    manifest = CorpusManifest()
    for program_id, paths in submissions:
        is_stream = len(paths) == 1 and paths[0].endswith(STREAM_EXTENSION)
        try:
            item = load_submission(program_id, paths, corpus_dir)
            if isinstance(item, Program):
                parse_program(item)
        except (MiniLangSyntaxError, ImportFormatError) as exc:
            manifest.excluded.append({"program_id": program_id, "reason": str(exc)})
            continue
        manifest.entries.append(ManifestEntry(
            program_id=program_id, role="original",
            language="imported-token-stream" if is_stream else "minilang"))
    if not manifest.entries:
        raise EmptyCorpus(f"all submissions under {corpus_dir!r} were excluded")
    return manifest


def load_corpus_programs(corpus_dir: str, manifest: CorpusManifest,
                         extensions: tuple[str, ...] = SOURCE_EXTENSIONS) -> dict:
    """program_id -> Program/EnrichedSequence for every manifest entry."""
    by_id = dict(_submission_paths(corpus_dir, extensions))
    out = {}
    for entry in manifest.entries:
        if entry.program_id in by_id:
            out[entry.program_id] = load_submission(
                entry.program_id, by_id[entry.program_id], corpus_dir)
    return out
