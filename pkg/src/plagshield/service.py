"""Detection service: the comparison core behind an HTTP API.

Wraps tokenization, normalization, pairwise comparison, and corpus ranking
for multi-client use (course staff submitting batches). The evaluation
harness and attack tooling stay CLI-side; they are batch research workflows.
"""

from __future__ import annotations

from fastapi import FastAPI, HTTPException
from pydantic import BaseModel, Field

from . import __version__
from .detector import DefenseConfig, compare, compare_corpus
from .errors import PlagshieldError
from .matcher import MatchParams
from .minilang.tokenizer import tokenize
from .smm import SmmParams
from .tokens import Program
from .tsn import normalize

app = FastAPI(title="plagshield", version=__version__,
              description="obfuscation-resilient source-code plagiarism detection")


class FilePayload(BaseModel):
    path: str
    text: str


class ProgramPayload(BaseModel):
    program_id: str
    files: list[FilePayload]
    language: str = "minilang"

    def to_program(self) -> Program:
        try:
            return Program(self.program_id,
                           tuple((f.path, f.text) for f in self.files),
                           self.language)
        except ValueError as exc:
            raise HTTPException(status_code=422, detail=str(exc))


class DetectorSettings(BaseModel):
    min_match_len: int = Field(default=9, ge=1)
    tsn: bool = False
    smm: bool = False
    smm_max_gap: int = Field(default=6, ge=0)
    smm_min_neighbor_len: int = Field(default=2, ge=1)

    def match_params(self) -> MatchParams:
        return MatchParams(self.min_match_len)

    def defenses(self) -> DefenseConfig:
        return DefenseConfig(tsn=self.tsn, smm=self.smm,
                             smm_params=SmmParams(self.smm_max_gap,
                                                  self.smm_min_neighbor_len))


class TokenizeRequest(BaseModel):
    program: ProgramPayload
    normalize: bool = False


class TokenizeResponse(BaseModel):
    program_id: str
    tokens: list[str]
    normalized: bool


class MatchModel(BaseModel):
    start_a: int
    start_b: int
    len_a: int
    len_b: int
    merged: bool


class ComparisonModel(BaseModel):
    a: str
    b: str
    similarity: float
    max_similarity: float
    coverage_a: int
    coverage_b: int
    len_a: int
    len_b: int
    defenses: list[str]
    matches: list[MatchModel] = []


class CompareRequest(BaseModel):
    program_a: ProgramPayload
    program_b: ProgramPayload
    settings: DetectorSettings = DetectorSettings()
    include_matches: bool = False


class DetectRequest(BaseModel):
    programs: list[ProgramPayload]
    settings: DetectorSettings = DetectorSettings()
    top: int = Field(default=0, ge=0, description="0 returns every pair")


class DetectResponse(BaseModel):
    results: list[ComparisonModel]


def _to_model(result, include_matches: bool) -> ComparisonModel:
    return ComparisonModel(
        a=result.id_a, b=result.id_b,
        similarity=result.similarity, max_similarity=result.max_similarity,
        coverage_a=result.coverage_a, coverage_b=result.coverage_b,
        len_a=result.len_seq_a, len_b=result.len_seq_b,
        defenses=list(result.defenses),
        matches=[MatchModel(start_a=m.start_a, start_b=m.start_b,
                            len_a=m.len_a, len_b=m.len_b, merged=m.merged)
                 for m in result.matches] if include_matches else [])


@app.get("/healthz")
def healthz() -> dict:
    return {"status": "ok", "version": __version__}


@app.post("/tokenize", response_model=TokenizeResponse)
def tokenize_endpoint(request: TokenizeRequest) -> TokenizeResponse:
    program = request.program.to_program()
    try:
        enriched = tokenize(program)
        seq = normalize(enriched) if request.normalize else enriched.sequence
    except PlagshieldError as exc:
        raise HTTPException(status_code=422, detail=str(exc))
    return TokenizeResponse(program_id=program.program_id,
                            tokens=[t.type.name for t in seq.tokens],
                            normalized=request.normalize)


@app.post("/compare", response_model=ComparisonModel)
def compare_endpoint(request: CompareRequest) -> ComparisonModel:
    try:
        result = compare(request.program_a.to_program(),
                         request.program_b.to_program(),
                         request.settings.match_params(),
                         request.settings.defenses())
    except PlagshieldError as exc:
        raise HTTPException(status_code=422, detail=str(exc))
    return _to_model(result, request.include_matches)


@app.post("/detect", response_model=DetectResponse)
def detect_endpoint(request: DetectRequest) -> DetectResponse:
    if len(request.programs) < 2:
        raise HTTPException(status_code=422, detail="need at least two programs")
    try:
        results = compare_corpus([p.to_program() for p in request.programs],
                                 request.settings.match_params(),
                                 request.settings.defenses())
    except PlagshieldError as exc:
        raise HTTPException(status_code=422, detail=str(exc))
    ranked = sorted(results, key=lambda r: (-r.similarity, r.id_a, r.id_b))
    if request.top:
        ranked = ranked[:request.top]
    return DetectResponse(results=[_to_model(r, False) for r in ranked])


@app.post("/normalize", response_model=TokenizeResponse)
def normalize_endpoint(request: TokenizeRequest) -> TokenizeResponse:
    program = request.program.to_program()
    try:
        seq = normalize(tokenize(program))
    except PlagshieldError as exc:
        raise HTTPException(status_code=422, detail=str(exc))
    return TokenizeResponse(program_id=program.program_id,
                            tokens=[t.type.name for t in seq.tokens],
                            normalized=True)
