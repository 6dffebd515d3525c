# -*- coding: utf-8 -*-
from typing import Dict, List, Literal, Optional, Tuple

from pydantic import BaseModel, Field, field_validator, model_validator

from mrsynth import config


class Status(BaseModel):
    message: str
    success: bool


class EstimationConfig(BaseModel):
    mode: Literal["mle", "uniform"] = "mle"
    smoothing: float = Field(default=0.0, ge=0.0)
    skip_over_cap: bool = True
    cap: Optional[int] = Field(default=None, ge=1)


class EstimationReport(BaseModel):
    mode: str
    smoothing: float = 0.0
    instances: int = 0
    distinct_instances: int = 0
    parsed: int = 0
    skipped_unparseable: int = 0
    skipped_over_cap: int = 0
    unobserved_nonterminals: List[str] = []
    unknown_tokens: List[str] = []


class DistributionComparison(BaseModel):
    deltas: Dict[int, float]
    total_variation: Dict[str, float]


class SampleConfig(BaseModel):
    count: int = Field(ge=1)
    max_depth: int = Field(default_factory=lambda: config.SAMPLE_MAX_DEPTH, ge=1)
    max_len: int = Field(default_factory=lambda: config.SAMPLE_MAX_LEN, ge=1)
    budget: Optional[int] = None
    seed: int = Field(default_factory=lambda: config.DEFAULT_SEED, ge=0, lt=2**64)
    exclude: List[str] = []
    post_filter: Optional[str] = None

    @model_validator(mode="after")
    def check_budget(self) -> "SampleConfig":
        if self.budget is None:
            self.budget = config.SAMPLE_BUDGET_FACTOR * self.count
        if self.budget < self.count:
            raise ValueError(f"budget ({self.budget}) must be at least count ({self.count})")
        return self


class SampleStats(BaseModel):
    requested: int
    returned: int = 0
    attempts: int = 0
    budget: int = 0
    rejected_by_reason: Dict[str, int] = {}
    budget_exhausted: bool = False
    language_size: Optional[int] = None
    distinct_exhausted: bool = False


class SampleRecord(BaseModel):
    mr: str
    logprob: float
    depth: Dict[str, int]


class EnumerationResult(BaseModel):
    finite: bool
    count: int
    max_len: Optional[int] = None


class CoverageReport(BaseModel):
    side: Literal["english", "mr"]
    instances: int
    avg_length: float
    ngram_coverage: Dict[int, float]
    instance_coverage: float
    structure_coverage: Optional[float] = None
    depth_histogram: Optional[Dict[str, Dict[int, int]]] = None
    skipped_unparseable: int = 0


class StructureCoverage(BaseModel):
    percentage: float
    uncovered: List[Tuple[str, Tuple[str, ...]]]
    skipped_unparseable: int = 0


class PerplexityReport(BaseModel):
    instances: int
    total_logprob: float
    token_count: int
    perplexity: Optional[float]
    unparseable: int = 0
    zero_probability: int = 0
    instance_nll: List[Optional[float]] = []


class DatasetReport(BaseModel):
    """Table-style statistics: one row per training set, an english and an mr side per row."""

    ngram_orders: List[int]
    rows: Dict[str, Dict[str, CoverageReport]]
    perplexity: Optional[PerplexityReport] = None


class ParallelRecord(BaseModel):
    sentence: str
    mr: str
    origin: Literal["original", "synthetic"] = "original"

    @field_validator("mr")
    @classmethod
    def mr_not_empty(cls, value: str) -> str:
        if not value.strip():
            raise ValueError("mr must not be empty")
        return value


class ParallelDataset(BaseModel):
    records: List[ParallelRecord] = []

    def __len__(self) -> int:
        return len(self.records)

    def mrs(self) -> List[str]:
        return [record.mr for record in self.records]

    def sentences(self) -> List[str]:
        return [record.sentence for record in self.records]


class BacktranslatorSpec(BaseModel):
    kind: Literal["http", "command", "echo-stub", "table-stub"]
    endpoint: Optional[str] = None
    command: Optional[List[str]] = None
    mapping_path: Optional[str] = None
    batch_size: int = Field(default_factory=lambda: config.BACKTRANSLATOR_BATCH_SIZE, ge=1)
    timeout: float = Field(default_factory=lambda: float(config.REQUESTS_DEFAULT_TIMEOUT), gt=0)
    concurrency: int = Field(default_factory=lambda: config.BACKTRANSLATOR_CONCURRENCY, ge=1)

    @model_validator(mode="after")
    def check_target(self) -> "BacktranslatorSpec":
        if self.kind == "http" and not self.endpoint:
            raise ValueError("http backtranslator needs an endpoint")
        if self.kind == "command" and not self.command:
            raise ValueError("command backtranslator needs a command line")
        if self.kind == "table-stub" and not self.mapping_path:
            raise ValueError("table-stub backtranslator needs a mapping file")
        return self


class BacktranslateRequest(BaseModel):
    mrs: List[str]


class BacktranslateResponse(BaseModel):
    sentences: List[str]


class RunManifest(BaseModel):
    grammar_sha256: str
    weights_mode: Literal["mle-corpus", "uniform", "weighted-grammar-file"]
    corpus_paths: List[str]
    seed: int
    requested: int
    returned: int
    rejected_by_reason: Dict[str, int]
    skipped_unparseable: int
    layout: Literal["concat", "pretrain"]
    version: str
    grammar_path: str
    weights_path: Optional[str] = None
    dataset_path: str
    smoothing: float = 0.0
    sample_config: SampleConfig
    backtranslator: BacktranslatorSpec
    outputs: List[str]
