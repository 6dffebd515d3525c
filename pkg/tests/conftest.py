# -*- coding: utf-8 -*-
from pathlib import Path
from typing import List, Tuple

import pytest
from httpx import ASGITransport, AsyncClient

from mrsynth.grammar import WeightedGrammar, load_bundled_grammar, load_grammar
from mrsynth.main import app
from mrsynth.models import ParallelDataset, ParallelRecord

# S -> a S | b: one derivation per string, recursion one rule per level
G1_TEXT = "S -> 'a' S\nS -> 'b'\n"
# S -> S S | x: Catalan-many bracketings
G2_TEXT = "S -> S S\nS -> 'x'\n"
# ambiguous arithmetic with a ternary rule
G3_TEXT = "E -> E '+' E\nE -> E '*' E\nE -> '(' E ')'\nE -> 'n'\n"
PP_TEXT = "NP -> 'n'\nNP -> 'n' 'p' NP\n"
CP_TEXT = "S -> 'v'\nS -> 'v' 'that' VP\nVP -> 'said' S\nVP -> 'ran'\n"
# unit chains S -> T -> F, plus a second lexical path for x
UNIT_TEXT = (
    "S -> S '+' T\nS -> T\nT -> T F\nT -> F\nT -> 'x'\n"
    "F -> 'x'\nF -> 'y'\nF -> '(' S ')'\n"
)

GEOQUERY_TRAIN: List[Tuple[str, str]] = [
    ("what is the capital of texas", "answer ( capital ( loc_2 ( stateid ( texas ) ) ) )"),
    ("where is houston", "answer ( loc_1 ( cityid ( houston , tx ) ) )"),
    ("what states border texas", "answer ( next_to_2 ( stateid ( texas ) ) )"),
    ("list all cities", "answer ( city ( all ) )"),
    ("list all states", "answer ( state ( all ) )"),
    (
        "which states does the mississippi run through",
        "answer ( traverse_1 ( riverid ( mississippi ) ) )",
    ),
    (
        "what is the largest city in texas",
        "answer ( largest ( city ( loc_2 ( stateid ( texas ) ) ) ) )",
    ),
    ("where is seattle", "answer ( loc_1 ( cityid ( seattle , wa ) ) )"),
    ("what is the highest point in ohio", "answer ( high_point_1 ( stateid ( ohio ) ) )"),
    ("list all places", "answer ( place ( all ) )"),
]
GEOQUERY_TEST: List[Tuple[str, str]] = [
    (
        "what is the largest city in ohio",
        "answer ( largest ( city ( loc_2 ( stateid ( ohio ) ) ) ) )",
    ),
    ("where is austin", "answer ( loc_1 ( cityid ( austin , tx ) ) )"),
    ("what states border utah", "answer ( next_to_2 ( stateid ( utah ) ) )"),
    (
        "what states border states bordering texas",
        "answer ( next_to_2 ( next_to_2 ( stateid ( texas ) ) ) )",
    ),
    ("list all cities", "answer ( city ( all ) )"),
]


def make_dataset(pairs: List[Tuple[str, str]]) -> ParallelDataset:
    return ParallelDataset(
        records=[ParallelRecord(sentence=sentence, mr=mr) for sentence, mr in pairs]
    )


def write_tsv(path: Path, pairs: List[Tuple[str, str]]) -> Path:
    path.write_text("".join(f"{sentence}\t{mr}\n" for sentence, mr in pairs), encoding="utf-8")
    return path


@pytest.fixture(scope="session")
def anyio_backend():
    return "asyncio"


@pytest.fixture(scope="session")
def g1() -> WeightedGrammar:
    return load_grammar(G1_TEXT)


@pytest.fixture(scope="session")
def g2() -> WeightedGrammar:
    return load_grammar(G2_TEXT)


@pytest.fixture(scope="session")
def g3() -> WeightedGrammar:
    return load_grammar(G3_TEXT)


@pytest.fixture(scope="session")
def pp_grammar() -> WeightedGrammar:
    return load_grammar(PP_TEXT)


@pytest.fixture(scope="session")
def cp_grammar() -> WeightedGrammar:
    return load_grammar(CP_TEXT)


@pytest.fixture(scope="session")
def unit_grammar() -> WeightedGrammar:
    return load_grammar(UNIT_TEXT)


@pytest.fixture(scope="session")
def geoquery() -> WeightedGrammar:
    return load_bundled_grammar("geoquery")


@pytest.fixture(scope="session")
def scan() -> WeightedGrammar:
    return load_bundled_grammar("scan")


@pytest.fixture(scope="session")
def cfq() -> WeightedGrammar:
    return load_bundled_grammar("cfq")


@pytest.fixture
def geoquery_train() -> ParallelDataset:
    return make_dataset(GEOQUERY_TRAIN)


@pytest.fixture
def geoquery_test() -> ParallelDataset:
    return make_dataset(GEOQUERY_TEST)


@pytest.fixture
def g1_file(tmp_path: Path) -> Path:
    path = tmp_path / "g1.cfg"
    path.write_text(G1_TEXT, encoding="utf-8")
    return path


@pytest.fixture
def geoquery_files(tmp_path: Path) -> Tuple[Path, Path]:
    return (
        write_tsv(tmp_path / "train.tsv", GEOQUERY_TRAIN),
        write_tsv(tmp_path / "test.tsv", GEOQUERY_TEST),
    )


@pytest.fixture
async def client():
    async with AsyncClient(transport=ASGITransport(app=app), base_url="http://test") as client:
        yield client
    app.dependency_overrides.clear()
