from pathlib import Path

import pytest

from bhlcheck.frontend import load_program
from bhlcheck.vcgen import generate_program_vcs, verify_program

ROOT = Path(__file__).resolve().parent.parent
CORPUS = ROOT / "corpus"


def corpus_source(name: str) -> str:
    return (CORPUS / name).read_text()


def load(name: str):
    return load_program(corpus_source(name))


def verify(name: str):
    return verify_program(load(name))


def vcs_of(name: str):
    return generate_program_vcs(load(name))


@pytest.fixture
def repo_root():
    return ROOT
