from .datagen import Corpus, CorpusSpec, generate_corpus
from .harness import BenchReport, LoadConfig, preload_corpus, run_load, sweep

__all__ = [
    "Corpus",
    "CorpusSpec",
    "generate_corpus",
    "BenchReport",
    "LoadConfig",
    "preload_corpus",
    "run_load",
    "sweep",
]
