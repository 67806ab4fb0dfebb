"""Semi-paired cross-modal hashing: training, encoding, Hamming retrieval, MAP/PR."""

from ._rreh import (
    CodeDatabase,
    Corpus,
    IoError,
    Model,
    NumericalError,
    ValidationError,
    __version__,
    evaluate,
    hamming_distance,
    load_corpus,
    pack_codes,
    pr_curve,
    read_fmat,
    save_corpus,
    split_corpus,
    synth_corpus,
    train,
    write_fmat,
)

__all__ = [
    "CodeDatabase",
    "Corpus",
    "IoError",
    "Model",
    "NumericalError",
    "ValidationError",
    "__version__",
    "evaluate",
    "hamming_distance",
    "load_corpus",
    "pack_codes",
    "pr_curve",
    "read_fmat",
    "save_corpus",
    "split_corpus",
    "synth_corpus",
    "train",
    "write_fmat",
]
