"""Corpus ingestion, tokenization, vocabularies and synthetic data."""

from .bpe import BpeModel, apply_bpe, bpe_tokenize, learn_bpe
from .data import Corpus, SentencePair, read_pairs, write_pairs
from .synthetic import (
    DocumentPair,
    SyntheticConfigError,
    SyntheticSpec,
    drift_domain,
    generate_synthetic_corpus,
    generate_synthetic_documents,
    make_cipher_spec,
    read_documents,
    read_gold,
    write_documents,
    write_gold,
)
from .text import script_fraction, segment_sentences, sentence_spans, split_paragraphs, tokenize
from .vocab import BOS_ID, EOS_ID, PAD_ID, RESERVED, UNK_ID, Vocab, build_vocab
