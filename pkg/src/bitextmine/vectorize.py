"""Document vectors: tf-idf weighted sums of bilingual word vectors."""
import json
import math
from collections import Counter
from dataclasses import dataclass

import numpy as np

from .embeddings import namespaced

TFIDF = "tfidf"
PLAIN = "sum"


class TfIdfModel:
    def __init__(self, doc_count, df):
        self.doc_count = doc_count
        self.df = dict(df)

    def idf(self, word):
        """Smoothed idf; unseen words have df 0."""
        return math.log((1 + self.doc_count) / (1 + self.df.get(word, 0))) + 1.0

    def to_json(self):
        return {"doc_count": self.doc_count, "df": dict(sorted(self.df.items()))}

    @classmethod
    def from_json(cls, data):
        return cls(data["doc_count"], data["df"])

    def save(self, path):
        with open(path, "w", encoding="utf-8") as f:
            json.dump(self.to_json(), f, ensure_ascii=False, sort_keys=True)


def fit_tfidf(docs):
    """Document frequencies over a collection of token sequences."""
    docs = list(docs)
    if not docs:
        raise ValueError("cannot fit tf-idf on an empty collection")
    df = Counter()
    for tokens in docs:
        df.update(set(tokens))
    return TfIdfModel(len(docs), df)


@dataclass
class DocVector:
    doc_id: str
    vector: np.ndarray
    known_token_mass: float

    @property
    def is_zero(self):
        return not np.any(self.vector)


def term_weights(tokens, tfidf=None, mode=TFIDF):
    """{term: weight} with relative term frequency times idf (or tf alone)."""
    n = len(tokens)
    if n == 0:
        return {}
    counts = Counter(tokens)
    if mode == TFIDF:
        return {w: (c / n) * tfidf.idf(w) for w, c in counts.items()}
    if mode == PLAIN:
        return {w: c / n for w, c in counts.items()}
    raise ValueError(f"unknown weighting mode {mode!r}")


def doc_vector(doc_id, tokens, tfidf, emb, lang, mode=TFIDF):
    """Sum over unique terms of weight(term) * word_vector(term).

    Terms without a vector contribute nothing.
    """
    vec = np.zeros(emb.dim)
    known = 0
    counts = Counter(tokens)
    for w, weight in term_weights(tokens, tfidf, mode).items():
        v = emb.get(namespaced(lang, w))
        if v is not None:
            vec += weight * v
            known += counts[w]
    mass = known / len(tokens) if tokens else 0.0
    return DocVector(doc_id, vec, mass)


def doc_matrix(docs, tfidf, emb, lang, mode=TFIDF):
    """Row-stacked vectors for ``docs`` given as (doc_id, tokens) pairs."""
    vectors = [doc_vector(i, toks, tfidf, emb, lang, mode) for i, toks in docs]
    mat = np.vstack([v.vector for v in vectors]) if vectors else np.zeros((0, emb.dim))
    return vectors, mat


def write_vectors(vectors, path):
    with open(path, "w", encoding="utf-8") as f:
        for v in vectors:
            f.write(v.doc_id + "\t" + "\t".join("%.9g" % x for x in v.vector) + "\n")
