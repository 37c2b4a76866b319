"""Rescoring of preliminary candidates by length ratio and dictionary weights.

score(d, c) = length_similarity(d, c) * weight_similarity(d, c). The
dictionary factor is a product over every source token and underflows for
long documents, so candidates are ranked by the log score.
"""
import logging
import math
import statistics
from collections import Counter
from dataclasses import dataclass, field

log = logging.getLogger(__name__)

SIGMA_FLOOR = 1e-6


def doc_length(tokens):
    """Characters of the tokens joined by single spaces."""
    if not tokens:
        return 0
    return sum(len(t) for t in tokens) + len(tokens) - 1


@dataclass(frozen=True)
class LengthModel:
    mu: float
    sigma: float

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError("sigma must be positive")

    def to_json(self):
        return {"mu": self.mu, "sigma": self.sigma}


def fit_length_model(pairs):
    """Mean and sample deviation of target/source character-length ratios."""
    ratios = []
    for p in pairs:
        ls = doc_length(p.src)
        if ls == 0:
            continue
        ratios.append(doc_length(p.tgt) / ls)
    if not ratios:
        raise ValueError("no pair with a non-empty source side")
    mu = statistics.fmean(ratios)
    if len(ratios) < 2:
        log.warning("length model fitted on a single pair; sigma floored at %g", SIGMA_FLOOR)
        sigma = SIGMA_FLOOR
    else:
        sigma = max(statistics.stdev(ratios), SIGMA_FLOOR)
    return LengthModel(mu, sigma)


def length_similarity(d, c, model):
    """Gaussian-shaped similarity of the length ratio to the expected one."""
    ld = doc_length(d)
    if ld == 0:
        return 0.0
    ratio = doc_length(c) / ld
    return math.exp(-((ratio - model.mu) ** 2) / (2.0 * model.sigma ** 2))


def log_weight_similarity(d, c, dictionary):
    """Log of the product over source tokens of mean dictionary weight to ``c``."""
    if not d or not c:
        return -math.inf
    return log_weight_similarity_counts(Counter(d), Counter(c), len(c), dictionary)


def log_weight_similarity_counts(d_counts, c_counts, m, dictionary):
    """:func:`log_weight_similarity` from token counts; ``m`` is the length of c."""
    if not d_counts or m == 0:
        return -math.inf
    total = 0.0
    for s, mult in d_counts.items():
        hits = 0
        acc = 0.0
        for t, w in dictionary.translations(s).items():
            k = c_counts.get(t)
            if k:
                acc += w * k
                hits += k
        acc += (m - hits) * dictionary.null_weight
        total += mult * math.log(acc / m)
    return total


def weight_similarity(d, c, dictionary):
    """prod_i sum_j weight(d_i, c_j) / m, evaluated directly."""
    if not d or not c:
        return 0.0
    m = len(c)
    prod = 1.0
    for s in d:
        prod *= sum(dictionary.weight(s, t) for t in c) / m
    return prod


def log_score(d, c, model, dictionary):
    ls = length_similarity(d, c, model)
    if ls == 0.0:
        return -math.inf
    return math.log(ls) + log_weight_similarity(d, c, dictionary)


def score(d, c, model, dictionary):
    return math.exp(log_score(d, c, model, dictionary))


@dataclass
class Candidate:
    doc_id: str
    distance: float
    log_score: float = None

    @property
    def score(self):
        return math.exp(self.log_score) if self.log_score is not None else None


@dataclass
class CandidateList:
    source_doc_id: str
    candidates: list = field(default_factory=list)

    @property
    def top(self):
        return self.candidates[0] if self.candidates else None


def rescore_candidates(prelim, source_tokens, target_tokens, model, dictionary):
    """Reorder a preliminary list by descending score, stable on retrieval rank.

    ``target_tokens`` maps target doc id to its tokens.
    """
    scored = []
    for rank, cand in enumerate(prelim.candidates):
        ls = log_score(source_tokens, target_tokens[cand.doc_id], model, dictionary)
        scored.append((-ls, rank, Candidate(cand.doc_id, cand.distance, ls)))
    scored.sort(key=lambda x: (x[0], x[1]))
    return CandidateList(prelim.source_doc_id, [c for _, _, c in scored])
