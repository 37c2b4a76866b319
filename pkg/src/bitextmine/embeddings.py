"""Bilingual word vectors.

A bilingual skip-gram with negative sampling trained on a word-aligned
parallel corpus: every token predicts its monolingual window and, through
each alignment link, the window around the linked token on the other side.
Words of both languages live in one table, namespaced as ``<lang>:<word>``.
"""
import logging
import re
import unicodedata

import numba
import numpy as np

log = logging.getLogger(__name__)

NUMBER = "0"
UNK = "<unk>"
_DIGITS = re.compile(r"\d+")


def _is_known_char(ch):
    cat = unicodedata.category(ch)
    return cat[0] in "LNPS"


def normalize_for_embeddings(tokens):
    """Replace digit runs by "0" and tokens made only of unknown symbols by <unk>."""
    out = []
    for tok in tokens:
        if not any(_is_known_char(ch) for ch in tok):
            out.append(UNK)
        else:
            out.append(_DIGITS.sub(NUMBER, tok))
    return out


def namespaced(lang, word):
    return f"{lang}:{word}"


class EmbeddingFormatError(ValueError):
    def __init__(self, path, lineno, message):
        super().__init__(f"{path}:{lineno}: {message}")
        self.lineno = lineno


class EmbeddingTable:
    def __init__(self, words, vectors):
        vectors = np.asarray(vectors, dtype=np.float64)
        if vectors.ndim != 2 or vectors.shape[0] != len(words):
            raise ValueError("vectors must have one row per word")
        self.words = list(words)
        self.vectors = vectors
        self.index = {w: i for i, w in enumerate(self.words)}
        if len(self.index) != len(self.words):
            raise ValueError("duplicate words in embedding table")

    @property
    def dim(self):
        return self.vectors.shape[1]

    def __len__(self):
        return len(self.words)

    def __contains__(self, word):
        return word in self.index

    def get(self, word):
        """Vector for ``word`` or None when absent."""
        i = self.index.get(word)
        return None if i is None else self.vectors[i]

    def cosine(self, a, b):
        va, vb = self.get(a), self.get(b)
        return float(va @ vb / (np.linalg.norm(va) * np.linalg.norm(vb)))

    def save(self, path):
        with open(path, "w", encoding="utf-8") as f:
            f.write(f"{len(self.words)} {self.dim}\n")
            for w, v in zip(self.words, self.vectors):
                f.write(w + " " + " ".join("%.9g" % x for x in v) + "\n")

    @classmethod
    def load(cls, path):
        with open(path, encoding="utf-8") as f:
            header = f.readline().split()
            if len(header) != 2 or not all(h.isdigit() for h in header):
                raise EmbeddingFormatError(path, 1, "header must be '<count> <dim>'")
            count, dim = int(header[0]), int(header[1])
            words, rows = [], []
            for lineno, line in enumerate(f, 2):
                parts = line.rstrip("\n").split(" ")
                if parts == [""]:
                    continue
                if len(parts) != dim + 1:
                    raise EmbeddingFormatError(path, lineno, f"expected {dim} values, got {len(parts) - 1}")
                try:
                    rows.append([float(x) for x in parts[1:]])
                except ValueError:
                    raise EmbeddingFormatError(path, lineno, "non-numeric vector component") from None
                words.append(parts[0])
        if len(words) != count:
            raise EmbeddingFormatError(path, 1, f"header announces {count} rows, found {len(words)}")
        return cls(words, np.array(rows, dtype=np.float64).reshape(len(words), dim))


# -- negative sampling objective ----------------------------------------------

def sigmoid(x):
    return 1.0 / (1.0 + np.exp(-x))


def sgns_loss(u, v_pos, v_negs):
    """-log s(u.v_pos) - sum log s(-u.v_neg) for one (center, context) pair."""
    return float(-np.log(sigmoid(u @ v_pos)) - np.sum(np.log(sigmoid(-(v_negs @ u)))))


def sgns_grads(u, v_pos, v_negs):
    """Gradients of :func:`sgns_loss` w.r.t. u, v_pos and each row of v_negs."""
    g_pos = sigmoid(u @ v_pos) - 1.0
    g_neg = sigmoid(v_negs @ u)
    grad_u = g_pos * v_pos + g_neg @ v_negs
    return grad_u, g_pos * u, np.outer(g_neg, u)


@numba.njit(cache=True)
def _sgns_step(syn0, syn1, center, context, negs, n_negs, lr, work):
    """One SGD step on (center, context) with the given negatives.

    Output vectors are updated in turn; the input vector accumulates its
    gradient in ``work`` and is updated once at the end.
    """
    dim = syn0.shape[1]
    for d in range(dim):
        work[d] = 0.0
    for k in range(n_negs + 1):
        if k == 0:
            target = context
            label = 1.0
        else:
            target = negs[k - 1]
            if target == context:
                continue
            label = 0.0
        f = 0.0
        for d in range(dim):
            f += syn0[center, d] * syn1[target, d]
        if f > 30.0:
            s = 1.0
        elif f < -30.0:
            s = 0.0
        else:
            s = 1.0 / (1.0 + np.exp(-f))
        g = (label - s) * lr
        for d in range(dim):
            work[d] += g * syn1[target, d]
            syn1[target, d] += g * syn0[center, d]
    for d in range(dim):
        syn0[center, d] += work[d]


@numba.njit(cache=True)
def _draw_negatives(table, n, out):
    for k in range(n):
        out[k] = table[np.random.randint(table.shape[0])]


@numba.njit(cache=True)
def _train_kernel(syn0, syn1, src_tok, src_off, tgt_tok, tgt_off, link_src, link_tgt, link_off,
                  src_table, tgt_table, iterations, window, negatives, lr0, seed, mono_count,
                  cross_count):
    np.random.seed(seed)
    n_pairs = src_off.shape[0] - 1
    total = iterations * (src_tok.shape[0] + tgt_tok.shape[0])
    done = 0
    work = np.zeros(syn0.shape[1])
    negs = np.zeros(negatives, dtype=np.int64)
    min_lr = lr0 * 1e-4
    for _ in range(iterations):
        for p in range(n_pairs):
            s0, s1 = src_off[p], src_off[p + 1]
            t0, t1 = tgt_off[p], tgt_off[p + 1]
            l0, l1 = link_off[p], link_off[p + 1]
            for side in range(2):
                if side == 0:
                    a0, a1, b0, b1 = s0, s1, t0, t1
                    own, other = src_tok, tgt_tok
                    own_table, other_table = src_table, tgt_table
                else:
                    a0, a1, b0, b1 = t0, t1, s0, s1
                    own, other = tgt_tok, src_tok
                    own_table, other_table = tgt_table, src_table
                for i in range(a1 - a0):
                    lr = lr0 * (1.0 - done / (total + 1.0))
                    if lr < min_lr:
                        lr = min_lr
                    done += 1
                    center = own[a0 + i]
                    # effective window drawn uniformly from 1..window, as in word2vec
                    w = 1 + np.random.randint(window) if window > 0 else 0
                    lo = max(0, i - w)
                    hi = min(a1 - a0, i + w + 1)
                    for j in range(lo, hi):
                        if j == i:
                            continue
                        _draw_negatives(own_table, negatives, negs)
                        _sgns_step(syn0, syn1, center, own[a0 + j], negs, negatives, lr, work)
                        mono_count[center] += 1
                    for l in range(l0, l1):
                        if side == 0:
                            mine, theirs = link_src[l], link_tgt[l]
                        else:
                            mine, theirs = link_tgt[l], link_src[l]
                        if mine != i:
                            continue
                        lo = max(0, theirs - w)
                        hi = min(b1 - b0, theirs + w + 1)
                        for j in range(lo, hi):
                            _draw_negatives(other_table, negatives, negs)
                            _sgns_step(syn0, syn1, center, other[b0 + j], negs, negatives, lr, work)
                            cross_count[center] += 1


def _noise_table(ids, counts, size):
    """Unigram^0.75 sampling table over the given word ids."""
    weights = counts[ids].astype(np.float64) ** 0.75
    weights /= weights.sum()
    reps = np.floor(np.cumsum(weights) * size + 0.5).astype(np.int64)
    reps = np.diff(np.concatenate([[0], reps]))
    return np.repeat(ids, reps)


class TrainStats:
    def __init__(self, words, mono, cross):
        self.mono = dict(zip(words, mono.tolist()))
        self.cross = dict(zip(words, cross.tolist()))


def train_biskip(pairs, alignments, src_lang="cs", tgt_lang="en", dim=40, iterations=10,
                 window=5, negatives=5, lr=0.025, seed=1, table_size=1_000_000,
                 return_stats=False):
    """Train bilingual skip-gram vectors on normalised, word-aligned pairs.

    ``alignments`` holds one set of (source index, target index) links per
    pair; pass empty sets for monolingual-only training.
    """
    if dim < 1:
        raise ValueError(f"dim must be >= 1, got {dim}")
    if iterations < 1:
        raise ValueError(f"iterations must be >= 1, got {iterations}")
    if window < 0 or negatives < 0:
        raise ValueError("window and negatives must be non-negative")
    if len(alignments) != len(pairs):
        raise ValueError("need one alignment per sentence pair")

    index = {}
    counts = []

    def ids_of(tokens, lang):
        out = []
        for tok in tokens:
            w = namespaced(lang, tok)
            i = index.get(w)
            if i is None:
                i = index[w] = len(counts)
                counts.append(0)
            counts[i] += 1
            out.append(i)
        return out

    src_ids, tgt_ids, src_off, tgt_off = [], [], [0], [0]
    link_src, link_tgt, link_off = [], [], [0]
    for pair, links in zip(pairs, alignments):
        src_ids.extend(ids_of(pair.src, src_lang))
        tgt_ids.extend(ids_of(pair.tgt, tgt_lang))
        src_off.append(len(src_ids))
        tgt_off.append(len(tgt_ids))
        for i, j in sorted(links):
            if not (0 <= i < len(pair.src) and 0 <= j < len(pair.tgt)):
                raise ValueError(f"alignment link {i}-{j} outside sentence bounds")
            link_src.append(i)
            link_tgt.append(j)
        link_off.append(len(link_src))
    if not index:
        raise ValueError("cannot train embeddings on an empty corpus")

    words = list(index)
    counts = np.asarray(counts, dtype=np.int64)
    is_src = np.array([w.startswith(src_lang + ":") for w in words])
    src_vocab = np.flatnonzero(is_src)
    tgt_vocab = np.flatnonzero(~is_src)
    src_table = _noise_table(src_vocab, counts, table_size) if len(src_vocab) else np.zeros(1, np.int64)
    tgt_table = _noise_table(tgt_vocab, counts, table_size) if len(tgt_vocab) else np.zeros(1, np.int64)

    rng = np.random.default_rng(seed)
    syn0 = (rng.random((len(words), dim)) - 0.5) / dim
    syn1 = np.zeros((len(words), dim))
    mono = np.zeros(len(words), dtype=np.int64)
    cross = np.zeros(len(words), dtype=np.int64)
    as_arr = lambda xs: np.asarray(xs, dtype=np.int64)
    _train_kernel(syn0, syn1, as_arr(src_ids), as_arr(src_off), as_arr(tgt_ids), as_arr(tgt_off),
                  as_arr(link_src), as_arr(link_tgt), as_arr(link_off), src_table, tgt_table,
                  iterations, window, negatives, lr, int(seed) % (2**31 - 1), mono, cross)
    table = EmbeddingTable(words, syn0)
    log.info("trained %d-dim vectors for %d words", dim, len(words))
    if return_stats:
        return table, TrainStats(words, mono, cross)
    return table
