"""Features and the 4-16-2 feed-forward network deciding whether a pair is parallel.

Output unit 0 is the probability of "non-parallel", unit 1 of "parallel".
"""
import json
import logging
import math
import random
from dataclasses import dataclass

import numpy as np

from .scoring import doc_length, length_similarity

log = logging.getLogger(__name__)

MODEL_FORMAT = "bitextmine-mlp"
MODEL_VERSION = 1
LAYERS = (4, 16, 2)


def length_confidence(d):
    return 1.0 - math.exp(-0.01 * doc_length(d))


def weight_2(s, t, dictionary):
    w = dictionary.get(s, t)
    if w is not None:
        return w
    return 1.0 if s == t else 0.0


def _best_relations(d, c, dictionary):
    """(token length, max_j weight_2(d_i, c_j)) for every source token."""
    c_set = set(c)
    out = []
    for s in d:
        best = 0.0
        trans = dictionary.translations(s)
        for t in c_set:
            w = trans.get(t)
            if w is None:
                w = 1.0 if s == t else 0.0
            if w > best:
                best = w
        out.append((len(s), best))
    return out


def weight_similarity_2(d, c, dictionary):
    """Length-weighted mean of the strongest relation of each covered source token."""
    if not d or not c:
        return 0.0
    num = den = 0.0
    for length, best in _best_relations(d, c, dictionary):
        if best > 0.0:
            num += length * best
            den += length
    return num / den if den > 0 else 0.0


def weight_confidence_2(d, c, dictionary):
    """Length-weighted share of source tokens with some relation in ``c``."""
    if not d:
        return 0.0
    rel = _best_relations(d, c, dictionary) if c else [(len(s), 0.0) for s in d]
    total = sum(length for length, _ in rel)
    if total == 0:
        return 0.0
    return sum(length for length, best in rel if best > 0.0) / total


def features(d, c, length_model, dictionary):
    """The four classifier inputs for source tokens ``d`` and candidate ``c``."""
    if not d or not c:
        rel = []
    else:
        rel = _best_relations(d, c, dictionary)
    covered = [(length, best) for length, best in rel if best > 0.0]
    total = sum(length for length, _ in rel)
    cov_len = sum(length for length, _ in covered)
    ws2 = sum(length * best for length, best in covered) / cov_len if cov_len else 0.0
    wc2 = cov_len / total if total else 0.0
    return np.array([length_similarity(d, c, length_model), length_confidence(d), ws2, wc2])


@dataclass
class LabeledExample:
    features: np.ndarray
    parallel: bool

    @property
    def target(self):
        return np.array([0.0, 1.0]) if self.parallel else np.array([1.0, 0.0])


def build_dataset(items, sample_fraction=0.2, seed=0):
    """Balanced supervised set from ``(source_key, features, is_parallel)`` items.

    Items are the top candidate per source document. A seeded sample of
    ``sample_fraction`` of them is taken, then the majority class is
    downsampled to the size of the minority class.
    """
    if not 0.0 < sample_fraction <= 1.0:
        raise ValueError("sample_fraction must be in (0, 1]")
    items = list(items)
    rng = random.Random(seed)
    n = len(items)
    k = n if sample_fraction >= 1.0 else int(round(n * sample_fraction))
    sampled = sorted(rng.sample(range(n), k))
    pos = [i for i in sampled if items[i][2]]
    neg = [i for i in sampled if not items[i][2]]
    if not pos or not neg:
        raise ValueError(f"need both classes to train: {len(pos)} parallel, {len(neg)} non-parallel")
    m = min(len(pos), len(neg))
    pos = sorted(rng.sample(pos, m))
    neg = sorted(rng.sample(neg, m))
    keep = sorted(pos + neg)
    log.info("dataset: %d sampled of %d, balanced to %d+%d", k, n, m, m)
    return [LabeledExample(np.asarray(items[i][1], dtype=np.float64), bool(items[i][2])) for i in keep]


def _sigmoid(x):
    return 1.0 / (1.0 + np.exp(-x))


def _softmax(z):
    e = np.exp(z - np.max(z))
    return e / e.sum()


class MlpModel:
    """Linear input, logistic hidden layer, softmax output."""

    def __init__(self, w1, b1, w2, b2):
        self.w1 = np.asarray(w1, dtype=np.float64)
        self.b1 = np.asarray(b1, dtype=np.float64)
        self.w2 = np.asarray(w2, dtype=np.float64)
        self.b2 = np.asarray(b2, dtype=np.float64)
        if self.w1.shape != (LAYERS[1], LAYERS[0]) or self.b1.shape != (LAYERS[1],):
            raise ValueError(f"hidden layer must be {LAYERS[1]}x{LAYERS[0]}")
        if self.w2.shape != (LAYERS[2], LAYERS[1]) or self.b2.shape != (LAYERS[2],):
            raise ValueError(f"output layer must be {LAYERS[2]}x{LAYERS[1]}")
        self.history = []

    @classmethod
    def initial(cls, seed=0):
        rng = np.random.default_rng(seed)
        return cls(rng.normal(0.0, 1.0 / math.sqrt(LAYERS[0]), (LAYERS[1], LAYERS[0])),
                   np.zeros(LAYERS[1]),
                   rng.normal(0.0, 1.0 / math.sqrt(LAYERS[1]), (LAYERS[2], LAYERS[1])),
                   np.zeros(LAYERS[2]))

    @property
    def params(self):
        return [self.w1, self.b1, self.w2, self.b2]

    def forward(self, x):
        h = _sigmoid(self.w1 @ x + self.b1)
        return h, _softmax(self.w2 @ h + self.b2)

    def predict(self, x):
        return self.forward(np.asarray(x, dtype=np.float64))[1]

    def loss(self, x, target):
        return float(-np.sum(target * np.log(self.predict(x))))

    def gradients(self, x, target):
        """Cross-entropy gradients for one example, in :attr:`params` order."""
        h, y = self.forward(x)
        dz2 = y - target
        dh = self.w2.T @ dz2
        dz1 = dh * h * (1.0 - h)
        return [np.outer(dz1, x), dz1, np.outer(dz2, h), dz2]

    def to_json(self):
        return {
            "format": MODEL_FORMAT,
            "version": MODEL_VERSION,
            "layers": list(LAYERS),
            "activations": ["linear", "sigmoid", "softmax"],
            "hidden": {"weights": self.w1.ravel().tolist(), "bias": self.b1.tolist()},
            "output": {"weights": self.w2.ravel().tolist(), "bias": self.b2.tolist()},
            "history": self.history,
        }

    @classmethod
    def from_json(cls, data):
        if data.get("format") != MODEL_FORMAT or data.get("version") != MODEL_VERSION:
            raise ValueError("unsupported classifier model file")
        if list(data.get("layers", ())) != list(LAYERS):
            raise ValueError(f"layer sizes {data.get('layers')} do not match {list(LAYERS)}")
        if data.get("activations") != ["linear", "sigmoid", "softmax"]:
            raise ValueError(f"unsupported activations {data.get('activations')}")
        h, o = data["hidden"], data["output"]
        if len(h["weights"]) != LAYERS[0] * LAYERS[1] or len(o["weights"]) != LAYERS[1] * LAYERS[2]:
            raise ValueError("weight array sizes do not match the layer sizes")
        model = cls(np.reshape(h["weights"], (LAYERS[1], LAYERS[0])), h["bias"],
                    np.reshape(o["weights"], (LAYERS[2], LAYERS[1])), o["bias"])
        model.history = list(data.get("history", []))
        return model

    def save(self, path):
        with open(path, "w", encoding="utf-8") as f:
            json.dump(self.to_json(), f, indent=1)
            f.write("\n")

    @classmethod
    def load(cls, path):
        with open(path, encoding="utf-8") as f:
            return cls.from_json(json.load(f))


def train(examples, epochs=20, learning_rate=0.01, seed=0):
    """Per-example SGD on cross-entropy; ``model.history`` has the mean loss per epoch."""
    if not examples:
        raise ValueError("cannot train on an empty dataset")
    model = MlpModel.initial(seed)
    rng = random.Random(seed)
    order = list(range(len(examples)))
    xs = [ex.features for ex in examples]
    ts = [ex.target for ex in examples]
    for epoch in range(epochs):
        rng.shuffle(order)
        total = 0.0
        for i in order:
            grads = model.gradients(xs[i], ts[i])
            total += model.loss(xs[i], ts[i])
            for p, g in zip(model.params, grads):
                p -= learning_rate * g
        model.history.append(total / len(order))
        log.debug("epoch %d: mean loss %.6f", epoch + 1, model.history[-1])
    return model


def classify(model, feats):
    """Confidence that the pair is parallel."""
    x = np.asarray(feats, dtype=np.float64)
    if x.shape != (LAYERS[0],) or not np.all(np.isfinite(x)):
        raise ValueError(f"features must be {LAYERS[0]} finite values, got {feats!r}")
    return float(model.predict(x)[1])


def accept(confidence, threshold):
    return confidence > threshold
