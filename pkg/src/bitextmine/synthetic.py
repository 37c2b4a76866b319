"""A synthetic language pair for desk-scale experiments.

Two artificial languages with distinct orthographies share a lexicon of
concepts grouped into topics. Sentences are drawn topic-wise, so documents
of one topic have similar word vectors and only a dictionary tells them
apart. Translation adds synonyms, polysemy, dropped and inserted function
words, local reordering and a little lexical noise.
"""
import random

SRC_ONSETS = ["b", "c", "č", "d", "h", "ch", "j", "k", "l", "m", "n", "p", "r", "ř", "s", "š",
              "t", "v", "z", "ž", "st", "pr", "kr", "tr", "zd", "sl", "dř", "ml"]
SRC_VOWELS = ["a", "á", "e", "é", "ě", "i", "í", "o", "u", "ů", "y", "ou"]
SRC_CODAS = ["", "", "", "", "n", "k", "l", "s", "t", "j", "ch"]
TGT_ONSETS = ["b", "c", "d", "f", "g", "h", "k", "l", "m", "n", "p", "r", "s", "t", "w", "th",
              "sh", "ch", "br", "gr", "st", "pl", "wh", "fr"]
TGT_VOWELS = ["a", "e", "i", "o", "u", "ea", "ou", "ee", "ai", "oo", "y"]
TGT_CODAS = ["", "", "", "ng", "nd", "rt", "s", "t", "ll", "ck", "x", "w"]

N_FUNCTION = 24
N_MAPPED_FUNCTION = 16


def _word(rng, onsets, vowels, codas, syllables):
    return "".join(rng.choice(onsets) + rng.choice(vowels) for _ in range(syllables)) + rng.choice(codas)


def _zipf_weights(n, s=1.0):
    return [1.0 / (r + 1) ** s for r in range(n)]


def detokenize(tokens):
    out = ""
    for tok in tokens:
        if out and tok not in ".,;:!?":
            out += " "
        out += tok
    return out[:1].upper() + out[1:]


class LanguagePair:
    """Lexicon and sentence generator; fully determined by ``seed``."""

    def __init__(self, seed=7, n_topics=120, words_per_topic=40, n_general=1200,
                 synonym_rate=0.15, polysemy_rate=0.08, loose_rate=0.10, src_lang="cs", tgt_lang="en"):
        rng = random.Random(seed)
        self.src_lang = src_lang
        self.tgt_lang = tgt_lang
        self.n_topics = n_topics
        self.loose_rate = loose_rate
        n_concepts = n_topics * words_per_topic + n_general

        def fresh(onsets, vowels, codas, taken):
            while True:
                w = _word(rng, onsets, vowels, codas, rng.choice([1, 2, 2, 2, 3, 3]))
                if len(w) > 1 and w not in taken:
                    taken.add(w)
                    return w

        src_taken, tgt_taken = set(), set()
        self.src_function = [fresh(SRC_ONSETS, SRC_VOWELS, [""], src_taken) for _ in range(N_FUNCTION)]
        self.tgt_function = [fresh(TGT_ONSETS, TGT_VOWELS, [""], tgt_taken) for _ in range(N_FUNCTION)]
        self.concept_src = []  # list of synonyms per concept
        self.concept_tgt = []
        for c in range(n_concepts):
            syn = [fresh(SRC_ONSETS, SRC_VOWELS, SRC_CODAS, src_taken)]
            if rng.random() < synonym_rate:
                syn.append(fresh(SRC_ONSETS, SRC_VOWELS, SRC_CODAS, src_taken))
            self.concept_src.append(syn)
            if c > 0 and rng.random() < polysemy_rate:
                self.concept_tgt.append(self.concept_tgt[rng.randrange(c)])
            else:
                self.concept_tgt.append(fresh(TGT_ONSETS, TGT_VOWELS, TGT_CODAS, tgt_taken))
        ids = list(range(n_concepts))
        rng.shuffle(ids)
        self.topics = [ids[t * words_per_topic:(t + 1) * words_per_topic] for t in range(n_topics)]
        self.general = ids[n_topics * words_per_topic:]
        self._topic_w = _zipf_weights(words_per_topic, 0.9)
        self._general_w = _zipf_weights(len(self.general), 1.0)
        self._function_w = _zipf_weights(N_FUNCTION, 1.1)

    def lexicon(self):
        """Known (source word, target word) translation pairs."""
        pairs = set()
        for syn, tgt in zip(self.concept_src, self.concept_tgt):
            for s in syn:
                pairs.add((s, tgt))
        for i in range(N_MAPPED_FUNCTION):
            pairs.add((self.src_function[i], self.tgt_function[i]))
        return pairs

    def _concepts(self, rng, topic, n):
        out = []
        for _ in range(n):
            if rng.random() < 0.7:
                out.append(rng.choices(self.topics[topic], self._topic_w)[0])
            else:
                out.append(rng.choices(self.general, self._general_w)[0])
        return out

    def _length(self, rng):
        return max(1, min(40, int(rng.lognormvariate(1.6, 0.8))))

    def sentence_tokens(self, rng, topic=None):
        """(source tokens, target tokens) of one parallel sentence."""
        if topic is None:
            topic = rng.randrange(self.n_topics)
        src, tgt = [], []
        for c in self._concepts(rng, topic, self._length(rng)):
            if rng.random() < 0.05:
                num = str(rng.randint(1, 2100))
                src.append(num)
                tgt.append(num)
            s_word = rng.choice(self.concept_src[c])
            t_word = self.concept_tgt[c]
            # lexical noise
            r = rng.random()
            if r < self.loose_rate:
                # free translation: a related word of the same topic
                src.append(s_word)
                tgt.append(self.concept_tgt[rng.choice(self.topics[topic])])
            elif r < self.loose_rate + 0.03:
                src.append(s_word)
            elif r < self.loose_rate + 0.06:
                src.append(s_word)
                tgt.append(self.concept_tgt[rng.choices(self.general, self._general_w)[0]])
                tgt.append(t_word)
            else:
                if rng.random() < 0.3:
                    tgt.append(rng.choice(self.tgt_function[N_MAPPED_FUNCTION:]))
                src.append(s_word)
                tgt.append(t_word)
                # local reordering
                if len(src) > 1 and len(tgt) > 1 and rng.random() < 0.15:
                    tgt[-1], tgt[-2] = tgt[-2], tgt[-1]
            if rng.random() < 0.4:
                f = rng.choices(range(N_FUNCTION), self._function_w)[0]
                src.append(self.src_function[f])
                if f < N_MAPPED_FUNCTION:
                    tgt.append(self.tgt_function[f])
            if rng.random() < 0.06:
                src.append(",")
                tgt.append(",")
        src.append(".")
        tgt.append(".")
        return src, tgt

    def sentence_pair(self, rng, topic=None):
        s, t = self.sentence_tokens(rng, topic)
        return detokenize(s), detokenize(t)

    def corpus(self, n, seed=0):
        rng = random.Random(seed)
        return [self.sentence_pair(rng) for _ in range(n)]

    def monolingual(self, lang, n, seed=0):
        """``n`` sentences in one language with no counterpart anywhere."""
        rng = random.Random(seed)
        side = 0 if lang == self.src_lang else 1
        return [self.sentence_pair(rng)[side] for _ in range(n)]

    def paragraph_pair(self, rng, n_sentences=4):
        topic = rng.randrange(self.n_topics)
        pairs = [self.sentence_pair(rng, topic) for _ in range(n_sentences)]
        return " ".join(p[0] for p in pairs), " ".join(p[1] for p in pairs)


def mini_corpus(n_pairs=40000, seed=11, lang_seed=7):
    """The bundled desk-scale seed corpus as raw (source, target) strings."""
    return LanguagePair(lang_seed).corpus(n_pairs, seed)


def noisy_dataset(lp, n_pairs, n_noise_src, n_noise_tgt, n_bins, seed=0):
    """Binned documents with planted parallel pairs and unpaired noise.

    Returns (documents, gold) where documents are (bin_id, lang, doc_id, text)
    tuples and gold holds (bin_id, source_id, target_id) triples.
    """
    rng = random.Random(seed)
    docs, gold = [], []
    for b in range(n_bins):
        bin_id = f"dom{b:03d}"
        rows = []
        for i in range(n_pairs):
            s, t = lp.sentence_pair(rng)
            rows.append((bin_id, lp.src_lang, f"p{b}-{i}s", s))
            rows.append((bin_id, lp.tgt_lang, f"p{b}-{i}t", t))
            gold.append((bin_id, f"p{b}-{i}s", f"p{b}-{i}t"))
        for i in range(n_noise_src):
            rows.append((bin_id, lp.src_lang, f"n{b}-{i}s", lp.sentence_pair(rng)[0]))
        for i in range(n_noise_tgt):
            rows.append((bin_id, lp.tgt_lang, f"n{b}-{i}t", lp.sentence_pair(rng)[1]))
        rng.shuffle(rows)
        docs.extend(rows)
    return docs, gold
