"""Run configuration: defaults, flat TOML-like config files, CLI overrides."""
import dataclasses
import sys
from dataclasses import dataclass, fields

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib


@dataclass
class RunConfig:
    src_lang: str = "cs"
    tgt_lang: str = "en"
    seed: int = 1
    workers: int = 1
    # cleaning and binning
    max_tokens: int = 50
    bin_size: int = 50000
    # word alignment and dictionary
    ibm_iterations: int = 5
    dict_threshold: float = 0.1
    null_weight: float = 1e-9
    # embeddings
    dim: int = 40
    emb_iterations: int = 10
    window: int = 5
    negatives: int = 5
    emb_lr: float = 0.025
    # document vectors
    weighting: str = "tfidf"
    idf_scope: str = "global"
    # nearest neighbours
    n_trees: int = 50
    leaf_capacity: int = 16
    k: int = 20
    search_nodes: int = 2000
    # classifier
    sample_fraction: float = 0.2
    epochs: int = 20
    learning_rate: float = 0.01
    threshold: float = 0.5
    # web ingestion
    min_paragraph_chars: int = 100
    ratio_low: float = 0.01
    ratio_high: float = 100.0

    def validate(self):
        if self.max_tokens < 1 or self.bin_size < 1:
            raise ValueError("max_tokens and bin_size must be >= 1")
        if self.dim < 1 or self.emb_iterations < 1 or self.ibm_iterations < 1:
            raise ValueError("dim and iteration counts must be >= 1")
        if self.weighting not in ("tfidf", "sum"):
            raise ValueError(f"weighting must be 'tfidf' or 'sum', got {self.weighting!r}")
        if self.idf_scope not in ("global", "bin"):
            raise ValueError(f"idf_scope must be 'global' or 'bin', got {self.idf_scope!r}")
        if self.k < 1 or self.n_trees < 1 or self.search_nodes < self.n_trees:
            raise ValueError("need k >= 1, n_trees >= 1 and search_nodes >= n_trees")
        if not 0.0 <= self.threshold <= 1.0:
            raise ValueError("threshold must lie in [0, 1]")
        if not 0.0 < self.sample_fraction <= 1.0:
            raise ValueError("sample_fraction must lie in (0, 1]")
        if not 0 < self.ratio_low < self.ratio_high:
            raise ValueError("need 0 < ratio_low < ratio_high")
        if self.src_lang == self.tgt_lang:
            raise ValueError("source and target language must differ")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")
        return self

    def to_dict(self):
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, data):
        known = {f.name: f for f in fields(cls)}
        unknown = set(data) - set(known)
        if unknown:
            raise ValueError(f"unknown config keys: {', '.join(sorted(unknown))}")
        values = {}
        for key, value in data.items():
            ftype = type(getattr(cls, key))
            values[key] = float(value) if ftype is float else value
        return cls(**values)

    @staticmethod
    def read_file(path):
        """Validated key-value pairs of a flat config file (only the keys present)."""
        with open(path, "rb") as f:
            data = tomllib.load(f)
        nested = [k for k, v in data.items() if isinstance(v, dict)]
        if nested:
            raise ValueError(f"config file must be flat; found tables {nested}")
        data = {k.replace("-", "_"): v for k, v in data.items()}
        known = {f.name for f in fields(RunConfig)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"{path}: unknown config keys: {', '.join(sorted(unknown))}")
        for key, value in data.items():
            want = type(getattr(RunConfig, key))
            if want is float and isinstance(value, int) and not isinstance(value, bool):
                data[key] = float(value)
            elif not isinstance(value, want) or isinstance(value, bool):
                raise ValueError(f"{path}: {key} must be {want.__name__}, got {value!r}")
        return data

    @classmethod
    def from_file(cls, path):
        return cls(**cls.read_file(path))

    def updated(self, **overrides):
        return dataclasses.replace(self, **{k: v for k, v in overrides.items() if v is not None})
