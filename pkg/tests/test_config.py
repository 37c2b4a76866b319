import pytest

from bitextmine.cli import _config, build_parser
from bitextmine.config import RunConfig


def test_defaults_validate():
    cfg = RunConfig().validate()
    assert (cfg.k, cfg.n_trees, cfg.search_nodes, cfg.threshold) == (20, 50, 2000, 0.5)
    assert (cfg.dim, cfg.window, cfg.negatives, cfg.epochs, cfg.learning_rate) == (40, 5, 5, 20, 0.01)


@pytest.mark.parametrize("override", [
    {"weighting": "bm25"}, {"idf_scope": "corpus"}, {"threshold": 1.5}, {"sample_fraction": 0.0},
    {"search_nodes": 10}, {"tgt_lang": "cs"}, {"workers": 0}, {"dim": 0}, {"ratio_low": 0.0},
])
def test_invalid_values(override):
    with pytest.raises(ValueError):
        RunConfig().updated(**override).validate()


def test_file_and_cli_precedence(tmp_path):
    path = tmp_path / "run.toml"
    path.write_text('k = 5\nthreshold = 0.9\nidf-scope = "bin"\nlearning_rate = 1\n', encoding="utf-8")
    assert RunConfig.read_file(path) == {"k": 5, "threshold": 0.9, "idf_scope": "bin", "learning_rate": 1.0}
    args = build_parser().parse_args(["align", "--dataset", "d", "--artifacts", "a", "--out", "o",
                                      "--config", str(path), "--threshold", "0.99"])
    base = RunConfig(n_trees=7, search_nodes=70)
    cfg = _config(args, base)
    assert (cfg.k, cfg.threshold, cfg.idf_scope) == (5, 0.99, "bin")
    # keys absent from the file keep the base values
    assert (cfg.n_trees, cfg.search_nodes) == (7, 70)


def test_swap_and_bad_files(tmp_path):
    args = build_parser().parse_args(["train", "--seed-corpus", "s", "--out", "o", "--swap"])
    cfg = _config(args)
    assert (cfg.src_lang, cfg.tgt_lang) == ("en", "cs")
    bad = tmp_path / "bad.toml"
    bad.write_text("no_such_key = 1\n", encoding="utf-8")
    with pytest.raises(ValueError, match="no_such_key"):
        RunConfig.read_file(bad)
    bad.write_text('k = "many"\n', encoding="utf-8")
    with pytest.raises(ValueError, match="k must be int"):
        RunConfig.read_file(bad)
    bad.write_text("[section]\nk = 1\n", encoding="utf-8")
    with pytest.raises(ValueError, match="flat"):
        RunConfig.read_file(bad)
