import math
import os
from pathlib import Path

import pytest

import minimt

DATA = Path(os.environ.get("MINIMT_DATA_DIR", Path(__file__).resolve().parents[2] / "data")) / "synthetic"


def test_version_and_tokenize():
    assert minimt.__version__ == "0.1.0"
    assert minimt.tokenize("Hello, world!") == ["Hello", ",", "world", "!"]
    assert minimt.split_chars("ab") == ["a", "b"]


def test_bleu_and_ter():
    assert minimt.bleu(["a b c d"], ["a b c d"])["score"] == 100.0
    report = minimt.bleu(["the cat"], ["the the the"], max_n=1)
    assert report["matches"] == [1] and report["totals"] == [3]
    assert minimt.ter(["a b c d"], ["a c d b"])["score"] == 25.0


def test_classification_stats_table():
    s = minimt.classification_stats([[1275, 90], [220, 1291]])
    assert s["precision"] == pytest.approx(0.9341, abs=1e-4)
    assert s["recall"] == pytest.approx(0.8528, abs=1e-4)
    assert s["kappa"] == pytest.approx(0.78, abs=0.01)
    undefined = minimt.classification_stats([[0, 0], [0, 5]], positive="Other")
    assert undefined["precision"] == "undefined"


def test_language_model_roundtrip():
    lm = minimt.LanguageModel.train(["a b c", "a b d", "b c"], order=2)
    assert lm.order == 2
    total = sum(10 ** lm.logprob(["a"], w) for w in lm.predictable_words())
    assert math.isclose(total, 1.0, abs_tol=1e-9)
    again = minimt.LanguageModel.from_arpa(lm.to_arpa())
    assert again.to_arpa() == lm.to_arpa()


def test_rules():
    rules = minimt.mine_rules(["NP VP NP", "NP NP VP"])
    assert minimt.classify_rule(rules, "NP VP NP") == "Simple"
    assert minimt.classify_rule(rules, "VP") == "Other"


def test_errors_carry_a_kind():
    with pytest.raises(minimt.MinimtError) as info:
        minimt.bleu([], [])
    assert info.value.kind == "data"
    with pytest.raises(minimt.MinimtError) as info:
        minimt.Translator.load("/nonexistent/model")
    assert info.value.kind == "model"
    with pytest.raises(minimt.MinimtError) as info:
        minimt.classification_stats([[1, 0], [0, 1]], positive="Maybe")
    assert info.value.kind == "usage"


def test_cli_exit_codes_and_translator(tmp_path):
    assert minimt.run_cli([]) == 1
    assert minimt.run_cli(["evaluate", "--ref", str(tmp_path / "missing"), "--hyp", "x"]) == 1
    corpus = tmp_path / "corpus"
    code = minimt.run_cli(["preprocess", "--src", str(DATA / "corpus.en"), "--tgt", str(DATA / "corpus.hi"),
                           "--out", str(corpus), "--src-lang", "en", "--tgt-lang", "hi"])
    assert code == 0
    assert minimt.run_cli(["train", "--system", "smt", "--corpus", str(corpus), "--out", str(tmp_path / "smt")]) == 0
    t = minimt.Translator.load(str(tmp_path / "smt"))
    assert t.system == "smt" and t.src_lang == "en"
    first = (corpus / "corpus.src").read_text(encoding="utf-8").splitlines()[0]
    assert t.translate(first).split()
    assert t.translate("") == ""
