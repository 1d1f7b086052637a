import os
from pathlib import Path

import pytest

import wsbert

SAMPLE = Path(os.environ.get("WSBERT_SAMPLE_DIR", Path(__file__).resolve().parents[2] / "data" / "sample"))


def test_macro_f1_hand_case():
    r = wsbert.macro_f1(["favor", "against", "against", "against"],
                        ["favor", "favor", "against", "against"], 2)
    assert r["f_avg"] == pytest.approx(11 / 15, abs=1e-12)


def test_vast_reports():
    r = wsbert.evaluate_vast(["favor", "neutral", "against"], ["favor", "neutral", "favor"],
                             [False, False, False])
    assert r["zero_shot"]["absent"]
    assert r["few_shot"]["f_avg"] == r["overall"]["f_avg"]


def test_single_template():
    a, b = wsbert.build_single_text("I'm sick of celebrities", "Donald Trump", "Donald John Trump is...")
    assert a == "Text: I'm sick of celebrities Target: Donald Trump"
    assert b == "Donald John Trump is..."
    with pytest.raises(wsbert.WsbertError):
        wsbert.build_single_text("", "t", "w")


def test_budgets():
    assert wsbert.truncate_knowledge(list(range(600))) == list(range(512))
    a, b = wsbert.fit_single_budget(list(range(100)), list(range(600)), 512)
    assert (len(a), len(b)) == (100, 409)


def test_tokenizer_round_trip():
    tok = wsbert.Tokenizer.train(["I love it", "I hate it"], 300)
    text = "Émilie ❤️ hates it!!"
    assert tok.decode(tok.encode(text)) == text


def test_fallback_record():
    rec = wsbert.make_fallback_record("salt preference")
    assert rec["status"] == "fallback"
    assert rec["summary"] == "salt preference"
    assert rec["page_title"] is None


def test_training_helpers():
    assert wsbert.simulate_early_stopping([.5, .6, .6, .6, .6, .6], 3, 100) == (2, 5)
    runs = [(1e-5, 1, .70), (1e-5, 2, .72), (2e-5, 1, .71), (2e-5, 2, .69)]
    assert wsbert.select_grid_point(runs) == 1
    assert wsbert.partition_zero_few(["a", "b", "a"], {"b"}) == ([0, 2], [1])


def test_table():
    text, table = wsbert.emit_table([("WS-BERT-Dual", [("Trump", 85.8), ("Biden", 83.5), ("Sanders", 79.0)])], arity=2)
    assert "82.8" in text
    assert wsbert.round_one_decimal(table["rows"][0]["avg"]) == 82.8


def test_run_sample(tmp_path):
    result = wsbert.run_experiment(SAMPLE / "config.json", out=tmp_path / "run", offline=True)
    assert len(result["reports"]) == 1
    assert result["reports"][0]["column"] == "Trump"
    assert Path(result["report_path"]).exists()
    rows = wsbert.load_report_rows([result["report_path"]])
    assert rows[0][0] == "WS-BERT-Dual"
    assert wsbert.cache_lookup(SAMPLE / "knowledge_cache.jsonl", "Biden")["status"] == "manual"
