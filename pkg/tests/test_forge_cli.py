"""The forge command line: build, validate, stats."""

import json

import pytest

from duplexchat.forge.cli import main as forge_main
from duplexchat.forge.cli import parse_mix
from duplexchat.forge.corpus import CorpusStats, dialogue_from_json, read_corpus


@pytest.fixture()
def source_file(tmp_path, sources):
    path = tmp_path / "sources.jsonl"
    with open(path, "w", encoding="utf-8") as fh:
        for src in sources:
            row = {
                "id": src.id,
                "messages": [{"role": r, "content": t} for r, t in src.messages],
            }
            fh.write(json.dumps(row) + "\n")
    return path


def test_parse_mix_aliases():
    mix = parse_mix("basic=1, term=2,regen=0.5")
    assert mix == {
        "basic": 1.0,
        "generation_termination": 2.0,
        "regeneration": 0.5,
    }
    assert parse_mix("topic=1") == {"topic_interweaving": 1.0}
    assert parse_mix("back=1,reset=2") == {"back_on_topic": 1.0, "dialogue_reset": 2.0}


def test_parse_mix_errors():
    with pytest.raises(ValueError):
        parse_mix("basic")
    with pytest.raises(ValueError):
        parse_mix("nonsense=1")
    with pytest.raises(ValueError):
        parse_mix("  ,  ")


def test_build_writes_corpus_and_stats(source_file, tmp_path, capsys):
    out = tmp_path / "corpus.jsonl"
    stats_out = tmp_path / "stats.json"
    code = forge_main(
        [
            "build",
            "--input",
            str(source_file),
            "--out",
            str(out),
            "--seed",
            "7",
            "--limit",
            "30",
            "--stats-out",
            str(stats_out),
        ]
    )
    captured = capsys.readouterr()
    assert code == 0
    assert "dialogues to" in captured.out
    assert "category" in captured.out
    rows = list(read_corpus(out))
    payload = json.loads(stats_out.read_text(encoding="utf-8"))
    assert payload["total"]["count"] == len(rows)
    assert 0 < payload["total"]["count"] + sum(payload["skipped"].values()) <= 30


def test_build_rejects_empty_input(tmp_path, capsys):
    empty = tmp_path / "none.jsonl"
    empty.write_text("", encoding="utf-8")
    out = tmp_path / "corpus.jsonl"
    code = forge_main(["build", "--input", str(empty), "--out", str(out)])
    assert code == 1
    assert "no source dialogues" in capsys.readouterr().err


def test_build_with_custom_mix(source_file, tmp_path):
    out = tmp_path / "basics.jsonl"
    code = forge_main(
        [
            "build",
            "--input",
            str(source_file),
            "--out",
            str(out),
            "--mix",
            "basic=1",
            "--limit",
            "10",
        ]
    )
    assert code == 0
    for obj in read_corpus(out):
        assert obj["category"] == "basic"


def test_validate_clean_corpus(source_file, tmp_path, capsys):
    out = tmp_path / "corpus.jsonl"
    forge_main(
        ["build", "--input", str(source_file), "--out", str(out), "--limit", "20"]
    )
    capsys.readouterr()
    code = forge_main(["validate", str(out)])
    captured = capsys.readouterr()
    assert code == 0
    assert "all 20 dialogues valid" in captured.out


def test_validate_flags_corruption(source_file, tmp_path, capsys):
    out = tmp_path / "corpus.jsonl"
    forge_main(
        ["build", "--input", str(source_file), "--out", str(out), "--limit", "5"]
    )
    lines = out.read_text(encoding="utf-8").splitlines()
    first = json.loads(lines[0])
    first["pairs"][0]["in"] = "far too many words stuffed into one single user slice here"
    lines[0] = json.dumps(first, sort_keys=True, separators=(",", ":"))
    out.write_text("\n".join(lines) + "\n", encoding="utf-8")
    capsys.readouterr()
    code = forge_main(["validate", str(out)])
    captured = capsys.readouterr()
    assert code == 1
    assert "failed validation" in captured.err


def test_stats_matches_recount(source_file, tmp_path, capsys):
    out = tmp_path / "corpus.jsonl"
    forge_main(
        ["build", "--input", str(source_file), "--out", str(out), "--limit", "25"]
    )
    capsys.readouterr()
    code = forge_main(["stats", str(out), "--json"])
    captured = capsys.readouterr()
    assert code == 0
    reported = json.loads(captured.out)

    recount = CorpusStats()
    for obj in read_corpus(out):
        recount.observe(dialogue_from_json(obj))
    assert reported == recount.to_dict()
