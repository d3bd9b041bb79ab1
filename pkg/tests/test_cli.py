import json

import numpy as np
import pytest
from click.testing import CliRunner

from signstream.cli import cli
from signstream.landmarks import Handedness, RawHandFrame, save_dataset
from signstream.neuralnet import load_model, save_model
from signstream.synthetic import (
    canonical_hand_shapes,
    frame_stream,
    write_store_inputs,
)


@pytest.fixture()
def runner():
    return CliRunner()


@pytest.fixture(scope="module")
def dataset_file(tmp_path_factory):
    """Tiny jittered dataset in the ingestion format."""
    rng = np.random.default_rng(44)
    shapes = canonical_hand_shapes()
    records = []
    for letter in "ABCDEFGHIKLMNOPQRSTUVWXY":
        for _ in range(8):
            pts = shapes[letter] + rng.normal(0.0, 0.01, size=(21, 3))
            records.append((letter, RawHandFrame(points=pts, handedness=Handedness.RIGHT,
                                                 timestamp_ms=0)))
    path = tmp_path_factory.mktemp("data") / "train.jsonl"
    save_dataset(path, records)
    return path


def test_train_and_evaluate(runner, dataset_file, tmp_path):
    out = tmp_path / "model.bin"
    result = runner.invoke(cli, ["train", "--data", str(dataset_file), "--out", str(out),
                                 "--kind", "dense", "--epochs", "5", "--batch", "32",
                                 "--seed", "3"])
    assert result.exit_code == 0, result.output
    assert out.exists()
    assert "epoch   5" in result.output

    net = load_model(out.read_bytes())
    assert net.seed == 3

    result = runner.invoke(cli, ["evaluate", "--data", str(dataset_file),
                                 "--model", str(out)])
    assert result.exit_code == 0, result.output
    assert "accuracy" in result.output


def test_build_posedb_and_translate(runner, tmp_path):
    entries = tmp_path / "entries.jsonl"
    letters = tmp_path / "letters.jsonl"
    write_store_inputs(entries, letters, ["HELLO", "WORLD"])
    out_dir = tmp_path / "posedb"
    result = runner.invoke(cli, ["build-posedb", "--entries", str(entries),
                                 "--letters", str(letters), "--out", str(out_dir),
                                 "--dim", "64"])
    assert result.exit_code == 0, result.output
    assert (out_dir / "manifest.json").exists()

    pose_out = tmp_path / "pose.json"
    result = runner.invoke(cli, ["translate", "--text", "hello qwxzv",
                                 "--store", str(out_dir), "--threshold", "0.9",
                                 "--out", str(pose_out)])
    assert result.exit_code == 0, result.output
    assert "HELLO: retrieved HELLO" in result.output
    assert "QWXZV: fingerspelled" in result.output
    payload = json.loads(pose_out.read_text())
    assert payload["fps"] == 30.0
    assert len(payload["frames"]) > 0

    result = runner.invoke(cli, ["translate", "--text", "the a an",
                                 "--store", str(out_dir)])
    assert result.exit_code == 0
    assert "nothing to sign" in result.output


def test_recognize_file(runner, model, tmp_path):
    model_path = tmp_path / "model.bin"
    model_path.write_bytes(save_model(model))
    frames_path = tmp_path / "frames.jsonl"
    with open(frames_path, "w") as fh:
        for record in frame_stream("HELL", 5, 10):
            fh.write(json.dumps(record) + "\n")
    dict_path = tmp_path / "dict.tsv"
    dict_path.write_text("HELLO\t100\nHELP\t50\n")

    result = runner.invoke(cli, ["recognize-file", "--frames", str(frames_path),
                                 "--model", str(model_path), "--dictionary", str(dict_path),
                                 "--debounce", "5", "--absence", "10", "--letters"])
    assert result.exit_code == 0, result.output
    assert "letter H" in result.output
    assert "word HELL -> HELLO" in result.output
    assert result.output.rstrip().endswith("HELLO")


def test_serve_requires_existing_config(runner):
    result = runner.invoke(cli, ["serve", "--config", "/nonexistent/config.json"])
    assert result.exit_code != 0


def test_env_var_override(runner, dataset_file, tmp_path, monkeypatch):
    out = tmp_path / "model.bin"
    monkeypatch.setenv("SIGNSTREAM_TRAIN_EPOCHS", "2")
    result = runner.invoke(cli, ["train", "--data", str(dataset_file), "--out", str(out),
                                 "--kind", "dense"], auto_envvar_prefix="SIGNSTREAM")
    assert result.exit_code == 0, result.output
    assert "epoch   2" in result.output
    assert "epoch   3" not in result.output
