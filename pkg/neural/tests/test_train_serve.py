"""Training convergence, metrics, and the wire-protocol endpoint."""

import io
import json
import subprocess
import sys

import numpy as np
import pytest
import torch

from tfidet.cli import main
from tfidet.data import load_dataset
from tfidet.model import ModelConfig, load_checkpoint, save_checkpoint
from tfidet.serve import detect_file, serve
from tfidet.train import TrainConfig, evaluate, train

MC = ModelConfig(side=128, grid=32, num_classes=1, class_names=("lines",))
TC = TrainConfig(epochs=60, seed=0)


@pytest.fixture(scope="session")
def trained(line_dataset):
    ds = load_dataset(line_dataset)
    model, metrics = train(ds, MC, TC)
    return ds, model, metrics


def test_training_converges_on_easy_lines(trained):
    _, _, metrics = trained
    assert metrics["final_loss"] < 0.5 * metrics["first_loss"]
    assert metrics["recall"] >= 0.7


def test_training_is_repeatable(line_dataset, trained):
    ds, _, metrics = trained
    _, again = train(ds, MC, TC)
    assert again["recall"] == pytest.approx(metrics["recall"], abs=1e-9)
    assert again["final_loss"] == pytest.approx(metrics["final_loss"], rel=1e-5)


def test_evaluate_reports_all_fields(trained):
    ds, model, _ = trained
    metrics = evaluate(model, ds.val)
    for key in ("recall", "precision", "true_positives",
                "false_positives", "false_negatives"):
        assert key in metrics


def test_serve_single_image_emits_protocol(trained, tmp_path, capsys):
    ds, model, _ = trained
    out = io.StringIO()
    serve(model, image_path=ds.val[0].image_path, stdout=out)
    lines = out.getvalue().splitlines()
    assert lines[-1] == "END"
    for line in lines[:-1]:
        rec = json.loads(line)
        assert set(rec) == {"x_min", "x_max", "y_min", "y_max",
                            "confidence", "label"}
        assert 0.0 <= rec["x_min"] < rec["x_max"] <= 128
        assert 0.0 <= rec["y_min"] < rec["y_max"] <= 128
        assert 0.0 <= rec["confidence"] <= 1.0


def test_serve_stdin_loop_survives_malformed_requests(trained, tmp_path):
    ds, model, _ = trained
    stdin = io.StringIO(
        "bogus request\n"
        f"IMG {ds.val[0].image_path}\n"
        "IMG /nonexistent/image.png\n"
        "QUIT\n")
    out = io.StringIO()
    assert serve(model, stdin=stdin, stdout=out) == 0
    chunks = out.getvalue().split("END\n")
    assert len(chunks) == 4  # three responses plus trailing empty chunk
    assert "error" in chunks[0]
    assert "x_min" in chunks[1]
    assert "error" in chunks[2]


def test_detect_file_rejects_non_square(trained, tmp_path):
    from PIL import Image

    _, model, _ = trained
    path = str(tmp_path / "rect.png")
    Image.fromarray(np.zeros((10, 20), dtype=np.uint8), mode="L").save(path)
    with pytest.raises(ValueError):
        detect_file(model, path)


def test_cli_train_eval_serve_roundtrip(line_dataset, tmp_path, capsys):
    ckpt = str(tmp_path / "model.pt")
    assert main(["train", "--dataset", line_dataset, "--checkpoint", ckpt,
                 "--epochs", "2", "--side", "128", "--grid", "32",
                 "--seed", "1"]) == 0
    report = json.loads(capsys.readouterr().out)
    assert "recall" in report
    assert main(["eval", "--dataset", line_dataset, "--checkpoint", ckpt,
                 "--min-snr-db", "0"]) == 0
    assert "recall" in json.loads(capsys.readouterr().out)


def test_cli_dataset_error_exit_code(tmp_path, capsys):
    assert main(["train", "--dataset", str(tmp_path / "missing"),
                 "--checkpoint", str(tmp_path / "m.pt")]) == 2


def test_subprocess_serve_conforms_to_protocol(trained, tmp_path, line_dataset):
    ds, model, _ = trained
    ckpt = str(tmp_path / "model.pt")
    save_checkpoint(model, ckpt, {})
    img = ds.val[0].image_path
    proc = subprocess.run(
        [sys.executable, "-m", "tfidet.cli", "serve", "--checkpoint", ckpt, img],
        input=f"IMG {img}\n", capture_output=True, text=True, timeout=120)
    assert proc.returncode == 0
    lines = proc.stdout.splitlines()
    assert lines[-1] == "END"
    assert all(json.loads(l) for l in lines[:-1])
