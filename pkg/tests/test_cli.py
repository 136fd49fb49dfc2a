"""CLI surface: subcommands, config layering, exit codes, determinism."""

import json
import os
import sys

import pytest

from fhjrc.cli import (EXIT_CONFIG, EXIT_DETECTOR, EXIT_IO, EXIT_OK,
                       load_config, main)


def run(argv):
    return main(argv)


def test_capacity_csv_schema(tmp_path, capsys):
    out = str(tmp_path / "cap.csv")
    assert run(["capacity", "--grid", "5x5 5x1", "--out", out]) == EXIT_OK
    lines = open(out, encoding="utf-8").read().splitlines()
    assert lines[0] == "scheme,n_f,n_t,size,bits_per_pulse"
    assert "random,5,5,4000000,21" in lines
    assert "costas,5,5,125000,16" in lines
    assert "random,5,1,1280,10" in lines
    assert "costas,5,1,40,5" in lines


def test_encode_and_synth_roundtrip_through_demod(tmp_path):
    bits = "110010101110010100011"
    win = str(tmp_path / "w.csv")
    out = str(tmp_path / "bits.txt")
    assert run(["synth", "--bits", bits, "--start", "300", "--out", win]) == EXIT_OK
    assert run(["demod", "--in", win, "--out", out]) == EXIT_OK
    assert open(out, encoding="utf-8").read().strip() == bits


def test_tfi_and_detect_produce_protocol_output(tmp_path, capsys):
    img = str(tmp_path / "t.png")
    assert run(["tfi", "--seed", "4", "--out", img]) == EXIT_OK
    assert os.path.exists(img)
    assert run(["detect", "--in", img]) == EXIT_OK
    lines = capsys.readouterr().out.strip().splitlines()
    assert lines[-1] == "END"
    assert len(lines) == 6  # five boxes + END
    rec = json.loads(lines[0])
    assert set(rec) == {"x_min", "x_max", "y_min", "y_max", "confidence", "label"}


def test_pd_sweep_schema_and_determinism(tmp_path):
    a = str(tmp_path / "a.csv")
    b = str(tmp_path / "b.csv")
    args = ["pd-sweep", "--trials", "50", "--p-fa", "0.1",
            "--enr-db", "10", "--seed", "3"]
    assert run(args + ["--out", a]) == EXIT_OK
    assert run(args + ["--out", b]) == EXIT_OK
    first = open(a, "rb").read()
    assert first == open(b, "rb").read()
    assert first.decode().splitlines()[0] == "waveform,p_fa,enr_db,pd_sim,pd_theory"


def test_ser_sweep_schema(tmp_path):
    out = str(tmp_path / "s.csv")
    assert run(["ser-sweep", "--scheme", "costas", "--snr-grid", "10",
                "--symbols", "3", "--seed", "1", "--out", out]) == EXIT_OK
    lines = open(out, encoding="utf-8").read().splitlines()
    assert lines[0] == "scheme,snr_db,ser,erasure_rate,n_symbols"
    assert lines[1].startswith("costas,10,")


def test_plot_flag_renders_figure(tmp_path):
    out = str(tmp_path / "s.csv")
    assert run(["ser-sweep", "--scheme", "costas", "--snr-grid", "10",
                "--symbols", "2", "--seed", "1", "--out", out,
                "--plot"]) == EXIT_OK
    assert os.path.exists(str(tmp_path / "s.png"))


def test_config_file_layering(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("scheme = costas\nsymbols = 2\nseed = 5\n")
    out = str(tmp_path / "s.csv")
    assert run(["ser-sweep", "--config", str(cfg), "--snr-grid", "10",
                "--symbols", "3", "--out", out]) == EXIT_OK
    # flag overrides file for symbols; file supplies scheme
    line = open(out, encoding="utf-8").read().splitlines()[1]
    assert line.startswith("costas,") and line.endswith(",3")


def test_load_config_rejects_malformed_lines(tmp_path):
    bad = tmp_path / "bad.cfg"
    bad.write_text("no equals sign here\n")
    from fhjrc.cli import ConfigError
    with pytest.raises(ConfigError):
        load_config(str(bad))


def test_exit_code_invalid_config():
    assert run(["encode", "--bits", "01"]) == EXIT_CONFIG
    assert run(["ser-sweep", "--symbols", "0", "--out", "/tmp/x.csv"]) == EXIT_CONFIG


def test_exit_code_io_failure():
    assert run(["demod", "--in", "/nonexistent/window.csv"]) == EXIT_IO


def test_exit_code_detector_failure():
    assert run(["demod", "--bits", "110010101110010100011",
                "--start", "100", "--detector", "false"]) == EXIT_DETECTOR


def test_dataset_layout_and_labels(tmp_path):
    out = str(tmp_path / "ds")
    assert run(["dataset", "--out", out, "--signals", "10",
                "--snr-grid", "0 6", "--seed", "2",
                "--image-size", "120"]) == EXIT_OK
    manifest = json.load(open(os.path.join(out, "manifest.json")))
    assert manifest["counts"]["train"] + manifest["counts"]["val"] == 20
    assert manifest["counts"]["train"] == 16
    for entry in manifest["entries"]["train"][:2]:
        label_path = os.path.join(out, entry["label"])
        assert os.path.exists(os.path.join(out, entry["image"]))
        for line in open(label_path, encoding="utf-8"):
            fields = line.split()
            assert len(fields) == 5
            assert all(0.0 <= float(v) <= 1.0 for v in fields[1:])


def test_external_detector_via_cli_demod(tmp_path):
    # ground-truth responder: proves the swap-in path end to end
    from fhjrc.codebook import Codebook
    from fhjrc.detector import ground_truth_boxes
    from fhjrc.waveform import WaveformConfig

    wf = WaveformConfig()
    book = Codebook("random", wf.n_f, wf.n_t)
    bits = "110010101110010100011"
    symbol = book.encode(bits)
    truth = ground_truth_boxes(symbol, 300, wf, 500)
    records = [
        {"x_min": b.x_min, "x_max": b.x_max, "y_min": 500 - b.y_max,
         "y_max": 500 - b.y_min, "confidence": 0.9, "label": "random"}
        for b in truth]
    responder = tmp_path / "resp.py"
    responder.write_text(
        "import json, sys\n"
        "sys.stdin.readline()\n"
        f"for r in {records!r}:\n"
        "    print(json.dumps(r))\n"
        "print('END')\n")
    out = str(tmp_path / "bits.txt")
    assert run(["demod", "--bits", bits, "--start", "300",
                "--detector", f"{sys.executable} {responder}",
                "--out", out]) == EXIT_OK
    assert open(out, encoding="utf-8").read().strip() == bits
