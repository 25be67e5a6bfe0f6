import json
import shutil
from pathlib import Path

import pytest
from click.testing import CliRunner

from logoreveal.cli import main
from logoreveal.document import save_png
from logoreveal.fixtures import shape_image

CORPUS = Path(__file__).resolve().parent.parent / "corpus"


@pytest.fixture
def runner():
    return CliRunner()


@pytest.fixture
def template(tmp_path):
    dst = tmp_path / "alpine_ski"
    shutil.copytree(CORPUS / "alpine_ski", dst)
    return dst


def test_ingest(runner, tmp_path):
    layer_dir = tmp_path / "layers"
    layer_dir.mkdir()
    save_png(layer_dir / "00_bg.png", shape_image(64, 48, (250, 250, 250, 255)))
    save_png(layer_dir / "01_dot.png", shape_image(16, 16, (200, 0, 0, 255), "circle"))
    out = tmp_path / "project.json"
    result = runner.invoke(main, ["ingest", str(layer_dir), "-o", str(out)])
    assert result.exit_code == 0, result.output
    manifest = json.loads(out.read_text(encoding="utf-8"))
    assert len(manifest["layers"]) == 2


def test_animate_verify_render_roundtrip(runner, template, tmp_path):
    out_dir = tmp_path / "out"
    result = runner.invoke(
        main,
        [
            "animate", str(template / "project.json"),
            "--variants", "2", "--provider", "stub", "--seed", "0",
            "-o", str(out_dir),
        ],
    )
    assert result.exit_code == 0, result.output
    v1 = out_dir / "alpine_ski" / "variants" / "alpine_ski.v001"
    for name in ("captions.json", "roles.json", "groups.json", "concept.txt",
                 "program.src", "program.json", "page.html", "bugs.json", "variant.json"):
        assert (v1 / name).exists(), name

    verify_result = runner.invoke(main, ["verify", str(v1)])
    assert verify_result.exit_code == 0, verify_result.output
    assert "0 bug(s)" in verify_result.output

    render_result = runner.invoke(main, ["render", str(v1), "--fps", "10"])
    assert render_result.exit_code == 0, render_result.output
    frames = sorted((v1 / "frames").glob("*.png"))
    assert len(frames) > 1


def test_repair_command_on_buggy_variant(runner, template, tmp_path):
    out_dir = tmp_path / "out"
    runner.invoke(
        main,
        ["animate", str(template / "project.json"), "--variants", "4", "--provider", "stub", "-o", str(out_dir)],
    )
    # variant 4 is the scripted buggy one; overwrite its program with the raw bug
    v4 = out_dir / "alpine_ski" / "variants" / "alpine_ski.v004"
    buggy = "timeline\n.add({targets: '#tree_l', translateX: [10, -10, 0], duration: 400, easing: 'linear'});\n"
    (v4 / "program.src").write_text(buggy, encoding="utf-8")
    verify_result = runner.invoke(main, ["verify", str(v4)])
    assert verify_result.exit_code == 2

    repair_result = runner.invoke(main, ["repair", str(v4), "--k", "2", "--no-images"])
    assert repair_result.exit_code == 0, repair_result.output
    assert "run_solved=True" in repair_result.output
    assert runner.invoke(main, ["verify", str(v4)]).exit_code == 0
    repair_report = json.loads((v4 / "repair.json").read_text(encoding="utf-8"))
    assert repair_report["run_solved"] is True


def test_eval_command(runner, tmp_path):
    corpus = tmp_path / "corpus"
    corpus.mkdir()
    shutil.copytree(CORPUS / "sunrise", corpus / "sunrise")
    out_dir = tmp_path / "eval"
    report_path = tmp_path / "report.md"
    result = runner.invoke(
        main,
        [
            "eval", "--corpus", str(corpus), "--variants", "2", "--k", "2",
            "--arm", "imgs", "--seed", "0", "--report", str(report_path),
            "-o", str(out_dir),
        ],
    )
    assert result.exit_code == 0, result.output
    assert report_path.exists()
    assert (out_dir / "rows.csv").exists()
    assert "Solve rate vs k" in report_path.read_text(encoding="utf-8")
