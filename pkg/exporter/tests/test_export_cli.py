"""The zosd-export command line, end to end on stub adapters."""

import json

from zosd_exporter import read_embedding_store
from zosd_exporter.cli import main


def manifest_path(tiny_world, tmp_path):
    path = tmp_path / "manifest.json"
    path.write_text(tiny_world.to_json())
    return str(path)


def test_full_export_pipeline(tiny_world, tmp_path, capsys):
    m = manifest_path(tiny_world, tmp_path)
    assert main(["--manifest", m, "--stub", "export-images"]) == 0
    assert main(["--manifest", m, "--stub", "export-logits"]) == 0
    assert main(["--manifest", m, "--stub", "export-text"]) == 0
    assert main(["--manifest", m, "--stub", "validate-closure"]) == 0
    out = capsys.readouterr().out
    assert "closure holds" in out
    assert len(read_embedding_store(tiny_world.images_store)) == 10


def test_validate_closure_failure_exits_nonzero(tiny_world, tmp_path, capsys):
    m = manifest_path(tiny_world, tmp_path)
    assert main(["--manifest", m, "--stub", "export-logits"]) == 0
    # Text store that covers nothing: closure must fail.
    from zosd_exporter import write_embedding_store
    import numpy as np

    write_embedding_store(
        {"This is a photo of a cat.": np.array([1.0, 0.0], np.float32)},
        tiny_world.text_store,
    )
    assert main(["--manifest", m, "--stub", "validate-closure"]) == 1
    assert "closure violated" in capsys.readouterr().err


def test_missing_manifest_exits_two(tmp_path, capsys):
    assert main(["--manifest", str(tmp_path / "absent.json"), "--stub", "export-images"]) == 2


def test_manifest_round_trip(tiny_world, tmp_path):
    from zosd_exporter import ExportManifest

    path = tmp_path / "manifest.json"
    path.write_text(tiny_world.to_json())
    loaded = ExportManifest.from_json(path)
    assert loaded == tiny_world
    assert json.loads(loaded.to_json()) == json.loads(tiny_world.to_json())
