import csv
import json
import os

import pytest

from instability.cli import main

FAST = {
    "raster": ["width=96", "height=96", "depths=5,6,7"],
    "bound": ["k=10..60"],
    "stability": ["samples=5000"],
    "usefulness": ["n=3000"],
    "symmetry": ["samples=300", "point_ops=true"],
    "attack": ["budgets=0,5,100", "seeds=0,1,2"],
}


def run(tmp_path, *args, name="out"):
    out = tmp_path / name
    code = main(["--out", str(out), *args])
    return code, out


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def manifest(out):
    return json.loads((out / "manifest.json").read_text())


def test_raster_default_files(tmp_path):
    code, out = run(tmp_path, "raster")
    assert code == 0
    for name in ("labels.ppm", "unstable.pgm", "boxcount.csv", "manifest.json"):
        assert (out / name).exists()
    assert (out / "labels.ppm").read_text().startswith("P3\n512 512\n255\n")
    m = manifest(out)
    assert m["config"]["raster"]["mode"] == "l1" and m["config"]["global"]["seed"] == "42"
    assert len(m["results"]["label_counts"]) == 4


def test_raster_modes_differ(tmp_path):
    _, l1 = run(tmp_path, "raster", "width=128", "height=128", name="l1")
    _, dot = run(tmp_path, "raster", "mode=dot", "width=128", "height=128", name="dot")
    assert manifest(l1)["results"]["label_counts"] != manifest(dot)["results"]["label_counts"]


def test_raster_zoom_extent(tmp_path):
    code, out = run(tmp_path, "raster", "extent=0.4,0.6,0.4,0.6", "width=64", "height=32")
    assert code == 0
    assert (out / "labels.ppm").read_text().startswith("P3\n64 32\n255\n")
    assert manifest(out)["config"]["raster"]["extent"] == "0.4,0.6,0.4,0.6"


def test_bound_row_count(tmp_path):
    code, out = run(tmp_path, "bound", "class=image_poly", "k=10..200", "eps=0.5")
    assert code == 0
    assert len(read_csv(out / "bound.csv")) == 191


def test_bound_graph_factorial_grows(tmp_path):
    code, out = run(tmp_path, "bound", "class=graph_factorial", "k=10..200", "eps=0.5")
    rows = read_csv(out / "bound.csv")
    assert code == 0
    assert float(rows[-1]["log_orbit_bound"]) > float(rows[0]["log_orbit_bound"])


def test_bound_mitigation_check(tmp_path):
    code, out = run(tmp_path, "--check", "bound", "mitigation", "m=4..64", "channels=3", "eps=0.1")
    assert code == 0
    assert len(read_csv(out / "mitigation.csv")) == 61


def test_bound_check_fails_on_wrong_direction(tmp_path):
    code, _ = run(tmp_path, "bound", "--check", "class=image_poly", "k=1..4", "eps=2.0")
    assert code == 1


def test_stability_json(tmp_path):
    code, out = run(tmp_path, "stability", "classifier=threshold1d", "eps=0.05", "samples=100000")
    assert code == 0
    report = json.loads((out / "stability.json").read_text())
    assert 0.09 <= report["unstable_fraction"] <= 0.11
    assert report["ci_low"] <= report["unstable_fraction"] <= report["ci_high"]


def test_attack_success_rates(tmp_path):
    code, out = run(tmp_path, "attack", "classifier=threshold1d", "budgets=0,5,100")
    assert code == 0
    rates = [float(r["success_rate"]) for r in read_csv(out / "sweep.csv")]
    assert rates == [0.0, 0.0, 1.0]
    assert (out / "trace.csv").exists()


def test_symmetry_rows(tmp_path):
    code, out = run(tmp_path, "--check", "symmetry", "m=2", "n=3")
    assert code == 0
    assert len(read_csv(out / "symmetry.csv")) == 6


def test_usefulness_table(tmp_path):
    code, out = run(tmp_path, "usefulness", "n=5000", "--check")
    rows = read_csv(out / "fragility.csv")
    assert code == 0
    assert [r["feature"] for r in rows] == ["sign0", "smooth0"]


def test_unknown_key_names_it(tmp_path, caplog):
    code, _ = run(tmp_path, "bound", "colour=red")
    assert code == 1
    assert "colour" in caplog.text


def test_bad_value_exit_1(tmp_path):
    assert run(tmp_path, "stability", "eps=-1")[0] == 1
    assert run(tmp_path, "--seed", "-3", "stability")[0] == 1


def test_config_file_sections(tmp_path):
    cfg = tmp_path / "run.ini"
    cfg.write_text("[global]\nseed = 7\n\n[bound]\nk = 5..9\n")
    code, out = run(tmp_path, "--config", str(cfg), "bound", "eps=0.3")
    assert code == 0
    m = manifest(out)
    assert m["config"]["global"]["seed"] == "7"
    assert m["config"]["bound"]["eps"] == "0.3" and m["config"]["bound"]["class"] == "image_poly"
    assert len(read_csv(out / "bound.csv")) == 5


@pytest.mark.parametrize("text, word", [
    ("[bound]\nwidth = 3\n", "width"),
    ("[nonsense]\na = 1\n", "nonsense"),
])
def test_config_file_rejects_unknowns(tmp_path, caplog, text, word):
    cfg = tmp_path / "bad.ini"
    cfg.write_text(text)
    assert run(tmp_path, "--config", str(cfg), "bound")[0] == 1
    assert word in caplog.text


@pytest.mark.skipif(os.geteuid() == 0, reason="root ignores directory permissions")
def test_unwritable_output_exit_2(tmp_path):
    locked = tmp_path / "locked"
    locked.mkdir()
    locked.chmod(0o500)
    try:
        assert main(["--out", str(locked / "sub"), "bound"]) == 2
    finally:
        locked.chmod(0o700)


def test_output_path_is_file_exit_2(tmp_path):
    blocker = tmp_path / "blocker"
    blocker.write_text("x")
    assert main(["--out", str(blocker / "sub"), "bound"]) == 2


def _snapshot(out):
    snap = {}
    for p in sorted(out.iterdir()):
        data = p.read_bytes()
        if p.name == "manifest.json":
            m = json.loads(data)
            m.pop("timestamp")
            data = json.dumps(m, sort_keys=True).encode()
        snap[p.name] = data
    return snap


@pytest.mark.parametrize("command", sorted(FAST))
@pytest.mark.parametrize("threads", ["1", "8"])
def test_reruns_byte_identical(tmp_path, command, threads):
    args = ["--seed", "5", "--threads", threads, command, *FAST[command]]
    code, out = run(tmp_path, *args)
    first = _snapshot(out)
    assert code == 0 and run(tmp_path, *args)[0] == 0
    assert _snapshot(out) == first


@pytest.mark.parametrize("command", sorted(FAST))
def test_outputs_independent_of_threads(tmp_path, command):
    run(tmp_path, "--threads", "1", command, *FAST[command], name="t1")
    run(tmp_path, "--threads", "8", command, *FAST[command], name="t8")
    a, b = _snapshot(tmp_path / "t1"), _snapshot(tmp_path / "t8")
    for name in a:
        if name != "manifest.json":
            assert a[name] == b[name], name
