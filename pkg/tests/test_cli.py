import csv
import subprocess
import sys

import pytest

from hedgeturbo import __version__
from hedgeturbo.cli import main, parse_args, read_manifest
from hedgeturbo.harness import BLER_HEADER


def read_csv(path):
    with open(path) as fh:
        return list(csv.reader(fh))


def test_defaults():
    args = parse_args([])
    assert args.beta == "0.9" and args.init_weight == 1.0 and args.iters == 8
    assert args.rate == "4/5" and args.k == 128 and args.loss == "genie"


def test_run_and_outputs(tmp_path):
    out = tmp_path / "run"
    rc = main(["--scenario", "single:1.4", "--gsnr-db", "10,12", "--blocks", "40", "--seed", "3",
               "--method", "proposed,mebcgm,gaussian", "--target-errors", "1", "--out", str(out)])
    assert rc == 0
    rows = read_csv(out / "bler.csv")
    assert rows[0] == BLER_HEADER
    methods = {(r[0], r[2]) for r in rows[1:]}
    assert {("proposed", "10"), ("mebcgm", "12"), ("gaussian", "10"), ("expert:sas1.40", "12")} <= methods
    assert (out / "weights_gsnr10_beta0.9.csv").exists()
    manifest = read_manifest(out / "manifest.txt")
    assert manifest["seed"] == 3 and manifest["blocks"] == 40
    assert f"version={__version__}" in (out / "manifest.txt").read_text()


def test_manifest_round_trip(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    main(["--scenario", "mixture:1.4,1.6", "--gsnr-db", "10", "--blocks", "30", "--seed", "9",
          "--method", "proposed,mixture-oracle", "--beta", "0.85,0.95", "--target-errors", "2",
          "--out", str(a)])
    main(["--manifest", str(a / "manifest.txt"), "--out", str(b)])
    names = sorted(p.name for p in a.iterdir())
    assert names == sorted(p.name for p in b.iterdir())
    for name in names:
        if name.endswith(".csv"):
            assert (a / name).read_text() == (b / name).read_text(), name
    strip = lambda p: [l for l in p.read_text().splitlines() if not l.startswith("wall_clock")]
    assert strip(a / "manifest.txt") == strip(b / "manifest.txt")


def test_early_stop_table(tmp_path):
    main(["--scenario", "single:1.5", "--gsnr-db", "12", "--blocks", "30", "--tau", "5,10",
          "--out", str(tmp_path)])
    rows = read_csv(tmp_path / "early_stop.csv")
    assert rows[0] == ["tau", "gsnr_db", "alpha_true", "blocks", "block_errors", "bler", "chosen_expert"]
    assert [r[0] for r in rows[1:]] == ["5", "10"]


@pytest.mark.parametrize("argv", [
    ["--method", "nonsense"],
    ["--beta", "1.5"],
    ["--tau", "0"],
    ["--blocks", "10", "--tau", "11"],
    ["--scenario", "single:1.4", "--method", "mixture-oracle"],
    ["--scenario", "mixture:1.4,1.6", "--method", "mebcgm"],
    ["--scenario", "bogus"],
    ["--blocks", "0"],
])
def test_configuration_errors(tmp_path, argv):
    with pytest.raises(SystemExit):
        main(argv + ["--out", str(tmp_path)])
    assert not (tmp_path / "bler.csv").exists()


def test_missing_manifest(tmp_path):
    with pytest.raises(SystemExit):
        main(["--manifest", str(tmp_path / "nope.txt")])


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "hedgeturbo", "--version"], capture_output=True, text=True)
    assert res.returncode == 0 and __version__ in res.stdout
