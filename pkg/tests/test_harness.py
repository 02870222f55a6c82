import json
import logging

import numpy as np
import pytest

from twl.exceptions import ConfigError, QuadratureError
from twl.harness.cache import _digest, cache_dir, cache_key, cache_load, cache_store
from twl.harness.cli import main
from twl.harness.config import build_config, load_config, read_config_text
from twl.harness.experiments import CSV_COLUMNS, RUNNERS, ResultRow, rows_to_csv, run
from twl.spectral import compute_spectrum

CONFIG = """\
# model of the equivariant acceptance case
experiment = weyl
model.d = 1
symbol = 1
action.weights = -1, 1
k_max = 400
isotypes = 0, 1, 5

[lambda]
start = 200
stop = 400
count = 11
"""


# -- configuration ----------------------------------------------------------


def test_config_parsing(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text(CONFIG)
    cfg = load_config(path)
    assert cfg.weights == (-1, 1) and cfg.isotypes == (0, 1, 5)
    assert cfg.lambdas[0] == 200 and cfg.lambdas[-1] == 400 and len(cfg.lambdas) == 11
    assert cfg.epsilon == 0.5


def test_config_sections_flatten():
    flat = read_config_text(CONFIG)
    assert flat["lambda.start"] == "200" and flat["isotypes"] == "0, 1, 5"


@pytest.mark.parametrize("overrides, field", [
    ({"k_max": "0"}, "k_max"),
    ({"cutoff.epsilon": "-1"}, "cutoff.epsilon"),
    ({"model.d": "two"}, "model.d"),
    ({"action.weights": "1, 1"}, "action.weights"),
    ({"action.weights": "1, 2, 3"}, "action.weights"),
    ({"symbol": "1 +"}, "symbol"),
    ({"lambda.stop": "1", "lambda.start": "5"}, "lambda.stop"),
    ({"colour": "blue"}, "colour"),
])
def test_config_errors_name_the_field(overrides, field):
    with pytest.raises(ConfigError) as exc:
        build_config({}, overrides)
    assert exc.value.field == field


def test_missing_config_file(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "nope.cfg")


# -- cache ------------------------------------------------------------------


@pytest.fixture
def record():
    return compute_spectrum("1 + 0.3*w0*w1 + 0.2*re_01*re_01 + 0.2*im_01*im_01", (-1, 1), 120)


def test_cache_dir_env(tmp_path, monkeypatch):
    monkeypatch.setenv("TWL_CACHE_DIR", str(tmp_path / "elsewhere"))
    assert cache_dir() == tmp_path / "elsewhere"


def test_cache_round_trip(record):
    path = cache_store(record)
    assert json.loads(path.read_text())["version"] == "1"
    key = cache_key(record.symbol_text, record.weights, record.d, record.k_max)
    back = cache_load(key)
    assert back is not None
    assert np.array_equal(back.eigenvalues, record.eigenvalues)
    assert np.array_equal(back.varpis, record.varpis)
    for a, b in zip(back.blocks, record.blocks):
        for (ra, va), (rb, vb) in zip(a.groups, b.groups):
            assert np.array_equal(ra, rb)
            assert (va is None and vb is None) or np.array_equal(va, vb)


def test_cache_key_sensitivity():
    base = cache_key("1", (-1, 1), 1, 100)
    assert cache_key("1 ", (-1, 1), 1, 100) != base
    assert cache_key("1", (-1, 2), 1, 100) != base
    assert cache_key("1", (-1, 1), 1, 101) != base
    assert cache_key("1", (-1, 1), 1, 100, (0,)) != base
    assert cache_key("1", (-1, 1), 1, 100) == base


def test_cache_miss_on_absent_key():
    assert cache_load("0" * 64) is None


def _corrupt(path, fn):
    doc = json.loads(path.read_text())
    fn(doc)
    path.write_text(json.dumps(doc))


def test_cache_rejects_version_mismatch(record, caplog):
    path = cache_store(record)
    _corrupt(path, lambda doc: doc.update(version="0"))
    with caplog.at_level(logging.WARNING):
        assert cache_load(path.stem.removeprefix("spectrum-")) is None
    assert "version" in caplog.text


def test_cache_rejects_truncated_file(record, caplog):
    path = cache_store(record)
    path.write_text(path.read_text()[:1000])
    with caplog.at_level(logging.WARNING):
        assert cache_load(path.stem.removeprefix("spectrum-")) is None
    assert "corrupt" in caplog.text


def test_cache_digest_catches_edit(record, caplog):
    path = cache_store(record)
    _corrupt(path, lambda doc: doc["blocks"][7]["eigenvalues"].__setitem__(0, 123.0))
    with caplog.at_level(logging.WARNING):
        assert cache_load(path.stem.removeprefix("spectrum-")) is None
    assert "digest" in caplog.text


def test_cache_residual_verification_catches_corruption(record, caplog):
    # corrupt every block and re-seal the digest, so only the residual
    # re-verification stands between the file and the caller
    path = cache_store(record)

    def poison(doc):
        for b in doc["blocks"]:
            b["eigenvalues"] = [v * (1 + 1e-6) + 1e-6 for v in b["eigenvalues"]]
        doc["digest"] = _digest({"metadata": doc["metadata"], "blocks": doc["blocks"]})

    _corrupt(path, poison)
    with caplog.at_level(logging.WARNING):
        assert cache_load(path.stem.removeprefix("spectrum-")) is None
    assert "re-verification" in caplog.text


# -- experiments and CLI ----------------------------------------------------


def test_result_row_ratio():
    assert ResultRow("x", 1.0, None, 3.0, 2.0).ratio == 1.5
    assert ResultRow("x", 1.0, None, 3.0, 0.0).ratio is None
    assert ResultRow("x", 1.0, None, 3.0, 2.0).cells()[5] == "1.5"


def test_weyl_free_ratio_oracle():
    # (n+1)(n+2)/2 over lambda^2/2 at integer lambda = n
    cfg = build_config({}, {"k_max": "200", "lambda.start": "100", "lambda.stop": "200"})
    res = run("weyl", cfg, use_cache=False)
    for r in res.rows:
        assert r.ratio == pytest.approx((1 + 1 / r.lam) * (1 + 2 / r.lam), rel=1e-12)
    assert rows_to_csv(res.rows).splitlines()[0] == ",".join(CSV_COLUMNS)


def test_cli_determinism(tmp_path, capsys):
    args = ["hessian-check", "--instances", "100", "--seed", "7"]
    assert main(args + ["--out", str(tmp_path / "a")]) == 0
    assert main(args + ["--out", str(tmp_path / "b")]) == 0
    for name in ("hessian-check.csv", "hessian-check.json"):
        a = (tmp_path / "a" / name).read_bytes()
        b = (tmp_path / "b" / name).read_bytes()
        if name.endswith(".json"):
            a, b = a.replace(b"/a", b""), b.replace(b"/b", b"")
        assert a == b


def test_cli_weyl_determinism_with_cache(tmp_path):
    args = ["weyl", "--set", "k_max=150", "--set", "lambda.start=50", "--set", "lambda.stop=150",
            "--set", "action.weights=-1,1", "--set", "isotypes=0,3"]
    assert main(args + ["--out", str(tmp_path / "a")]) == 0
    assert main(args + ["--out", str(tmp_path / "b"), "--jobs", "3"]) == 0
    assert (tmp_path / "a" / "weyl.csv").read_bytes() == (tmp_path / "b" / "weyl.csv").read_bytes()


def test_cli_incomplete_kernel_names_k_max(tmp_path, capsys):
    code = main(["kernel", "--set", "action.weights=-1,1", "--set", "k_max=300",
                 "--set", "lambda.stop=400", "--out", str(tmp_path)])
    assert code == 1
    assert "requires k_max >= 955" in capsys.readouterr().err


def test_cli_config_error(tmp_path, capsys):
    assert main(["weyl", "--set", "k_max=-3", "--out", str(tmp_path)]) == 1
    assert "k_max" in capsys.readouterr().err
    assert main(["weyl", "--set", "oops"]) == 1


def test_cli_usage_error(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["no-such-experiment"])
    assert exc.value.code == 1


def test_cli_threshold_failure(tmp_path):
    args = ["weyl", "--set", "k_max=40", "--set", "lambda.start=10", "--set", "lambda.stop=40",
            "--set", "check.tolerance=0.001", "--out", str(tmp_path)]
    assert main(args) == 0
    assert main(args + ["--check"]) == 3


def test_cli_numerical_failure(tmp_path, monkeypatch):
    def boom(cfg, jobs=1, use_cache=True):
        raise QuadratureError("did not converge")

    monkeypatch.setitem(RUNNERS, "spectrum", boom)
    assert main(["spectrum", "--out", str(tmp_path)]) == 2


def test_cli_szego_and_contact(tmp_path):
    assert main(["szego-check", "--check", "--out", str(tmp_path)]) == 0
    assert main(["contact-check", "--set", "symbol=1 + 0.25*rh_01", "--set", "points=2",
                 "--check", "--out", str(tmp_path)]) == 0
