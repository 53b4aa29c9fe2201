"""Smoke test for the `inmed` Python module.

Build and install first:
    pip install --no-build-isolation ./crates/py
Then run with pytest or directly with python.
"""

import json
import math
import tempfile

import inmed

CONFIG = json.dumps({"resolution": 33, "seed": 5})


def test_config_hash_is_stable():
    h = inmed.config_hash(CONFIG)
    assert len(h) == 64
    assert h == inmed.config_hash(CONFIG)
    assert h != inmed.config_hash(json.dumps({"resolution": 33, "seed": 6}))


def test_forward_then_reconstruct():
    fwd = inmed.forward(CONFIG)
    nx, ny, h = fwd["nx"], fwd["ny"], fwd["spacing"]
    assert nx * ny == len(fwd["u"])
    x0, y0 = fwd["origin"]
    worst = max(
        abs(fwd["u"][j * nx + i] - math.cos(x0 + i * h) * math.cos(y0 + j * h))
        for j in range(ny)
        for i in range(nx)
    )
    assert worst < 1e-3
    assert fwd["report"]["d1"]["member"]

    rec = inmed.reconstruct(fwd["intensity"], CONFIG)
    assert rec["converged"]
    assert max(abs(v - 2.0) for v in rec["potential"]) < 1e-6


def test_run_writes_summary():
    with tempfile.TemporaryDirectory() as out:
        summary = inmed.run("chain", CONFIG, out, workers=2)
    assert summary["command"] == "chain"
    assert summary["result"]["bound_holds"]


def test_errors_carry_codes():
    try:
        inmed.forward(json.dumps({"resolution": 17, "boundary": "0"}))
    except inmed.InmedError as e:
        assert e.args[0] == "H_IDENTICALLY_ZERO"
    else:
        raise AssertionError("zero boundary data was accepted")


if __name__ == "__main__":
    for name, fn in list(globals().items()):
        if name.startswith("test_"):
            fn()
            print(f"ok {name}")
