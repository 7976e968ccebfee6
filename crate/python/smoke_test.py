"""Smoke test for the spongelab Python extension.

Build the module first:

    cargo build -p spongelab-py --features extension-module --release

then run `python3 python/smoke_test.py`. The script copies the built library
to a temporary directory under the importable name and exercises the bindings.
"""

import importlib
import math
import shutil
import sys
import tempfile
from fractions import Fraction
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent


def load():
    for profile in ("release", "debug"):
        lib = ROOT / "target" / profile / "libspongelab_py.so"
        if lib.exists():
            tmp = Path(tempfile.mkdtemp())
            shutil.copy(lib, tmp / "spongelab_py.so")
            sys.path.insert(0, str(tmp))
            return importlib.import_module("spongelab_py")
    sys.exit("libspongelab_py.so not found; build with --features extension-module first")


def main():
    sl = load()

    spec = sl.SpongeSpec(2, [3, 5])
    assert spec.scale(2) == "1/15"
    assert int(spec.live_tile_count(2)) == 192
    assert Fraction(192, 225) == int(spec.live_tile_count(2)) * Fraction(spec.scale(2)) ** 2
    assert spec.contains(["0", "0"]) and not spec.contains(["1/2", "1/2"])
    carpet = sl.SpongeSpec.from_json('{"d": 2, "n": [3, 3], "K": 2}')
    assert carpet.min_separation(2)["distance"] == "1/9"
    try:
        sl.SpongeSpec(2, [4])
    except ValueError:
        pass
    else:
        raise AssertionError("even n must be rejected")

    p, q = (0.3, -0.2, 0.7), (-0.5, 0.1, 0.2)
    g = (0.9, 0.4, -0.3)
    assert math.isclose(sl.koranyi_dist(sl.heis_mul(g, p), sl.heis_mul(g, q)), sl.koranyi_dist(p, q), abs_tol=1e-12)
    assert math.isclose(sl.koranyi_norm(sl.dilation(2.0, p)), 2.0 * sl.koranyi_norm(p), abs_tol=1e-12)

    assert sl.tau_threshold("1", "2", "1/2", "1")["lo"] == "1/16"
    iso = sl.isoperimetric_constants("2", "1", "1")
    assert iso["C_S"]["lo"] == "32/1" and iso["Lambda"] == "2/1"
    filling = sl.filling_parameters('{"c0": "7/1"}')
    assert all(t["holds"] for t in filling["round_trip"])

    assert sl.projection_suite([3, 3])[0]["values"]["checks"] == 512
    assert all(r["status"] == "pass" for r in sl.separation_suite([2], [[3, 3]], [1, 2]))
    assert sl.heis_identities(10_000)[0]["status"] == "pass"
    circle = sl.turning_suite()[0]
    assert abs(circle["values"]["c"] - 1.0) <= 0.01
    assert all(r["status"] == "pass" for r in sl.constants_suite())

    print("spongelab_py smoke test: ok")


if __name__ == "__main__":
    main()
