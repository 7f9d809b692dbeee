"""Smoke test for the rbcom Python module.

Uses an installed `rbcom` if there is one; otherwise loads the shared library
from the workspace target directory.
"""

import glob
import importlib.machinery
import importlib.util
import math
import os
import sys


def load():
    try:
        import rbcom

        return rbcom
    except ImportError:
        pass
    root = os.path.abspath(os.path.join(os.path.dirname(__file__), "..", "..", ".."))
    names = ("librbcom.so", "librbcom.dylib", "rbcom.dll")
    for profile in ("release", "debug"):
        for name in names:
            for path in glob.glob(os.path.join(root, "target", profile, name)):
                loader = importlib.machinery.ExtensionFileLoader("rbcom", path)
                spec = importlib.util.spec_from_loader("rbcom", loader)
                module = importlib.util.module_from_spec(spec)
                loader.exec_module(module)
                sys.modules["rbcom"] = module
                return module
    sys.exit("rbcom not installed and no built library found; run `cargo build -p rbcom-py --release`")


def main():
    rb = load()

    assert math.isclose(rb.round_trip_time(10.0), 6.671e-8, rel_tol=1e-3)
    assert math.isclose(rb.beam_break_energy(1.0, 10.0), 6.671e-8, rel_tol=1e-3)
    assert rb.frame_length(200.0, 1e8) == 133
    assert rb.alphabet_levels(2, 0.1) == [0.9, 1.0]
    assert rb.plan_multiaccess([200.0, 150.0], 1e8) == ([133, 100], 13300)

    medium = rb.GainMedium()
    assert medium.small_signal_gain(medium.f0) == medium.g0
    assert medium.saturated_gain(medium.i_sat, medium.f0) == 1 + (medium.g0 - 1) / 2

    link = rb.CavityLink(200.0, medium)
    ss = link.steady_state()
    assert ss.residual <= 1e-9
    assert math.isclose(ss.link_coefficient, 1.0, rel_tol=1e-9)
    assert link.small_signal_round_trip() > 1.0
    assert rb.aperture_capture(3e-3, 1064e-9, 1.2e-3, 200.0) == link.link_loss()

    try:
        rb.CavityLink(5000.0).steady_state()
    except ValueError:
        pass
    else:
        raise AssertionError("a 5 km cavity should be below threshold")

    assert link.rounds_until_break(0.0, 0.0, 1000) is None
    assert link.rounds_until_break(5.0, 0.0) > 0

    direct = rb.simulate_direct(link, 60.0, 20, 1, saturable=True)
    adaptive = rb.simulate_adaptive(link, 60.0, 20, 1)
    for point in (direct, adaptive):
        assert point.symbols > 0 and point.symbol_errors == 0, (point.symbols, point.symbol_errors)

    print("rbcom smoke test passed")


if __name__ == "__main__":
    main()
