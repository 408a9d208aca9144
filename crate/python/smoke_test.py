"""Smoke test for the tfspectra Python extension.

Build and run without maturin:

    cargo build -p tfspectra-py --features extension-module --release
    cp target/release/libtfspectra_py.so python/tfspectra.so
    python3 python/smoke_test.py

or `maturin develop -m crates/py/pyproject.toml` and run the script directly.
"""

import math

import tfspectra as tf


def close(a, b, tol=1e-9):
    return abs(a - b) <= tol * max(1.0, abs(a), abs(b))


def main():
    m = 16
    g = tf.sample_window("steinhaus", m, 7)
    assert g.modulus == m and len(g) == m
    assert close(g.norm(), 1.0)

    # F x Z_M with a flat window is tight with bound |F|.
    lam = tf.FrameSet.time_product([0, 3, 5], m)
    s = tf.spectral_summary(g, lam)
    assert s["M"] == m and s["lambda_size"] == 3 * m
    assert all(close(v, 3.0, 1e-8) for v in s["sigma_sq"]), s["sigma_sq"]
    assert close(s["cond"], 1.0, 1e-8)

    # A rank-deficient set reports an infinite condition number.
    thin = tf.FrameSet(m, [(0, 0), (1, 2)])
    assert math.isinf(tf.spectral_summary(g, thin)["cond"])

    # Noiseless analysis / synthesis round trip.
    full = tf.FrameSet.full_grid(m)
    x = tf.sample_window("gaussian", m, 11)
    coeffs = tf.analysis_coefficients(g, full, x)
    y = tf.dual_reconstruct(g, full, coeffs)
    err = max(abs(a - b) for a, b in zip(x.entries(), y.entries()))
    assert err < 1e-9, err

    diag = tf.diagonal_spectrum(g, [0, 3, 5])
    assert len(diag) == m

    small = tf.FrameSet(4, [(0, 0), (1, 1), (2, 3), (3, 2), (1, 0)])
    exact = tf.exact_trace_moment(small, 2)
    closed = tf.closed_form_trace2(small)
    assert close(exact["value"], closed["value"], 1e-9)
    mc = tf.mc_trace_moment(small, 2, 2000, 3)
    assert abs(mc["value"] - exact["value"]) <= 4 * mc["std_error"] + 1e-9

    g4 = tf.sample_window("sphere", 4, 5)
    ex = tf.delta_exhaustive(g4, small, 0.4)
    he = tf.delta_heuristic(g4, small, 0.4, 64, 9)
    assert ex["kept_size"] == he["kept_size"] == 3
    assert he["delta_value"] >= ex["delta_value"] - 1e-9

    assert tf.thm4_sigma_bound(10, 50, 0.5) > 0
    thr, prob = tf.roots_of_unity_bound(128, 12.0)
    assert thr > 0 and 0 <= prob <= 1

    try:
        tf.FrameSet(4, [(0, 0), (0, 0)])
    except ValueError:
        pass
    else:
        raise AssertionError("duplicate index accepted")

    files = dict(tf.run_experiment("subcommand=spectrum\nm_grid=8\nf_size=2\nseed=0x2a\n"))
    assert "spectrum.json" in files
    print("smoke test ok")


if __name__ == "__main__":
    main()
