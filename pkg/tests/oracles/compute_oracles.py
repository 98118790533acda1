"""Recompute the frozen reference values in ``derived_values.json``.

Uses only mpmath and scipy, never the package under test. Run from the
repository root:

    python3 tests/oracles/compute_oracles.py > tests/oracles/derived_values.json
"""

import json
import math

import mpmath as mp
from scipy import integrate, stats

mp.mp.dps = 40


def Q(x):
    return 0.5 * mp.erfc(x / mp.sqrt(2))


def Phi(x):
    return 1 - Q(x)


def main():
    out = {}
    out["std_normal_peak"] = float(1 / mp.sqrt(2 * mp.pi))
    out["half_std_normal_peak"] = float(0.5 / mp.sqrt(2 * mp.pi))
    out["likelihood_d2_eta025"] = float(1 / (2 * mp.pi * mp.mpf("0.25")))
    # 5-sigma intervals for 10^6 draws
    n = 10**6
    se_ber = math.sqrt(0.3 * 0.7 / n)
    out["ber03_mean_interval"] = [0.3 - 5 * se_ber, 0.3 + 5 * se_ber]
    se_var = math.sqrt(2.0 / n)
    out["gauss_var_interval"] = [1 - 5 * se_var, 1 + 5 * se_var]
    # posterior weight of the unshifted hypothesis for N(0,1), t = 2
    out["priors_at_gauss_t2"] = float(mp.npdf(0) / (mp.npdf(0) + mp.npdf(2)))
    out["Q1"] = float(Q(1))
    # the same value by an erfc series
    x = mp.mpf(1) / mp.sqrt(2)
    series = 1 - 2 / mp.sqrt(mp.pi) * mp.nsum(lambda k: (-1) ** k * x ** (2 * k + 1) / (mp.factorial(k) * (2 * k + 1)), [0, mp.inf])
    out["Q1_series"] = float(series / 2)
    # h(1) for the linear-Gaussian pair: 2 Q(t / (2 sqrt(1/2)))
    out["h_gauss_t1"] = float(2 * Q(1 / (2 * mp.sqrt(mp.mpf("0.5")))))
    # overlap H for N(0,1), M = 2, t = 1 by direct quadrature of the max
    h_direct = mp.quad(lambda z: max(mp.npdf(z), mp.npdf(z + 1)), [-mp.inf, -0.5, mp.inf])
    out["H_gauss_t1_direct"] = float(h_direct)
    out["H_gauss_t1_closed"] = float(2 * Phi(mp.mpf("0.5")))
    # high-noise Gaussian integral int_0^inf t Q(t/2) dt
    out["int_tQ"] = float(mp.quad(lambda t: t * Q(t / 2), [0, mp.inf]))
    out["int_tQ_scipy"] = integrate.quad(lambda t: t * stats.norm.sf(t / 2), 0, math.inf)[0]
    # binary MAP error with unequal priors, delta = 2, eta = 1
    q0 = mp.npdf(0) / (mp.npdf(0) + mp.npdf(2))
    q1 = 1 - q0
    lr = mp.log(q0 / q1)
    out["binary_error_q0_logistic"] = float(q0 * Q(1 + lr / 2) + q1 * Q(1 - lr / 2))
    # by direct integration of min(q0 phi(y), q1 phi(y - 2))
    direct = mp.quad(lambda y: min(q0 * mp.npdf(y), q1 * mp.npdf(y - 2)), [-mp.inf, 1 + lr / 2, mp.inf])
    out["binary_error_q0_logistic_direct"] = float(direct)
    # uniform ZZ/eta at eta = 1e-3 and 1e-6 via independent scipy double quadrature
    for eta in (1e-3, 1e-6):
        s = math.sqrt(eta)

        def h(t, s=s):
            # overlap length (1 - t) times 2 Q(t / (2 s)) for t < 1
            return max(1 - t, 0) * 2 * stats.norm.sf(t / (2 * s)) if t < 1 else 0.0

        val = integrate.quad(lambda t: t / 2 * h(t), 0, 1, points=[s, 10 * s, 100 * s], limit=400, epsabs=1e-16)[0]
        out[f"uniform_zz_over_eta_{eta:g}"] = val / eta
    print(json.dumps(out, indent=2, sort_keys=True))


if __name__ == "__main__":
    main()
