"""Golden values from the closed forms, evaluated at 50 digits with mpmath.

Independent of the C++ sources; rerun to regenerate ../oracles.hpp.
"""
from pathlib import Path

from mpmath import mp, mpf, pi, sqrt, log

mp.dps = 50

HBAR = mpf("1.054571817e-34")
KB = mpf("1.380649e-23")


def cav(kappa, x):
    return kappa**2 / 4 + x**2


def rates(g, omega, kappa, delta):
    return g**2 * kappa / cav(kappa, delta - omega), g**2 * kappa / cav(kappa, delta + omega)


def linewidth(g, omega, kappa, delta, w):
    return 4 * g**2 * omega * delta * kappa / (cav(kappa, w + delta) * cav(kappa, w - delta))


def spring(g, omega, kappa, delta, w):
    k = 4 * omega * delta * (kappa**2 / 4 - w**2 + delta**2) / (cav(kappa, w + delta) * cav(kappa, w - delta))
    return sqrt(omega**2 - g**2 * k)


def main():
    two_pi = 2 * pi
    g = two_pi * 10e3
    kappa = two_pi * mpf("32.4e3")
    omega = two_pi * mpf("1e6")
    a_minus, a_plus = rates(g, omega, kappa, omega)
    out = {
        "kRateAMinus": a_minus,
        "kRateAPlus": a_plus,
        "kLinewidthAtResonance": linewidth(g, omega, kappa, omega, omega),
        "kSpringShiftHz": (spring(g, omega, kappa, omega, omega) - omega) / two_pi,
        "kNMinBound": kappa**2 / (4 * omega**2),
        "kNMinResolved": a_plus / (a_minus - a_plus),
    }
    w_alpha = two_pi * mpf("1030e3")
    n = mpf("0.21")
    out["kTemperatureAt021"] = HBAR * w_alpha / (KB * log(1 + 1 / n))
    out["kGroundProbAt021"] = 1 / (n + 1)
    out["kSigmaAt021"] = sqrt(HBAR / (2 * mpf("3.3e-32") * w_alpha)) * sqrt(2 * n + 1)
    out["kSigmaAt021LowI"] = sqrt(HBAR / (2 * mpf("3.7e-32") * w_alpha)) * sqrt(2 * n + 1)
    out["kSigmaAt021HighI"] = sqrt(HBAR / (2 * mpf("2.9e-32") * w_alpha)) * sqrt(2 * n + 1)
    out["kRevivalTime5e32"] = two_pi * mpf("5.0e-32") / HBAR
    out["kMeanJ"] = sqrt(KB * mpf("73e-6") * mpf("7.6e-32")) / HBAR
    # Two touching 20 nm silica spheres about the contact point.
    r = mpf("10e-9")
    m = mpf(2200) * 4 * pi * r**3 / 3
    inertia = 2 * (mpf("0.4") + 1) * m * r**2
    out["kSmallDumbbellInertia"] = inertia
    out["kSmallDumbbellRevival"] = two_pi * inertia / HBAR
    out["kSymmetricRatioSigma"] = mpf("0.1") * sqrt(2)

    lines = [
        "#pragma once",
        "",
        "// Golden values from tests/oracles/generate.py (mpmath, 50 digits).",
        "",
        "namespace oracle {",
        "",
    ]
    for name, value in out.items():
        lines.append(f"inline constexpr double {name} = {mp.nstr(value, 20, strip_zeros=False)};")
    lines += ["", "}  // namespace oracle", ""]
    Path(__file__).resolve().parent.parent.joinpath("oracles.hpp").write_text("\n".join(lines))


if __name__ == "__main__":
    main()
