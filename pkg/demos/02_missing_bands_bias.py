"""Missing detection bands turn the linear correlation law into a curve.

When hidden values near a station's discriminator go undetected, every
coincidence category loses a strip of roughly fixed size.  Dividing by
the observed total T_obs then inflates the correlation: the numerator
keeps its value while the denominator shrinks (the subtraction-bias
mechanism).  The resulting E(phi) curve is steeper than the line, reaches
+/-1 at the ends, and looks deceptively sinusoidal.  Dividing by the
emitted total T instead keeps the estimate inside the line.
"""
import math

from eprsim import (
    DenominatorMode,
    DetectionModel,
    HvSpace,
    banded_probabilities,
)

PI = math.pi
T_MODE = DenominatorMode.EMITTED_T
TOBS_MODE = DenominatorMode.OBSERVED_TOBS


def curve(sin_half, phi):
    model = DetectionModel.symmetric_bands(math.asin(sin_half))
    return banded_probabilities(HvSpace.SPHERE, phi, model, model)


print("exact oracle curves, symmetric hard bands at both stations")
print(f"{'phi':>7} | " + " | ".join(
    f"sin d = {s}: E (C_hat)" for s in (0.1, 0.2, 0.3)))
for k in range(9):
    phi = k * PI / 8
    cells = []
    for s in (0.1, 0.2, 0.3):
        p = curve(s, phi)
        cells.append(f"{p.correlation(TOBS_MODE):+6.3f} ({p.correlation(T_MODE):+6.3f})")
    print(f"{phi:7.4f} | " + " | ".join(cells))

print()
print("geometrically special angles (exact values, not drawn by eye):")
print("bands of half-angle d touch at phi = 2d and at phi = pi - 2d")
for s in (0.1, 0.2, 0.3):
    d = math.asin(s)
    for phi, label in ((2 * d, "touching"), (PI / 2, "right angle"),
                       (PI - 2 * d, "touching, far side")):
        p = curve(s, phi)
        print(f"  sin d = {s}: phi = {phi:.4f} ({label:>18}): "
              f"E = {p.correlation(TOBS_MODE):+.6f}, "
              f"T_obs/T = {p.t_obs_fraction:.6f}")

print()
print("the observed total itself varies with angle: least overlap of the")
print("two bands at phi = pi/2 means the most lost pairs there")
model = DetectionModel.symmetric_bands(math.asin(0.2))
for k in range(5):
    phi = k * PI / 4
    p = banded_probabilities(HvSpace.SPHERE, phi, model, model)
    bar = "#" * round(40 * p.t_obs_fraction)
    print(f"  phi = {phi:6.4f}  T_obs/T = {p.t_obs_fraction:.4f}  {bar}")
