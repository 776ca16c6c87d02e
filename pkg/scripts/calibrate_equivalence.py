"""Fit the constant C in ``max_infidelity ~ C (Omega0/omega_B)^2``.

Runs the desk-scale single-ion point with the whole dynamic field scaled
over one decade and writes ``src/magicsim/data/equivalence_calibration.json``.
"""

import json
from pathlib import Path

import numpy as np

from magicsim.cli import load_config
from magicsim.dynamics import equivalence_check

SCALES = (1.0, 0.5, 0.25, 0.1)
STEPS = 2560  # integration error well below the counter-rotating error


def main():
    base, _ = load_config(preset="desk_equivalence")
    base = base.with_sim(steps_per_drive_period=STEPS)
    ratios, infid = [], []
    for s in SCALES:
        system = base.with_field(
            b_offset=base.field.b_offset * s, gradient=base.field.gradient * s
        )
        rep = equivalence_check(system, n_samples=400, calibration=1.0)
        ratios.append(rep.ratio)
        infid.append(rep.max_infidelity)
        print(f"scale {s:5.2f}  ratio {rep.ratio:.3e}  max infidelity {rep.max_infidelity:.3e}")
    r2 = np.square(ratios)
    c = float(np.exp(np.mean(np.log(np.array(infid) / r2))))
    slope = float(np.polyfit(np.log(ratios), np.log(infid), 1)[0])
    print(f"C = {c:.4f}, log-log slope = {slope:.3f}")
    out = {
        "C": round(c, 4),
        "fit_slope": round(slope, 4),
        "scales": list(SCALES),
        "ratios": ratios,
        "max_infidelity": infid,
        "steps_per_drive_period": STEPS,
        "preset": "desk_equivalence",
    }
    path = Path(__file__).resolve().parents[1] / "src/magicsim/data/equivalence_calibration.json"
    path.write_text(json.dumps(out, indent=2) + "\n")


if __name__ == "__main__":
    main()
