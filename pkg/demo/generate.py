"""Regenerate the synthetic demo dataset in ./data (deterministic).

The files mimic Battery Archive cycle-data exports: one CSV per test, named
by the test-name grammar, with Cycle_Index and Discharge_Capacity (Ah)
columns among others. Every 100th cycle is a low-rate RPT cycle (capacity
spike) and a few cycles are idle (zero capacity). Fade rates are made up;
they scale with temperature, discharge rate and DOD so the comparison has
something to show.
"""

import json
from pathlib import Path

import numpy as np

HERE = Path(__file__).parent
NOMINAL = 1.1
N_CYCLES = 600

# (temp, (lo, hi), chg, dis, replicate) -> fade Ah/cycle
TESTS = {
    (15, (0, 100), 0.5, 1, "a"): 1.6e-4,
    (15, (0, 100), 0.5, 1, "b"): 1.5e-4,
    (25, (0, 100), 0.5, 1, "a"): 2.0e-4,
    (35, (0, 100), 0.5, 1, "a"): 3.4e-4,
    (15, (0, 100), 0.5, 2, "b"): 2.6e-4,
    (25, (20, 80), 0.5, 1, "a"): 1.1e-4,
    (25, (30, 70), 0.5, 1, "a"): 0.7e-4,
}


def name(temp, window, chg, dis, rep):
    return f"SNL_18650_LFP_{temp}C_{window[0]}-{window[1]}_{chg:g}-{dis:g}C_{rep}"


def main():
    rng = np.random.default_rng(20230101)
    data = HERE / "data"
    data.mkdir(exist_ok=True)
    entries = []
    for key, fade in TESTS.items():
        n = name(*key)
        idx = np.arange(1, N_CYCLES + 1)
        cap = NOMINAL - fade * (idx - 1) + rng.normal(0, 4e-5, N_CYCLES)
        cap[idx % 100 == 0] += 0.04
        for k in rng.choice(np.arange(5, N_CYCLES - 5), 3, replace=False):
            cap[k] = 0.0
        charge = np.where(cap > 0, cap + 0.002, 0.0)
        lines = ["Cycle_Index,Test_Time (s),Charge_Capacity (Ah),Discharge_Capacity (Ah),Discharge_Energy (Wh)"]
        for i, q, c in zip(idx, cap, charge):
            lines.append(f"{i:.1f},{i * 7200.0:.1f},{c:.6f},{q:.6f},{q * 3.2:.6f}")
        (data / f"{n}_cycle_data.csv").write_text("\n".join(lines) + "\n")
        entries.append(f"data/{n}_cycle_data.csv")
    manifest = {"defaults": {"nominal_capacity_Ah": NOMINAL}, "tests": entries}
    (HERE / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")


if __name__ == "__main__":
    main()
