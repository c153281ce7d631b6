"""Regenerate ``regression.json``; run only when a numerical change is intended."""
import json
from pathlib import Path

from svlab import parity, pseudospin

R_GRID = [0.0, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0]


def main():
    out = {
        "parity_s_opt": {
            f"{n},{a}": parity.optimal_value(n, a) for n in (2, 3, 4, 5) for a in (1.5, 3.0, 10.0)
        },
        "threshold": {str(n): parity.threshold(n) for n in (3, 5, 7)},
        "s3_fixed": {},
        "s3_optimized": {},
        "residual_norm": {},
        "f": {str(n): pseudospin.shell_term_f(n) for n in (0, 1, 2, 10, 100, 1000)},
    }
    for r in R_GRID:
        state = pseudospin.ghz_state_fock(r)
        out["s3_fixed"][str(r)] = pseudospin.svetlichny_fixed_settings(state)
        out["s3_optimized"][str(r)] = pseudospin.optimize_pseudospin_settings(state).s_opt
    for r in (0.0, 1.0, 2.0):
        out["residual_norm"][str(r)] = pseudospin.residual_norm(r)
    path = Path(__file__).with_name("regression.json")
    path.write_text(json.dumps(out, indent=2, sort_keys=True) + "\n")


if __name__ == "__main__":
    main()
