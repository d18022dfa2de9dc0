"""N_BLP and N_RHP maps over (lam, gamma): exact everywhere, RC-QME for lam <= lam_rc_max."""
import argparse
from pathlib import Path

import numpy as np

from rcqme.sweep import RunConfig, log_axis, sweep_measures


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="out/measure_maps")
    ap.add_argument("--n", type=int, default=21)
    ap.add_argument("--lam-rc-max", type=float, default=1.0)
    ap.add_argument("--m-levels", type=int, default=8)
    ap.add_argument("--workers", type=int, default=1)
    args = ap.parse_args()
    lam = log_axis(0.1, 5.0, args.n)
    gam = log_axis(0.01, 0.1, args.n)
    ex = sweep_measures(RunConfig(method="exact"), lam, gam, workers=args.workers)
    ex.write(Path(args.out) / "exact")
    print(f"exact map: {len(ex.failures)} failed cells")
    sel = lam[lam <= args.lam_rc_max * (1 + 1e-12)]
    if sel.size:
        rc = sweep_measures(RunConfig(method="rc_qme", integrator="expm", m_levels=args.m_levels),
                            sel, gam, workers=args.workers)
        rc.write(Path(args.out) / "rc_qme")
        k = sel.size
        for name, a, b in (("N_BLP", rc.n_blp, ex.n_blp[:k]), ("N_RHP", rc.n_rhp, ex.n_rhp[:k])):
            print(f"{name}: max relative RC/exact deviation {np.nanmax(np.abs(a / b - 1)):.3g}")


if __name__ == "__main__":
    main()
