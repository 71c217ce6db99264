"""Thin adapter: solve an LP file with HiGHS and write the plain solution format.

Usage: ``python -m gridplan.solver.highs_adapter model.lp out.sol [--time-limit S] [--gap G] [--seed N]``
"""

from __future__ import annotations

import argparse
import sys


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="highs_adapter")
    ap.add_argument("lp")
    ap.add_argument("sol")
    ap.add_argument("--time-limit", type=float, default=60.0)
    ap.add_argument("--gap", type=float, default=0.0)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--threads", type=int, default=1)
    ap.add_argument("--start", help="partial warm start in the plain 'name value' format")
    args = ap.parse_args(argv)

    import highspy

    h = highspy.Highs()
    h.setOptionValue("output_flag", False)
    h.setOptionValue("time_limit", args.time_limit)
    h.setOptionValue("mip_rel_gap", args.gap)
    h.setOptionValue("random_seed", args.seed)
    h.setOptionValue("threads", args.threads)
    if h.readModel(args.lp) != highspy.HighsStatus.kOk:
        print(f"cannot read {args.lp}", file=sys.stderr)
        return 1
    if args.start:
        _set_start(h, args.start)
    h.run()
    status = h.getModelStatus()
    ms = highspy.HighsModelStatus
    info = h.getInfo()
    has_sol = info.primal_solution_status == 2
    if status == ms.kOptimal:
        tag = "OPTIMAL"
    elif status in (ms.kInfeasible, ms.kUnboundedOrInfeasible):
        tag = "INFEASIBLE"
    elif status == ms.kTimeLimit:
        tag = "TIMELIMIT"
    elif has_sol:
        tag = "FEASIBLE"
    else:
        print(f"unexpected model status {h.modelStatusToString(status)}", file=sys.stderr)
        return 1
    lines = [f"=status= {tag}"]
    if has_sol:
        lines.append(f"=objective= {info.objective_function_value!r}")
        lines.append(f"=bound= {info.mip_dual_bound!r}")
        lp = h.getLp()
        col = h.getSolution().col_value
        for name, val in zip(lp.col_names_, col):
            lines.append(f"{name} {val!r}")
    with open(args.sol, "w") as fh:
        fh.write("\n".join(lines) + "\n")
    return 0


def _set_start(h, path) -> None:
    import numpy as np

    names = h.getLp().col_names_
    index = {n: k for k, n in enumerate(names)}
    idx, val = [], []
    with open(path) as fh:
        for line in fh:
            parts = line.split("#", 1)[0].split()
            if len(parts) == 2 and not parts[0].startswith("=") and parts[0] in index:
                idx.append(index[parts[0]])
                val.append(float(parts[1]))
    if idx:
        h.setSolution(len(idx), np.array(idx, dtype=np.int32), np.array(val, dtype=np.float64))


if __name__ == "__main__":
    sys.exit(main())
