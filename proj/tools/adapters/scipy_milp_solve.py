#!/usr/bin/env python3
"""MILP solver adapter over scipy.optimize.milp (HiGHS backend).

Reads the free-format MPS subset written by the toolkit's write_mps, solves
the model, and writes a solution file:

    =status= optimal|infeasible|unbounded|limit
    =obj= <objective>
    =gap= <relative mip gap, when reported>
    <variable name> <value>      (one line per variable)

Usage:
    scipy_milp_solve.py MODEL.mps OUT.sol [--time-limit SECONDS]
                        [--mip-rel-gap FRACTION]
"""

import argparse
import sys

import numpy as np
from scipy import optimize, sparse

INF = 1e30


def parse_mps(path):
    """Parses the writer's MPS dialect: N/L/G/E rows, COLUMNS with INTORG
    markers, RHS, and LO/UP/LI/UI/BV/FR/MI/PL bounds."""
    rows = {}  # name -> (sense, index); objective handled separately
    row_order = []
    obj_row = None
    cols = {}  # name -> index
    col_order = []
    col_integer = []
    entries = []  # (row_index, col_index, coef); objective row_index = -1
    rhs = {}
    bounds = []  # per column [lo, up], patched by BOUNDS
    section = None
    in_integer = False

    with open(path) as f:
        for line_no, raw in enumerate(f, 1):
            line = raw.rstrip("\n")
            if not line.strip() or line.startswith("*"):
                continue
            tok = line.split()
            if not line[0].isspace():
                key = tok[0].upper()
                if key == "NAME":
                    continue
                if key in ("ROWS", "COLUMNS", "RHS", "RANGES", "BOUNDS", "ENDATA"):
                    section = key
                    continue
                raise ValueError(f"{path}:{line_no}: unknown section {tok[0]}")
            if section == "ROWS":
                sense, name = tok
                if sense == "N":
                    if obj_row is None:
                        obj_row = name
                elif sense in ("L", "G", "E"):
                    rows[name] = (sense, len(row_order))
                    row_order.append(name)
                else:
                    raise ValueError(f"{path}:{line_no}: bad row sense {sense}")
            elif section == "COLUMNS":
                if len(tok) >= 3 and tok[1] == "'MARKER'":
                    in_integer = tok[2] == "'INTORG'"
                    continue
                name = tok[0]
                if name not in cols:
                    cols[name] = len(col_order)
                    col_order.append(name)
                    col_integer.append(in_integer)
                    bounds.append([0.0, INF])
                c = cols[name]
                for rname, val in zip(tok[1::2], tok[2::2]):
                    if rname == obj_row:
                        entries.append((-1, c, float(val)))
                    else:
                        entries.append((rows[rname][1], c, float(val)))
            elif section == "RHS":
                for rname, val in zip(tok[1::2], tok[2::2]):
                    if rname != obj_row:
                        rhs[rows[rname][1]] = float(val)
            elif section == "RANGES":
                raise ValueError(f"{path}:{line_no}: RANGES not supported")
            elif section == "BOUNDS":
                kind = tok[0].upper()
                name = tok[2]
                c = cols[name]
                val = float(tok[3]) if len(tok) > 3 else 0.0
                if kind in ("LO", "LI"):
                    bounds[c][0] = val
                elif kind in ("UP", "UI"):
                    bounds[c][1] = val
                elif kind == "FX":
                    bounds[c] = [val, val]
                elif kind == "FR":
                    bounds[c] = [-INF, INF]
                elif kind == "MI":
                    bounds[c][0] = -INF
                elif kind == "PL":
                    bounds[c][1] = INF
                elif kind == "BV":
                    col_integer[c] = True
                    bounds[c] = [0.0, 1.0]
                else:
                    raise ValueError(f"{path}:{line_no}: bound kind {kind}")
            elif section == "ENDATA":
                raise ValueError(f"{path}:{line_no}: data after ENDATA")
            else:
                raise ValueError(f"{path}:{line_no}: data outside any section")

    n = len(col_order)
    m = len(row_order)
    obj = np.zeros(n)
    data, ri, ci = [], [], []
    for r, c, v in entries:
        if r < 0:
            obj[c] += v
        else:
            data.append(v)
            ri.append(r)
            ci.append(c)
    a_mat = sparse.csr_matrix((data, (ri, ci)), shape=(m, n))
    lo = np.full(m, -np.inf)
    up = np.full(m, np.inf)
    for name in row_order:
        sense, r = rows[name]
        b = rhs.get(r, 0.0)
        if sense in ("L", "E"):
            up[r] = b
        if sense in ("G", "E"):
            lo[r] = b
    lb = np.array([b[0] if b[0] > -INF else -np.inf for b in bounds])
    ub = np.array([b[1] if b[1] < INF else np.inf for b in bounds])
    return col_order, np.array(col_integer, dtype=bool), obj, a_mat, lo, up, lb, ub


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("mps")
    ap.add_argument("sol")
    ap.add_argument("--time-limit", type=float, default=None)
    ap.add_argument("--mip-rel-gap", type=float, default=None)
    args = ap.parse_args()

    names, integrality, obj, a_mat, lo, up, lb, ub = parse_mps(args.mps)

    constraints = optimize.LinearConstraint(a_mat, lo, up) if a_mat.shape[0] else ()
    options = {"disp": False}
    if args.time_limit is not None:
        options["time_limit"] = args.time_limit
    if args.mip_rel_gap is not None:
        options["mip_rel_gap"] = args.mip_rel_gap
    res = optimize.milp(
        c=obj,
        constraints=constraints,
        integrality=integrality.astype(int),
        bounds=optimize.Bounds(lb, ub),
        options=options,
    )

    # scipy status codes: 0 optimal, 1 iteration/time limit, 2 infeasible,
    # 3 unbounded, 4 other.
    status = {0: "optimal", 1: "limit", 2: "infeasible", 3: "unbounded"}.get(
        res.status, "limit"
    )
    if status == "limit" and res.x is None and res.status == 4:
        sys.stderr.write(f"solver failure: {res.message}\n")
        return 1

    with open(args.sol, "w") as f:
        f.write(f"=status= {status}\n")
        if res.x is not None:
            f.write(f"=obj= {float(res.fun)!r}\n")
            gap = getattr(res, "mip_gap", None)
            if gap is not None and np.isfinite(gap) and gap > 0:
                f.write(f"=gap= {float(gap)!r}\n")
            for name, val in zip(names, res.x):
                f.write(f"{name} {float(val)!r}\n")
    return 0


if __name__ == "__main__":
    sys.exit(main())
