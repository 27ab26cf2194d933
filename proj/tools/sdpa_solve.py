#!/usr/bin/env python3
"""Independent check of exported SDPA sparse files.

Reads a .dat-s file describing

    sup { <F0, Y> : <Fi, Y> = c_i (i in [m]), Y >= 0 }

and solves the equivalent linear-matrix-inequality side

    min  c^T z   s.t.   sum_i z_i Fi - F0 >= 0

with cvxopt, printing the optimal value. Exit codes: 0 value printed,
2 solver did not reach 'optimal', 3 cvxopt unavailable.

Usage: sdpa_solve.py FILE.dat-s | --probe
"""

import sys


def parse_sdpa(path):
    """Returns (m, dims, c, entries) with entries = [(matno, blk, i, j, v)]."""
    tokens = []
    with open(path) as fh:
        for line in fh:
            if line.startswith(("*", '"')):
                continue
            for ch in ",(){}":
                line = line.replace(ch, " ")
            tokens.extend(line.split())
    pos = 0

    def take(count):
        nonlocal pos
        out = tokens[pos:pos + count]
        pos += count
        return out

    m = int(take(1)[0])
    nblocks = int(take(1)[0])
    dims = [int(t) for t in take(nblocks)]
    c = [float(t) for t in take(m)]
    entries = []
    while pos + 5 <= len(tokens):
        matno, blk, i, j = (int(t) for t in take(4))
        v = float(take(1)[0])
        entries.append((matno, blk, i, j, v))
    return m, dims, c, entries


def solve(path):
    from cvxopt import matrix, solvers

    m, dims, c, entries = parse_sdpa(path)
    dims = [abs(d) for d in dims]  # diagonal blocks handled densely
    Gs = [matrix(0.0, (d * d, m)) for d in dims]
    hs = [matrix(0.0, (d, d)) for d in dims]
    for matno, blk, i, j, v in entries:
        b = blk - 1
        d = dims[b]
        r, s = i - 1, j - 1
        if matno == 0:  # hs = -F0
            hs[b][r, s] = -v
            hs[b][s, r] = -v
        else:  # G columns hold vec(-Fi)
            Gs[b][s * d + r, matno - 1] = -v
            Gs[b][r * d + s, matno - 1] = -v

    solvers.options["show_progress"] = False
    solvers.options["maxiters"] = 200
    # Moment SDPs have no strictly feasible Y (the matrices are rank
    # deficient on a variety), which breaks the default KKT factorization
    # near the optimum; the regularized LDL solver handles it.
    solvers.options["kktreg"] = 1e-9
    sol = solvers.sdp(matrix(c), Gs=Gs, hs=hs, kktsolver="ldl")
    if sol["status"] != "optimal":
        print("status: %s" % sol["status"], file=sys.stderr)
        return 2
    print("%.12g" % sol["primal objective"])
    return 0


def main(argv):
    if len(argv) != 2 or argv[1] in ("-h", "--help"):
        print(__doc__.strip(), file=sys.stderr)
        return 1
    if argv[1] == "--probe":
        try:
            import cvxopt  # noqa: F401
        except ImportError:
            return 3
        return 0
    try:
        return solve(argv[1])
    except ImportError:
        return 3


if __name__ == "__main__":
    sys.exit(main(sys.argv))
