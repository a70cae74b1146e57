#!/usr/bin/env python3
"""Reference solve of an exported SDPA sparse (.dat-s) problem via SCS.

The input follows the library's export convention: SDPA minimization of the
negated objective, block slacks X_k = sum_i x_i F_i^k - F_0^k constrained
positive semidefinite (negative block sizes mark diagonal blocks), and an
"*offset" comment carrying the affine objective constant.  Reported values
are mapped back to the original maximization: value = -(sdpa objective) +
offset.

Besides solving, the tool polishes the dual iterate into a certificate:
alternating least-norm corrections onto the dual equality constraints
(A^T y = -c, via LSMR) and projections onto the positive cone, so that the
final y can be verified independently with exact linear algebra.

Output JSON fields:
  solver, status, iters, solve_secs, offset,
  value            -(pobj) + offset   (primal estimate of the maximum)
  dual_value       -(dobj) + offset
  x                free variables of the maximization (list)
  y_blocks         dual certificate per block: diagonal blocks as the list of
                   their diagonal entries, dense blocks as the flat row-major
                   lower triangle (r >= c) of the unscaled dual matrix Y
  polish           {rounds, max_residual, min_eig} for the returned y
"""

import argparse
import json
import math
import sys
import time

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla


def parse_sdpa(path):
    """Parse the exporter's .dat-s dialect.

    Returns (nv, block_dims, c_min, f0, fs, offset) where block_dims holds
    signed sizes (negative = diagonal), f0/fs map blocks to entry lists
    (i, j, v) with 0-based i <= j, and fs[k] lists (var, i, j, v).
    """
    offset = 0.0
    rows = []
    header = []
    with open(path, "r") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            if line[0] in "*\"":
                if line.startswith("*offset "):
                    offset = float(line.split(None, 1)[1])
                continue
            if len(header) < 3:
                header.append(line)
                continue
            if len(header) == 3:
                header.append(line)  # objective row
                continue
            rows.append(line)
    nv = int(header[0].split()[0])
    nblocks = int(header[1].split()[0])
    dims = [int(t) for t in header[2].replace(",", " ").split()]
    if len(dims) != nblocks:
        raise ValueError("block size list does not match block count")
    c_min = np.array([float(t) for t in header[3].replace(",", " ").split()])
    if c_min.size != nv:
        raise ValueError("objective row does not match variable count")
    f0 = [[] for _ in dims]
    fs = [[] for _ in dims]
    for line in rows:
        k, blk, i, j, v = line.split()
        k, blk, i, j, v = int(k), int(blk) - 1, int(i) - 1, int(j) - 1, float(v)
        if i > j:
            i, j = j, i
        if k == 0:
            f0[blk].append((i, j, v))
        else:
            fs[blk].append((k - 1, i, j, v))
    return nv, dims, c_min, f0, fs, offset


def build_cone_data(nv, dims, f0, fs):
    """Assemble SCS data (A, b, cone dict) for: min c'x, b - Ax in K.

    Rows are emitted nonnegative-cone first (diagonal blocks in file order),
    then one scaled-svec PSD slice per dense block.  The slack of block k is
    sum_i x_i F_i - F_0, so A rows hold -F entries and b holds -F_0.
    """
    l_dims = [(idx, -d) for idx, d in enumerate(dims) if d < 0]
    s_dims = [(idx, d) for idx, d in enumerate(dims) if d > 0]
    lrows = sum(d for _, d in l_dims)
    row_of_diag = {}
    base = 0
    for idx, d in l_dims:
        row_of_diag[idx] = base
        base += d
    svec_base = {}
    for idx, d in s_dims:
        svec_base[idx] = base
        base += d * (d + 1) // 2
    nrows = base

    def svec_row(idx, i, j):
        # scaled svec, column-major lower triangle: column j holds rows i >= j
        d = dims[idx]
        return svec_base[idx] + j * d - j * (j - 1) // 2 + (i - j)

    sq2 = math.sqrt(2.0)
    ai, aj, av = [], [], []
    b = np.zeros(nrows)
    for idx, d in enumerate(dims):
        if d < 0:
            for i, j, v in f0[idx]:
                b[row_of_diag[idx] + i] = -v
            for k, i, j, v in fs[idx]:
                ai.append(row_of_diag[idx] + i)
                aj.append(k)
                av.append(-v)
        else:
            for i, j, v in f0[idx]:
                r = svec_row(idx, j, i)  # file has i <= j; svec wants i >= j
                b[r] = -v * (sq2 if i != j else 1.0)
            for k, i, j, v in fs[idx]:
                r = svec_row(idx, j, i)
                ai.append(r)
                aj.append(k)
                av.append(-v * (sq2 if i != j else 1.0))
    a = sp.csc_matrix((av, (ai, aj)), shape=(nrows, nv))
    cone = dict(l=lrows, s=[d for _, d in s_dims])
    return a, b, cone, row_of_diag, svec_base


def unpack_dual(y, dims, row_of_diag, svec_base):
    """Split the SCS dual vector into per-block objects (vector or matrix)."""
    sq2 = math.sqrt(2.0)
    out = []
    for idx, d in enumerate(dims):
        if d < 0:
            out.append(np.array(y[row_of_diag[idx]:row_of_diag[idx] - d]))
        else:
            m = np.zeros((d, d))
            base = svec_base[idx]
            for j in range(d):
                for i in range(j, d):
                    v = y[base + j * d - j * (j - 1) // 2 + (i - j)]
                    m[i, j] = m[j, i] = v / (sq2 if i != j else 1.0)
            out.append(m)
    return out


def pack_dual(blocks, dims, nrows, row_of_diag, svec_base):
    sq2 = math.sqrt(2.0)
    y = np.zeros(nrows)
    for idx, d in enumerate(dims):
        if d < 0:
            y[row_of_diag[idx]:row_of_diag[idx] - d] = blocks[idx]
        else:
            base = svec_base[idx]
            m = blocks[idx]
            for j in range(d):
                for i in range(j, d):
                    y[base + j * d - j * (j - 1) // 2 + (i - j)] = (
                        m[i, j] * (sq2 if i != j else 1.0))
    return y


def polish_dual(a, c_min, y, dims, row_of_diag, svec_base, rounds, verbose):
    """Alternate equality projection (LSMR) and cone projection on y.

    Dual feasibility for the maximization is A^T y + c_min = 0 with y in the
    cone; LSMR supplies the least-norm correction for the equalities, the
    eigenvalue floor restores the cone, and a few rounds shrink both errors.
    """
    at = a.T.tocsr()
    best = None
    for rnd in range(rounds):
        r = at @ y + c_min
        delta = spla.lsmr(at, -r, atol=1e-14, btol=1e-14, maxiter=2000)[0]
        y = y + delta
        blocks = unpack_dual(y, dims, row_of_diag, svec_base)
        mineig = 0.0
        for idx, d in enumerate(dims):
            if d < 0:
                mineig = min(mineig, float(blocks[idx].min()))
                blocks[idx] = np.maximum(blocks[idx], 0.0)
            else:
                w, v = np.linalg.eigh(blocks[idx])
                mineig = min(mineig, float(w[0]))
                blocks[idx] = (v * np.maximum(w, 0.0)) @ v.T
        y_floor = pack_dual(blocks, dims, a.shape[0], row_of_diag, svec_base)
        r_floor = at @ y_floor + c_min
        # score the FLOORED iterate (exactly in-cone, residual known)
        score = float(np.abs(r_floor).max())
        if verbose:
            print(f"polish round {rnd}: pre-floor min eig {mineig:.3e}, "
                  f"post-floor max residual {score:.3e}", flush=True)
        if best is None or score < best[0]:
            best = (score, y_floor.copy())
        y = y_floor
    return best[1], best[0]


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("problem", help="input .dat-s path")
    ap.add_argument("output", help="output .json path")
    ap.add_argument("--eps", type=float, default=1e-7)
    ap.add_argument("--time-limit", type=float, default=14000.0)
    ap.add_argument("--max-iters", type=int, default=1000000)
    ap.add_argument("--polish-rounds", type=int, default=8)
    ap.add_argument("--npz", help="also dump raw arrays to this .npz")
    ap.add_argument("--verbose", action="store_true")
    args = ap.parse_args()

    import scs

    nv, dims, c_min, f0, fs, offset = parse_sdpa(args.problem)
    a, b, cone, row_of_diag, svec_base = build_cone_data(nv, dims, f0, fs)
    if args.verbose:
        print(f"problem: {nv} vars, {a.shape[0]} cone rows, "
              f"{a.nnz} nonzeros", flush=True)

    t0 = time.time()
    solver = scs.SCS(
        dict(A=a, b=b, c=c_min), cone,
        eps_abs=args.eps, eps_rel=args.eps, max_iters=args.max_iters,
        time_limit_secs=args.time_limit, verbose=args.verbose)
    sol = solver.solve()
    solve_secs = time.time() - t0
    info = sol["info"]
    x = sol["x"]
    y = sol["y"]

    y_pol, max_res = polish_dual(a, c_min, y.copy(), dims, row_of_diag,
                                 svec_base, args.polish_rounds, args.verbose)
    blocks = unpack_dual(y_pol, dims, row_of_diag, svec_base)
    mineig = min(
        (float(np.linalg.eigvalsh(blk).min()) if blk.ndim == 2
         else float(blk.min()))
        for blk in blocks)

    y_blocks = []
    for blk, d in zip(blocks, dims):
        if d < 0:
            y_blocks.append([float(v) for v in blk])
        else:
            y_blocks.append([float(blk[i, j])
                             for i in range(d) for j in range(i + 1)])

    dual_value = float(b @ y_pol + offset)
    out = dict(
        solver="scs " + scs.__version__,
        status=info["status"],
        iters=info["iter"],
        solve_secs=round(solve_secs, 1),
        offset=offset,
        value=float(-info["pobj"] + offset),
        dual_value=dual_value,
        polish=dict(rounds=args.polish_rounds,
                    max_residual=float(max_res),
                    min_eig=float(mineig)),
        x=[float(v) for v in x],
        y_blocks=y_blocks,
    )
    with open(args.output, "w") as fh:
        json.dump(out, fh)
    if args.npz:
        np.savez_compressed(args.npz, x=x, y_raw=y, y_polished=y_pol)
    print(json.dumps({k: out[k] for k in
                      ("solver", "status", "iters", "solve_secs", "value",
                       "dual_value", "polish")}), flush=True)
    return 0


if __name__ == "__main__":
    sys.exit(main())
