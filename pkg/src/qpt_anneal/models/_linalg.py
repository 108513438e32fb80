"""Small eigen-solver helpers shared by the model systems."""

from __future__ import annotations

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

DENSE_LIMIT = 4096


class EigensolverError(RuntimeError):
    pass


def lowest_eigh(H, n: int):
    """Lowest ``n`` eigenpairs of a real symmetric dense or sparse matrix."""
    d = H.shape[0]
    if n > d:
        raise ValueError(f"requested {n} levels from a {d}-dimensional space")
    if sp.issparse(H):
        if d <= DENSE_LIMIT:
            H = H.toarray()
        else:
            try:
                w, v = spla.eigsh(H, k=n, which="SA", tol=1e-13)
            except spla.ArpackNoConvergence as exc:
                raise EigensolverError(f"ARPACK did not converge for {n} levels in dim {d}") from exc
            order = np.argsort(w)
            return w[order], v[:, order]
    try:
        return sla.eigh(H, subset_by_index=[0, n - 1])
    except np.linalg.LinAlgError as exc:
        raise EigensolverError(f"dense eigensolver failed in dim {d}") from exc


def as_dense(H):
    if sp.issparse(H):
        return H.toarray()
    if hasattr(H, "to_dense"):
        return H.to_dense()
    return np.asarray(H)


def apply(H, v):
    if hasattr(H, "matvec"):
        return H.matvec(v)
    return H @ v
