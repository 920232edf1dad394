"""Built-in initial coefficient vectors for the 40-site experiments.

The two tabulated wave packets (symmetric and asymmetric Gaussian-type
profiles around the lattice center) are listed with indices 0..40; index 0
belongs to the frozen boundary site and must be zero, entries 1..40 are
used and renormalized to unit norm.
"""

from __future__ import annotations

import numpy as np

from .dnls import DnlsState

N_SITES = 40

# index 0..40; entry 0 is the boundary value and stays 0
TABLE1_SYMMETRIC = np.array([
    0.0,
    0.0, 0.0, 0.0, 0.0, 0.0, 0.0,
    0.303e-5, 0.177e-4, 0.898e-4, 0.396e-3,
    0.151e-2, 0.502e-2, 0.149e-1, 0.363e-1, 0.788e-1,
    0.149, 0.244, 0.347, 0.429, 0.460,
    0.429, 0.347, 0.244, 0.149,
    0.788e-1, 0.363e-1, 0.149e-1, 0.502e-2, 0.151e-2,
    0.396e-3, 0.898e-4, 0.177e-4, 0.303e-5,
    0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0,
])

TABLE2_ASYMMETRIC = np.array([
    0.0,
    0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0,
    0.614e-5, 0.354e-4, 0.180e-3, 0.814e-3,
    0.330e-2, 0.121e-1, 0.414e-1, 0.133,
    0.351, 0.496, 0.471, 0.411, 0.336,
    0.252, 0.170, 0.103,
    0.546e-1, 0.257e-1, 0.106e-1, 0.386e-2, 0.123e-2,
    0.340e-3, 0.826e-4, 0.175e-4, 0.323e-5,
    0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0,
])


def builtin_initial_state(name: str, custom=None) -> DnlsState:
    """Named initial state on 40 sites, renormalized to unit norm.

    'table1' and 'table2' are the tabulated symmetric/asymmetric packets;
    'single-site' puts all weight on site N/2 = 20; 'custom' wraps a
    caller-provided coefficient vector (length 40 or 41 with leading
    boundary zero).
    """
    if name == "table1":
        table = TABLE1_SYMMETRIC
    elif name == "table2":
        table = TABLE2_ASYMMETRIC
    elif name == "single-site":
        amps = np.zeros(N_SITES, dtype=complex)
        amps[N_SITES // 2 - 1] = 1.0  # site l = 20 with l = 1..N
        return DnlsState(amps)
    elif name == "custom":
        if custom is None:
            raise ValueError("custom state requires a coefficient vector")
        vec = np.asarray(custom, dtype=complex)
        if vec.size == N_SITES + 1:
            if vec[0] != 0:
                raise ValueError("entry 0 is the frozen boundary and must be 0")
            vec = vec[1:]
        if vec.size != N_SITES:
            raise ValueError(f"custom state must have {N_SITES} entries, got {vec.size}")
        return DnlsState.from_sites(vec)
    else:
        raise ValueError(f"unknown initial state {name!r}")
    assert table[0] == 0.0
    return DnlsState.from_sites(table[1:])
