"""Adaptive user mapping: any N_u <= M users onto exactly M network slots.

Each original user is copied ``c_j`` times and every copy carries ``R_j / c_j``
so per-user demand is conserved.  With ``a = M // N_u`` and ``b = M % N_u``
the first ``b`` users get ``a + 1`` copies and the others ``a``.  Slots
``0..N_u-1`` hold the originals; slot ``k >= N_u`` mirrors user ``k % N_u``.
"""

from dataclasses import dataclass

import numpy as np


class MappingInfeasibleError(ValueError):
    pass


@dataclass
class MappedInstance:
    snr: np.ndarray  # M x N_a, one row per slot (same unit as the input)
    rates: np.ndarray  # M, split demand
    origin: np.ndarray  # M, original user index of each slot
    copies: np.ndarray  # N_u, c_j

    @property
    def n_slots(self):
        return len(self.origin)

    def first_slot(self):
        """Slot index holding each original user's own copy (slot j for user j)."""
        return np.arange(len(self.copies))


def split_counts(n_users, max_users):
    if n_users < 1:
        raise MappingInfeasibleError("cannot map an empty user set")
    if n_users > max_users:
        raise MappingInfeasibleError(f"{n_users} users exceed the {max_users} network slots")
    a, b = divmod(max_users, n_users)
    copies = np.full(n_users, a, dtype=np.int64)
    copies[:b] += 1
    return copies


def adaptive_map(snr, rates, max_users):
    """Map per-user SNR columns (``N_a x N_u``) and rates onto ``max_users`` slots."""
    snr = np.asarray(snr, dtype=float)
    rates = np.asarray(rates, dtype=float)
    n_users = len(rates)
    if snr.ndim != 2 or snr.shape[1] != n_users:
        raise ValueError("snr must be N_a x N_u")
    copies = split_counts(n_users, max_users)
    origin = np.arange(max_users) % n_users
    return MappedInstance(snr.T[origin].copy(), rates[origin] / copies[origin], origin, copies)
