"""Mutable per-iteration simulation state."""

from dataclasses import dataclass, field

import numpy as np


@dataclass
class NetworkState:
    """Positions and transmit powers of all nodes and interferers.

    Node index 0 is the BS (source), the last node is the destination UE;
    relays sit in between.  All powers are in watts.
    """

    node_pos: np.ndarray          # (N, 3) meters
    jam_pos: np.ndarray           # (M, 3) meters
    p: np.ndarray                 # (N,) watts
    pj: np.ndarray                # (M,) watts
    t: int = 0
    jam_path_s: np.ndarray = field(default=None)  # (M,) arc length along scripted paths

    def copy(self):
        return NetworkState(
            node_pos=self.node_pos.copy(),
            jam_pos=self.jam_pos.copy(),
            p=self.p.copy(),
            pj=self.pj.copy(),
            t=self.t,
            jam_path_s=None if self.jam_path_s is None else self.jam_path_s.copy(),
        )
