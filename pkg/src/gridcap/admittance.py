"""Nodal admittance matrix construction.

Series RX branches with total line charging split half per end; open
branches contribute nothing; shunt capacitors add +j*b_cap on the diagonal.
No taps or phase shifters, so Y is exactly symmetric.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import Network


@dataclass(frozen=True)
class AdmittanceMatrix:
    bus_ids: tuple
    y: np.ndarray  # complex (n, n)

    @property
    def g(self) -> np.ndarray:
        return self.y.real

    @property
    def b(self) -> np.ndarray:
        return self.y.imag

    def submatrix(self, bus_ids) -> "AdmittanceMatrix":
        idx = [self.bus_ids.index(b) for b in bus_ids]
        return AdmittanceMatrix(tuple(bus_ids), self.y[np.ix_(idx, idx)].copy())


def build_admittance(net: Network) -> AdmittanceMatrix:
    n = net.n_bus
    y = np.zeros((n, n), dtype=complex)
    for br in net.branches:
        if not br.closed:
            continue
        i = net.bus_index(br.from_bus)
        j = net.bus_index(br.to_bus)
        ys = 1.0 / complex(br.r, br.x)
        ysh = 0.5j * br.b_sh
        y[i, i] += ys + ysh
        y[j, j] += ys + ysh
        y[i, j] -= ys
        y[j, i] -= ys
    for sh in net.shunts:
        k = net.bus_index(sh.bus)
        y[k, k] += 1j * sh.b_cap
    y.setflags(write=False)
    return AdmittanceMatrix(net.bus_ids, y)
