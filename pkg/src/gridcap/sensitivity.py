"""Per-bus optimization sensitivities and the composite placement score.

From an optimal primal-dual point the reactive sensitivity is the
Lagrangian derivative with respect to bus reactive demand (the negated
Q-balance multiplier under this package's sign convention) and the voltage
sensitivity is the derivative with respect to the bus voltage upper bound
(the negated upper-bound multiplier). Candidate buses are ranked by the
weighted composite

    score_k = w_q * |os_q_k| + w_v * |os_v_k|,   w_q + w_v = 1,

larger meaning higher capacitor-upgrade priority. A central-difference
re-solve oracle validates the multipliers, guarded against active-set
changes between the two perturbed solves.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .acopf import OpfProblem, OpfSolution, OpfStatus, solve
from .model import GridcapError, ValidationError


class SensitivityError(GridcapError):
    pass


@dataclass(frozen=True)
class ScoreWeights:
    w_q: float = 0.5
    w_v: float = 0.5

    def __post_init__(self):
        if self.w_q < 0.0 or self.w_v < 0.0:
            raise ValidationError(f"score weights must be nonnegative, got {self}")
        if abs(self.w_q + self.w_v - 1.0) > 1e-9:
            raise ValidationError(
                f"score weights must sum to 1 within 1e-9, got {self.w_q + self.w_v}"
            )


@dataclass(frozen=True)
class RawSensitivity:
    """Signed per-bus sensitivities extracted from one solution."""

    bus_id: int
    os_q: float  # $/Mvar, dL/dQ_D at the bus
    os_v: float  # $/p.u., dL/dV_max at the bus (<= 0)
    status: OpfStatus
    reliable: bool  # False when the solution is not a KKT point


@dataclass(frozen=True)
class SensitivityRecord:
    bus_id: int
    os_q: float  # $/Mvar magnitude used for scoring
    os_v: float  # $/p.u. magnitude
    s_score: float
    rank: int  # 1-based, descending score, ties by ascending bus id


def extract(solution: OpfSolution) -> list:
    """Per-bus (os_q, os_v) from the solution multipliers.

    Non-optimal solutions yield records tagged unreliable; their
    multipliers are not KKT quantities and must not be aggregated.
    """
    if solution.lambda_q is None or len(solution.lambda_q) != len(solution.bus_ids):
        raise SensitivityError("solution carries no per-bus multipliers")
    reliable = solution.status is OpfStatus.OPTIMAL
    os_q = -solution.lambda_q_per_mvar
    os_v = -solution.mu_v_max
    return [
        RawSensitivity(bus_id=b, os_q=float(os_q[i]), os_v=float(os_v[i]),
                       status=solution.status, reliable=reliable)
        for i, b in enumerate(solution.bus_ids)
    ]


def composite_score(records, weights: ScoreWeights = ScoreWeights()) -> list:
    """Rank records by the weighted composite of sensitivity magnitudes."""
    scored = [
        (
            weights.w_q * abs(r.os_q) + weights.w_v * abs(r.os_v),
            r.bus_id,
            abs(r.os_q),
            abs(r.os_v),
        )
        for r in records
    ]
    order = sorted(scored, key=lambda t: (-t[0], t[1]))
    return [
        SensitivityRecord(bus_id=bid, os_q=q, os_v=v, s_score=s, rank=i + 1)
        for i, (s, bid, q, v) in enumerate(order)
    ]


@dataclass(frozen=True)
class HourlyAggregate:
    """Hour-aggregated ranking plus the data-quality tally."""

    records: tuple  # ranked SensitivityRecord
    hours_used: int
    hours_excluded: int  # non-Optimal hours dropped from aggregation
    mode: str


def aggregate_hours(per_hour, weights: ScoreWeights = ScoreWeights(), mode: str = "mean") -> HourlyAggregate:
    """Aggregate per-hour raw sensitivities into one ranking.

    per_hour: iterable of lists of RawSensitivity (one list per hour).
    Scores are formed per hour and averaged over reliable hours (default),
    or the per-hour maximum is taken with mode="max". Unreliable hours are
    excluded and counted.
    """
    if mode not in ("mean", "max"):
        raise ValidationError(f"aggregation mode must be mean or max, got {mode!r}")
    used = 0
    excluded = 0
    acc_q: dict = {}
    acc_v: dict = {}
    for records in per_hour:
        if not records or not all(r.reliable for r in records):
            excluded += 1
            continue
        used += 1
        for r in records:
            q, v = abs(r.os_q), abs(r.os_v)
            if r.bus_id not in acc_q:
                acc_q[r.bus_id] = []
                acc_v[r.bus_id] = []
            acc_q[r.bus_id].append(q)
            acc_v[r.bus_id].append(v)
    if used == 0:
        return HourlyAggregate(records=(), hours_used=0, hours_excluded=excluded, mode=mode)
    agg = np.mean if mode == "mean" else np.max
    flat = [
        RawSensitivity(bus_id=b, os_q=float(agg(acc_q[b])), os_v=float(agg(acc_v[b])),
                       status=OpfStatus.OPTIMAL, reliable=True)
        for b in sorted(acc_q)
    ]
    ranked = composite_score(flat, weights)
    return HourlyAggregate(
        records=tuple(ranked), hours_used=used, hours_excluded=excluded, mode=mode
    )


class FdQuantity(enum.Enum):
    QD = "qd"  # bus reactive demand, perturbed in p.u.
    VMAX = "vmax"  # bus voltage upper bound, p.u.


@dataclass(frozen=True)
class FdResult:
    value: float  # $ per p.u. central difference of the solver objective
    available: bool
    reason: str = ""


def _binding_signature(problem: OpfProblem, solution: OpfSolution, tol: float = 1e-4):
    s = problem.network.s_base
    v = solution.v
    sig = []
    sig.append(problem.vmax - v < tol)
    sig.append(v - problem.vmin < tol)
    pg = solution.p_g / s
    qg = solution.q_g / s
    sig.append(problem.pg_max - pg < tol)
    sig.append(pg - problem.pg_min < tol)
    sig.append(problem.qg_max - qg < tol)
    sig.append(qg - problem.qg_min < tol)
    if problem.ns:
        sh = solution.shed[problem.shed_pos]
        sig.append(sh < tol)
        sig.append(1.0 - sh < tol)
    return np.concatenate(sig)


def clone_problem(problem: OpfProblem, **kw) -> OpfProblem:
    """Copy of a problem with selected fields replaced."""
    base = dict(
        network=problem.network,
        p_d=problem.p_d.copy(),
        q_d=problem.q_d.copy(),
        p_inj=problem.p_inj.copy(),
        q_inj=problem.q_inj.copy(),
        objective=problem.objective,
        options=problem.options,
        v_min=problem.v_min.copy(),
        v_max=problem.v_max.copy(),
        dt=problem.dt,
    )
    base.update(kw)
    return OpfProblem(**base)


def _perturbed(problem: OpfProblem, bus_id: int, quantity: FdQuantity, delta_pu: float) -> OpfProblem:
    net = problem.network
    i = net.bus_index(bus_id)
    if quantity is FdQuantity.QD:
        q_d = problem.q_d.copy()
        q_d[i] += delta_pu * net.s_base
        return clone_problem(problem, q_d=q_d)
    v_max = problem.v_max.copy()
    v_max[i] += delta_pu
    return clone_problem(problem, v_max=v_max)


def fd_oracle(problem: OpfProblem, bus_id: int, quantity: FdQuantity, eps: float = 1e-3) -> FdResult:
    """Two-re-solve central difference of the optimal solver objective.

    eps is in p.u.; the returned value is $ per p.u. of the perturbed
    quantity (divide by s_base for $/Mvar against extract's os_q). The
    oracle declines (available=False) when either perturbed solve is not
    Optimal or the active set flips between the two solves.
    """
    if eps <= 0.0:
        raise ValidationError("fd eps must be positive")
    if bus_id not in problem.island_bus_ids:
        raise ValidationError(f"bus {bus_id} is not on the energized island")
    up = solve(_perturbed(problem, bus_id, quantity, +eps))
    dn = solve(_perturbed(problem, bus_id, quantity, -eps))
    if up.status is not OpfStatus.OPTIMAL or dn.status is not OpfStatus.OPTIMAL:
        return FdResult(
            value=float("nan"),
            available=False,
            reason=f"perturbed solve status {up.status.value}/{dn.status.value}",
        )
    p_up = _perturbed(problem, bus_id, quantity, +eps)
    p_dn = _perturbed(problem, bus_id, quantity, -eps)
    sig_up = _binding_signature(p_up, up)
    sig_dn = _binding_signature(p_dn, dn)
    if sig_up.shape != sig_dn.shape or np.any(sig_up != sig_dn):
        return FdResult(
            value=float("nan"),
            available=False,
            reason="active set changed across the perturbation",
        )
    value = (up.solver_objective - dn.solver_objective) / (2.0 * eps)
    return FdResult(value=float(value), available=True)


@dataclass(frozen=True)
class RankTable:
    """Cross-case rank comparison over a common bus set."""

    case_labels: tuple
    bus_ids: tuple
    ranks: np.ndarray  # (n_bus, n_case), 1-based
    high_confidence: tuple  # buses ranked identically in every case
    agreement: np.ndarray  # (n_case, n_case) fraction of buses with equal rank

    def stable_top(self, m: int) -> tuple:
        """Buses in the top m of every case."""
        top = None
        for j in range(self.ranks.shape[1]):
            s = {self.bus_ids[i] for i in range(len(self.bus_ids)) if self.ranks[i, j] <= m}
            top = s if top is None else top & s
        return tuple(sorted(top)) if top else ()


def cross_case_rank_table(rankings: dict) -> RankTable:
    """Compare per-case rankings; rankings maps case label -> ranked records."""
    if len(rankings) < 2:
        raise ValidationError("need rankings from at least two cases to compare")
    labels = tuple(rankings.keys())
    bus_sets = [frozenset(r.bus_id for r in recs) for recs in rankings.values()]
    if len(set(bus_sets)) != 1:
        raise ValidationError("case rankings cover different bus sets")
    bus_ids = tuple(sorted(bus_sets[0]))
    ranks = np.zeros((len(bus_ids), len(labels)), dtype=int)
    for j, label in enumerate(labels):
        for rec in rankings[label]:
            ranks[bus_ids.index(rec.bus_id), j] = rec.rank
    high = tuple(
        bus_ids[i] for i in range(len(bus_ids)) if len(set(ranks[i, :])) == 1
    )
    n_case = len(labels)
    agreement = np.zeros((n_case, n_case))
    for a in range(n_case):
        for b in range(n_case):
            agreement[a, b] = float(np.mean(ranks[:, a] == ranks[:, b]))
    return RankTable(
        case_labels=labels,
        bus_ids=bus_ids,
        ranks=ranks,
        high_confidence=high,
        agreement=agreement,
    )
