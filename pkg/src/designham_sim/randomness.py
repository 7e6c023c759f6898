"""Frame potentials and related diagnostics of unitary ensembles."""

from __future__ import annotations

import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .designham import DesignTimeline, sample_lambda
from .propagate import (
    LayeredPropagator,
    Operator,
    PauliString,
    as_dense,
    haar_unitary,
    propagator_at,
    trace_overlap,
)
from .seeding import child_seed, default_threads
from .spinsys import SlotMap, SpinSystem

# ensembles whose stacked dense matrices fit in this many entries use one
# Gram-matrix product instead of pairwise streaming
_GRAM_BUDGET = 1 << 24


@dataclass(frozen=True)
class UnitaryEnsemble:
    members: tuple[Operator, ...]
    n: int
    provenance: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        members = tuple(self.members)
        d = 1 << self.n
        for U in members:
            dim = U.dim if isinstance(U, LayeredPropagator) else np.shape(U)[0]
            if dim != d:
                raise ValueError("ensemble members act on different dimensions")
        object.__setattr__(self, "members", members)

    @property
    def dim(self) -> int:
        return 1 << self.n

    def __len__(self):
        return len(self.members)

    def left_multiplied(self, W: np.ndarray) -> UnitaryEnsemble:
        return UnitaryEnsemble(tuple(W @ as_dense(U) for U in self.members), self.n,
                               dict(self.provenance, left_multiplied=True))


@dataclass(frozen=True)
class FramePotentialEstimate:
    k: int
    f_tilde: float
    f: float
    ensemble_size: int
    pair_count: int
    dim: int


@dataclass(frozen=True)
class ConvergenceCurve:
    abscissa: np.ndarray
    values: np.ndarray
    k: int
    label: str = "t_s"
    estimates: tuple[FramePotentialEstimate, ...] = ()

    def __post_init__(self):
        if len(self.abscissa) != len(self.values):
            raise ValueError("abscissa and values differ in length")


def _pair_overlaps(members: Sequence[Operator], rows, cols, threads: int | None) -> np.ndarray:
    """``|Tr(U_i U_j^dagger)|`` for every pair ``(rows[p], cols[p])``."""
    rows, cols = np.asarray(rows, dtype=int), np.asarray(cols, dtype=int)
    d = members[0].dim if isinstance(members[0], LayeredPropagator) else np.shape(members[0])[0]
    if len(members) * d * d <= _GRAM_BUDGET:
        stacked = np.stack([as_dense(U).ravel() for U in members])
        gram = stacked.conj() @ stacked.T
        return np.abs(gram[rows, cols])
    threads = default_threads() if threads is None else threads

    def one(p):
        return abs(trace_overlap(members[rows[p]], members[cols[p]]))

    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            return np.fromiter(pool.map(one, range(len(rows))), float, len(rows))
    return np.fromiter(map(one, range(len(rows))), float, len(rows))


def frame_potential_exact(ensemble: UnitaryEnsemble, k: int, threads: int | None = None) -> float:
    """``(1/|E|^2) sum_{i,j} |Tr(U_i U_j^dagger)|^{2k}``, diagonal included."""
    if len(ensemble) == 0:
        raise ValueError("empty ensemble")
    if k < 1:
        raise ValueError("k must be a positive integer")
    size = len(ensemble)
    rows, cols = np.triu_indices(size, 1)
    off = _pair_overlaps(ensemble.members, rows, cols, threads)
    diag = _pair_overlaps(ensemble.members, np.arange(size), np.arange(size), threads)
    total = 2 * np.sum(off ** (2 * k)) + np.sum(diag ** (2 * k))
    return float(total / size ** 2)


def _choose_pairs(size: int, max_pairs: int | None, rng_seed: int):
    rows, cols = np.triu_indices(size, 1)
    if max_pairs is not None and len(rows) > max_pairs:
        pick = np.sort(np.random.default_rng(rng_seed).choice(len(rows), max_pairs, replace=False))
        rows, cols = rows[pick], cols[pick]
    return rows, cols


def frame_potential_estimates(ensemble: UnitaryEnsemble, ks: Sequence[int],
                              max_pairs: int | None = None, rng_seed: int = 0,
                              threads: int | None = None) -> dict[int, FramePotentialEstimate]:
    """Off-diagonal estimates for several orders sharing one set of overlaps.

    Unordered pairs are drawn uniformly without replacement when there are
    more than ``max_pairs``; ``pair_count`` reports the equivalent number of
    ordered pairs.
    """
    size = len(ensemble)
    if size < 2:
        raise ValueError("need at least two ensemble members")
    rows, cols = _choose_pairs(size, max_pairs, rng_seed)
    overlaps = _pair_overlaps(ensemble.members, rows, cols, threads)
    d = ensemble.dim
    out = {}
    for k in ks:
        if k < 1:
            raise ValueError("k must be a positive integer")
        f_tilde = float(np.mean(overlaps ** (2 * k)))
        f = d ** (2 * k) / size + (size - 1) / size * f_tilde
        out[k] = FramePotentialEstimate(k, f_tilde, f, size, 2 * len(rows), d)
    return out


def frame_potential_estimate(ensemble: UnitaryEnsemble, k: int, max_pairs: int | None = None,
                             rng_seed: int = 0, threads: int | None = None) -> FramePotentialEstimate:
    return frame_potential_estimates(ensemble, [k], max_pairs, rng_seed, threads)[k]


def haar_ensemble(n: int, size: int, rng_seed: int) -> UnitaryEnsemble:
    seeds = [child_seed(rng_seed, i) for i in range(size)]
    return UnitaryEnsemble(tuple(haar_unitary(s, n) for s in seeds), n,
                           {"kind": "haar", "seed": rng_seed, "member_seeds": seeds})


@dataclass(frozen=True)
class ScheduleFamily:
    """Recipe for independent random schedules on a fixed slot layout."""

    slot_map: SlotMap
    period_s: float
    halfperiods: int

    def draw(self, seed: int):
        return sample_lambda(seed, self.slot_map.n_slots, self.halfperiods, self.period_s,
                             self.slot_map)


def design_timelines(system: SpinSystem, family: ScheduleFamily, size: int,
                     rng_seed: int) -> list[DesignTimeline]:
    """``size`` timelines whose schedules use seeds ``child_seed(rng_seed, i)``."""
    return [DesignTimeline(family.draw(child_seed(rng_seed, i)), system) for i in range(size)]


def design_ensemble(system: SpinSystem, family: ScheduleFamily, t: float, size: int,
                    rng_seed: int, timelines: list[DesignTimeline] | None = None) -> UnitaryEnsemble:
    if timelines is None:
        timelines = design_timelines(system, family, size, rng_seed)
    members = tuple(propagator_at(tl, t) for tl in timelines)
    return UnitaryEnsemble(members, system.n,
                           {"kind": "design", "seed": rng_seed, "t_s": t,
                            "member_seeds": [tl.schedule.seed for tl in timelines]})


def halfperiod_times(period_s: float, halfperiods: int) -> np.ndarray:
    """``0, T/2, T, ...`` up to ``halfperiods * T/2``."""
    return np.arange(halfperiods + 1) * (period_s / 2)


def convergence_curves(system: SpinSystem, family: ScheduleFamily, times: Sequence[float],
                       ks: Sequence[int], ensemble_size: int, rng_seed: int,
                       max_pairs: int | None = None, threads: int | None = None
                       ) -> dict[int, ConvergenceCurve]:
    """Off-diagonal frame potentials over time for every order in ``ks``.

    Members keep their schedule across time points, so the curve follows one
    set of independent trajectories.
    """
    times = np.asarray(times, dtype=float)
    horizon = family.halfperiods * family.period_s / 2
    if np.any(times < 0) or np.any(times > horizon * (1 + 1e-12)):
        raise ValueError(f"times must lie in [0, {horizon}]")
    timelines = design_timelines(system, family, ensemble_size, rng_seed)
    found = {k: [] for k in ks}
    for ti, t in enumerate(times):
        ens = design_ensemble(system, family, float(t), ensemble_size, rng_seed, timelines)
        est = frame_potential_estimates(ens, ks, max_pairs, child_seed(rng_seed, 1 << 20, ti),
                                        threads)
        for k in ks:
            found[k].append(est[k])
    return {
        k: ConvergenceCurve(times.copy(), np.array([e.f_tilde for e in found[k]]), k,
                            estimates=tuple(found[k]))
        for k in ks
    }


def convergence_vs_time(system: SpinSystem, family: ScheduleFamily, times: Sequence[float],
                        k: int, ensemble_size: int, rng_seed: int, **kwargs) -> ConvergenceCurve:
    return convergence_curves(system, family, times, [k], ensemble_size, rng_seed, **kwargs)[k]


def convergence_vs_size(ensemble: UnitaryEnsemble, ks: Sequence[int], sizes: Sequence[int],
                        threads: int | None = None) -> dict[int, ConvergenceCurve]:
    """Off-diagonal estimate from the first ``s`` members, for each ``s`` in ``sizes``."""
    sizes = [int(s) for s in sizes]
    if min(sizes) < 2 or max(sizes) > len(ensemble):
        raise ValueError("sample sizes must lie in 2..len(ensemble)")
    rows, cols = np.triu_indices(len(ensemble), 1)
    overlaps = _pair_overlaps(ensemble.members, rows, cols, threads)
    curves = {}
    for k in ks:
        powered = overlaps ** (2 * k)
        vals = [np.mean(powered[cols < s]) for s in sizes]
        curves[k] = ConvergenceCurve(np.array(sizes, dtype=float), np.array(vals), k,
                                     "ensemble_size")
    return curves


def _pauli_matrices(n: int) -> np.ndarray:
    return np.stack([PauliString("".join(p)).to_dense()
                     for p in itertools.product("IXYZ", repeat=n)])


_OTOC_BUDGET = 1 << 26


def otoc_frame_potential(ensemble: UnitaryEnsemble, k: int) -> float:
    """Frame potential from ensemble-averaged OTOCs over all Pauli tuples,

        F = (d^2 / d^{2k}) sum_{A's, B's} |avg_i <A_1 U_i B_1 U_i^+ ... A_k U_i B_k U_i^+>|^2

    with ``<X> = Tr(X) / d``.
    """
    if k < 1 or len(ensemble) == 0:
        raise ValueError("need k >= 1 and a non-empty ensemble")
    n, d, size = ensemble.n, ensemble.dim, len(ensemble)
    npairs = 16 ** n
    if size * npairs ** k * d * d > _OTOC_BUDGET:
        raise ValueError(f"OTOC enumeration at n={n}, k={k} is infeasible")
    paulis = _pauli_matrices(n)
    us = np.stack([as_dense(U) for U in ensemble.members])
    # B(t) = U B U^dagger for every member and Pauli
    evolved = np.einsum("ixy,byz,iwz->ibxw", us, paulis, us.conj())
    # M[i, (a, b)] = A_a B_b(t)
    blocks = np.einsum("axy,ibyz->iabxz", paulis, evolved).reshape(size, npairs, d, d)
    word = blocks
    for _ in range(k - 1):
        word = np.einsum("ipxy,iqyz->ipqxz", word, blocks).reshape(size, -1, d, d)
    corr = np.trace(word, axis1=2, axis2=3) / d
    avg = corr.mean(axis=0)
    return float(d ** 2 / d ** (2 * k) * np.sum(np.abs(avg) ** 2))


def haar_monomial_check(n: int, A: PauliString, samples: int, rng_seed: int,
                        alpha: int = 0, beta: int = 1) -> float:
    """Monte Carlo mean of ``|<alpha| U A U^dagger |beta>|^2`` over Haar ``U``,
    with ``A`` scaled to unit Frobenius norm.  Large-d value: ``1/d^2``."""
    if A.n != n:
        raise ValueError("Pauli string length does not match n")
    if A.is_identity:
        raise ValueError("A must be traceless (identity string given)")
    d = 1 << n
    if alpha == beta or not (0 <= alpha < d and 0 <= beta < d):
        raise ValueError("alpha and beta must be distinct basis states")
    a = A.to_dense(normalized=True)
    vals = np.empty(samples)
    for s in range(samples):
        U = haar_unitary(child_seed(rng_seed, s), n)
        vals[s] = abs(U[alpha] @ a @ U[beta].conj()) ** 2
    return float(np.mean(vals))


def haar_frame_potential(k: int, d: int) -> float:
    """``k!``, the Haar value, valid for ``k <= d``."""
    if k > d:
        raise ValueError("Haar frame potential k! only holds for k <= d")
    return float(math.factorial(k))
