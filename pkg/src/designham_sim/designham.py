"""Random refocusing schedules and the design Hamiltonians they produce.

A schedule holds one vector of pulse-timing fractions per half-period.  In
half-period ``m`` the slot ``s`` pulse fires at ``lambda[m][s] * T/2``; the
refocused dynamics is a Z-type Hamiltonian whose coefficients are rescaled
copies of the static ones.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .spinsys import SlotMap, SpinSystem

# Sign of the single-spin rescaling factor, fixed by brute force against
# propagate.oracle_refocusing_propagator (pulses applied in chronological
# order): a spin flipped at lambda*T/2 and flipped back at T/2 accumulates
# (lambda - (1 - lambda)) = -(1 - 2*lambda) of its Zeeman phase.
SINGLE_QUBIT_SIGN = -1


def _frozen(values) -> np.ndarray:
    arr = np.array(values, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class LambdaSchedule:
    """Pulse-timing fractions, one row of ``n_slots`` entries per half-period."""

    lambdas: np.ndarray
    period_s: float
    slot_map: SlotMap
    seed: int | None = None

    def __post_init__(self):
        lam = _frozen(self.lambdas)
        if lam.ndim != 2 or lam.shape[0] < 1:
            raise ValueError("lambdas must be a non-empty (halfperiods, slots) array")
        if lam.shape[1] != self.slot_map.n_slots:
            raise ValueError(
                f"schedule has {lam.shape[1]} slots, slot map has {self.slot_map.n_slots}"
            )
        if not np.all((lam >= 0.0) & (lam <= 1.0)):
            raise ValueError("lambda entries must lie in [0, 1]")
        if not (self.period_s > 0 and math.isfinite(self.period_s)):
            raise ValueError("period must be positive")
        object.__setattr__(self, "lambdas", lam)
        object.__setattr__(self, "period_s", float(self.period_s))

    @property
    def halfperiods(self) -> int:
        return self.lambdas.shape[0]

    @property
    def n_slots(self) -> int:
        return self.lambdas.shape[1]

    @property
    def horizon_s(self) -> float:
        return self.halfperiods * self.period_s / 2

    def truncated(self, halfperiods: int) -> LambdaSchedule:
        return LambdaSchedule(self.lambdas[:halfperiods], self.period_s, self.slot_map, self.seed)

    def __eq__(self, other):
        if not isinstance(other, LambdaSchedule):
            return NotImplemented
        return (
            np.array_equal(self.lambdas, other.lambdas)
            and self.period_s == other.period_s
            and self.slot_map == other.slot_map
            and self.seed == other.seed
        )

    __hash__ = None


@dataclass(frozen=True, eq=False)
class EffectiveZHamiltonian:
    """``H = sum_i a_i Z_i / 2 + sum_{i<j} b_ij Z_i Z_j / 2`` with a, b in rad/s."""

    a: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        a, b = _frozen(self.a), _frozen(self.b)
        n = a.shape[0]
        if a.ndim != 1 or b.shape != (n, n):
            raise ValueError("a must be length n and b n x n")
        if not np.array_equal(b, b.T) or np.any(np.diag(b) != 0):
            raise ValueError("b must be symmetric with zero diagonal")
        if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
            raise ValueError("coefficients must be finite")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)

    @property
    def n(self) -> int:
        return self.a.shape[0]

    def __eq__(self, other):
        if not isinstance(other, EffectiveZHamiltonian):
            return NotImplemented
        return np.array_equal(self.a, other.a) and np.array_equal(self.b, other.b)

    __hash__ = None


def sample_lambda(rng_seed: int, slots: int, halfperiods: int, period_s: float,
                  slot_map: SlotMap | None = None) -> LambdaSchedule:
    """Draw a schedule with i.i.d. uniform entries on [0, 1].

    The same seed always reproduces the same schedule.  Without an explicit
    ``slot_map`` each slot drives exactly one qubit.
    """
    if slots < 1 or halfperiods < 1:
        raise ValueError("slots and halfperiods must be positive")
    if not period_s > 0:
        raise ValueError("period must be positive")
    if slot_map is None:
        slot_map = SlotMap.one_per_qubit(slots)
    elif slot_map.n_slots != slots:
        raise ValueError("slot map does not match the slot count")
    rng = np.random.default_rng(rng_seed)
    lam = rng.uniform(0.0, 1.0, size=(halfperiods, slots))
    return LambdaSchedule(lam, period_s, slot_map, int(rng_seed))


def schedule_from_dict(doc: dict, slot_map: SlotMap | None = None) -> LambdaSchedule:
    lam = np.asarray(doc["lambda"], dtype=float)
    slots = int(doc.get("slots", lam.shape[1] if lam.ndim == 2 else 0))
    if lam.ndim != 2 or lam.shape[1] != slots:
        raise ValueError("'lambda' must have one row of 'slots' entries per half-period")
    if slot_map is None:
        slot_map = (
            SlotMap.from_one_based(doc["slot_of_qubit"])
            if "slot_of_qubit" in doc
            else SlotMap.one_per_qubit(slots)
        )
    seed = doc.get("seed")
    return LambdaSchedule(lam, float(doc["period_s"]), slot_map,
                          None if seed is None else int(seed))


def load_schedule(path: str | Path, slot_map: SlotMap | None = None) -> LambdaSchedule:
    """Read a schedule file (``period_s``, ``slots``, ``lambda`` rows, optional
    ``seed``).  Loaded schedules keep ``seed=None`` unless the file has one."""
    with open(path, encoding="utf-8") as f:
        return schedule_from_dict(json.load(f), slot_map)


def bundled_schedule(name: str, slot_map: SlotMap | None = None) -> LambdaSchedule:
    """One of the shipped schedules: ``experiment1``, ``experiment2`` or ``transient``."""
    from importlib import resources

    text = resources.files(__package__).joinpath("data", f"schedule_{name}.json").read_text("utf-8")
    if slot_map is None:
        from .spinsys import builtin_12spin

        slot_map = builtin_12spin()[1]
    return schedule_from_dict(json.loads(text), slot_map)


def save_schedule(schedule: LambdaSchedule, path: str | Path):
    doc = {
        "period_s": schedule.period_s,
        "slots": schedule.n_slots,
        "lambda": schedule.lambdas.tolist(),
        "slot_of_qubit": schedule.slot_map.to_one_based(),
    }
    if schedule.seed is not None:
        doc["seed"] = schedule.seed
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        json.dump(doc, f, indent=1)
        f.write("\n")


def static_hamiltonian(system: SpinSystem) -> EffectiveZHamiltonian:
    """Unrefocused rotating-frame Hamiltonian: a = 2*pi*offset, b = pi*J."""
    return EffectiveZHamiltonian(2 * np.pi * system.offset_hz, np.pi * system.coupling_hz)


def effective_z_hamiltonian(system: SpinSystem, lambda_m, slot_map: SlotMap,
                            sign: int = SINGLE_QUBIT_SIGN) -> EffectiveZHamiltonian:
    """Average Hamiltonian of one refocused half-period.

    Offsets scale by ``sign * (1 - 2 lambda_i)`` and couplings by
    ``1 - 2 |lambda_i - lambda_j|``, where ``lambda_i`` is the entry of the slot
    that flips qubit ``i``.
    """
    lam = np.asarray(lambda_m, dtype=float)
    if lam.shape != (slot_map.n_slots,):
        raise ValueError(f"expected {slot_map.n_slots} lambda entries, got shape {lam.shape}")
    if not np.all((lam >= 0.0) & (lam <= 1.0)):
        raise ValueError("lambda entries must lie in [0, 1]")
    if slot_map.n != system.n:
        raise ValueError("slot map and spin system disagree on the qubit count")
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    per_qubit = slot_map.expand(lam)
    h0 = static_hamiltonian(system)
    a = sign * (1.0 - 2.0 * per_qubit) * h0.a
    gap = np.abs(per_qubit[:, None] - per_qubit[None, :])
    b = (1.0 - 2.0 * gap) * h0.b
    return EffectiveZHamiltonian(a, b)


@dataclass(frozen=True)
class DesignTimeline:
    """Piecewise design Hamiltonian: Z-type on odd half-periods, Hadamard
    conjugated on even ones.  Half-period ``m`` (1-based) covers
    ``((m-1) T/2, m T/2]``."""

    schedule: LambdaSchedule
    system: SpinSystem

    def __post_init__(self):
        if self.schedule.slot_map.n != self.system.n:
            raise ValueError("schedule slot map does not cover the spin system")
        hams = tuple(
            effective_z_hamiltonian(self.system, row, self.schedule.slot_map)
            for row in self.schedule.lambdas
        )
        object.__setattr__(self, "_hams", hams)

    @property
    def n(self) -> int:
        return self.system.n

    @property
    def half_period_s(self) -> float:
        return self.schedule.period_s / 2

    @property
    def halfperiods(self) -> int:
        return self.schedule.halfperiods

    @staticmethod
    def basis_of_halfperiod(m: int) -> str:
        return "Z" if m % 2 == 1 else "X"

    def halfperiod_index(self, t: float) -> int:
        """``ceil(t / (T/2))``; exact boundaries belong to the earlier half-period."""
        if not (0 < t <= self.schedule.horizon_s * (1 + 1e-12)):
            raise ValueError(f"t={t} outside (0, {self.schedule.horizon_s}]")
        m = math.ceil(t / self.half_period_s)
        # guard against t/(T/2) landing a hair above an integer from rounding
        if m > 1 and math.isclose((m - 1) * self.half_period_s, t, rel_tol=1e-12, abs_tol=0.0):
            m -= 1
        return min(m, self.halfperiods)

    def z_hamiltonian(self, m: int) -> EffectiveZHamiltonian:
        if not 1 <= m <= self.halfperiods:
            raise ValueError(f"half-period {m} outside 1..{self.halfperiods}")
        return self._hams[m - 1]

    def hamiltonian_at(self, t: float) -> tuple[EffectiveZHamiltonian, str]:
        m = self.halfperiod_index(t)
        return self._hams[m - 1], self.basis_of_halfperiod(m)


def design_timeline(schedule: LambdaSchedule, system: SpinSystem) -> DesignTimeline:
    return DesignTimeline(schedule, system)
