"""Coupled spin systems and molecule parameter files.

Frequencies are kept in Hz throughout this module; the angular factors are
applied when Hamiltonian coefficients are built in :mod:`designham_sim.designham`.
Qubits are 0-based internally and 1-based in files.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Sequence

import numpy as np

BUILTIN_MOLECULE = "dichlorocyclobutanone.json"


class MoleculeFileError(ValueError):
    """Raised when a molecule description cannot be turned into a SpinSystem."""


def _frozen(values, dtype=float) -> np.ndarray:
    arr = np.array(values, dtype=dtype)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class SpinSystem:
    """Weakly coupled spin-1/2 system in the rotating frame.

    ``offset_hz[i]`` is the rotating-frame precession frequency of spin ``i``
    and ``coupling_hz`` the symmetric table of scalar couplings, both in Hz.
    ``t2_s`` is carried along for file completeness only.
    """

    labels: tuple[str, ...]
    offset_hz: np.ndarray
    coupling_hz: np.ndarray
    t2_s: np.ndarray | None = None

    def __post_init__(self):
        labels = tuple(str(s) for s in self.labels)
        offset = _frozen(self.offset_hz)
        coupling = _frozen(self.coupling_hz)
        n = len(labels)
        if n < 1:
            raise ValueError("a spin system needs at least one spin")
        if offset.shape != (n,):
            raise ValueError(f"expected {n} offsets, got shape {offset.shape}")
        if coupling.shape != (n, n):
            raise ValueError(f"coupling table must be {n}x{n}, got {coupling.shape}")
        if not np.array_equal(coupling, coupling.T):
            raise ValueError("coupling table is not symmetric")
        if np.any(np.diag(coupling) != 0.0):
            raise ValueError("coupling table must have a zero diagonal")
        if not (np.all(np.isfinite(offset)) and np.all(np.isfinite(coupling))):
            raise ValueError("spin system parameters must be finite")
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "offset_hz", offset)
        object.__setattr__(self, "coupling_hz", coupling)
        if self.t2_s is not None:
            t2 = _frozen(self.t2_s)
            if t2.shape != (n,) or not np.all(np.isfinite(t2)):
                raise ValueError("t2_s must hold one finite value per spin")
            object.__setattr__(self, "t2_s", t2)

    @property
    def n(self) -> int:
        return len(self.labels)

    def index(self, label: str) -> int:
        """0-based index of the spin called ``label``."""
        try:
            return self.labels.index(label)
        except ValueError:
            raise KeyError(label) from None

    def coupling(self, a: str, b: str) -> float:
        return float(self.coupling_hz[self.index(a), self.index(b)])

    def offset(self, label: str) -> float:
        return float(self.offset_hz[self.index(label)])

    def __eq__(self, other):
        if not isinstance(other, SpinSystem):
            return NotImplemented
        same_t2 = (self.t2_s is None and other.t2_s is None) or (
            self.t2_s is not None
            and other.t2_s is not None
            and np.array_equal(self.t2_s, other.t2_s)
        )
        return (
            self.labels == other.labels
            and np.array_equal(self.offset_hz, other.offset_hz)
            and np.array_equal(self.coupling_hz, other.coupling_hz)
            and same_t2
        )

    __hash__ = None


@dataclass(frozen=True)
class SlotMap:
    """Assignment of qubits to pulse slots.

    ``slot_of_qubit[i]`` is the 0-based slot that flips qubit ``i``.  Every
    slot in ``range(n_slots)`` must be used by at least one qubit.
    """

    slot_of_qubit: tuple[int, ...]
    n_slots: int = field(default=-1)

    def __post_init__(self):
        slots = tuple(int(s) for s in self.slot_of_qubit)
        if not slots:
            raise ValueError("slot map is empty")
        n_slots = max(slots) + 1 if self.n_slots < 0 else int(self.n_slots)
        if min(slots) < 0 or max(slots) >= n_slots:
            raise ValueError("slot index out of range")
        unused = set(range(n_slots)) - set(slots)
        if unused:
            raise ValueError(f"slots {sorted(s + 1 for s in unused)} flip no qubit")
        object.__setattr__(self, "slot_of_qubit", slots)
        object.__setattr__(self, "n_slots", n_slots)

    @property
    def n(self) -> int:
        return len(self.slot_of_qubit)

    @classmethod
    def one_per_qubit(cls, n: int) -> SlotMap:
        return cls(tuple(range(n)), n)

    @classmethod
    def from_one_based(cls, slots: Sequence[int]) -> SlotMap:
        return cls(tuple(int(s) - 1 for s in slots))

    def to_one_based(self) -> list[int]:
        return [s + 1 for s in self.slot_of_qubit]

    def qubits_in(self, slot: int) -> list[int]:
        return [q for q, s in enumerate(self.slot_of_qubit) if s == slot]

    def expand(self, slot_values) -> np.ndarray:
        """Per-qubit view of a per-slot vector."""
        slot_values = np.asarray(slot_values, dtype=float)
        if slot_values.shape != (self.n_slots,):
            raise ValueError(
                f"expected {self.n_slots} slot values, got shape {slot_values.shape}"
            )
        return slot_values[list(self.slot_of_qubit)]


def _channel_of(label: str) -> str:
    m = re.match(r"[A-Za-z]+", label)
    if m is None:
        raise MoleculeFileError(f"cannot infer a channel from label {label!r}")
    return m.group(0)


def molecule_from_dict(doc: dict) -> tuple[SpinSystem, SlotMap | None]:
    """Build a SpinSystem (and its slot map, if the document has one) from a
    parsed molecule document."""
    try:
        labels = [str(s) for s in doc["labels"]]
    except (KeyError, TypeError) as exc:
        raise MoleculeFileError("molecule file has no 'labels' list") from exc
    n = len(labels)

    if "offset_hz" in doc:
        offset = np.asarray(doc["offset_hz"], dtype=float)
    else:
        if "omega_hz" not in doc:
            raise MoleculeFileError("need 'omega_hz' with 'channel_ref_hz', or 'offset_hz'")
        omega = np.asarray(doc["omega_hz"], dtype=float)
        refs = doc.get("channel_ref_hz")
        if not isinstance(refs, dict):
            raise MoleculeFileError("'channel_ref_hz' must map channel names to Hz")
        channels = doc.get("channel") or [_channel_of(s) for s in labels]
        if len(channels) != n or omega.shape != (n,):
            raise MoleculeFileError("per-spin lists have inconsistent lengths")
        missing = sorted({c for c in channels if c not in refs})
        if missing:
            raise MoleculeFileError(f"no reference frequency for channel(s) {missing}")
        ref = np.array([float(refs[c]) for c in channels])
        offset = -(omega - ref)
    if offset.shape != (n,):
        raise MoleculeFileError("per-spin lists have inconsistent lengths")

    coupling = np.zeros((n, n))
    seen: dict[tuple[int, int], float] = {}
    for entry in doc.get("j_hz", []):
        try:
            i, j, value = int(entry["i"]) - 1, int(entry["j"]) - 1, float(entry["value"])
        except (KeyError, TypeError, ValueError) as exc:
            raise MoleculeFileError(f"bad coupling entry {entry!r}") from exc
        if not (0 <= i < n and 0 <= j < n):
            raise MoleculeFileError(f"coupling entry {entry!r} refers to an unknown spin")
        if i == j:
            raise MoleculeFileError(f"self-coupling entry {entry!r}")
        key = (min(i, j), max(i, j))
        if key in seen and seen[key] != value:
            raise MoleculeFileError(
                f"asymmetric coupling between spins {key[0] + 1} and {key[1] + 1}"
            )
        seen[key] = value
        coupling[i, j] = coupling[j, i] = value

    try:
        system = SpinSystem(labels, offset, coupling, doc.get("t2_s"))
    except ValueError as exc:
        raise MoleculeFileError(str(exc)) from exc

    slot_map = None
    if doc.get("slots") is not None:
        if len(doc["slots"]) != n:
            raise MoleculeFileError("'slots' must list one slot per spin")
        try:
            slot_map = SlotMap.from_one_based(doc["slots"])
        except ValueError as exc:
            raise MoleculeFileError(str(exc)) from exc
    return system, slot_map


def load_molecule(path: str | Path) -> SpinSystem:
    """Read a JSON molecule description.

    Offsets are taken from ``offset_hz`` when present, otherwise computed as
    ``-(omega_hz - channel_ref_hz[channel])``.  The channel of a spin comes from
    the optional ``channel`` list or, failing that, from the alphabetic prefix
    of its label (``"C3"`` -> ``"C"``).
    """
    return load_molecule_with_slots(path)[0]


def load_molecule_with_slots(path: str | Path) -> tuple[SpinSystem, SlotMap | None]:
    try:
        with open(path, encoding="utf-8") as f:
            doc = json.load(f)
    except json.JSONDecodeError as exc:
        raise MoleculeFileError(f"{path}: {exc}") from exc
    return molecule_from_dict(doc)


def molecule_to_dict(system: SpinSystem, slot_map: SlotMap | None = None) -> dict:
    """Serialize with direct offsets, the inverse of :func:`molecule_from_dict`."""
    n = system.n
    doc = {
        "labels": list(system.labels),
        "offset_hz": system.offset_hz.tolist(),
        "j_hz": [
            {"i": i + 1, "j": j + 1, "value": float(system.coupling_hz[i, j])}
            for i in range(n)
            for j in range(i + 1, n)
            if system.coupling_hz[i, j] != 0.0
        ],
    }
    if system.t2_s is not None:
        doc["t2_s"] = system.t2_s.tolist()
    if slot_map is not None:
        doc["slots"] = slot_map.to_one_based()
    return doc


def save_molecule(system: SpinSystem, path: str | Path, slot_map: SlotMap | None = None):
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        json.dump(molecule_to_dict(system, slot_map), f, indent=1)
        f.write("\n")


def builtin_12spin() -> tuple[SpinSystem, SlotMap]:
    """The bundled 12-spin molecule (7 carbons, 5 protons) and its default
    slot map: carbons on slots 1-7, all protons on the collective slot 8."""
    text = resources.files(__package__).joinpath("data", BUILTIN_MOLECULE).read_text("utf-8")
    system, slot_map = molecule_from_dict(json.loads(text))
    assert slot_map is not None
    return system, slot_map


def random_system(
    n: int,
    rng: np.random.Generator | int,
    max_offset_hz: float = 15000.0,
    max_coupling_hz: float = 150.0,
) -> SpinSystem:
    """Spin system with offsets and couplings drawn uniformly from symmetric
    ranges comparable to the bundled molecule."""
    rng = np.random.default_rng(rng)
    offset = rng.uniform(-max_offset_hz, max_offset_hz, size=n)
    upper = np.triu(rng.uniform(-max_coupling_hz, max_coupling_hz, size=(n, n)), 1)
    return SpinSystem([f"Q{i + 1}" for i in range(n)], offset, upper + upper.T)
