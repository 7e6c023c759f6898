"""Time-evolution operators on n qubits.

Design-Hamiltonian propagators are products of diagonal phase layers and
global Hadamard layers, so they are stored as a :class:`LayeredPropagator`
and applied by streaming vectors (or the columns of a matrix) through the
layers.  Dense matrices are only built for small systems.

Conventions
-----------
* Basis index ``b``: qubit 0 is the most significant bit, matching
  ``kron(q0, q1, ...)``.  Bit value 0 is the ``+1`` eigenstate of sigma_z.
* Layers are stored in chronological order, so the operator is
  ``U = L[-1] @ ... @ L[1] @ L[0]``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence, Union

import numpy as np
import scipy.linalg
import scipy.optimize

from .designham import DesignTimeline, EffectiveZHamiltonian
from .spinsys import SlotMap, SpinSystem

DENSE_MAX_QUBITS = 10

_PAULI_LETTERS = "IXYZ"


def _check_power_of_two(length: int) -> int:
    n = int(length).bit_length() - 1
    if length < 1 or (1 << n) != length:
        raise ValueError(f"length {length} is not a power of two")
    return n


def z_signs(n: int) -> np.ndarray:
    """``(2**n, n)`` array with the sigma_z eigenvalue of qubit i on basis state b."""
    b = np.arange(1 << n)[:, None]
    shifts = np.arange(n - 1, -1, -1)[None, :]
    return 1 - 2 * ((b >> shifts) & 1).astype(np.int8)


def z_energies(h: EffectiveZHamiltonian) -> np.ndarray:
    """Eigenvalue of ``h`` on every computational basis state."""
    z = z_signs(h.n).astype(float)
    # b has a zero diagonal, so the i<j sum is half of the full quadratic form
    return z @ h.a / 2 + np.einsum("bi,ij,bj->b", z, h.b, z) / 4


@dataclass(frozen=True, eq=False)
class ZPhaseDiagonal:
    """Diagonal unitary ``exp(-i E(b) tau)``, stored as its phases."""

    phases: np.ndarray

    def __post_init__(self):
        p = np.array(self.phases, dtype=complex)
        _check_power_of_two(p.shape[0])
        if p.ndim != 1 or not np.allclose(np.abs(p), 1.0, rtol=0, atol=1e-12):
            raise ValueError("phases must be a 1-d array of unit-modulus numbers")
        p.setflags(write=False)
        object.__setattr__(self, "phases", p)

    @property
    def n(self) -> int:
        return self.phases.shape[0].bit_length() - 1

    def adjoint(self) -> ZPhaseDiagonal:
        return ZPhaseDiagonal(self.phases.conj())


class GlobalHadamard:
    """The n-fold Hadamard transform H^{(x)n}; self-inverse."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def adjoint(self) -> GlobalHadamard:
        return self

    def __repr__(self):
        return "GlobalHadamard()"


HADAMARD = GlobalHadamard()

Layer = Union[ZPhaseDiagonal, GlobalHadamard]


def z_phase_diagonal(h: EffectiveZHamiltonian, tau_s: float) -> ZPhaseDiagonal:
    """Propagator of the Z-type Hamiltonian ``h`` over ``tau_s`` seconds."""
    if tau_s < 0:
        raise ValueError("duration must be non-negative")
    return ZPhaseDiagonal(np.exp(-1j * z_energies(h) * tau_s))


def _butterflies(arr: np.ndarray, axis: int):
    """Unnormalized in-place Walsh-Hadamard butterflies along ``axis``."""
    if not arr.flags.c_contiguous:
        raise ValueError("butterflies need a C-contiguous array")
    d = arr.shape[axis]
    lead = arr.shape[:axis]
    trail = arr.shape[axis + 1:]
    pick = (slice(None),) * (len(lead) + 1)
    h = 1
    while h < d:
        v = arr.reshape(lead + (d // (2 * h), 2, h) + trail)
        top, bottom = v[pick + (0,)], v[pick + (1,)]
        diff = top - bottom
        top += bottom
        bottom[...] = diff
        h *= 2


def walsh_hadamard_apply(v) -> np.ndarray:
    """Return ``H^{(x)n} v`` (normalized) for a vector of length ``2**n``.

    A 2-d input is transformed along axis 0, i.e. column by column.
    """
    out = np.array(v, dtype=complex, order="C")
    _check_power_of_two(out.shape[0])
    _butterflies(out, 0)
    out *= 1 / np.sqrt(out.shape[0])
    return out


def _simplify(layers: Iterable[Layer]) -> list[Layer]:
    out: list[Layer] = []
    for layer in layers:
        if out and layer is HADAMARD and out[-1] is HADAMARD:
            out.pop()
        elif out and isinstance(layer, ZPhaseDiagonal) and isinstance(out[-1], ZPhaseDiagonal):
            out[-1] = ZPhaseDiagonal(out[-1].phases * layer.phases)
        else:
            out.append(layer)
    return out


@dataclass(frozen=True)
class LayeredPropagator:
    """Unitary given as a chronological list of diagonal and Hadamard layers."""

    n: int
    layers: tuple[Layer, ...] = ()

    def __post_init__(self):
        layers = tuple(self.layers)
        for layer in layers:
            if isinstance(layer, ZPhaseDiagonal):
                if layer.n != self.n:
                    raise ValueError("layer acts on the wrong number of qubits")
            elif layer is not HADAMARD:
                raise TypeError(f"unsupported layer {layer!r}")
        object.__setattr__(self, "layers", layers)

    @property
    def dim(self) -> int:
        return 1 << self.n

    def then(self, other: LayeredPropagator, optimize: bool = True) -> LayeredPropagator:
        """Propagator for ``self`` followed by ``other`` (``other @ self``)."""
        if other.n != self.n:
            raise ValueError("qubit counts differ")
        layers = self.layers + other.layers
        return LayeredPropagator(self.n, tuple(_simplify(layers) if optimize else layers))

    def optimized(self) -> LayeredPropagator:
        return LayeredPropagator(self.n, tuple(_simplify(self.layers)))

    def adjoint(self) -> LayeredPropagator:
        return LayeredPropagator(self.n, tuple(l.adjoint() for l in reversed(self.layers)))

    def apply(self, v, copy: bool = True) -> np.ndarray:
        """``U @ v`` for a vector or a ``(2**n, m)`` block of columns."""
        out = np.array(v, dtype=complex, order="C", copy=True) if copy else v
        if out.shape[0] != self.dim:
            raise ValueError(f"expected leading dimension {self.dim}, got {out.shape[0]}")
        scale = 1 / np.sqrt(self.dim)
        for layer in self.layers:
            if layer is HADAMARD:
                _butterflies(out, 0)
                out *= scale
            elif out.ndim == 1:
                out *= layer.phases
            else:
                out *= layer.phases[:, None]
        return out

    def to_dense(self) -> np.ndarray:
        if self.n > DENSE_MAX_QUBITS:
            raise ValueError(f"refusing to materialize a {self.dim}x{self.dim} matrix")
        return self.apply(np.eye(self.dim, dtype=complex), copy=False)

    @classmethod
    def identity(cls, n: int) -> LayeredPropagator:
        return cls(n, ())


@dataclass(frozen=True)
class PauliString:
    """Tensor product of single-qubit Paulis, qubit 0 first."""

    letters: str

    def __post_init__(self):
        letters = self.letters.upper()
        if not letters or any(c not in _PAULI_LETTERS for c in letters):
            raise ValueError(f"bad Pauli string {self.letters!r}")
        object.__setattr__(self, "letters", letters)

    @property
    def n(self) -> int:
        return len(self.letters)

    @property
    def is_identity(self) -> bool:
        return set(self.letters) == {"I"}

    def __str__(self):
        return self.letters

    @classmethod
    def parse(cls, text: str, n: int | None = None) -> PauliString:
        """Accept either a full string (``"IZXI"``) or a sparse 1-based form
        such as ``"Z7"`` or ``"X4 Z5"`` (needs ``n``)."""
        text = text.strip()
        if not any(c.isdigit() for c in text):
            p = cls(text.replace(" ", ""))
            if n is not None and p.n != n:
                raise ValueError(f"Pauli string {text!r} has length {p.n}, expected {n}")
            return p
        if n is None:
            raise ValueError("sparse Pauli strings need the qubit count")
        letters = ["I"] * n
        for token in text.replace(",", " ").replace("*", " ").split():
            letter, index = token[0].upper(), int(token[1:])
            if letter not in "XYZ" or not 1 <= index <= n:
                raise ValueError(f"bad Pauli factor {token!r}")
            if letters[index - 1] != "I":
                raise ValueError(f"qubit {index} appears twice in {text!r}")
            letters[index - 1] = letter
        return cls("".join(letters))

    @classmethod
    def random(cls, n: int, rng, allow_identity: bool = False) -> PauliString:
        rng = np.random.default_rng(rng)
        while True:
            p = cls("".join(_PAULI_LETTERS[i] for i in rng.integers(0, 4, size=n)))
            if allow_identity or not p.is_identity:
                return p

    def to_dense(self, normalized: bool = False) -> np.ndarray:
        """Matrix of the string; ``normalized`` divides by ``sqrt(2**n)`` so the
        Frobenius norm is 1."""
        n, d = self.n, 1 << self.n
        b = np.arange(d)
        flip = 0
        phase = np.ones(d, dtype=complex)
        for i, c in enumerate(self.letters):
            bit = (b >> (n - 1 - i)) & 1
            if c in "XY":
                flip |= 1 << (n - 1 - i)
            if c == "Y":
                phase *= 1j * (1 - 2 * bit)
            elif c == "Z":
                phase *= 1 - 2 * bit
        out = np.zeros((d, d), dtype=complex)
        out[b ^ flip, b] = phase / np.sqrt(d) if normalized else phase
        return out


def _halfperiod_layers(timeline: DesignTimeline, m: int, tau: float) -> list[Layer]:
    diag = z_phase_diagonal(timeline.z_hamiltonian(m), tau)
    if timeline.basis_of_halfperiod(m) == "Z":
        return [diag]
    return [HADAMARD, diag, HADAMARD]


def design_propagator(timeline: DesignTimeline, upto_halfperiods: int,
                      optimize: bool = True) -> LayeredPropagator:
    """Propagator after the first ``upto_halfperiods`` complete half-periods."""
    if not 0 <= upto_halfperiods <= timeline.halfperiods:
        raise ValueError(f"half-period count must be in 0..{timeline.halfperiods}")
    layers: list[Layer] = []
    for m in range(1, upto_halfperiods + 1):
        layers += _halfperiod_layers(timeline, m, timeline.half_period_s)
    return LayeredPropagator(timeline.n, tuple(_simplify(layers) if optimize else layers))


def segment_propagator(timeline: DesignTimeline, t0: float, t1: float,
                       optimize: bool = True) -> LayeredPropagator:
    """Propagator from time ``t0`` to ``t1`` (``0 <= t0 <= t1 <= horizon``)."""
    if not 0 <= t0 <= t1:
        raise ValueError("need 0 <= t0 <= t1")
    layers: list[Layer] = []
    if t1 > t0:
        half = timeline.half_period_s
        first = 1 if t0 == 0 else timeline.halfperiod_index(t0)
        last = timeline.halfperiod_index(t1)
        for m in range(first, last + 1):
            start = max(t0, (m - 1) * half)
            stop = min(t1, m * half)
            if stop > start:
                layers += _halfperiod_layers(timeline, m, stop - start)
    return LayeredPropagator(timeline.n, tuple(_simplify(layers) if optimize else layers))


def propagator_at(timeline: DesignTimeline, t: float, optimize: bool = True) -> LayeredPropagator:
    """Propagator ``U(t)`` at an arbitrary time, including a partial last half-period."""
    return segment_propagator(timeline, 0.0, t, optimize)


def conjugate_operator(U: LayeredPropagator, rho) -> np.ndarray:
    """``U rho U^dagger`` as a dense matrix.

    ``rho`` is a dense ``(2**n, 2**n)`` array or a :class:`PauliString`
    (unnormalized).  Left factors act on columns, the conjugate factors on rows.
    """
    if isinstance(rho, PauliString):
        if rho.n != U.n:
            raise ValueError("operator and propagator act on different qubit counts")
        out = rho.to_dense()
    else:
        out = np.array(rho, dtype=complex, order="C", copy=True)
    if out.shape != (U.dim, U.dim):
        raise ValueError(f"expected a {U.dim}x{U.dim} operator, got {out.shape}")
    scale = 1 / U.dim
    for layer in U.layers:
        if layer is HADAMARD:
            _butterflies(out, 0)
            _butterflies(out, 1)
            out *= scale
        else:
            out *= layer.phases[:, None]
            out *= layer.phases.conj()[None, :]
    return out


Operator = Union[LayeredPropagator, np.ndarray]


def as_dense(U: Operator) -> np.ndarray:
    return U.to_dense() if isinstance(U, LayeredPropagator) else np.asarray(U, dtype=complex)


def _dim(U: Operator) -> int:
    return U.dim if isinstance(U, LayeredPropagator) else np.shape(U)[0]


def trace_overlap(U: Operator, V: Operator, chunk: int = 256) -> complex:
    """Hilbert-Schmidt overlap ``Tr(U V^dagger)``.

    Layered operands are evaluated by streaming blocks of basis columns through
    ``V^dagger`` and then ``U``, so no ``d x d`` matrix is ever formed.
    """
    d = _dim(U)
    if _dim(V) != d:
        raise ValueError("operators act on different dimensions")
    if not isinstance(U, LayeredPropagator) and not isinstance(V, LayeredPropagator):
        return complex(np.vdot(np.asarray(V), np.asarray(U)))
    total = []
    for start in range(0, d, chunk):
        stop = min(start + chunk, d)
        block = np.zeros((d, stop - start), dtype=complex)
        block[np.arange(start, stop), np.arange(stop - start)] = 1.0
        if isinstance(V, LayeredPropagator):
            block = V.adjoint().apply(block, copy=False)
        else:
            block = np.asarray(V).conj().T @ block
        if isinstance(U, LayeredPropagator):
            block = U.apply(block, copy=False)
        else:
            block = np.asarray(U) @ block
        total.append(block[np.arange(start, stop), np.arange(stop - start)].sum())
    return complex(np.sum(total))


def phase_distance(U, V) -> float:
    """``min_phi ||U - exp(i phi) V||_2`` (spectral norm)."""
    U, V = as_dense(U), as_dense(V)
    overlap = np.vdot(V, U)
    phi0 = np.angle(overlap) if abs(overlap) > 0 else 0.0

    def dist(phi):
        return np.linalg.norm(U - np.exp(1j * phi) * V, 2)

    res = scipy.optimize.minimize_scalar(dist, bounds=(phi0 - 0.5, phi0 + 0.5),
                                         method="bounded", options={"xatol": 1e-12})
    return float(min(res.fun, dist(phi0)))


_SIGMA = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Z": np.diag([1.0, -1.0]).astype(complex),
}


def _embed(op: np.ndarray, qubit: int, n: int) -> np.ndarray:
    out = np.ones((1, 1), dtype=complex)
    for q in range(n):
        out = np.kron(out, op if q == qubit else _SIGMA["I"])
    return out


def oracle_refocusing_propagator(system: SpinSystem, lambda_m: Sequence[float],
                                 slot_map: SlotMap, T_half_s: float) -> np.ndarray:
    """Exact propagator of one refocused half-period with ideal pi pulses.

    Free evolution under the static Hamiltonian (built from Kronecker products
    and exponentiated with ``scipy.linalg.expm``) is interrupted by
    instantaneous x-axis pi rotations: slot ``s`` fires at ``lambda_s *
    T_half_s`` and every qubit is flipped once more at ``T_half_s``.
    Pulses sharing a time are applied together.
    """
    n = system.n
    if n > DENSE_MAX_QUBITS:
        raise ValueError(f"dense oracle limited to {DENSE_MAX_QUBITS} qubits")
    lam = np.asarray(lambda_m, dtype=float)
    if lam.shape != (slot_map.n_slots,) or slot_map.n != n:
        raise ValueError("lambda, slot map and system sizes disagree")
    if not np.all((lam >= 0) & (lam <= 1)):
        raise ValueError("lambda entries must lie in [0, 1]")

    d = 1 << n
    ham = np.zeros((d, d), dtype=complex)
    zs = [_embed(_SIGMA["Z"], q, n) for q in range(n)]
    for i in range(n):
        ham += 2 * np.pi * system.offset_hz[i] * zs[i] / 2
        for j in range(i + 1, n):
            ham += np.pi * system.coupling_hz[i, j] * zs[i] @ zs[j] / 2
    flips = [scipy.linalg.expm(-1j * np.pi / 2 * _embed(_SIGMA["X"], q, n)) for q in range(n)]

    def pulse(qubits):
        out = np.eye(d, dtype=complex)
        for q in qubits:
            out = flips[q] @ out
        return out

    events: dict[float, list[int]] = {}
    for s, frac in enumerate(lam):
        events.setdefault(float(frac) * T_half_s, []).extend(slot_map.qubits_in(s))

    U = np.eye(d, dtype=complex)
    now = 0.0
    for when in sorted(events):
        U = scipy.linalg.expm(-1j * ham * (when - now)) @ U
        U = pulse(events[when]) @ U
        now = when
    U = scipy.linalg.expm(-1j * ham * (T_half_s - now)) @ U
    return pulse(range(n)) @ U


def haar_unitary(rng_seed, n: int) -> np.ndarray:
    """Haar-random ``2**n x 2**n`` unitary from the QR decomposition of a
    complex Ginibre matrix, with the column phases of R divided out."""
    if n > DENSE_MAX_QUBITS:
        raise ValueError(f"dense sampling limited to {DENSE_MAX_QUBITS} qubits")
    rng = np.random.default_rng(rng_seed)
    d = 1 << n
    z = (rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    diag = np.diag(r)
    return q * (diag / np.abs(diag))[None, :]
