"""Multiple-quantum coherence (MQC) spectra and signals.

The coherence order of the element ``|a><b|`` is ``<a|M_z|a> - <b|M_z|b>``
with ``M_z = sum_i Z_i / 2``; with bit 0 the +1 eigenstate this is
``popcount(b) - popcount(a)``.  ``I(nu)`` is the squared Frobenius norm of the
order-``nu`` block divided by ``Tr(rho rho^dagger)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .designham import DesignTimeline, EffectiveZHamiltonian
from .propagate import (
    LayeredPropagator,
    PauliString,
    conjugate_operator,
    segment_propagator,
    z_phase_diagonal,
)

HERMITIAN_TOL = 1e-8
INTENSITY_FLOOR = -1e-12


def _frozen(values) -> np.ndarray:
    arr = np.array(values, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class CoherenceSpectrum:
    """Intensities ``I(nu)`` for ``nu = -n..n`` (index ``nu + n``)."""

    intensities: np.ndarray
    n: int

    def __post_init__(self):
        vals = _frozen(self.intensities)
        if vals.shape != (2 * self.n + 1,):
            raise ValueError(f"expected {2 * self.n + 1} intensities, got {vals.shape}")
        if np.any(vals < INTENSITY_FLOOR):
            raise ValueError("intensities must be non-negative")
        object.__setattr__(self, "intensities", vals)

    @property
    def orders(self) -> np.ndarray:
        return np.arange(-self.n, self.n + 1)

    def __getitem__(self, nu: int) -> float:
        if not -self.n <= nu <= self.n:
            raise IndexError(nu)
        return float(self.intensities[nu + self.n])

    def folded(self) -> np.ndarray:
        """``I(0), I(1)+I(-1), ...`` indexed by ``|nu|``."""
        v = self.intensities
        out = v[self.n:].copy()
        out[1:] += v[:self.n][::-1]
        return out

    def total(self) -> float:
        return float(np.sum(self.intensities))


@dataclass(frozen=True, eq=False)
class MQSignal:
    phis: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        phis = _frozen(self.phis)
        vals = np.array(self.values, dtype=complex)
        vals.setflags(write=False)
        if phis.ndim != 1 or phis.shape != vals.shape or len(phis) == 0:
            raise ValueError("phis and values must be equal-length non-empty vectors")
        object.__setattr__(self, "phis", phis)
        object.__setattr__(self, "values", vals)


@dataclass(frozen=True, eq=False)
class TypicalProfile:
    intensities: np.ndarray
    n: int
    exact: tuple[Fraction, ...] = ()

    @property
    def orders(self) -> np.ndarray:
        return np.arange(-self.n, self.n + 1)

    def __getitem__(self, nu: int) -> float:
        return float(self.intensities[nu + self.n])


def _popcount(n: int) -> np.ndarray:
    return np.bitwise_count(np.arange(1 << n, dtype=np.uint64)).astype(np.intp)


def coherence_order(row_basis: str, col_basis: str) -> int:
    """Order of ``|row><col|`` for two bitstrings of equal length."""
    if len(row_basis) != len(col_basis):
        raise ValueError("bitstrings differ in length")
    if set(row_basis + col_basis) - {"0", "1"}:
        raise ValueError("bitstrings may only contain 0 and 1")
    return col_basis.count("1") - row_basis.count("1")


def _check_operator(rho: np.ndarray) -> int:
    rho = np.asarray(rho)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise ValueError("operator must be square")
    d = rho.shape[0]
    n = d.bit_length() - 1
    if (1 << n) != d:
        raise ValueError("operator dimension is not a power of two")
    return n


def _is_hermitian(rho: np.ndarray, tol: float) -> bool:
    scale = max(1.0, float(np.max(np.abs(rho))))
    step = max(1, (1 << 22) // rho.shape[0])
    for start in range(0, rho.shape[0], step):
        block = rho[start:start + step]
        if np.max(np.abs(block - rho[:, start:start + step].conj().T)) > tol * scale:
            return False
    return True


def mqc_spectrum(rho, hermitian_tol: float = HERMITIAN_TOL) -> CoherenceSpectrum:
    """Coherence-order decomposition of a Hermitian operator."""
    rho = np.asarray(rho)
    n = _check_operator(rho)
    if not _is_hermitian(rho, hermitian_tol):
        raise ValueError("operator is not Hermitian")
    weights = np.abs(rho) ** 2
    norm = float(weights.sum())
    if norm == 0.0:
        raise ValueError("zero operator has no MQC spectrum")
    # indicator[b, c] = 1 iff popcount(b) == c; block[r, c] sums weights over
    # rows of popcount r and columns of popcount c
    indicator = np.zeros((1 << n, n + 1))
    indicator[np.arange(1 << n), _popcount(n)] = 1.0
    block = indicator.T @ weights @ indicator
    intensities = np.array([np.trace(block, offset=nu) for nu in range(-n, n + 1)])
    return CoherenceSpectrum(intensities / norm, n)


def collective_z(n: int) -> EffectiveZHamiltonian:
    """``M_z = sum_i Z_i / 2`` as a Z-type Hamiltonian (unit rad/s coefficients)."""
    return EffectiveZHamiltonian(np.ones(n), np.zeros((n, n)))


def default_phis(points: int = 256) -> np.ndarray:
    """``2 pi l / points`` for ``l = 1..points``."""
    return 2 * np.pi * np.arange(1, points + 1) / points


def _as_operator(rho0) -> np.ndarray:
    if isinstance(rho0, PauliString):
        return rho0.to_dense(normalized=True)
    return np.asarray(rho0, dtype=complex)


def signal_of_state(rho: np.ndarray, phis: Sequence[float], chunk: int = 32) -> MQSignal:
    """``S(phi) = Tr[phi_z rho phi_z^dagger rho]`` for an already evolved ``rho``.

    Each rotation is a diagonal phase layer ``u(phi)``, so the trace is
    ``sum_ab u_a rho_ab conj(u_b) rho_ba``, evaluated for a block of angles at
    a time.
    """
    rho = np.asarray(rho, dtype=complex)
    n = _check_operator(rho)
    phis = np.asarray(phis, dtype=float)
    weights = rho * rho.T
    mz = collective_z(n)
    values = np.empty(len(phis), dtype=complex)
    for start in range(0, len(phis), chunk):
        part = phis[start:start + chunk]
        rot = np.stack([z_phase_diagonal(mz, phi).phases for phi in part])
        values[start:start + len(part)] = np.einsum("pa,pa->p", rot @ weights, rot.conj())
    return MQSignal(phis, values)


def mq_signal(rho0, U: LayeredPropagator, phis: Sequence[float] | None = None) -> MQSignal:
    """Multiple-quantum signal of ``rho(t) = U rho0 U^dagger``.

    ``rho0`` is a dense operator normalized to ``Tr(rho0^2) = 1`` or a
    :class:`PauliString` (normalized here).  The default grid is
    ``2 pi l / 256``, ``l = 1..256``.
    """
    if phis is None:
        phis = default_phis()
    if len(phis) == 0:
        raise ValueError("empty angle grid")
    rho0 = _as_operator(rho0)
    purity = float(np.real(np.vdot(rho0, rho0)))
    if not math.isclose(purity, 1.0, rel_tol=0, abs_tol=1e-9):
        raise ValueError(f"initial operator must have Tr(rho0^2) = 1, got {purity}")
    return signal_of_state(conjugate_operator(U, rho0), phis)


def spectrum_from_signal(signal: MQSignal, n: int, alias_tol: float = 1e-9) -> CoherenceSpectrum:
    """Recover ``I(nu)`` by a discrete Fourier transform over a uniform grid.

    The grid must be ``phi_0 + 2 pi l / N`` covering ``[0, 2 pi)`` once with
    ``N >= 2n + 1``.  Components at ``|nu| > n`` must vanish; they are checked
    against ``alias_tol``.
    """
    N = len(signal.phis)
    if N < 2 * n + 1:
        raise ValueError(f"need at least {2 * n + 1} angles, got {N}")
    step = 2 * np.pi / N
    ticks = signal.phis / step
    index = np.rint(ticks).astype(int)
    if np.max(np.abs(ticks - index)) > 1e-9:
        raise ValueError("angle grid is not uniform over [0, 2 pi)")
    slots = np.mod(index, N)
    if len(np.unique(slots)) != N:
        raise ValueError("angle grid repeats a point modulo 2 pi")
    samples = np.empty(N, dtype=complex)
    samples[slots] = signal.values
    # S(phi) = sum_nu exp(-i nu phi) I(nu)  =>  I(nu) = mean_l S_l exp(+i nu phi_l)
    coeffs = np.fft.ifft(samples)
    if N > 2 * n + 1:
        outside = np.abs(coeffs[n + 1:N - n])
        if outside.size and outside.max() > alias_tol:
            raise ValueError(f"signal has components beyond order {n} ({outside.max():.3g})")
    nus = np.arange(-n, n + 1)
    return CoherenceSpectrum(coeffs[np.mod(nus, N)].real, n)


def typical_profile(n: int) -> TypicalProfile:
    """Haar-typical MQC profile ``C(2n, n - nu) / 4^n``."""
    if n < 1:
        raise ValueError("n must be positive")
    exact = tuple(Fraction(math.comb(2 * n, n - nu), 4 ** n) for nu in range(-n, n + 1))
    return TypicalProfile(_frozen([float(x) for x in exact]), n, exact)


def gaussian_profile(n: int) -> np.ndarray:
    """Normalized ``exp(-nu^2 / n)`` over ``nu = -n..n`` (for plotting only)."""
    nus = np.arange(-n, n + 1)
    g = np.exp(-nus.astype(float) ** 2 / n)
    return g / g.sum()


def deviation_epsilon(I: CoherenceSpectrum, ref: TypicalProfile) -> float:
    """``||I - I_typical|| / ||I_typical||`` over the full signed-order vector."""
    if I.n != ref.n:
        raise ValueError("spectra cover different orders")
    return float(np.linalg.norm(I.intensities - ref.intensities) / np.linalg.norm(ref.intensities))


@dataclass(frozen=True)
class GrowthPoint:
    t_s: float
    spectrum: CoherenceSpectrum
    epsilon: float


def mqc_growth_series(rho0, timeline: DesignTimeline,
                      sample_times: Sequence[float]) -> list[GrowthPoint]:
    """MQC spectra of ``rho(t)`` at each sample time (sorted ascending).

    ``rho`` is carried forward segment by segment, so each stretch of the
    timeline is applied once.
    """
    times = sorted(float(t) for t in sample_times)
    if times and (times[0] < 0 or times[-1] > timeline.schedule.horizon_s * (1 + 1e-12)):
        raise ValueError("sample times outside the timeline")
    rho = _as_operator(rho0).copy()
    ref = typical_profile(timeline.n)
    out = []
    now = 0.0
    for t in times:
        if t > now:
            rho = conjugate_operator(segment_propagator(timeline, now, t), rho)
            now = t
        spectrum = mqc_spectrum(rho)
        out.append(GrowthPoint(t, spectrum, deviation_epsilon(spectrum, ref)))
    return out
