"""Single-excitation bases, the W state and photonic Bloch modes.

Register basis ordering (effective model, dimension N + 1)::

    index n - 1  ->  |psi_n;0>   atom n in |1>, all others in |0>, no photon
    index N      ->  |psi_0;1>   all atoms in |0>, one photon in the common mode

Full basis ordering (dimension 3N), three consecutive entries per site k::

    3(k-1) + 0  ->  photon in local cavity k, all atoms in |0>
    3(k-1) + 1  ->  atom k in |e>
    3(k-1) + 2  ->  atom k in |1>
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import InvalidParameterError, InvalidSizeError

PERIODIC = "periodic"
OPEN = "open"
BOUNDARIES = (PERIODIC, OPEN)


def check_size(n) -> int:
    """Return ``n`` as an int, raising InvalidSizeError unless it is >= 1."""
    if isinstance(n, bool) or int(n) != n or n < 1:
        raise InvalidSizeError(f"register size must be a positive integer, got {n!r}")
    return int(n)


def check_boundary(boundary: str) -> str:
    if boundary not in BOUNDARIES:
        raise InvalidParameterError(
            f"boundary must be one of {BOUNDARIES}, got {boundary!r}"
        )
    return boundary


@dataclass(frozen=True)
class RegisterBasis:
    n_qubits: int
    labels: tuple

    @property
    def dim(self) -> int:
        return len(self.labels)

    @property
    def photon_index(self) -> int:
        return self.n_qubits

    def index(self, qubit: int) -> int:
        """Index of |psi_qubit;0> for a 1-based qubit label."""
        if not 1 <= qubit <= self.n_qubits:
            raise InvalidParameterError(
                f"qubit index must lie in [1, {self.n_qubits}], got {qubit}"
            )
        return qubit - 1


@dataclass(frozen=True)
class FullBasis:
    n_qubits: int
    labels: tuple
    excitations: tuple  # (photons, |e> count, |1> count) per label

    @property
    def dim(self) -> int:
        return len(self.labels)

    def photon_index(self, site: int) -> int:
        return 3 * (site - 1)

    def excited_index(self, site: int) -> int:
        return 3 * (site - 1) + 1

    def one_index(self, site: int) -> int:
        return 3 * (site - 1) + 2

    @property
    def photon_indices(self) -> np.ndarray:
        return np.arange(0, self.dim, 3)

    @property
    def excited_indices(self) -> np.ndarray:
        return np.arange(1, self.dim, 3)

    @property
    def one_indices(self) -> np.ndarray:
        return np.arange(2, self.dim, 3)

    def excitation_number(self, i: int) -> int:
        return sum(self.excitations[i])


def build_register_basis(n: int) -> RegisterBasis:
    n = check_size(n)
    labels = tuple(f"psi_{k};0" for k in range(1, n + 1)) + ("psi_0;1",)
    return RegisterBasis(n, labels)


def build_full_basis(n: int) -> FullBasis:
    n = check_size(n)
    labels, excitations = [], []
    for k in range(1, n + 1):
        labels += [f"site{k}:photon", f"site{k}:e", f"site{k}:1"]
        excitations += [(1, 0, 0), (0, 1, 0), (0, 0, 1)]
    return FullBasis(n, tuple(labels), tuple(excitations))


def w_state(n: int) -> np.ndarray:
    """Equal superposition of the N register states, zero photon amplitude."""
    n = check_size(n)
    psi = np.zeros(n + 1, dtype=complex)
    psi[:n] = 1.0 / np.sqrt(n)
    return psi


def photon_state(n: int) -> np.ndarray:
    """|psi_0;1>: all atoms in |0>, one photon in the common mode."""
    n = check_size(n)
    psi = np.zeros(n + 1, dtype=complex)
    psi[n] = 1.0
    return psi


@dataclass(frozen=True)
class BlochModes:
    energies: np.ndarray  # relative to omega_c
    profiles: np.ndarray  # column j is mode j over local cavities
    uniform_mode_index: int | None
    boundary: str

    def __len__(self):
        return len(self.energies)

    def symmetric_mode_index(self) -> int:
        """Mode with the largest overlap with the uniform profile.

        Equals ``uniform_mode_index`` on a ring; on an open chain it picks the
        nodeless standing wave.
        """
        if self.uniform_mode_index is not None:
            return self.uniform_mode_index
        n = self.profiles.shape[0]
        overlap = np.abs(self.profiles.sum(axis=0)) / np.sqrt(n)
        return int(np.argmax(overlap))


def hopping_matrix(n: int, J: float, boundary: str = PERIODIC) -> np.ndarray:
    """Matrix of J * sum_k (a_k^dag a_{k+1} + h.c.) on the one-photon sector.

    On a ring the k = N term wraps to site 1, so N = 2 carries a doubled bond.
    N = 1 has no neighbours and gives the zero matrix under both boundaries.
    """
    n = check_size(n)
    check_boundary(boundary)
    h = np.zeros((n, n))
    if n == 1:
        return h
    bonds = n if boundary == PERIODIC else n - 1
    for k in range(bonds):
        i, j = k, (k + 1) % n
        h[i, j] += J
        h[j, i] += J
    return h


def bloch_modes(n: int, J: float, boundary: str = PERIODIC) -> BlochModes:
    """Diagonalise the hopping lattice.

    Periodic chains use the Fourier basis directly (mode j has profile
    exp(2 pi i j k / N) / sqrt(N) and energy 2J cos(2 pi j / N)), so the
    uniform mode j = 0 is exact even when J = 0 makes every mode degenerate.
    Open chains are diagonalised numerically with energies in descending
    order and carry no uniform mode.
    """
    n = check_size(n)
    check_boundary(boundary)
    if not np.isfinite(J):
        raise InvalidParameterError(f"hopping rate must be finite, got {J!r}")
    if boundary == PERIODIC:
        k = np.arange(n)
        j = np.arange(n)
        profiles = np.exp(2j * np.pi * np.outer(k, j) / n) / np.sqrt(n)
        energies = 2.0 * J * np.cos(2 * np.pi * j / n) if n > 1 else np.zeros(1)
        return BlochModes(energies, profiles, 0, boundary)
    evals, evecs = np.linalg.eigh(hopping_matrix(n, J, boundary))
    order = np.argsort(-evals, kind="stable")
    evecs = evecs[:, order].astype(complex)
    # fix the sign so each profile has a positive component sum where possible
    sums = evecs.sum(axis=0)
    evecs *= np.where(sums.real < 0, -1.0, 1.0)
    return BlochModes(evals[order], evecs, None, boundary)
