"""Exact simulation of the three-source triangle measurement network.

Three bipartite qubit sources sit on the edges of a triangle; the parties
A, B, C at the vertices each receive one share from each adjacent source and
measure both shares jointly with a four-outcome measurement. This module
builds the states, the tetrahedral entangled measurement basis, the wiring
permutation between source slots and party slots, and evaluates the resulting
outcome distribution exactly in the 64-dimensional global space.

Slot conventions
----------------
The global space is ordered (A1, A2, B1, B2, C1, C2), two slots per party.
Going around the triangle A -> B -> C -> A, the source between B and C
occupies slots (B2, C1), the source between C and A occupies (C2, A1), and
the source between A and B occupies (A2, B1). Each party therefore holds
(share from the preceding source, share from the following source) in cyclic
order. One fixed outcome labeling of the measurement basis is used
throughout; any consistent relabeling yields the same distribution
statistics by symmetry.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
import json

import numpy as np

from .dist import TriangleDistribution
from .errors import ComputationError, ValidationError

ALGEBRA_ATOL = 1e-10

# Schmidt coefficients of the tetrahedral basis vectors.
SCHMIDT_PLUS = (math.sqrt(3.0) + 1.0) / (2.0 * math.sqrt(2.0))
SCHMIDT_MINUS = (math.sqrt(3.0) - 1.0) / (2.0 * math.sqrt(2.0))

# Device algebra of the partial Bell-state-measurement realization: an
# amplitude attenuation with this transmittance on one photon turns a
# maximally entangled Bell projection into a tetrahedral-basis projection,
# at this projection efficiency.
EJM_TRANSMITTANCE = 7.0 - 4.0 * math.sqrt(3.0)
EJM_PROJECTION_EFFICIENCY = 2.0 * (2.0 - math.sqrt(3.0))

# Source slots (B2,C1,C2,A1,A2,B1) -> party slots (A1,A2,B1,B2,C1,C2).
_SLOT_PERM = (3, 4, 5, 0, 1, 2)

_PAULI = np.array(
    [
        [[0.0, 1.0], [1.0, 0.0]],
        [[0.0, -1.0j], [1.0j, 0.0]],
        [[1.0, 0.0], [0.0, -1.0]],
    ],
    dtype=np.complex128,
)


def tetrahedron_default() -> np.ndarray:
    """Default regular tetrahedron directions, one per measurement outcome.

    Returns a (4, 3) array of unit vectors with pairwise dot products -1/3
    and zero centroid.
    """
    s = 1.0 / math.sqrt(3.0)
    return np.array(
        [[s, s, s], [s, -s, -s], [-s, s, -s], [-s, -s, s]], dtype=np.float64
    )


def _check_unit_bloch(m, atol=1e-9) -> np.ndarray:
    m = np.asarray(m, dtype=np.float64).reshape(-1)
    if m.shape != (3,):
        raise ValidationError(f"Bloch vector must have 3 components, got shape {m.shape}")
    norm = float(np.linalg.norm(m))
    if abs(norm - 1.0) > atol:
        raise ValidationError(f"Bloch vector must be unit length, |m| = {norm!r}")
    return m


def qubit_from_bloch(m) -> np.ndarray:
    """Pure qubit state with Bloch expectation vector ``m``.

    Antipodal inputs give orthogonal states. The overall phase convention is
    theta/phi spherical: (cos(theta/2), e^{i phi} sin(theta/2)).
    """
    m = _check_unit_bloch(m)
    theta = math.acos(min(1.0, max(-1.0, m[2])))
    phi = math.atan2(m[1], m[0])
    return np.array(
        [math.cos(theta / 2.0), np.exp(1j * phi) * math.sin(theta / 2.0)],
        dtype=np.complex128,
    )


def bloch_expectation(state: np.ndarray) -> np.ndarray:
    """Pauli expectation vector of a single-qubit pure state."""
    state = np.asarray(state, dtype=np.complex128).reshape(2)
    return np.array([np.real(np.conj(state) @ (s @ state)) for s in _PAULI])


def singlet() -> np.ndarray:
    """The antisymmetric two-qubit state (|01> - |10>)/sqrt(2)."""
    return np.array([0.0, 1.0, -1.0, 0.0], dtype=np.complex128) / math.sqrt(2.0)


def maximally_mixed_pair() -> np.ndarray:
    """Two-qubit maximally mixed density matrix I/4."""
    return np.eye(4, dtype=np.complex128) / 4.0


def _as_pair_density(state) -> np.ndarray:
    """Validate a two-qubit state given as pure 4-vector or 4x4 density."""
    arr = np.asarray(state, dtype=np.complex128)
    if arr.shape == (4,):
        norm = float(np.linalg.norm(arr))
        if abs(norm - 1.0) > 1e-12:
            raise ValidationError(f"pure pair state must have unit norm, got {norm!r}")
        return np.outer(arr, arr.conj())
    if arr.shape == (4, 4):
        if not np.allclose(arr, arr.conj().T, rtol=0.0, atol=1e-12):
            raise ValidationError("pair density matrix must be Hermitian within 1e-12")
        eigs = np.linalg.eigvalsh(arr)
        if eigs.min() < -1e-10:
            raise ValidationError(f"pair density matrix must be PSD, min eigenvalue {eigs.min()!r}")
        tr = float(np.real(np.trace(arr)))
        if abs(tr - 1.0) > 1e-12:
            raise ValidationError(f"pair density matrix must have unit trace, got {tr!r}")
        return arr
    raise ValidationError(f"pair state must be a 4-vector or 4x4 matrix, got shape {arr.shape}")


def schmidt_coefficients(vector: np.ndarray) -> np.ndarray:
    """Schmidt coefficients of a two-qubit pure state, descending."""
    vec = np.asarray(vector, dtype=np.complex128).reshape(2, 2)
    return np.linalg.svd(vec, compute_uv=False)


@dataclass(frozen=True)
class EjmBasis:
    """Orthonormal two-qubit basis aligned with a regular tetrahedron.

    ``vectors`` holds the four basis states as rows; ``tetrahedron`` the four
    Bloch directions. Each vector is partially entangled with Schmidt
    coefficients (sqrt(3) +/- 1) / (2 sqrt(2)), and its single-qubit marginal
    points along (first qubit) or against (second qubit) its direction.
    """

    vectors: np.ndarray
    tetrahedron: np.ndarray

    def __post_init__(self):
        vecs = np.asarray(self.vectors, dtype=np.complex128)
        tet = np.asarray(self.tetrahedron, dtype=np.float64)
        if vecs.shape != (4, 4) or tet.shape != (4, 3):
            raise ValidationError("basis needs four 4-vectors and four Bloch directions")
        gram = vecs.conj() @ vecs.T
        if not np.allclose(gram, np.eye(4), rtol=0.0, atol=ALGEBRA_ATOL):
            raise ValidationError("basis vectors must be orthonormal within 1e-10")
        expected = np.array([SCHMIDT_PLUS, SCHMIDT_MINUS])
        for i in range(4):
            sc = schmidt_coefficients(vecs[i])
            if not np.allclose(sc, expected, rtol=0.0, atol=ALGEBRA_ATOL):
                raise ValidationError(
                    f"basis vector {i} has Schmidt coefficients {sc}, expected {expected}"
                )
        dots = tet @ tet.T
        if not np.allclose(dots - np.diag(np.diag(dots)),
                           -1.0 / 3.0 * (1 - np.eye(4)), rtol=0.0, atol=ALGEBRA_ATOL):
            raise ValidationError("tetrahedron directions must have pairwise dot -1/3")
        vecs = vecs.copy()
        vecs.flags.writeable = False
        tet = tet.copy()
        tet.flags.writeable = False
        object.__setattr__(self, "vectors", vecs)
        object.__setattr__(self, "tetrahedron", tet)


def ejm_basis(tetrahedron=None) -> EjmBasis:
    """Build the tetrahedral entangled basis from four Bloch directions.

    Each basis vector is c+ |m, -m> + c- |-m, m> with c+- the Schmidt
    coefficients above. The input must be a regular tetrahedron (pairwise
    dot products -1/3 within 1e-9).
    """
    tet = tetrahedron_default() if tetrahedron is None else np.asarray(tetrahedron, np.float64)
    if tet.shape != (4, 3):
        raise ValidationError(f"tetrahedron must be four 3-vectors, got shape {tet.shape}")
    for i in range(4):
        _check_unit_bloch(tet[i])
    dots = tet @ tet.T
    off = dots[~np.eye(4, dtype=bool)]
    if not np.allclose(off, -1.0 / 3.0, rtol=0.0, atol=1e-9):
        raise ValidationError("tetrahedron directions must have pairwise dot -1/3 within 1e-9")
    vectors = np.empty((4, 4), dtype=np.complex128)
    for i in range(4):
        plus = qubit_from_bloch(tet[i])
        minus = qubit_from_bloch(-tet[i])
        vectors[i] = SCHMIDT_PLUS * np.kron(plus, minus) + SCHMIDT_MINUS * np.kron(minus, plus)
    return EjmBasis(vectors=vectors, tetrahedron=tet)


class Povm:
    """Four-outcome measurement on a two-qubit space.

    Elements must be Hermitian within 1e-12, PSD within -1e-10, and sum to
    the identity within 1e-10.
    """

    __slots__ = ("_elements",)

    def __init__(self, elements):
        elems = [np.asarray(e, dtype=np.complex128) for e in elements]
        if len(elems) != 4 or any(e.shape != (4, 4) for e in elems):
            raise ValidationError("a POVM needs exactly four 4x4 elements")
        total = np.zeros((4, 4), dtype=np.complex128)
        for i, e in enumerate(elems):
            if not np.allclose(e, e.conj().T, rtol=0.0, atol=1e-12):
                raise ValidationError(f"POVM element {i} must be Hermitian within 1e-12")
            eigs = np.linalg.eigvalsh(e)
            if eigs.min() < -1e-10:
                raise ValidationError(
                    f"POVM element {i} must be PSD, min eigenvalue {eigs.min()!r}"
                )
            total += e
        if not np.allclose(total, np.eye(4), rtol=0.0, atol=ALGEBRA_ATOL):
            raise ValidationError("POVM elements must sum to the identity within 1e-10")
        frozen = []
        for e in elems:
            e = e.copy()
            e.flags.writeable = False
            frozen.append(e)
        self._elements = tuple(frozen)

    @property
    def elements(self):
        return self._elements

    def __iter__(self):
        return iter(self._elements)

    def __len__(self):
        return 4

    def __getitem__(self, i):
        return self._elements[i]


def povm_from_basis(basis: EjmBasis) -> Povm:
    """Rank-1 projective POVM onto the four basis vectors."""
    return Povm([np.outer(v, v.conj()) for v in basis.vectors])


def identity_povm() -> Povm:
    """The trivial measurement: every element I/4, all outcomes equally likely."""
    return Povm([np.eye(4, dtype=np.complex128) / 4.0] * 4)


def depolarize_povm(povm: Povm, visibility: float) -> Povm:
    """Mix each element with white noise: nu E_i + (1 - nu) I/4."""
    if not 0.0 <= visibility <= 1.0:
        raise ValidationError(f"visibility must be in [0, 1], got {visibility!r}")
    eye = np.eye(4, dtype=np.complex128)
    return Povm([visibility * e + (1.0 - visibility) / 4.0 * eye for e in povm])


def triangle_state(pair_bc, pair_ca, pair_ab) -> np.ndarray:
    """Global 64x64 density matrix of the three wired sources.

    Arguments are the pair states of the sources opposite A, B, C in that
    order: ``pair_bc`` spans slots (B2, C1), ``pair_ca`` spans (C2, A1),
    ``pair_ab`` spans (A2, B1). Pure 4-vectors are promoted to densities.
    """
    rho = np.kron(np.kron(_as_pair_density(pair_bc), _as_pair_density(pair_ca)),
                  _as_pair_density(pair_ab))
    perm = _SLOT_PERM + tuple(6 + i for i in _SLOT_PERM)
    return rho.reshape((2,) * 12).transpose(perm).reshape(64, 64)


def triangle_state_vector(psi_bc, psi_ca, psi_ab) -> np.ndarray:
    """Global 64-vector for three pure sources; amplitude-path counterpart."""
    parts = []
    for psi in (psi_bc, psi_ca, psi_ab):
        arr = np.asarray(psi, dtype=np.complex128)
        if arr.shape != (4,):
            raise ValidationError("vector path requires pure 4-vector pair states")
        if abs(np.linalg.norm(arr) - 1.0) > 1e-12:
            raise ValidationError("pure pair state must have unit norm")
        parts.append(arr)
    psi = np.kron(np.kron(parts[0], parts[1]), parts[2])
    return psi.reshape((2,) * 6).transpose(_SLOT_PERM).reshape(64)


def _clean_probabilities(p: np.ndarray) -> np.ndarray:
    """Zero out roundoff negatives; anything below -1e-12 is a real failure."""
    if p.min() < -1e-12:
        raise ComputationError(f"probability fell below zero: {p.min()!r}")
    return np.where(p < 0.0, 0.0, p)


def triangle_distribution(state, povm_a: Povm, povm_b: Povm, povm_c: Povm) -> TriangleDistribution:
    """Outcome distribution P(a,b,c) = Tr[state (M_A^a x M_B^b x M_C^c)].

    ``state`` is the 64x64 global density (or a pure 64-vector, promoted).
    This dense trace evaluation is the reference path; see
    :func:`triangle_distribution_pure` for the independent amplitude path.
    """
    arr = np.asarray(state, dtype=np.complex128)
    if arr.shape == (64,):
        arr = np.outer(arr, arr.conj())
    if arr.shape != (64, 64):
        raise ValidationError(f"global state must be 64x64 (or pure 64-vector), got {arr.shape}")
    for povm in (povm_a, povm_b, povm_c):
        if not isinstance(povm, Povm):
            raise ValidationError("measurements must be Povm instances")
    p = np.empty((4, 4, 4), dtype=np.float64)
    # Tr[rho (Ma x Mb x Mc)] accumulated with the BC block precomputed.
    for b in range(4):
        for c in range(4):
            mbc = np.kron(povm_b[b], povm_c[c])
            for a in range(4):
                op = np.kron(povm_a[a], mbc)
                p[a, b, c] = float(np.real(np.einsum("ij,ji->", arr, op)))
    return TriangleDistribution(_clean_probabilities(p))


def triangle_distribution_pure(psi_pairs, bases) -> TriangleDistribution:
    """Amplitude-path distribution for pure sources and rank-1 measurements.

    P(a,b,c) = |<phi_a x phi_b x phi_c| psi_global>|^2 with the same slot
    wiring as :func:`triangle_state`. Kept separate from the dense trace
    path so the two can cross-check each other.
    """
    psi = triangle_state_vector(*psi_pairs)
    vecs = []
    for basis in bases:
        if not isinstance(basis, EjmBasis):
            raise ValidationError("amplitude path requires EjmBasis measurements")
        vecs.append(basis.vectors)
    p = np.empty((4, 4, 4), dtype=np.float64)
    for a in range(4):
        for b in range(4):
            ab = np.kron(vecs[0][a].conj(), vecs[1][b].conj())
            for c in range(4):
                amp = np.kron(ab, vecs[2][c].conj()) @ psi
                p[a, b, c] = float(np.real(amp * amp.conjugate()))
    return TriangleDistribution(_clean_probabilities(p))


def elegant_distribution() -> TriangleDistribution:
    """Closed-form outcome distribution of singlets measured in the tetrahedral basis.

    P = 25/256 when a = b = c, 1/256 when exactly two outcomes coincide,
    and 5/256 when all three differ. Symmetric under party permutations and
    simultaneous outcome relabelings.
    """
    a, b, c = np.indices((4, 4, 4))
    p = np.full((4, 4, 4), 1.0 / 256.0)
    p[(a == b) & (b == c)] = 25.0 / 256.0
    p[(a != b) & (b != c) & (a != c)] = 5.0 / 256.0
    return TriangleDistribution(p)


def attenuated_projection(basis_index: int, t_v: float):
    """Partial Bell-state projection with amplitude attenuation on one photon.

    ``basis_index`` is a 1-based outcome label in 1..4. Starting from the
    maximally entangled projection (|m,-m> + |-m,m>)/sqrt(2) along the
    direction of that outcome, an attenuator diag(1, sqrt(t_v)) acting on the
    first photon's (|m>, |-m>) axis rescales the second branch. Returns the
    subnormalized projection vector and its squared norm (the projection
    efficiency, (1 + t_v)/2). At t_v = 7 - 4 sqrt(3) the normalized vector
    is exactly the tetrahedral basis vector and the efficiency is
    2 (2 - sqrt(3)), identical for every outcome.
    """
    if not isinstance(basis_index, (int, np.integer)) or not 1 <= int(basis_index) <= 4:
        raise ValidationError(f"basis_index must be an integer in 1..4, got {basis_index!r}")
    if not 0.0 < t_v <= 1.0:
        raise ValidationError(f"t_v must be in (0, 1], got {t_v!r}")
    m = tetrahedron_default()[int(basis_index) - 1]
    plus = qubit_from_bloch(m)
    minus = qubit_from_bloch(-m)
    vec = (np.kron(plus, minus) + math.sqrt(t_v) * np.kron(minus, plus)) / math.sqrt(2.0)
    efficiency = float(np.real(np.vdot(vec, vec)))
    return vec, efficiency


# -- rotations -----------------------------------------------------------

def rotation_from_euler(angles_deg) -> np.ndarray:
    """3x3 rotation matrix from extrinsic x-y-z Euler angles in degrees."""
    from scipy.spatial.transform import Rotation

    angles = np.asarray(angles_deg, dtype=np.float64).reshape(-1)
    if angles.shape != (3,):
        raise ValidationError("need exactly three Euler angles")
    return Rotation.from_euler("xyz", angles, degrees=True).as_matrix()


def rotate_tetrahedron(tetrahedron, rotation) -> np.ndarray:
    """Apply a rotation matrix to all four directions."""
    rot = np.asarray(rotation, dtype=np.float64)
    if rot.shape != (3, 3):
        raise ValidationError("rotation must be a 3x3 matrix")
    if not np.allclose(rot @ rot.T, np.eye(3), rtol=0.0, atol=1e-9) or np.linalg.det(rot) < 0:
        raise ValidationError("rotation must be a proper orthogonal matrix")
    tet = np.asarray(tetrahedron, dtype=np.float64)
    return tet @ rot.T


def su2_from_rotation(rotation) -> np.ndarray:
    """Single-qubit unitary implementing a spatial rotation of Bloch vectors.

    Satisfies U (m . sigma) U^dag = (R m) . sigma; the global sign is fixed
    by the quaternion branch and is irrelevant to any probability.
    """
    from scipy.spatial.transform import Rotation

    rot = np.asarray(rotation, dtype=np.float64)
    x, y, z, w = Rotation.from_matrix(rot).as_quat()
    return w * np.eye(2, dtype=np.complex128) - 1j * (
        x * _PAULI[0] + y * _PAULI[1] + z * _PAULI[2]
    )


# -- serialization: interleaved [re, im] pairs, row-major ----------------

def _complex_to_interleaved(arr: np.ndarray) -> list:
    flat = np.asarray(arr, dtype=np.complex128).reshape(-1)
    out = []
    for z in flat:
        out.extend((float(z.real), float(z.imag)))
    return out


def _interleaved_to_complex(values, shape) -> np.ndarray:
    vals = np.asarray(values, dtype=np.float64)
    if vals.size != 2 * int(np.prod(shape)):
        raise ValidationError(
            f"expected {2 * int(np.prod(shape))} interleaved reals for shape {shape}"
        )
    return (vals[0::2] + 1j * vals[1::2]).reshape(shape)


def povm_to_json_dict(povm: Povm) -> dict:
    return {"elements": [_complex_to_interleaved(e) for e in povm]}


def povm_from_json_dict(obj: dict) -> Povm:
    if not isinstance(obj, dict) or "elements" not in obj:
        raise ValidationError('POVM JSON must be an object with an "elements" list')
    elems = obj["elements"]
    if not isinstance(elems, list) or len(elems) != 4:
        raise ValidationError("POVM JSON must list exactly four elements")
    return Povm([_interleaved_to_complex(e, (4, 4)) for e in elems])


def load_povm(path) -> Povm:
    try:
        obj = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: invalid JSON: {exc}") from exc
    return povm_from_json_dict(obj)


def pair_state_to_json_dict(state) -> dict:
    arr = np.asarray(state, dtype=np.complex128)
    if arr.shape == (4,):
        return {"kind": "pure", "amplitudes": _complex_to_interleaved(arr)}
    if arr.shape == (4, 4):
        return {"kind": "mixed", "matrix": _complex_to_interleaved(arr)}
    raise ValidationError(f"pair state must be a 4-vector or 4x4 matrix, got shape {arr.shape}")


def pair_state_from_json_dict(obj: dict) -> np.ndarray:
    if not isinstance(obj, dict) or "kind" not in obj:
        raise ValidationError('pair state JSON must be an object with a "kind" field')
    if obj["kind"] == "pure":
        return _interleaved_to_complex(obj.get("amplitudes", []), (4,))
    if obj["kind"] == "mixed":
        return _interleaved_to_complex(obj.get("matrix", []), (4, 4))
    raise ValidationError(f"unknown pair state kind {obj['kind']!r}")
