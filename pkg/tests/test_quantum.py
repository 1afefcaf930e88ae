"""Tests for states, measurements, and the exact network simulation."""

import json
import math

import numpy as np
import pytest

from trianglekit.dist import TriangleDistribution
from trianglekit.errors import ValidationError
from trianglekit.quantum import (
    EJM_PROJECTION_EFFICIENCY,
    EJM_TRANSMITTANCE,
    SCHMIDT_MINUS,
    SCHMIDT_PLUS,
    EjmBasis,
    Povm,
    attenuated_projection,
    bloch_expectation,
    depolarize_povm,
    ejm_basis,
    elegant_distribution,
    identity_povm,
    load_povm,
    maximally_mixed_pair,
    pair_state_from_json_dict,
    pair_state_to_json_dict,
    povm_from_basis,
    povm_from_json_dict,
    povm_to_json_dict,
    qubit_from_bloch,
    rotate_tetrahedron,
    rotation_from_euler,
    schmidt_coefficients,
    singlet,
    su2_from_rotation,
    tetrahedron_default,
    triangle_distribution,
    triangle_distribution_pure,
    triangle_state,
)

PAULI = np.array(
    [
        [[0, 1], [1, 0]],
        [[0, -1j], [1j, 0]],
        [[1, 0], [0, -1]],
    ],
    dtype=np.complex128,
)


def random_unit_vectors(rng, n):
    v = rng.normal(size=(n, 3))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


def test_tetrahedron_default_geometry():
    tet = tetrahedron_default()
    assert tet.shape == (4, 3)
    assert np.allclose(np.linalg.norm(tet, axis=1), 1.0, atol=1e-15)
    dots = tet @ tet.T
    off = dots[~np.eye(4, dtype=bool)]
    assert np.allclose(off, -1.0 / 3.0, atol=1e-15)
    assert np.allclose(tet.sum(axis=0), 0.0, atol=1e-15)


def test_qubit_from_bloch_round_trip():
    fixed = [(0.0, 0.0, 1.0), (0.0, 0.0, -1.0), (1.0, 0.0, 0.0), (0.0, 1.0, 0.0)]
    rng = np.random.default_rng(11)
    for m in list(map(np.array, fixed)) + list(random_unit_vectors(rng, 20)):
        psi = qubit_from_bloch(m)
        assert abs(np.linalg.norm(psi) - 1.0) < 1e-12
        assert np.allclose(bloch_expectation(psi), m, atol=1e-12)
        # antipodal directions give orthogonal states
        overlap = np.vdot(qubit_from_bloch(-m), psi)
        assert abs(overlap) < 1e-12


def test_qubit_from_bloch_validation():
    with pytest.raises(ValidationError):
        qubit_from_bloch([1.0, 1.0, 1.0])
    with pytest.raises(ValidationError):
        qubit_from_bloch([1.0, 0.0])


def test_singlet_antisymmetric():
    psi = singlet()
    assert abs(np.linalg.norm(psi) - 1.0) < 1e-15
    mat = psi.reshape(2, 2)
    assert np.allclose(mat.T, -mat, atol=1e-15)
    assert np.allclose(schmidt_coefficients(psi), [1 / math.sqrt(2)] * 2, atol=1e-15)


def test_schmidt_coefficients_product_state():
    prod = np.kron(qubit_from_bloch([0, 0, 1]), qubit_from_bloch([1, 0, 0]))
    assert np.allclose(schmidt_coefficients(prod), [1.0, 0.0], atol=1e-12)


def test_schmidt_constants():
    # (sqrt(3) +/- 1) / (2 sqrt(2)), squares summing to 1
    assert SCHMIDT_PLUS == pytest.approx((math.sqrt(3) + 1) / (2 * math.sqrt(2)), abs=1e-15)
    assert SCHMIDT_MINUS == pytest.approx((math.sqrt(3) - 1) / (2 * math.sqrt(2)), abs=1e-15)
    assert SCHMIDT_PLUS**2 + SCHMIDT_MINUS**2 == pytest.approx(1.0, abs=1e-15)


def test_ejm_basis_orthonormal_and_entangled():
    basis = ejm_basis()
    gram = basis.vectors.conj() @ basis.vectors.T
    assert np.allclose(gram, np.eye(4), atol=1e-12)
    for i in range(4):
        sc = schmidt_coefficients(basis.vectors[i])
        assert np.allclose(sc, [SCHMIDT_PLUS, SCHMIDT_MINUS], atol=1e-12)


def test_ejm_basis_marginals_follow_directions():
    # reduced state of the first qubit points along the outcome direction
    # with length c+^2 - c-^2 = sqrt(3)/2; the second qubit points against it
    basis = ejm_basis()
    length = math.sqrt(3.0) / 2.0
    for i in range(4):
        rho = np.outer(basis.vectors[i], basis.vectors[i].conj()).reshape(2, 2, 2, 2)
        rho1 = np.trace(rho, axis1=1, axis2=3)
        rho2 = np.trace(rho, axis1=0, axis2=2)
        bloch1 = [np.real(np.trace(rho1 @ s)) for s in PAULI]
        bloch2 = [np.real(np.trace(rho2 @ s)) for s in PAULI]
        assert np.allclose(bloch1, length * basis.tetrahedron[i], atol=1e-12)
        assert np.allclose(bloch2, -length * basis.tetrahedron[i], atol=1e-12)


def test_ejm_basis_rejects_bad_tetrahedron():
    tet = tetrahedron_default()
    with pytest.raises(ValidationError):
        ejm_basis(tet * 1.1)
    squashed = tet.copy()
    squashed[3] = squashed[2]
    with pytest.raises(ValidationError):
        ejm_basis(squashed)
    with pytest.raises(ValidationError):
        ejm_basis(tet[:3])


def test_ejm_basis_constructor_validates():
    basis = ejm_basis()
    broken = basis.vectors.copy()
    broken[0] = broken[1]
    with pytest.raises(ValidationError):
        EjmBasis(vectors=broken, tetrahedron=basis.tetrahedron)
    # product-state rows are orthonormal but carry the wrong Schmidt spectrum
    with pytest.raises(ValidationError):
        EjmBasis(vectors=np.eye(4, dtype=complex), tetrahedron=basis.tetrahedron)


def test_povm_validation():
    v = ejm_basis().vectors[0]
    proj = np.outer(v, v.conj())
    rest = (np.eye(4) - proj) / 2.0
    with pytest.raises(ValidationError):
        Povm([1.5 * proj, -0.5 * proj, rest, rest])  # one element not PSD
    with pytest.raises(ValidationError):
        Povm([proj, proj, rest, rest])  # does not sum to identity
    skew = np.zeros((4, 4), dtype=complex)
    skew[0, 1] = 1.0
    with pytest.raises(ValidationError):
        Povm([proj + skew, rest, rest, proj - skew])  # not Hermitian
    with pytest.raises(ValidationError):
        Povm([np.eye(4) / 4.0] * 3)


def test_povm_from_basis_is_projective():
    povm = povm_from_basis(ejm_basis())
    total = np.zeros((4, 4), dtype=complex)
    for e in povm:
        assert np.allclose(e @ e, e, atol=1e-12)  # rank-1 projector
        assert abs(np.trace(e) - 1.0) < 1e-12
        total += e
    assert np.allclose(total, np.eye(4), atol=1e-12)
    assert len(povm) == 4
    assert np.array_equal(povm[0], povm.elements[0])


def test_povm_elements_immutable():
    povm = identity_povm()
    with pytest.raises(ValueError):
        povm[0][0, 0] = 9.0


def test_depolarize_povm():
    povm = povm_from_basis(ejm_basis())
    same = depolarize_povm(povm, 1.0)
    for a, b in zip(same, povm):
        assert np.allclose(a, b, atol=1e-15)
    flat = depolarize_povm(povm, 0.0)
    for e in flat:
        assert np.allclose(e, np.eye(4) / 4.0, atol=1e-15)
    with pytest.raises(ValidationError):
        depolarize_povm(povm, 1.2)
    with pytest.raises(ValidationError):
        depolarize_povm(povm, -0.1)


# -- the network distribution ---------------------------------------------

def contraction_oracle(psi_bc, psi_ca, psi_ab, bases):
    """Independent amplitude contraction with explicit tensor indices.

    Party slots: A holds (a1 from the CA source, a2 toward AB), and
    cyclically for B and C. Amplitude for outcomes (a, b, c) contracts each
    party's conjugated basis vector against its two source legs.
    """
    sbc = np.asarray(psi_bc).reshape(2, 2)  # indices (b2, c1)
    sca = np.asarray(psi_ca).reshape(2, 2)  # indices (c2, a1)
    sab = np.asarray(psi_ab).reshape(2, 2)  # indices (a2, b1)
    va = bases[0].vectors.conj().reshape(4, 2, 2)  # (a, a1, a2)
    vb = bases[1].vectors.conj().reshape(4, 2, 2)
    vc = bases[2].vectors.conj().reshape(4, 2, 2)
    amp = np.einsum("uv,wx,yz,axy,bzu,cvw->abc", sbc, sca, sab, va, vb, vc)
    return np.abs(amp) ** 2


def test_closed_form_cells():
    p = elegant_distribution().p
    a, b, c = np.indices((4, 4, 4))
    same = (a == b) & (b == c)
    distinct = (a != b) & (b != c) & (a != c)
    pair = ~same & ~distinct
    assert np.all(p[same] == 25.0 / 256.0)
    assert np.all(p[pair] == 1.0 / 256.0)
    assert np.all(p[distinct] == 5.0 / 256.0)
    assert int(same.sum()) == 4 and int(pair.sum()) == 36 and int(distinct.sum()) == 24


def test_closed_form_marginals():
    p = elegant_distribution().p
    single = p.sum(axis=(1, 2))
    assert np.allclose(single, 0.25, atol=1e-15)
    pairwise = p.sum(axis=2)
    a, b = np.indices((4, 4))
    assert np.allclose(pairwise[a == b], 7.0 / 64.0, atol=1e-15)
    assert np.allclose(pairwise[a != b], 3.0 / 64.0, atol=1e-15)


def test_amplitude_path_matches_closed_form():
    basis = ejm_basis()
    p = triangle_distribution_pure([singlet()] * 3, [basis] * 3)
    assert float(np.abs(p.p - elegant_distribution().p).max()) < 1e-12


def test_density_path_matches_closed_form():
    basis = ejm_basis()
    povm = povm_from_basis(basis)
    state = triangle_state(singlet(), singlet(), singlet())
    p = triangle_distribution(state, povm, povm, povm)
    assert float(np.abs(p.p - elegant_distribution().p).max()) < 1e-10


def test_paths_match_independent_contraction():
    rng = np.random.default_rng(12)
    rot = rotation_from_euler(rng.uniform(-180, 180, size=3))
    bases = [ejm_basis(), ejm_basis(rotate_tetrahedron(tetrahedron_default(), rot)), ejm_basis()]
    psi = singlet()
    expected = contraction_oracle(psi, psi, psi, bases)
    p_pure = triangle_distribution_pure([psi] * 3, bases)
    assert float(np.abs(p_pure.p - expected).max()) < 1e-12
    povms = [povm_from_basis(b) for b in bases]
    p_dense = triangle_distribution(triangle_state(psi, psi, psi), *povms)
    assert float(np.abs(p_dense.p - expected).max()) < 1e-10


def test_triangle_state_is_density():
    rho = triangle_state(singlet(), singlet(), singlet())
    assert rho.shape == (64, 64)
    assert abs(np.trace(rho) - 1.0) < 1e-12
    assert np.allclose(rho, rho.conj().T, atol=1e-12)


def test_mixed_sources_give_uniform():
    povm = povm_from_basis(ejm_basis())
    state = triangle_state(*([maximally_mixed_pair()] * 3))
    p = triangle_distribution(state, povm, povm, povm)
    assert p.allclose(TriangleDistribution.uniform(), atol=1e-12)


def test_identity_measurements_give_uniform():
    state = triangle_state(singlet(), singlet(), singlet())
    p = triangle_distribution(state, *([identity_povm()] * 3))
    assert p.allclose(TriangleDistribution.uniform(), atol=1e-12)
    # identity at one party only: that party's marginal flattens
    povm = povm_from_basis(ejm_basis())
    p = triangle_distribution(state, identity_povm(), povm, povm)
    assert np.allclose(p.p.sum(axis=(1, 2)), 0.25, atol=1e-12)


def test_rotation_covariance():
    # rotating every tetrahedron by the same rotation leaves the singlet
    # network distribution unchanged
    rng = np.random.default_rng(13)
    reference = elegant_distribution()
    for _ in range(3):
        rot = rotation_from_euler(rng.uniform(-180, 180, size=3))
        basis = ejm_basis(rotate_tetrahedron(tetrahedron_default(), rot))
        p = triangle_distribution_pure([singlet()] * 3, [basis] * 3)
        assert float(np.abs(p.p - reference.p).max()) < 1e-10


def test_su2_from_rotation_conjugation():
    rng = np.random.default_rng(14)
    for _ in range(5):
        rot = rotation_from_euler(rng.uniform(-180, 180, size=3))
        u = su2_from_rotation(rot)
        assert np.allclose(u @ u.conj().T, np.eye(2), atol=1e-12)
        for k in range(3):
            m = np.zeros(3)
            m[k] = 1.0
            lhs = u @ (PAULI[0] * m[0] + PAULI[1] * m[1] + PAULI[2] * m[2]) @ u.conj().T
            rm = rot @ m
            rhs = PAULI[0] * rm[0] + PAULI[1] * rm[1] + PAULI[2] * rm[2]
            assert np.allclose(lhs, rhs, atol=1e-12)


def test_rotation_helpers_validate():
    with pytest.raises(ValidationError):
        rotation_from_euler([0.0, 10.0])
    with pytest.raises(ValidationError):
        rotate_tetrahedron(tetrahedron_default(), np.eye(3) * 2.0)
    reflection = np.diag([1.0, 1.0, -1.0])
    with pytest.raises(ValidationError):
        rotate_tetrahedron(tetrahedron_default(), reflection)
    # 90 degrees about z maps x onto y
    rot = rotation_from_euler([0.0, 0.0, 90.0])
    assert np.allclose(rot @ np.array([1.0, 0.0, 0.0]), [0.0, 1.0, 0.0], atol=1e-12)


def test_attenuated_projection_limits():
    # full transmission: maximally entangled projection, efficiency 1/2... no,
    # (1 + 1)/2 = 1 in the subnormalized convention used here
    vec, eff = attenuated_projection(1, 1.0)
    assert eff == pytest.approx(1.0, abs=1e-12)
    assert np.allclose(schmidt_coefficients(vec), [1 / math.sqrt(2)] * 2, atol=1e-12)

    # at the design transmittance the normalized vector is the basis vector
    basis = ejm_basis()
    for i in range(4):
        vec, eff = attenuated_projection(i + 1, EJM_TRANSMITTANCE)
        assert eff == pytest.approx(EJM_PROJECTION_EFFICIENCY, abs=1e-12)
        normalized = vec / np.linalg.norm(vec)
        overlap = abs(np.vdot(basis.vectors[i], normalized))
        assert overlap == pytest.approx(1.0, abs=1e-12)


def test_attenuated_projection_efficiency_formula():
    for t in (0.1, 0.3, 0.5, 0.9):
        _, eff = attenuated_projection(2, t)
        assert eff == pytest.approx((1 + t) / 2.0, abs=1e-12)


def test_attenuated_projection_validation():
    with pytest.raises(ValidationError):
        attenuated_projection(0, 0.5)
    with pytest.raises(ValidationError):
        attenuated_projection(5, 0.5)
    with pytest.raises(ValidationError):
        attenuated_projection(1, 0.0)
    with pytest.raises(ValidationError):
        attenuated_projection(1, 1.5)


def test_transmittance_constants():
    assert EJM_TRANSMITTANCE == pytest.approx(7 - 4 * math.sqrt(3), abs=1e-15)
    assert EJM_PROJECTION_EFFICIENCY == pytest.approx(2 * (2 - math.sqrt(3)), abs=1e-15)
    # transmittance is the squared amplitude ratio of the two Schmidt branches
    assert (SCHMIDT_MINUS / SCHMIDT_PLUS) ** 2 == pytest.approx(EJM_TRANSMITTANCE, abs=1e-15)
    assert EJM_PROJECTION_EFFICIENCY == pytest.approx((1 + EJM_TRANSMITTANCE) / 2, abs=1e-15)


def test_state_validation():
    with pytest.raises(ValidationError):
        triangle_state(singlet() * 2.0, singlet(), singlet())
    asym = np.diag([0.7, 0.3, 0.0, 0.0]).astype(complex)
    asym[0, 1] = 0.5  # not Hermitian
    with pytest.raises(ValidationError):
        triangle_state(asym, singlet(), singlet())
    notpsd = np.diag([1.5, -0.5, 0.0, 0.0]).astype(complex)
    with pytest.raises(ValidationError):
        triangle_state(notpsd, singlet(), singlet())
    with pytest.raises(ValidationError):
        triangle_distribution(np.eye(8) / 8.0, *([identity_povm()] * 3))
    with pytest.raises(ValidationError):
        triangle_distribution_pure([maximally_mixed_pair()] * 3, [ejm_basis()] * 3)
    with pytest.raises(ValidationError):
        triangle_distribution_pure([singlet()] * 3, [identity_povm()] * 3)


def test_povm_json_round_trip(tmp_path):
    povm = povm_from_basis(ejm_basis())
    path = tmp_path / "povm.json"
    path.write_text(json.dumps(povm_to_json_dict(povm)))
    back = load_povm(path)
    for a, b in zip(back, povm):
        assert np.array_equal(a, b)


def test_povm_json_rejects_malformed(tmp_path):
    path = tmp_path / "povm.json"
    path.write_text("[1, 2]")
    with pytest.raises(ValidationError):
        load_povm(path)
    path.write_text("{broken")
    with pytest.raises(ValidationError):
        load_povm(path)
    with pytest.raises(ValidationError):
        povm_from_json_dict({"elements": [[0.0] * 32] * 3})
    with pytest.raises(ValidationError):
        povm_from_json_dict({"elements": [[0.0] * 30] * 4})


def test_pair_state_json_round_trip():
    pure = pair_state_from_json_dict(pair_state_to_json_dict(singlet()))
    assert np.array_equal(pure, singlet())
    mixed = pair_state_from_json_dict(pair_state_to_json_dict(maximally_mixed_pair()))
    assert np.array_equal(mixed, maximally_mixed_pair())
    with pytest.raises(ValidationError):
        pair_state_from_json_dict({"kind": "other"})
    with pytest.raises(ValidationError):
        pair_state_to_json_dict(np.zeros((2, 2)))
