import numpy as np
import pytest

from dhmpot.clifford_lattice import LatticeDomain, SpinStructure
from dhmpot.errors import ConfigurationError
from dhmpot.fields import identity_map, random_sphere_map, random_tangent_spinor
from dhmpot.io import (FIELD_MAGIC, canonical_json, config_hash, load_field, read_container,
                       save_field, write_container)
from dhmpot.potentials import PotentialSpec
from dhmpot.records import build_record, load_record, save_record


def test_field_roundtrip_is_exact(tmp_path):
    dom = LatticeDomain(2, 8, 1.5)
    rng = np.random.default_rng(1)
    phi = random_sphere_map(dom, 3, rng)
    psi = random_tangent_spinor(phi, SpinStructure((0.5, 0.0)), rng)
    save_field(tmp_path / "phi.dhm", phi)
    save_field(tmp_path / "psi.dhm", psi, phi.target)
    phi2 = load_field(tmp_path / "phi.dhm")
    psi2 = load_field(tmp_path / "psi.dhm")
    assert np.array_equal(phi.values, phi2.values)
    assert np.array_equal(psi.values, psi2.values)
    assert psi2.spin == psi.spin and phi2.domain == dom


def test_torus_winding_roundtrip(tmp_path):
    phi = identity_map(LatticeDomain(2, 4))
    save_field(tmp_path / "t.dhm", phi)
    back = load_field(tmp_path / "t.dhm")
    assert np.array_equal(back.winding, phi.winding)


def test_container_rejects_bad_magic_and_truncation(tmp_path):
    path = tmp_path / "x.dhm"
    write_container(path, FIELD_MAGIC, {"k": 1}, [("a", np.arange(4.0))])
    with pytest.raises(ConfigurationError):
        read_container(path, b"WRONGMG\n")
    data = path.read_bytes()
    path.write_bytes(data[:-8])
    with pytest.raises(ConfigurationError):
        read_container(path, FIELD_MAGIC)


def test_canonical_json_and_hash():
    a = {"b": 1, "a": [1.0, 2]}
    b = {"a": [1.0, 2], "b": 1}
    assert canonical_json(a) == canonical_json(b)
    assert config_hash(a) == config_hash(b) != config_hash({"a": 1})


def test_record_roundtrip(tmp_path):
    dom = LatticeDomain(2, 4)
    phi = random_sphere_map(dom, 3, np.random.default_rng(2))
    psi = random_tangent_spinor(phi, SpinStructure((0, 0)), np.random.default_rng(3))
    rec = build_record(phi, psi, PotentialSpec.mass_v3(0.5), seed=4, config_hash="abc")
    save_record(tmp_path / "r.dhm", rec)
    back = load_record(tmp_path / "r.dhm")
    assert back.summary() == rec.summary()
    assert np.array_equal(back.psi.values, psi.values)
    assert back.jacobi_lowest is None  # not a critical point
