import struct

import numpy as np
import pytest

from clwe_hardness.dataset_io import (
    BadMagicError,
    ChecksumError,
    MissingSecretError,
    TruncatedFileError,
    VersionMismatchError,
    read_dataset,
    read_manifest,
    read_secret,
    secret_path_for,
    write_dataset,
)
from clwe_hardness.instance import desk_params, generate_mixture, generate_null, secret_digest


@pytest.fixture
def planted(tmp_path):
    ds = generate_mixture(desk_params(), 10_000, 1)
    path = tmp_path / "p.clwf"
    write_dataset(ds, path)
    return ds, path


def test_round_trip_bitwise(planted):
    ds, path = planted
    back = read_dataset(path, with_secret=True)
    assert back.x.tobytes() == ds.x.tobytes()
    assert np.array_equal(back.y, ds.y)
    assert back.manifest == ds.manifest
    assert np.array_equal(back.secret, ds.secret)
    assert back.manifest.secret_digest == secret_digest(ds.secret)


def test_record_layout(planted):
    ds, path = planted
    raw = path.read_bytes()
    assert raw[:4] == b"CLWF"
    version, hlen = struct.unpack_from("<HI", raw, 4)
    assert version == 1
    start = 10 + hlen
    n = ds.manifest.n
    first = raw[start:start + 8 * n + 1]
    assert np.frombuffer(first[:8 * n], "<f8").tolist() == ds.x[0].tolist()
    assert struct.unpack("b", first[-1:])[0] == ds.y[0]
    assert len(raw) == start + len(ds) * (8 * n + 1) + 4


def test_manifest_only(planted):
    ds, path = planted
    assert read_manifest(path) == ds.manifest


def test_corruption_detected(planted, tmp_path):
    _, path = planted
    raw = bytearray(path.read_bytes())
    raw[len(raw) // 2] ^= 0x01
    bad = tmp_path / "bad.clwf"
    bad.write_bytes(bytes(raw))
    with pytest.raises(ChecksumError) as exc:
        read_dataset(bad)
    assert exc.value.code == "checksum"


def test_truncation_and_version(planted, tmp_path):
    _, path = planted
    raw = path.read_bytes()
    cut = tmp_path / "cut.clwf"
    cut.write_bytes(raw[:-100])
    with pytest.raises(TruncatedFileError) as exc:
        read_dataset(cut)
    assert exc.value.code == "truncated"
    cut.write_bytes(raw[:6])
    with pytest.raises(TruncatedFileError):
        read_manifest(cut)
    other = tmp_path / "v2.clwf"
    other.write_bytes(raw[:4] + struct.pack("<H", 2) + raw[6:])
    with pytest.raises(VersionMismatchError) as exc:
        read_dataset(other)
    assert exc.value.code == "version_mismatch"
    other.write_bytes(b"XXXX" + raw[4:])
    with pytest.raises(BadMagicError):
        read_dataset(other)


def test_codes_are_distinct():
    codes = {c.code for c in (ChecksumError, TruncatedFileError, VersionMismatchError, BadMagicError)}
    assert len(codes) == 4


def test_blind_dataset(tmp_path):
    ds = generate_mixture(desk_params(), 500, 2)
    path = tmp_path / "blind.clwf"
    write_dataset(ds, path, secret=False)
    assert not secret_path_for(path).exists()
    assert read_dataset(path).secret is None
    with pytest.raises(MissingSecretError):
        read_dataset(path, with_secret=True)


def test_secret_mismatch(tmp_path):
    a = generate_mixture(desk_params(seed=0), 100, 0)
    b = generate_mixture(desk_params(seed=1), 100, 0)
    pa, pb = tmp_path / "a.clwf", tmp_path / "b.clwf"
    write_dataset(a, pa)
    write_dataset(b, pb)
    with pytest.raises(ChecksumError):
        read_secret(secret_path_for(pb), a.manifest)


def test_null_round_trip(tmp_path):
    ds = generate_null(3, 1000, 5)
    path = tmp_path / "n.clwf"
    write_dataset(ds, path)
    back = read_dataset(path)
    assert back.x.tobytes() == ds.x.tobytes()
    assert not secret_path_for(path).exists()
