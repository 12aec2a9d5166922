"""Binary container for datasets and the secret-direction sidecar.

Layout (all integers little-endian)::

    b"CLWF" | u16 version | u32 header length | header JSON (UTF-8)
    | payload | u32 CRC-32

The CRC covers every byte between the magic and the CRC itself.  A dataset
payload is ``m`` packed records of ``n`` float64 values followed by one
signed byte label; a sidecar payload is the ``n`` float64 entries of ``w``.
"""

import json
import os
import struct
import zlib
from pathlib import Path

import numpy as np

from .instance import FORMAT_VERSION, Dataset, DatasetManifest, secret_digest

MAGIC = b"CLWF"
_PREFIX = struct.Struct("<4sHI")


class DatasetFormatError(Exception):
    code = "format"


class BadMagicError(DatasetFormatError):
    code = "bad_magic"


class VersionMismatchError(DatasetFormatError):
    code = "version_mismatch"


class TruncatedFileError(DatasetFormatError):
    code = "truncated"


class ChecksumError(DatasetFormatError):
    code = "checksum"


class MissingSecretError(FileNotFoundError):
    code = "missing_secret"


def record_dtype(n):
    return np.dtype([("x", "<f8", (n,)), ("y", "i1")])


def secret_path_for(path):
    return Path(str(path) + ".secret")


def _write_container(path, header, payload):
    head = json.dumps(header, sort_keys=True, separators=(",", ":")).encode("utf-8")
    body = struct.pack("<HI", FORMAT_VERSION, len(head)) + head + payload
    blob = MAGIC + body + struct.pack("<I", zlib.crc32(body) & 0xFFFFFFFF)
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "wb") as fh:
        fh.write(blob)
    os.replace(tmp, path)


def _parse_prefix(buf, path):
    if len(buf) < _PREFIX.size:
        raise TruncatedFileError(f"{path}: file shorter than the fixed header")
    magic, version, hlen = _PREFIX.unpack_from(buf)
    if magic != MAGIC:
        raise BadMagicError(f"{path}: not a CLWF container")
    if version != FORMAT_VERSION:
        raise VersionMismatchError(f"{path}: format version {version}, this reader handles {FORMAT_VERSION}")
    end = _PREFIX.size + hlen
    if len(buf) < end:
        raise TruncatedFileError(f"{path}: header cut short")
    try:
        header = json.loads(buf[_PREFIX.size:end].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ChecksumError(f"{path}: header is not valid JSON ({exc})") from exc
    return header, end


def _read_container(path, expected_kind, payload_size):
    buf = Path(path).read_bytes()
    header, start = _parse_prefix(buf, path)
    if header.get("kind") != expected_kind:
        raise DatasetFormatError(f"{path}: expected a {expected_kind} container, found {header.get('kind')!r}")
    size = payload_size(header)
    stop = start + size
    if len(buf) < stop + 4:
        raise TruncatedFileError(f"{path}: payload has {len(buf) - start - 4} bytes, expected {size}")
    if len(buf) > stop + 4:
        raise ChecksumError(f"{path}: {len(buf) - stop - 4} trailing bytes after the checksum")
    (crc,) = struct.unpack_from("<I", buf, stop)
    if zlib.crc32(buf[4:stop]) & 0xFFFFFFFF != crc:
        raise ChecksumError(f"{path}: CRC mismatch")
    return header, buf[start:stop]


def write_dataset(ds, path, secret=True):
    """Write ``ds``; with ``secret=True`` and a known ``w`` also write the sidecar."""
    man = ds.manifest
    rec = np.empty(len(ds), dtype=record_dtype(man.n))
    rec["x"] = ds.x
    rec["y"] = ds.y
    _write_container(path, {"kind": "dataset", "manifest": man.to_dict()}, rec.tobytes())
    if secret and ds.secret is not None:
        write_secret(ds.secret, secret_path_for(path))


def read_manifest(path):
    """Parse only the header; the payload is not read or checked."""
    with open(path, "rb") as fh:
        head = fh.read(_PREFIX.size)
        buf = head
        if len(head) == _PREFIX.size:
            buf += fh.read(_PREFIX.unpack(head)[2])
    header, _ = _parse_prefix(buf, path)
    if header.get("kind") != "dataset":
        raise DatasetFormatError(f"{path}: not a dataset container")
    return DatasetManifest.from_dict(header["manifest"])


def read_dataset(path, with_secret=False):
    """Load a dataset; ``with_secret=True`` also requires and checks the sidecar."""

    def size(header):
        man = header["manifest"]
        return man["m"] * record_dtype(man["n"]).itemsize

    header, payload = _read_container(path, "dataset", size)
    man = DatasetManifest.from_dict(header["manifest"])
    rec = np.frombuffer(payload, dtype=record_dtype(man.n), count=man.m)
    x = np.array(rec["x"]).reshape(man.m, man.n)
    secret = read_secret(secret_path_for(path), man) if with_secret else None
    return Dataset(x, np.array(rec["y"]), man, secret)


def write_secret(w, path):
    w = np.asarray(w, dtype="<f8")
    header = {"kind": "secret", "n": int(w.size), "digest": secret_digest(w)}
    _write_container(path, header, w.tobytes())


def read_secret(path, manifest=None):
    path = Path(path)
    if not path.exists():
        raise MissingSecretError(f"secret sidecar {path} not found")
    header, payload = _read_container(path, "secret", lambda h: 8 * h["n"])
    w = np.frombuffer(payload, dtype="<f8").astype(np.float64)
    if secret_digest(w) != header["digest"]:
        raise ChecksumError(f"{path}: secret digest mismatch")
    if manifest is not None and manifest.secret_digest not in (None, header["digest"]):
        raise ChecksumError(f"{path}: sidecar belongs to a different dataset")
    return w
