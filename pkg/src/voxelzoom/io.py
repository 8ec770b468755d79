"""Volume file I/O: the rvol interchange format and a minimal NIfTI-1 reader.

Dispatch is by content, not extension: gzip streams are decompressed first,
then the magic bytes decide the decoder.
"""

from __future__ import annotations

import gzip
import json
import struct

import numpy as np

from .errors import CorruptHeader, NonFiniteData, UnsupportedFormat
from .volume import Volume

RVOL_MAGIC = b"RVOL0001"

# NIfTI-1 datatype codes we accept, mapped to little-endian numpy dtypes.
_NIFTI_DTYPES = {4: "<i2", 512: "<u2", 16: "<f4"}


def write_rvol(volume: Volume, path) -> None:
    """Serialize a volume to the rvol format (bit-exact round trip)."""
    with open(path, "wb") as fh:
        fh.write(encode_rvol(volume))


def encode_rvol(volume: Volume) -> bytes:
    header = json.dumps(
        {
            "dims": list(volume.dims),
            "spacing": list(volume.spacing),
            "dtype": "f32",
        }
    ).encode("utf-8")
    body = np.ascontiguousarray(volume.voxels, dtype="<f4").tobytes()
    return RVOL_MAGIC + struct.pack("<I", len(header)) + header + body


def read_rvol(path) -> Volume:
    with open(path, "rb") as fh:
        return decode_rvol(fh.read())


def decode_rvol(blob: bytes) -> Volume:
    if blob[:8] != RVOL_MAGIC:
        raise UnsupportedFormat("missing rvol magic")
    if len(blob) < 12:
        raise CorruptHeader("rvol truncated before header length")
    (hlen,) = struct.unpack_from("<I", blob, 8)
    if len(blob) < 12 + hlen:
        raise CorruptHeader("rvol truncated inside header")
    try:
        header = json.loads(blob[12 : 12 + hlen].decode("utf-8"))
        dims = tuple(int(d) for d in header["dims"])
        spacing = tuple(float(s) for s in header["spacing"])
        dtype = header["dtype"]
    except (ValueError, KeyError, TypeError) as exc:
        raise CorruptHeader(f"bad rvol header: {exc}") from exc
    if dtype != "f32":
        raise UnsupportedFormat(f"rvol dtype {dtype!r} not supported")
    if len(dims) != 3 or any(d <= 0 for d in dims):
        raise CorruptHeader(f"bad rvol dims {dims}")
    n = dims[0] * dims[1] * dims[2]
    body = blob[12 + hlen :]
    if len(body) < 4 * n:
        raise CorruptHeader(f"rvol body holds {len(body)} bytes, expected {4 * n}")
    voxels = np.frombuffer(body[: 4 * n], dtype="<f4").reshape(dims)
    return Volume(voxels.astype(np.float32), spacing)


def _read_nifti(blob: bytes) -> Volume:
    if len(blob) < 352:
        raise CorruptHeader("NIfTI header truncated")
    (sizeof_hdr,) = struct.unpack_from("<i", blob, 0)
    if sizeof_hdr != 348:
        if struct.unpack_from(">i", blob, 0)[0] == 348:
            raise UnsupportedFormat("big-endian NIfTI not supported")
        raise CorruptHeader(f"sizeof_hdr is {sizeof_hdr}, expected 348")
    magic = blob[344:348]
    if magic not in (b"n+1\x00", b"ni1\x00"):
        raise CorruptHeader(f"bad NIfTI magic {magic!r}")
    if magic == b"ni1\x00":
        raise UnsupportedFormat("two-file NIfTI (.hdr/.img) not supported")
    dim = struct.unpack_from("<8h", blob, 40)
    ndim = dim[0]
    if not 1 <= ndim <= 7:
        raise CorruptHeader(f"bad ndim {ndim}")
    if ndim > 3 and any(d > 1 for d in dim[4 : ndim + 1]):
        raise UnsupportedFormat("only 3D single-frame NIfTI supported")
    nx, ny, nz = (max(1, dim[i]) for i in (1, 2, 3))
    (datatype,) = struct.unpack_from("<h", blob, 70)
    if datatype not in _NIFTI_DTYPES:
        raise UnsupportedFormat(f"NIfTI datatype {datatype} not supported")
    pixdim = struct.unpack_from("<8f", blob, 76)
    (vox_offset,) = struct.unpack_from("<f", blob, 108)
    slope, inter = struct.unpack_from("<2f", blob, 112)
    offset = int(vox_offset)
    if offset < 348:
        raise CorruptHeader(f"vox_offset {offset} inside header")
    dt = np.dtype(_NIFTI_DTYPES[datatype])
    n = nx * ny * nz
    data = blob[offset : offset + n * dt.itemsize]
    if len(data) < n * dt.itemsize:
        raise CorruptHeader("NIfTI voxel data truncated")
    raw = np.frombuffer(data, dtype=dt)
    # file order is x fastest, so a C reshape to (z, y, x) is direct
    voxels = raw.reshape(nz, ny, nx).astype(np.float32)
    if slope != 0.0 and not (slope == 1.0 and inter == 0.0):
        voxels = voxels * np.float32(slope) + np.float32(inter)
    if not np.isfinite(voxels).all():
        raise NonFiniteData("NIfTI volume contains non-finite values")
    spacing = tuple(float(abs(p)) if p != 0 else 1.0 for p in (pixdim[3], pixdim[2], pixdim[1]))
    return Volume(voxels, spacing)


def decode_volume(blob: bytes) -> Volume:
    """Decode a volume from raw bytes, sniffing gzip / rvol / NIfTI-1."""
    if blob[:2] == b"\x1f\x8b":
        try:
            blob = gzip.decompress(blob)
        except (OSError, EOFError) as exc:
            raise CorruptHeader(f"bad gzip stream: {exc}") from exc
    if blob[:8] == RVOL_MAGIC:
        return decode_rvol(blob)
    if len(blob) >= 4 and struct.unpack_from("<i", blob, 0)[0] == 348:
        return _read_nifti(blob)
    if len(blob) >= 4 and struct.unpack_from(">i", blob, 0)[0] == 348:
        raise UnsupportedFormat("big-endian NIfTI not supported")
    if len(blob) < 352:
        raise CorruptHeader("file too short for any supported format")
    raise UnsupportedFormat("not an rvol or NIfTI-1 file")


def load_volume(path) -> Volume:
    """Load a volume from disk; format detected from content."""
    with open(path, "rb") as fh:
        return decode_volume(fh.read())
