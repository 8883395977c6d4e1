"""Single-file binary checkpoints for one or more networks.

Layout:

    magic     8 bytes   b"NNETCKPT"
    version   4 bytes   little-endian uint32, currently 1
    hlen      8 bytes   little-endian uint64, byte length of the header
    header    hlen bytes of UTF-8 JSON (keys sorted)
    arrays    raw little-endian float32 data, concatenated in the order
              the header's per-network manifests list them
    crc       4 bytes   little-endian uint32, zlib.crc32 of all bytes
              before it

The header carries each network's structure (layer configs, trainable
flags, loss, seed, step counter) plus a manifest of every array with its
shape, so a load rebuilds the exact object graph and a save of the
loaded graph reproduces the file byte for byte.
"""

import json
import struct
import zlib

import numpy as np

from .errors import CheckpointError, ChecksumError, TruncatedFileError, VersionMismatchError
from .network import Network
from .ops import DTYPE

MAGIC = b"NNETCKPT"
VERSION = 1

_F4 = np.dtype("<f4")


def _manifest_and_blobs(net):
    manifest = []
    blobs = []
    for group, idx, name, slot, arr in net.named_arrays():
        if arr.dtype != DTYPE:
            raise CheckpointError(
                f"array {name!r} in network {net.name!r} has dtype {arr.dtype}, expected float32"
            )
        entry = {"group": group, "layer": idx, "name": name, "shape": list(arr.shape)}
        if slot is not None:
            entry["slot"] = slot
        manifest.append(entry)
        blobs.append(np.ascontiguousarray(arr, dtype=_F4).tobytes())
    return manifest, blobs


def serialize_networks(nets, meta=None) -> bytes:
    """Pack networks (a list, or a name->net dict) into checkpoint bytes."""
    if isinstance(nets, dict):
        nets = list(nets.values())
    header = {"meta": meta or {}, "networks": []}
    all_blobs = []
    for net in nets:
        cfg = net.get_config()
        cfg["arrays"], blobs = _manifest_and_blobs(net)
        header["networks"].append(cfg)
        all_blobs.extend(blobs)
    hbytes = json.dumps(header, sort_keys=True, separators=(",", ":")).encode("utf-8")
    body = MAGIC + struct.pack("<I", VERSION) + struct.pack("<Q", len(hbytes)) + hbytes + b"".join(all_blobs)
    return body + struct.pack("<I", zlib.crc32(body))


def deserialize_networks(blob: bytes):
    """Inverse of ``serialize_networks``; returns (name->net dict, meta)."""
    if len(blob) < len(MAGIC) + 4 + 8 + 4:
        raise TruncatedFileError(f"checkpoint is only {len(blob)} bytes")
    if blob[: len(MAGIC)] != MAGIC:
        raise CheckpointError("bad magic; not a checkpoint file")
    (version,) = struct.unpack_from("<I", blob, len(MAGIC))
    if version != VERSION:
        raise VersionMismatchError(f"checkpoint version {version}, this code reads {VERSION}")
    (hlen,) = struct.unpack_from("<Q", blob, len(MAGIC) + 4)
    off = len(MAGIC) + 4 + 8
    if len(blob) < off + hlen + 4:
        raise TruncatedFileError("checkpoint ends inside the header")
    (stored_crc,) = struct.unpack_from("<I", blob, len(blob) - 4)
    crc_ok = zlib.crc32(blob[:-4]) == stored_crc
    try:
        header = json.loads(blob[off : off + hlen].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        if not crc_ok:
            raise ChecksumError("checkpoint crc mismatch") from exc
        raise CheckpointError(f"unreadable checkpoint header: {exc}") from exc
    off += hlen
    # a short file is truncation, not corruption; the manifest tells the
    # expected length, so check that before blaming the crc
    data_bytes = sum(
        int(np.prod(tuple(entry["shape"]))) * 4
        for cfg in header["networks"]
        for entry in cfg["arrays"]
    )
    if len(blob) < off + data_bytes + 4:
        raise TruncatedFileError("checkpoint ends inside the array data")
    if not crc_ok:
        raise ChecksumError("checkpoint crc mismatch")
    nets = {}
    for cfg in header["networks"]:
        net = Network.from_config(cfg)
        for entry in cfg["arrays"]:
            shape = tuple(entry["shape"])
            # frombuffer views are read-only; copy so training can resume
            arr = np.frombuffer(blob, dtype=_F4, count=int(np.prod(shape)), offset=off)
            arr = arr.reshape(shape).astype(DTYPE, copy=True)
            off += int(np.prod(shape)) * 4
            layer = net.layers[entry["layer"]]
            if entry["group"] == "params":
                layer.params[entry["name"]] = arr
            elif entry["group"] == "state":
                layer.state[entry["name"]] = arr
            elif entry["group"] == "opt":
                layer.opt_state.setdefault(entry["name"], {})[entry["slot"]] = arr
            else:
                raise CheckpointError(f"unknown array group {entry['group']!r}")
        nets[net.name] = net
    if len(blob) - 4 != off:
        raise CheckpointError("trailing bytes after the last array")
    return nets, header["meta"]


def save_networks(nets, path, meta=None):
    blob = serialize_networks(nets, meta)
    with open(path, "wb") as fh:
        fh.write(blob)


def load_networks(path):
    with open(path, "rb") as fh:
        blob = fh.read()
    return deserialize_networks(blob)


def save_network(net: Network, path, meta=None):
    save_networks([net], path, meta)


def load_network(path) -> Network:
    nets, _ = load_networks(path)
    if len(nets) != 1:
        raise CheckpointError(f"expected a single network, file holds {len(nets)}")
    return next(iter(nets.values()))
