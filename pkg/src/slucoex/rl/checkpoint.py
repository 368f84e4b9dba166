"""Binary checkpoints for trained Q-networks.

Layout, all little-endian:

    magic   8 bytes  b"SLUQNET\\0"
    version u32
    count   u32      number of networks
    per network:
        name    u16 length + utf-8 bytes
        dtype   u8   (4 = float32, 8 = float64)
        layers  u32  number of weight matrices
        sizes   u32 * (layers + 1)
        acts    u8 * layers    index into ACTIVATIONS
        step    u64  optimizer step counter
        W_k, b_k for each layer, raw arrays in C order

Arrays are written as raw bytes, so a load restores the parameters bit for bit.
"""

from __future__ import annotations

import io
import os
import struct
from typing import BinaryIO, Mapping

import numpy as np

from .network import ACTIVATIONS, QNetwork

MAGIC = b"SLUQNET\0"
VERSION = 1


class CheckpointError(ValueError):
    pass


def _dt(code: int) -> np.dtype:
    if code == 4:
        return np.dtype("<f4")
    if code == 8:
        return np.dtype("<f8")
    raise CheckpointError(f"unsupported dtype code {code}")


def write_networks(fh: BinaryIO, nets: Mapping[str, QNetwork]) -> None:
    fh.write(MAGIC)
    fh.write(struct.pack("<II", VERSION, len(nets)))
    for name, net in nets.items():
        raw = name.encode("utf-8")
        fh.write(struct.pack("<H", len(raw)))
        fh.write(raw)
        layers = len(net.W)
        fh.write(struct.pack("<BI", net.dtype.itemsize, layers))
        fh.write(struct.pack(f"<{layers + 1}I", *net.sizes))
        fh.write(struct.pack(f"<{layers}B", *(ACTIVATIONS.index(a) for a in net.acts)))
        fh.write(struct.pack("<Q", net.step))
        le = _dt(net.dtype.itemsize)
        for W, b in zip(net.W, net.b):
            fh.write(np.ascontiguousarray(W, dtype=le).tobytes())
            fh.write(np.ascontiguousarray(b, dtype=le).tobytes())


def _read(fh: BinaryIO, n: int) -> bytes:
    data = fh.read(n)
    if len(data) != n:
        raise CheckpointError("truncated checkpoint")
    return data


def read_networks(fh: BinaryIO) -> dict[str, QNetwork]:
    if _read(fh, len(MAGIC)) != MAGIC:
        raise CheckpointError("not a Q-network checkpoint")
    version, count = struct.unpack("<II", _read(fh, 8))
    if version != VERSION:
        raise CheckpointError(f"unsupported checkpoint version {version}")
    out = {}
    for _ in range(count):
        (nlen,) = struct.unpack("<H", _read(fh, 2))
        name = _read(fh, nlen).decode("utf-8")
        code, layers = struct.unpack("<BI", _read(fh, 5))
        dt = _dt(code)
        sizes = struct.unpack(f"<{layers + 1}I", _read(fh, 4 * (layers + 1)))
        act_idx = struct.unpack(f"<{layers}B", _read(fh, layers))
        if any(i >= len(ACTIVATIONS) for i in act_idx) or ACTIVATIONS[act_idx[-1]] != "linear":
            raise CheckpointError("bad activation table")
        (step,) = struct.unpack("<Q", _read(fh, 8))
        net = QNetwork(sizes[0], sizes[-1], sizes[1:-1], acts=[ACTIVATIONS[i] for i in act_idx[:-1]],
                       init=False, dtype=dt.newbyteorder("="))
        for k, (fi, fo) in enumerate(zip(sizes[:-1], sizes[1:])):
            net.W[k][...] = np.frombuffer(_read(fh, fi * fo * dt.itemsize), dtype=dt).reshape(fi, fo)
            net.b[k][...] = np.frombuffer(_read(fh, fo * dt.itemsize), dtype=dt)
        net.step = step
        out[name] = net
    return out


def save(path: str | os.PathLike, nets: Mapping[str, QNetwork]) -> None:
    buf = io.BytesIO()
    write_networks(buf, nets)
    with open(path, "wb") as fh:
        fh.write(buf.getvalue())


def load(path: str | os.PathLike) -> dict[str, QNetwork]:
    with open(path, "rb") as fh:
        return read_networks(fh)
