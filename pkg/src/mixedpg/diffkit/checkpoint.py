"""Parameter checkpoints.

File layout::

    b"MPGCKPT1"                 8-byte magic
    uint64 little-endian        length L of the header
    L bytes UTF-8 JSON          {"iteration", "networks": [...], "extra"}
    float64 little-endian ...   all parameters, network by network, layer by layer

Each network entry lists its layer shapes (weight, bias, weight, bias, ...),
output activation, optional input/output scales, and its offset/count into
the flat data block.
"""
from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from .mlp import MlpParams

MAGIC = b"MPGCKPT1"


def save_checkpoint(path, networks: dict[str, MlpParams], iteration: int, extra: dict | None = None) -> None:
    entries = []
    blocks = []
    offset = 0
    for name, net in networks.items():
        flat = net.to_flat()
        entries.append(
            {
                "name": name,
                "output": net.output,
                "shapes": [list(s) for s in net.shapes()],
                "in_scale": None if net.in_scale is None else net.in_scale.tolist(),
                "out_scale": None if net.out_scale is None else net.out_scale.tolist(),
                "offset": offset,
                "count": int(flat.size),
            }
        )
        blocks.append(flat)
        offset += flat.size
    header = json.dumps({"iteration": int(iteration), "networks": entries, "extra": extra or {}}).encode()
    data = np.concatenate(blocks) if blocks else np.zeros(0)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<Q", len(header)))
        fh.write(header)
        fh.write(data.astype("<f8").tobytes())


def load_checkpoint(path) -> tuple[dict[str, MlpParams], int, dict]:
    raw = Path(path).read_bytes()
    if raw[:8] != MAGIC:
        raise ValueError(f"{path}: not a checkpoint (bad magic)")
    (hlen,) = struct.unpack("<Q", raw[8:16])
    header = json.loads(raw[16:16 + hlen].decode())
    data = np.frombuffer(raw[16 + hlen:], dtype="<f8").astype(np.float64)
    nets = {}
    for e in header["networks"]:
        flat = data[e["offset"]:e["offset"] + e["count"]]
        shapes = [tuple(s) for s in e["shapes"]]
        arrays, pos = [], 0
        for s in shapes:
            n = int(np.prod(s))
            arrays.append(flat[pos:pos + n].reshape(s).copy())
            pos += n
        nets[e["name"]] = MlpParams(
            arrays[0::2],
            arrays[1::2],
            output=e["output"],
            in_scale=None if e["in_scale"] is None else np.asarray(e["in_scale"]),
            out_scale=None if e["out_scale"] is None else np.asarray(e["out_scale"]),
        )
    return nets, int(header["iteration"]), header.get("extra", {})
