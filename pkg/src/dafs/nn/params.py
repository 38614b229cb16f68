"""Flat parameter storage with parallel gradient and Adam-moment buffers."""

import json
import os

import numpy as np

SNAPSHOT_FORMAT_VERSION = 1


class ParamVector:
    """All parameters of one network in a single flat float64 buffer.

    Named blocks (layer matrices, bias vectors) are numpy views into the flat
    buffer, so per-layer reads/writes and whole-vector operations (Adam,
    gradient averaging, save/load) share the same memory.  The gradient buffer
    and the Adam moment buffers (m, v) run parallel to the data, and `step`
    counts applied optimizer updates.
    """

    def __init__(self, specs):
        self.specs = [(str(name), tuple(int(d) for d in shape)) for name, shape in specs]
        names = [n for n, _ in self.specs]
        if len(set(names)) != len(names):
            raise ValueError("duplicate block names in ParamVector specs")
        total = sum(int(np.prod(shape)) for _, shape in self.specs)
        self.data = np.zeros(total)
        self.grad = np.zeros(total)
        self.m = np.zeros(total)
        self.v = np.zeros(total)
        self.step = 0
        self._offsets = {}
        self._views = {}
        self._grad_views = {}
        ofs = 0
        for name, shape in self.specs:
            n = int(np.prod(shape))
            self._offsets[name] = ofs
            self._views[name] = self.data[ofs : ofs + n].reshape(shape)
            self._grad_views[name] = self.grad[ofs : ofs + n].reshape(shape)
            ofs += n

    @property
    def size(self):
        return self.data.size

    def view(self, name):
        """Writable array view of one named block."""
        return self._views[name]

    def grad_view(self, name):
        return self._grad_views[name]

    def zero_grad(self):
        self.grad[:] = 0.0

    def block_at(self, flat_index):
        """Name of the block containing a flat index, for diagnostics."""
        for name, shape in reversed(self.specs):
            ofs = self._offsets[name]
            if flat_index >= ofs:
                return name
        raise IndexError(flat_index)

    def copy_data_from(self, other):
        if other.size != self.size:
            raise ValueError(f"size mismatch: {other.size} != {self.size}")
        self.data[:] = other.data

    def clone(self, with_opt_state=False):
        """Independent copy of the parameters (gradients start at zero)."""
        pv = ParamVector(self.specs)
        pv.data[:] = self.data
        if with_opt_state:
            pv.m[:] = self.m
            pv.v[:] = self.v
            pv.step = self.step
        return pv

    def assert_finite(self, context=""):
        if not np.all(np.isfinite(self.data)):
            bad = int(np.flatnonzero(~np.isfinite(self.data))[0])
            raise FloatingPointError(
                f"non-finite parameter in block '{self.block_at(bad)}' {context}"
            )


def save_snapshot(directory, nets, extra=None, filename="params"):
    """Write named ParamVectors to <dir>/<filename>.json + .bin.

    The manifest records format version, per-net block layout, and Adam step
    counters; the .bin holds data, m, and v for every net back to back as
    little-endian float64, so a load restores optimizer state exactly.
    `nets` maps name -> (ParamVector, meta dict).
    """
    os.makedirs(directory, exist_ok=True)
    manifest = {
        "format_version": SNAPSHOT_FORMAT_VERSION,
        "dtype": "<f8",
        "nets": {},
        "extra": extra or {},
    }
    chunks = []
    ofs = 0
    for name, (pv, meta) in nets.items():
        manifest["nets"][name] = {
            "offset": ofs,
            "size": pv.size,
            "step": pv.step,
            "blocks": [{"name": n, "shape": list(s)} for n, s in pv.specs],
            "meta": meta,
        }
        for arr in (pv.data, pv.m, pv.v):
            chunks.append(np.asarray(arr, dtype="<f8"))
        ofs += 3 * pv.size
    with open(os.path.join(directory, filename + ".json"), "w") as fh:
        json.dump(manifest, fh, indent=2)
    with open(os.path.join(directory, filename + ".bin"), "wb") as fh:
        for chunk in chunks:
            fh.write(chunk.tobytes())


def load_snapshot(directory, filename="params"):
    """Read a snapshot back: returns (nets, extra) where nets maps
    name -> {"pv": ParamVector, "meta": dict}."""
    path = os.path.join(directory, filename + ".json")
    try:
        with open(path) as fh:
            manifest = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ValueError(f"corrupt or missing snapshot manifest: {path}: {exc}") from exc
    if manifest.get("format_version") != SNAPSHOT_FORMAT_VERSION:
        raise ValueError(f"unsupported snapshot format {manifest.get('format_version')}")
    raw = np.fromfile(os.path.join(directory, filename + ".bin"), dtype="<f8")
    nets = {}
    for name, rec in manifest["nets"].items():
        pv = ParamVector([(b["name"], b["shape"]) for b in rec["blocks"]])
        ofs, size = rec["offset"], rec["size"]
        if pv.size != size:
            raise ValueError(f"snapshot block layout inconsistent for net '{name}'")
        if ofs + 3 * size > raw.size:
            raise ValueError(f"snapshot binary truncated: {filename}.bin")
        pv.data[:] = raw[ofs : ofs + size]
        pv.m[:] = raw[ofs + size : ofs + 2 * size]
        pv.v[:] = raw[ofs + 2 * size : ofs + 3 * size]
        pv.step = rec["step"]
        nets[name] = {"pv": pv, "meta": rec.get("meta", {})}
    return nets, manifest.get("extra", {})
