"""
Binary array export with a JSON sidecar.

``save_array("out/psi", a, d=2)`` writes ``out/psi.npy`` and ``out/psi.json``;
the sidecar records shape, dtype and any extra metadata.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .lattice import Lattice
from .spin_compression import CompressionUnitary, PureState

__all__ = ["save_array", "load_array", "export_state", "load_state", "export_unitary"]


def _paths(path) -> tuple[Path, Path]:
    p = Path(path)
    if p.suffix in (".npy", ".json"):
        p = p.with_suffix("")
    # append rather than replace: stems such as "psi_eps0.5" contain dots
    return p.with_name(p.name + ".npy"), p.with_name(p.name + ".json")


def _jsonable(v):
    if isinstance(v, np.ndarray):
        return v.tolist()
    if isinstance(v, np.generic):
        return v.item()
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    return v


def save_array(path, array: np.ndarray, **meta) -> tuple[Path, Path]:
    npy, side = _paths(path)
    npy.parent.mkdir(parents=True, exist_ok=True)
    array = np.asarray(array)
    np.save(npy, array, allow_pickle=False)
    info = {"shape": list(array.shape), "dtype": str(array.dtype), **_jsonable(meta)}
    side.write_text(json.dumps(info, indent=2, sort_keys=True))
    return npy, side


def load_array(path) -> tuple[np.ndarray, dict]:
    npy, side = _paths(path)
    array = np.load(npy, allow_pickle=False)
    meta = json.loads(side.read_text())
    if list(array.shape) != meta["shape"]:
        raise ValueError(f"sidecar shape {meta['shape']} does not match array shape {list(array.shape)}")
    return array, meta


def export_state(path, state: PureState, **meta):
    """Amplitudes in row-major site order (site 0 is the slowest index)."""
    lat = state.lattice
    return save_array(path, state.amplitudes, kind="pure_state", d=state.d,
                      site_order=list(range(lat.n_sites)), dimensions=list(lat.dimensions),
                      boundary=lat.boundary, **meta)


def load_state(path) -> PureState:
    amps, meta = load_array(path)
    if meta.get("kind") != "pure_state":
        raise ValueError("file does not hold a pure state")
    lat = Lattice(tuple(meta["dimensions"]), meta["boundary"])
    return PureState(amps, lat, int(meta["d"]))


def export_unitary(path, U: CompressionUnitary, **meta):
    plan = U.plan
    return save_array(path, U.matrix, kind="compression_unitary", d=plan.d,
                      region=plan.region.sites, boundary=plan.boundary.sites, bulk=plan.bulk.sites,
                      M=plan.M, l=plan.l, epsilon=plan.epsilon, **meta)
