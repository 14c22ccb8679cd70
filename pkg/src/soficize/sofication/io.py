"""Reading and writing approximations, outputs and reports."""
from __future__ import annotations

import csv
import json
import math
import os

import numpy as np

from ..errors import ConfigError, StructuralError
from ..group import as_element
from ..linalg import load_matrix, save_matrix
from .approx import HyperlinearApprox, SoficApprox, SoficInducedApprox

STEP_COLUMNS = ("step", "tr_p", "nu_achieved", "kappa_achieved", "ds_bound", "search_draws")


def jsonable(obj):
    """Convert numpy scalars, arrays and tuple keys to plain JSON values."""
    if isinstance(obj, dict):
        return {(k if isinstance(k, str) else str(list(k) if isinstance(k, tuple) else k)): jsonable(v)
                for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return jsonable(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else repr(v)
    return obj


def dump_json(path: str, obj) -> None:
    with open(path, "w") as fh:
        json.dump(jsonable(obj), fh, indent=1, sort_keys=True)
        fh.write("\n")


def load_manifest(path: str, check: bool = True) -> HyperlinearApprox:
    """Approximation from a manifest {rank, support_elements, matrix_files}."""
    base = os.path.dirname(os.path.abspath(path))
    with open(path) as fh:
        man = json.load(fh)
    missing = {"rank", "support_elements", "matrix_files"} - set(man)
    if missing:
        raise ConfigError(f"manifest lacks {sorted(missing)}")
    rank = int(man["rank"])
    elems = [as_element(g, rank) for g in man["support_elements"]]
    files = man["matrix_files"]
    if len(files) != len(elems):
        raise StructuralError("manifest lists different numbers of elements and matrix files")
    units = {g: load_matrix(os.path.join(base, f)) for g, f in zip(elems, files)}
    dims = {m.shape[0] for m in units.values()}
    if len(dims) != 1:
        raise StructuralError("matrices in manifest have different sizes")
    return HyperlinearApprox(rank, dims.pop(), units, check=check)


def save_manifest(out_dir: str, alpha, elements, binary: bool = True, prefix: str = "alpha") -> str:
    os.makedirs(out_dir, exist_ok=True)
    elements = [as_element(g, alpha.rank) for g in elements]
    files = []
    for g in elements:
        name = f"{prefix}_{'_'.join(str(c) for c in g)}.json"
        save_matrix(os.path.join(out_dir, name), alpha(g), binary=binary)
        files.append(name)
    path = os.path.join(out_dir, f"{prefix}_manifest.json")
    dump_json(path, {"rank": alpha.rank, "support_elements": [list(g) for g in elements], "matrix_files": files})
    return path


def save_beta(out_dir: str, beta: SoficInducedApprox, binary: bool = True) -> str:
    """Write the basis matrix and the permutations; returns the path of the index file."""
    os.makedirs(out_dir, exist_ok=True)
    save_matrix(os.path.join(out_dir, "beta_basis.json"), beta.basis, binary=binary)
    sof = beta.sofic
    path = os.path.join(out_dir, "beta.json")
    dump_json(path, {
        "basis_file": "beta_basis.json",
        "rank": beta.rank,
        "point_count": sof.point_count,
        "identity_block_rank": beta.identity_block_rank,
        "permutations": [{"element": list(g), "image": sof(g)} for g in sof.support],
    })
    return path


def load_beta(path: str) -> SoficInducedApprox:
    base = os.path.dirname(os.path.abspath(path))
    with open(path) as fh:
        obj = json.load(fh)
    basis = load_matrix(os.path.join(base, obj["basis_file"]))
    perms = {tuple(p["element"]): np.asarray(p["image"], dtype=np.int64) for p in obj["permutations"]}
    sof = SoficApprox(int(obj["point_count"]), perms, rank=int(obj["rank"]))
    return SoficInducedApprox(basis, sof, int(obj["identity_block_rank"]))


def write_steps_csv(path: str, per_step) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(STEP_COLUMNS)
        for row in per_step:
            w.writerow([jsonable(row[c]) for c in STEP_COLUMNS])
