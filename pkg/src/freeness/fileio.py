"""
Text file formats.

Kernel / state file (JSON object)::

    {"format": "freeness-kernel", "dim": M, "statistics": "fermi" | "bose",
     "entries": [[re, im], ...],        # M*M pairs, row-major
     "label": "..."}                    # optional

Pure superposition file (JSON object)::

    {"format": "freeness-pure", "dim": M, "statistics": ...,
     "terms": [{"amplitude": [re, im], "occupation": [n_0, ..., n_{M-1}]}, ...],
     "rotation": [[re, im], ...],       # optional, M*M row-major
     "label": "..."}

Plain matrix file (Hamiltonians, unitaries, orbitals)::

    {"format": "freeness-matrix", "rows": r, "cols": c, "entries": [[re, im], ...]}

Sample log (JSON lines): a header record followed by one record per draw::

    {"record": "header", "format": "freeness-samples", "seed": s, "dim": M,
     "statistics": ..., "n": n, "source": {...}}
    {"draw": 0, "counts": [...]}
    ...

Floats are written with Python's shortest round-trip repr, which is lossless
(at most 17 significant digits).
"""

from __future__ import annotations

import json
from typing import Optional, Union

import numpy as np

from .fock_oracle import PureFockSuperposition
from .kernels import KernelMatrix, Statistics, validate_kernel
from .sampler import SampleBatch

KERNEL_FORMAT = "freeness-kernel"
PURE_FORMAT = "freeness-pure"
MATRIX_FORMAT = "freeness-matrix"
SAMPLES_FORMAT = "freeness-samples"


def _pairs(a: np.ndarray) -> list[list[float]]:
    flat = np.asarray(a, dtype=np.complex128).ravel()
    return [[float(z.real), float(z.imag)] for z in flat]


def _unpairs(pairs, shape) -> np.ndarray:
    arr = np.asarray(pairs, dtype=float).reshape(-1, 2)
    if arr.shape[0] != int(np.prod(shape)):
        raise ValueError(f"expected {int(np.prod(shape))} [re, im] pairs, got {arr.shape[0]}")
    return (arr[:, 0] + 1j * arr[:, 1]).reshape(shape)


def _dump(obj: dict, path) -> None:
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=1)
        fh.write("\n")


def kernel_to_dict(k: KernelMatrix) -> dict:
    d = {"format": KERNEL_FORMAT, "dim": k.dim, "statistics": k.statistics.value, "entries": _pairs(k.entries)}
    if k.label is not None:
        d["label"] = k.label
    return d


def kernel_from_dict(d: dict) -> KernelMatrix:
    m = int(d["dim"])
    entries = _unpairs(d["entries"], (m, m))
    return validate_kernel(entries, Statistics.parse(d["statistics"]), d.get("label"))


def write_kernel(path, k: KernelMatrix) -> None:
    _dump(kernel_to_dict(k), path)


def read_kernel(path) -> KernelMatrix:
    with open(path) as fh:
        return kernel_from_dict(json.load(fh))


def pure_to_dict(psi: PureFockSuperposition) -> dict:
    d = {
        "format": PURE_FORMAT,
        "dim": psi.dim,
        "statistics": psi.statistics.value,
        "terms": [{"amplitude": [c.real, c.imag], "occupation": list(occ)} for c, occ in psi.terms],
    }
    if psi.rotation is not None:
        d["rotation"] = _pairs(psi.rotation)
    if psi.label is not None:
        d["label"] = psi.label
    return d


def pure_from_dict(d: dict) -> PureFockSuperposition:
    m = int(d["dim"])
    terms = tuple((complex(*t["amplitude"]), tuple(t["occupation"])) for t in d["terms"])
    rot = _unpairs(d["rotation"], (m, m)) if d.get("rotation") is not None else None
    return PureFockSuperposition(Statistics.parse(d["statistics"]), m, terms, rot, d.get("label"))


def write_pure_state(path, psi: PureFockSuperposition) -> None:
    _dump(pure_to_dict(psi), path)


def read_state(path) -> Union[KernelMatrix, PureFockSuperposition]:
    """Read either a kernel file or a pure superposition file."""
    with open(path) as fh:
        d = json.load(fh)
    if d.get("format") == PURE_FORMAT or "terms" in d:
        return pure_from_dict(d)
    return kernel_from_dict(d)


def write_matrix(path, a) -> None:
    a = np.atleast_2d(np.asarray(a, dtype=np.complex128))
    _dump({"format": MATRIX_FORMAT, "rows": a.shape[0], "cols": a.shape[1], "entries": _pairs(a)}, path)


def read_matrix(path) -> np.ndarray:
    with open(path) as fh:
        d = json.load(fh)
    if "rows" in d:
        return _unpairs(d["entries"], (int(d["rows"]), int(d["cols"])))
    m = int(d["dim"])
    return _unpairs(d["entries"], (m, m))


# ---------------------------------------------------------------------
# Sample logs
# ---------------------------------------------------------------------


def format_sample_log(batch: SampleBatch) -> str:
    header = {
        "record": "header",
        "format": SAMPLES_FORMAT,
        "seed": batch.seed,
        "dim": batch.dim,
        "statistics": batch.statistics.value,
        "n": batch.n,
        "source": batch.source,
    }
    lines = [json.dumps(header, sort_keys=True, separators=(",", ":"))]
    for i, row in enumerate(batch.counts.tolist()):
        lines.append(f'{{"draw":{i},"counts":[{",".join(map(str, row))}]}}')
    return "\n".join(lines) + "\n"


def write_sample_log(path, batch: SampleBatch) -> None:
    with open(path, "w", newline="\n") as fh:
        fh.write(format_sample_log(batch))


def read_sample_log(path, statistics: Optional[str] = None) -> SampleBatch:
    """Parse a sample log.  Records are accepted in any draw order and put
    back in draw-index order; ingested logs may omit ``source`` and ``n``."""
    header = None
    draws: dict[int, list[int]] = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            rec = json.loads(line)
            if rec.get("record") == "header":
                header = rec
                continue
            i = int(rec["draw"])
            if i in draws:
                raise ValueError(f"line {lineno}: duplicate draw index {i}")
            draws[i] = rec["counts"]
    if header is None:
        raise ValueError(f"{path}: missing header record")
    m = int(header["dim"])
    n = len(draws)
    if sorted(draws) != list(range(n)):
        raise ValueError(f"{path}: draw indices are not 0..{n - 1}")
    if "n" in header and int(header["n"]) != n:
        raise ValueError(f"{path}: header announces {header['n']} draws, found {n}")
    counts = np.asarray([draws[i] for i in range(n)], dtype=np.int64).reshape(n, m)
    stats = Statistics.parse(statistics or header["statistics"])
    return SampleBatch(counts, int(header.get("seed", 0)), header.get("source", {}), stats)
