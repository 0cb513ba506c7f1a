"""Self-describing CSV/JSON artifacts with bit-faithful numbers.

Every file starts with a comment block carrying the scenario hash, code
version, and convention flags, so any two overlaid series can be checked
for provenance.  Floats are written with repr (shortest round-trip), which
reproduces the binary value exactly on read-back; reruns of identical
scenario bytes produce byte-identical files (no timestamps).
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

CONVENTIONS = "fourier=exp(-2pi i k.x); faraday=dB/dt=2pi i kxE; weights=l1"


def metadata_block(scenario_hash: str, name: str, extra: dict | None = None) -> dict:
    from cyclodamp import __version__

    meta = {
        "cyclodamp-version": __version__,
        "scenario-hash": scenario_hash,
        "scenario-name": name,
        "conventions": CONVENTIONS,
    }
    if extra:
        meta.update(extra)
    return meta


def _fmt(x) -> str:
    if isinstance(x, (complex, np.complexfloating)):
        return f"{_fmt(float(x.real))}{'+' if x.imag >= 0 else '-'}{_fmt(abs(float(x.imag)))}j"
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def write_csv(path, columns: dict, meta: dict) -> Path:
    """Columns is an ordered name -> 1-d array mapping (equal lengths)."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    names = list(columns)
    arrays = [np.asarray(columns[n]) for n in names]
    n_rows = len(arrays[0])
    if any(len(a) != n_rows for a in arrays):
        raise ValueError("CSV columns must share a length")
    lines = [f"# {k}: {v}" for k, v in meta.items()]
    lines.append(",".join(names))
    for i in range(n_rows):
        lines.append(",".join(_fmt(a[i]) for a in arrays))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def read_csv(path) -> tuple[dict, dict]:
    """Returns (metadata, columns); numbers parse back bit-identically."""
    meta, names, rows = {}, None, []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if line.startswith("#"):
            key, _, val = line[1:].partition(":")
            meta[key.strip()] = val.strip()
        elif names is None:
            names = line.split(",")
        elif line:
            rows.append(line.split(","))
    if names is None:
        raise ValueError(f"{path}: no header row")
    cols = {}
    for j, name in enumerate(names):
        vals = [r[j] for r in rows]
        try:
            cols[name] = np.array([complex(v) if "j" in v else float(v) for v in vals])
        except ValueError:
            cols[name] = np.array(vals)
    return meta, cols


def write_json(path, payload: dict, meta: dict) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    doc = {"meta": meta, **payload}
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path
