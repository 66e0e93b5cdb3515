"""Readers and writers for scan CSV files and density-matrix JSON.

Floats are written with ``repr`` so every file reloads bit-for-bit.
"""
from __future__ import annotations

import csv
import io
import json

import numpy as np

from .qstate import basis_labels, n_qubits_of

SCAN_HEADER = ("theta_deg", "phi_deg", "stage", "spin", "re_signal", "im_signal")
SCAN_COMMENT = ("# grid order: theta-major (theta 0..180 deg outer loop, phi 0..360 deg inner loop); "
                "each grid point has rows for stage in (input, output) x spin in (1, 2, 3)")


def _num(x: float) -> str:
    x = float(x)
    return "0.0" if x == 0 else repr(x)   # fold -0.0


def scan_csv_text(rows) -> str:
    buf = io.StringIO()
    buf.write(SCAN_COMMENT + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SCAN_HEADER)
    for th, ph, stage, spin, sig in rows:
        w.writerow([_num(th), _num(ph), stage, spin, _num(sig.real), _num(sig.imag)])
    return buf.getvalue()


def write_scan_csv(path, rows) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(scan_csv_text(rows))


def read_scan_csv(path) -> list[tuple]:
    """Rows as (theta_deg, phi_deg, stage, spin, complex signal)."""
    with open(path, encoding="utf-8", newline="") as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    reader = csv.reader(lines)
    header = tuple(next(reader))
    if header != SCAN_HEADER:
        raise ValueError(f"unexpected header {header}")
    return [(float(t), float(p), stage, int(spin), complex(float(re), float(im)))
            for t, p, stage, spin, re, im in reader]


def matrix_to_json(m, qubits=None) -> dict:
    m = np.asarray(m, dtype=complex)
    n = n_qubits_of(m.shape[0])
    return {
        "qubits": list(qubits) if qubits is not None else list(range(1, n + 1)),
        "basis_order": basis_labels(n),
        "data": [[[float(z.real), float(z.imag)] for z in row] for row in m],
    }


def matrix_from_json(obj: dict) -> np.ndarray:
    data = np.asarray(obj["data"], dtype=float)
    m = data[..., 0] + 1j * data[..., 1]
    if len(obj.get("basis_order", [])) != m.shape[0]:
        raise ValueError("basis_order does not match matrix size")
    return m


def dumps(obj) -> str:
    return json.dumps(obj, indent=2) + "\n"


def write_json(path, obj) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(dumps(obj))


def read_json(path) -> dict:
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def load_tomo_json(path) -> dict:
    """Read a tomography report, converting matrix entries back to arrays."""
    obj = read_json(path)
    for key in ("rho", "marginal_12", "marginal_3", "expected"):
        if key in obj:
            obj[key] = matrix_from_json(obj[key])
    return obj
