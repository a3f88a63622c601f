"""Result reports: a flat dict per computation, printable as an aligned table
or as one JSON object per line, and re-evaluatable from its own certificate.
"""

from __future__ import annotations

import json

import numpy as np

from .boxdist import BoxCertificate
from .core import DERIVED_ATOL, MMSpace, diagonal_distortion, distortion
from .errors import ValidationError
from .eurandom import EurCertificate, EurEvaluator
from .observable import ConcBounds, inner_kf_min
from .transport import Coupling


def _pairs_out(pairs) -> list[list[int]]:
    return [[int(i), int(j)] for i, j in sorted(pairs)]


def _matrix_out(matrix) -> list[list[float]]:
    return [[float(v) for v in row] for row in np.asarray(matrix)]


def build_prohorov_report(value: float, coupling: Coupling, pairs, space,
                          runtime: float) -> dict:
    return {
        "kind": "prohorov",
        "value": float(value),
        "mode": "exact",
        "runtime_s": runtime,
        "certificate": {
            "threshold": float(diagonal_distortion(pairs, space)),
            "pairs": _pairs_out(pairs),
            "coupling": _matrix_out(coupling.matrix),
        },
    }


def build_box_report(cert: BoxCertificate, runtime: float) -> dict:
    return {
        "kind": "box",
        "value": float(cert.value),
        "mode": "exact" if cert.exact else "heuristic (upper bound)",
        "runtime_s": runtime,
        "certificate": {
            "threshold": float(cert.threshold),
            "pairs": _pairs_out(cert.pairset),
            "coupling": _matrix_out(cert.coupling.matrix),
        },
    }


def build_eurandom_report(cert: EurCertificate, runtime: float) -> dict:
    mode = "heuristic (upper bound)"
    if cert.certified_error is not None:
        mode = ("exact" if cert.certified_error <= DERIVED_ATOL
                else f"certified within {cert.certified_error:.6g}")
    return {
        "kind": "eurandom",
        "value": float(cert.upper),
        "mode": mode,
        "certified_error": cert.certified_error,
        "runtime_s": runtime,
        "certificate": {
            "epsilon": float(cert.epsilon),
            "coupling": _matrix_out(cert.coupling.matrix),
        },
    }


def build_dconc_report(bounds: ConcBounds, runtime: float) -> dict:
    return {
        "kind": "dconc",
        "lower": float(bounds.lower),
        "upper": float(bounds.upper),
        "mode": bounds.certification,
        "runtime_s": runtime,
        "certificate": {
            "coupling": _matrix_out(bounds.coupling.matrix),
            "witness_f": None if bounds.witness_f is None
            else [float(v) for v in bounds.witness_f],
            "witness_side": bounds.witness_side,
        },
    }


def reevaluate_report(report: dict, x: MMSpace, y: MMSpace) -> float:
    """Recompute the certified value of a report from its own certificate.

    Returns the recomputed number (the upper bound for dconc reports) and
    raises ValidationError when it disagrees with the reported one.
    """
    kind = report["kind"]
    cert = report["certificate"]
    if kind == "prohorov":
        coupling = Coupling(np.array(cert["coupling"]), x.mass, y.mass)
        pairs = frozenset((i, j) for i, j in cert["pairs"])
        value = max(diagonal_distortion(pairs, x.space), 1.0 - coupling.mass_on(pairs))
        claimed = report["value"]
    elif kind == "box":
        coupling = Coupling(np.array(cert["coupling"]), x.mass, y.mass)
        pairs = frozenset((i, j) for i, j in cert["pairs"])
        dis = distortion(pairs, x, y)
        if dis > cert["threshold"] + DERIVED_ATOL:
            raise ValidationError("box certificate pair set exceeds its threshold")
        value = max(cert["threshold"], 1.0 - coupling.mass_on(pairs))
        claimed = report["value"]
    elif kind == "eurandom":
        coupling = Coupling(np.array(cert["coupling"]), x.mass, y.mass)
        eps = cert["epsilon"]
        evaluator = EurEvaluator(x, y)
        flat = np.asarray(coupling.matrix).ravel()
        w = np.outer(flat, flat).ravel()[evaluator._order]
        tail = float(w[evaluator._sorted > eps].sum())
        value = max(eps, tail)
        claimed = report["value"]
    elif kind == "dconc":
        coupling = Coupling(np.array(cert["coupling"]), x.mass, y.mass)
        from .boxdist import coupling_distortion
        value = coupling_distortion(coupling, x, y)[0]
        claimed = report["upper"]
        if cert["witness_f"] is not None and report["mode"].startswith("exact"):
            side = cert.get("witness_side", "first")
            f = np.array(cert["witness_f"])
            if side == "first":
                lower = inner_kf_min(f, coupling, y)
            else:
                lower = inner_kf_min(f, coupling.transpose(), x)
            if abs(lower - report["lower"]) > DERIVED_ATOL:
                raise ValidationError("dconc lower bound does not match its witness")
    else:
        raise ValidationError(f"unknown report kind {kind!r}")
    if abs(value - claimed) > DERIVED_ATOL:
        raise ValidationError(
            f"certificate re-evaluates to {value!r}, report claims {claimed!r}")
    return float(value)


def format_table(report: dict) -> str:
    lines = []
    width = max(len(k) for k in report if k != "certificate")
    for key, val in report.items():
        if key == "certificate":
            continue
        if isinstance(val, float):
            val = f"{val:.12g}"
        lines.append(f"{key.ljust(width)}  {val}")
    cert = report.get("certificate") or {}
    for key, val in cert.items():
        if key == "coupling" and val is not None:
            lines.append("coupling:")
            for row in val:
                lines.append("  " + "  ".join(f"{v:.6f}" for v in row))
        elif key == "pairs":
            lines.append(f"pairs      {val}")
        elif val is not None:
            lines.append(f"{key.ljust(width)}  {val}")
    return "\n".join(lines)


def format_json(report: dict) -> str:
    return json.dumps(report, sort_keys=True)
