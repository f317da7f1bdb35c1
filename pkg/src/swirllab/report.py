"""Merge tool outputs into one bundle with plot-ready CSVs and figures.

Inputs are this tool's own JSON reports (evolve logs, score scans,
paraproduct reports, lemma suites).  The bundle keeps the shared report
schema; alongside it the writer emits delimited CSVs and renders the
standard figures (peak score vs time, shell spectra, smallness factor vs
diffuseness) as PNG files.
"""

from __future__ import annotations

import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from .errors import FormatError
from .swrlio import make_report, read_json, validate_report, write_csv, write_json


def merge_reports(paths) -> dict:
    """Validate and merge report JSONs; empty input yields an empty bundle."""
    runs = []
    for path in paths:
        obj = read_json(path)
        validate_report(obj)
        obj["_source"] = os.path.basename(os.fspath(path))
        runs.append(obj)
    checks = []
    for obj in runs:
        for chk in obj["checks"]:
            checks.append({**chk, "source": obj["_source"], "tool": obj["tool"]})
    return make_report("report", {"files": [r["_source"] for r in runs]},
                       checks, runs=runs)


def _series_qstar(runs):
    rows = []
    for obj in runs:
        for entry in obj.get("snapshots", []):
            if "q_star" in entry:
                rows.append((obj["_source"], entry["time"], entry["q_star"]))
    return rows


def _series_dk(runs):
    rows = []
    for obj in runs:
        pr = obj.get("paraproduct")
        if not pr:
            continue
        for k in pr["k_range"]:
            rows.append((obj["_source"], k, pr["D"][str(k)],
                         pr["I_LH"][str(k)], pr["I_HL"][str(k)],
                         pr["I_HH"][str(k)]))
    return rows


def _series_psi(runs):
    rows = []
    for obj in runs:
        pr = obj.get("paraproduct")
        if pr:
            ratio = abs(pr["N_total"]) / pr["D_crit"] if pr["D_crit"] > 0 else 0.0
            rows.append((obj["_source"], pr["delta"], pr["psi"], ratio))
        for row in obj.get("trend", []):
            rows.append((obj["_source"], row["delta"], row["psi"], row["ratio"]))
    return rows


def write_bundle(bundle: dict, out_dir, render: bool = True) -> list[str]:
    """Write bundle.json, the CSV set, and (optionally) the figures."""
    os.makedirs(out_dir, exist_ok=True)
    written = []

    def _path(name):
        written.append(name)
        return os.path.join(out_dir, name)

    write_json(_path("bundle.json"), {k: v for k, v in bundle.items()})
    runs = bundle.get("runs", [])
    qstar = _series_qstar(runs)
    dk = _series_dk(runs)
    psi = _series_psi(runs)
    write_csv(_path("qstar_vs_time.csv"), ["run", "time", "q_star"], qstar)
    write_csv(_path("dk_spectrum.csv"),
              ["run", "k", "D_k", "I_LH", "I_HL", "I_HH"], dk)
    write_csv(_path("psi_vs_delta.csv"), ["run", "delta", "psi", "ratio"], psi)
    if render:
        if qstar:
            _plot_qstar(qstar, _path("qstar_vs_time.png"))
        if dk:
            _plot_dk(dk, _path("dk_spectrum.png"))
        if psi:
            _plot_psi(psi, _path("psi_vs_delta.png"))
    return written


def _group(rows, key_idx=0):
    groups: dict[str, list] = {}
    for row in rows:
        groups.setdefault(row[key_idx], []).append(row)
    return groups


def _plot_qstar(rows, path):
    fig, ax = plt.subplots(figsize=(6.0, 3.6))
    for run, grp in _group(rows).items():
        grp.sort(key=lambda r: r[1])
        ax.plot([r[1] for r in grp], [r[2] for r in grp], marker="o",
                ms=3, label=run)
    ax.set_xlabel("time")
    ax.set_ylabel("peak extraction score")
    ax.legend(fontsize=7, frameon=False)
    fig.savefig(path, dpi=150, bbox_inches="tight")
    plt.close(fig)


def _plot_dk(rows, path):
    fig, ax = plt.subplots(figsize=(6.0, 3.6))
    for run, grp in _group(rows).items():
        grp.sort(key=lambda r: r[1])
        ax.semilogy([r[1] for r in grp],
                    [max(r[2], 1e-300) for r in grp], marker="s", ms=3,
                    label=run)
    ax.set_xlabel("shell index k")
    ax.set_ylabel("D_k")
    ax.legend(fontsize=7, frameon=False)
    fig.savefig(path, dpi=150, bbox_inches="tight")
    plt.close(fig)


def _plot_psi(rows, path):
    fig, ax = plt.subplots(figsize=(6.0, 3.6))
    deltas = [r[1] for r in rows]
    ax.loglog(deltas, [max(r[2], 1e-300) for r in rows], "o", label="psi")
    ax.loglog(deltas, [max(r[3], 1e-300) for r in rows], "s",
              label="|N| / D_crit")
    ax.set_xlabel("delta")
    ax.set_ylabel("smallness factors")
    ax.legend(fontsize=8, frameon=False)
    fig.savefig(path, dpi=150, bbox_inches="tight")
    plt.close(fig)


def ensure_same_schema(objs) -> None:
    versions = {o.get("schema") for o in objs}
    if len(versions) > 1:
        raise FormatError(f"mixed schema versions in bundle inputs: {versions}")
