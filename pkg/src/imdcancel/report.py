"""CSV tables and vector plots for scenario results.

Files are written with a fixed column order and 12-significant-digit
decimal formatting, so identical results produce identical bytes.  SVG
output is pinned (fixed hash salt, no date metadata) for the same reason.
"""

from __future__ import annotations

import csv
from pathlib import Path

import matplotlib
import numpy as np

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

from .harness import MetricsRecord  # noqa: E402

matplotlib.rcParams["svg.hashsalt"] = "imdcancel"


def _fmt(v: float) -> str:
    return f"{v:.12g}"


def emit_csv(rec: MetricsRecord, outdir) -> list:
    """Write sinr.csv, nmse.csv, psd.csv and wnorm.csv; returns the paths."""
    if not rec.sinr_rows and not rec.wnorm_traces:
        raise ValueError("nothing to emit: record is empty")
    outdir = Path(outdir)
    try:
        outdir.mkdir(parents=True, exist_ok=True)
        paths = []

        path = outdir / "sinr.csv"
        with open(path, "w", newline="", encoding="utf-8") as fh:
            wr = csv.writer(fh)
            wr.writerow(["leakage_db", "algorithm", "sinr_db", "n_valid_runs"])
            for power, label, sinr, n_valid in rec.sinr_rows:
                wr.writerow([_fmt(power), label, _fmt(sinr), n_valid])
        paths.append(path)

        path = outdir / "nmse.csv"
        with open(path, "w", newline="", encoding="utf-8") as fh:
            wr = csv.writer(fh)
            wr.writerow(["sample_index", "algorithm", "nmse_db"])
            for label in sorted(rec.nmse_traces):
                trace_db = 10.0 * np.log10(np.maximum(rec.nmse_traces[label], 1e-30))
                for i, v in enumerate(trace_db):
                    wr.writerow([i, label, _fmt(v)])
        paths.append(path)

        path = outdir / "psd.csv"
        with open(path, "w", newline="", encoding="utf-8") as fh:
            wr = csv.writer(fh)
            wr.writerow(["freq_hz", "label", "psd_db"])
            for label, freqs, psd_db in rec.psd_rows:
                for f, v in zip(freqs, psd_db):
                    wr.writerow([_fmt(f), label, _fmt(v)])
        paths.append(path)

        path = outdir / "wnorm.csv"
        with open(path, "w", newline="", encoding="utf-8") as fh:
            wr = csv.writer(fh)
            wr.writerow(["sample_index", "variant", "l1_norm"])
            for variant in sorted(rec.wnorm_traces):
                for i, v in enumerate(rec.wnorm_traces[variant]):
                    wr.writerow([i, variant, _fmt(v)])
        paths.append(path)
        return paths
    except OSError as exc:
        raise OSError(f"cannot write results to {outdir}: {exc}") from exc


def read_csv_columns(path) -> dict:
    """Read one emitted CSV back into {column: list of strings}."""
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    return {name: [row[i] for row in body] for i, name in enumerate(header)}


def sinr_figure(rec: MetricsRecord):
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    by_label: dict = {}
    for power, label, sinr, _ in rec.sinr_rows:
        by_label.setdefault(label, []).append((power, sinr))
    for label, pairs in by_label.items():
        pairs.sort()
        ax.plot([p for p, _ in pairs], [s for _, s in pairs], marker="o", label=label)
    ax.set_xlabel("leakage power (dB rel. Rx)")
    ax.set_ylabel("SINR (dB)")
    ax.grid(True, alpha=0.4)
    ax.legend(fontsize=8)
    fig.tight_layout()
    return fig


def nmse_figure(rec: MetricsRecord, smooth: int = 512):
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    for label in sorted(rec.nmse_traces):
        trace = rec.nmse_traces[label]
        if smooth > 1 and trace.size > smooth:
            kernel = np.ones(smooth) / smooth
            trace = np.convolve(trace, kernel, mode="valid")
        ax.plot(10.0 * np.log10(np.maximum(trace, 1e-30)), label=label, lw=1.0)
    ax.set_xlabel("sample")
    ax.set_ylabel("NMSE (dB)")
    ax.set_title(f"leakage {rec.nmse_leakage_db:g} dB")
    ax.grid(True, alpha=0.4)
    ax.legend(fontsize=8)
    fig.tight_layout()
    return fig


def psd_figure(rec: MetricsRecord):
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    span = None
    for label, freqs, psd_db in rec.psd_rows:
        ax.plot(np.asarray(freqs) / 1e6, psd_db, label=label, lw=0.9)
        span = (freqs[0] / 1e6, freqs[-1] / 1e6)
    if span is not None:
        ax.set_xlim(*span)
    ax.set_xlabel("frequency (MHz)")
    ax.set_ylabel("PSD (dB/Hz)")
    ax.grid(True, alpha=0.4)
    ax.legend(fontsize=8)
    fig.tight_layout()
    return fig


def wnorm_figure(rec: MetricsRecord):
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    for variant in sorted(rec.wnorm_traces):
        ax.plot(rec.wnorm_traces[variant], label=variant, lw=1.0)
    ax.set_xlabel("sample")
    ax.set_ylabel("weight l1 norm")
    ax.grid(True, alpha=0.4)
    ax.legend(fontsize=8)
    fig.tight_layout()
    return fig


def emit_plots(rec: MetricsRecord, outdir) -> list:
    """Render one SVG per metric family; deterministic for fixed inputs."""
    if not rec.sinr_rows and not rec.wnorm_traces:
        raise ValueError("nothing to plot: record is empty")
    outdir = Path(outdir)
    try:
        outdir.mkdir(parents=True, exist_ok=True)
        paths = []
        for name, builder, present in (
            ("sinr.svg", sinr_figure, bool(rec.sinr_rows)),
            ("nmse.svg", nmse_figure, bool(rec.nmse_traces)),
            ("psd.svg", psd_figure, bool(rec.psd_rows)),
            ("wnorm.svg", wnorm_figure, bool(rec.wnorm_traces)),
        ):
            if not present:
                continue
            fig = builder(rec)
            path = outdir / name
            fig.savefig(path, format="svg", metadata={"Date": None})
            plt.close(fig)
            paths.append(path)
        return paths
    except OSError as exc:
        raise OSError(f"cannot write plots to {outdir}: {exc}") from exc


def record_from_csv(outdir) -> MetricsRecord:
    """Rebuild a plottable record from previously emitted CSV files."""
    outdir = Path(outdir)
    rec = MetricsRecord()
    path = outdir / "sinr.csv"
    if path.exists():
        cols = read_csv_columns(path)
        rec.sinr_rows = [
            (float(p), lab, float(s), int(n))
            for p, lab, s, n in zip(
                cols["leakage_db"], cols["algorithm"], cols["sinr_db"],
                cols["n_valid_runs"]
            )
        ]
    path = outdir / "nmse.csv"
    if path.exists():
        cols = read_csv_columns(path)
        by_label: dict = {}
        for lab, v in zip(cols["algorithm"], cols["nmse_db"]):
            by_label.setdefault(lab, []).append(10.0 ** (float(v) / 10.0))
        rec.nmse_traces = {lab: np.array(v) for lab, v in by_label.items()}
    path = outdir / "psd.csv"
    if path.exists():
        cols = read_csv_columns(path)
        by_label = {}
        for f, lab, v in zip(cols["freq_hz"], cols["label"], cols["psd_db"]):
            by_label.setdefault(lab, ([], []))
            by_label[lab][0].append(float(f))
            by_label[lab][1].append(float(v))
        rec.psd_rows = [
            (lab, np.array(fv), np.array(pv)) for lab, (fv, pv) in by_label.items()
        ]
    path = outdir / "wnorm.csv"
    if path.exists():
        cols = read_csv_columns(path)
        by_label = {}
        for lab, v in zip(cols["variant"], cols["l1_norm"]):
            by_label.setdefault(lab, []).append(float(v))
        rec.wnorm_traces = {lab: np.array(v) for lab, v in by_label.items()}
    return rec
