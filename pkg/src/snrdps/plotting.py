"""Figures from the CSV files written by the command-line tool.

Everything here reads the CSV back rather than taking in-memory results,
so a figure always shows exactly what was saved.
"""

from __future__ import annotations

import csv
from collections import defaultdict
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402


def read_columns(path) -> list[dict[str, str]]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def _num(s: str) -> float:
    return float(s) if s != "" else float("nan")


def plot_bounds(csv_path, out_path) -> Path:
    """Phase-error bound versus bit error rate, one panel per photon number."""
    rows = read_columns(csv_path)
    series = defaultdict(list)
    for row in rows:
        series[(int(row["nu"]), int(row["L"]), int(row["cardR"]))].append(row)
    nus = sorted({k[0] for k in series})
    fig, axes = plt.subplots(1, len(nus), figsize=(4.5 * len(nus), 3.6), squeeze=False)
    for ax, nu in zip(axes[0], nus):
        for (n, L, card), pts in sorted(series.items()):
            if n != nu:
                continue
            x = [_num(p["e_bit"]) for p in pts]
            line, = ax.plot(x, [_num(p["e_ph_bound"]) for p in pts], label=f"({L}, {card})")
            if "e_ph_rrdps" in pts[0]:
                ax.plot(x, [_num(p["e_ph_rrdps"]) for p in pts], ls="--", color=line.get_color())
        ax.set_xlabel("bit error rate")
        ax.set_ylabel("phase error bound")
        ax.set_title(f"nu = {nu}")
        ax.set_xlim(0, 0.5)
        ax.set_ylim(bottom=0)
        ax.legend(fontsize=7, title="(L, |R|)", title_fontsize=7)
    fig.tight_layout()
    fig.savefig(out_path, dpi=150)
    plt.close(fig)
    return Path(out_path)


def plot_rates(csv_path, out_path) -> Path:
    """Key rate and optimal block intensity versus fibre length."""
    rows = read_columns(csv_path)
    by_protocol = defaultdict(list)
    for row in rows:
        by_protocol[row["protocol"]].append(row)
    fig, (ax_g, ax_mu) = plt.subplots(1, 2, figsize=(9, 3.6))
    for protocol, pts in sorted(by_protocol.items()):
        km = [_num(p["km"]) for p in pts]
        g = [_num(p["G"]) for p in pts]
        g = [v if v > 0 else float("nan") for v in g]
        ls = "-" if protocol == "snrdps" else "--"
        ax_g.semilogy(km, g, ls=ls, label=protocol)
        ax_mu.semilogy(km, [_num(p["L_mu"]) for p in pts], ls=ls, label=protocol)
    ax_g.set_xlabel("fibre length (km)")
    ax_g.set_ylabel("key rate per pulse")
    ax_mu.set_xlabel("fibre length (km)")
    ax_mu.set_ylabel("optimal L mu")
    for ax in (ax_g, ax_mu):
        ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(out_path, dpi=150)
    plt.close(fig)
    return Path(out_path)


_SCRIPT_HEAD = '''"""Plot {csv_name}; regenerate the CSV to update the figure."""
import csv
from collections import defaultdict
from pathlib import Path

import matplotlib.pyplot as plt

CSV = Path(__file__).with_name("{csv_name}")

with open(CSV, newline="") as fh:
    rows = list(csv.DictReader(fh))


def num(s):
    return float(s) if s != "" else float("nan")

'''

_BOUNDS_BODY = '''
series = defaultdict(list)
for row in rows:
    series[(int(row["nu"]), int(row["L"]), int(row["cardR"]))].append(row)
nus = sorted({k[0] for k in series})
fig, axes = plt.subplots(1, len(nus), figsize=(4.5 * len(nus), 3.6), squeeze=False)
for ax, nu in zip(axes[0], nus):
    for (n, L, card), pts in sorted(series.items()):
        if n != nu:
            continue
        x = [num(p["e_bit"]) for p in pts]
        line, = ax.plot(x, [num(p["e_ph_bound"]) for p in pts], label=f"({L}, {card})")
        if "e_ph_rrdps" in pts[0]:
            ax.plot(x, [num(p["e_ph_rrdps"]) for p in pts], ls="--", color=line.get_color())
    ax.set_xlabel("bit error rate")
    ax.set_ylabel("phase error bound")
    ax.set_title(f"nu = {nu}")
    ax.legend(fontsize=7)
fig.tight_layout()
plt.show()
'''

_RATE_BODY = '''
by_protocol = defaultdict(list)
for row in rows:
    by_protocol[row["protocol"]].append(row)
fig, (ax_g, ax_mu) = plt.subplots(1, 2, figsize=(9, 3.6))
for protocol, pts in sorted(by_protocol.items()):
    km = [num(p["km"]) for p in pts]
    g = [num(p["G"]) if num(p["G"]) > 0 else float("nan") for p in pts]
    ax_g.semilogy(km, g, label=protocol)
    ax_mu.semilogy(km, [num(p["L_mu"]) for p in pts], label=protocol)
ax_g.set_xlabel("fibre length (km)")
ax_g.set_ylabel("key rate per pulse")
ax_mu.set_xlabel("fibre length (km)")
ax_mu.set_ylabel("optimal L mu")
ax_g.legend()
fig.tight_layout()
plt.show()
'''


def plot_script(kind: str, csv_name: str) -> str:
    """Source of a standalone plotting script that only reads ``csv_name``.

    The script expects the CSV next to itself.
    """
    body = {"bounds": _BOUNDS_BODY, "rate": _RATE_BODY}[kind]
    return _SCRIPT_HEAD.format(csv_name=csv_name) + body
