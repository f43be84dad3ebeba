"""Figure construction: a pure view over validated CSV rows.

Two kinds are understood. "sweep" draws one line per scheme against the
swept parameter, with error bars whenever the stderr column is nonzero.
"front" pairs "<label>|dl" / "<label>|ul" schemes and draws one trade-off
polyline per label in the downlink/uplink rate plane. Rows are plotted in
file order: the renderer never reorders or rescales beyond the axis labels
requested in the spec, so whatever ordering the producer committed to is
what appears on the page.

All output goes through a committed style file and fixed image metadata,
which makes byte-identical re-renders the expected behavior rather than a
lucky accident.
"""

import importlib.resources
from dataclasses import dataclass
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .schema import SchemaError, group_rows, pair_front_series, read_rows

__all__ = ["FigureSpec", "KINDS", "build_sweep_figure", "build_front_figure", "render"]

KINDS = ("sweep", "front")

_STYLE_PATH = importlib.resources.files("figure_renderer") / "styles" / "default.mplstyle"

# savefig writes a timestamp or library version into some formats; pin the
# volatile keys so identical data yields identical bytes
_FORMAT_METADATA = {
    ".png": {"Software": "figure-renderer"},
    ".svg": {"Date": None},
    ".pdf": {"Creator": "figure-renderer", "Producer": "figure-renderer", "CreationDate": None},
}


@dataclass(frozen=True)
class FigureSpec:
    """Everything one render needs: where to read, what to draw, where to write."""

    input_csv: Path
    kind: str
    output_path: Path
    xlabel: str = ""
    ylabel: str = ""
    title: str = ""
    group_by: str = "scheme"

    def __post_init__(self):
        if self.kind not in KINDS:
            raise SchemaError(f"unknown figure kind {self.kind!r}; expected one of {list(KINDS)}")
        object.__setattr__(self, "input_csv", Path(self.input_csv))
        object.__setattr__(self, "output_path", Path(self.output_path))


def build_sweep_figure(rows, spec):
    """One line per grouping value; error bars where stderr is nonzero."""
    grouped = group_rows(rows, spec.group_by)
    fig, ax = plt.subplots()
    for label, series in grouped.items():
        xs = [r.sweep_value for r in series]
        ys = [r.mean for r in series]
        errs = [r.stderr for r in series]
        if any(e > 0.0 for e in errs):
            ax.errorbar(xs, ys, yerr=errs, marker="o", label=str(label))
        else:
            ax.plot(xs, ys, marker="o", label=str(label))
    _finish_axes(ax, spec, default_xlabel="sweep value", default_ylabel="mean")
    return fig


def build_front_figure(rows, spec):
    """One trade-off polyline per label in the (dl, ul) rate plane."""
    if spec.group_by != "scheme":
        raise SchemaError("front figures pair dl/ul blocks and only group by 'scheme'")
    fig, ax = plt.subplots()
    for label, (dl, ul) in pair_front_series(rows).items():
        ax.plot([r.mean for r in dl], [r.mean for r in ul], marker="o", label=label)
    _finish_axes(ax, spec, default_xlabel="downlink sum rate", default_ylabel="uplink sum rate")
    return fig


def _finish_axes(ax, spec, default_xlabel, default_ylabel):
    ax.set_xlabel(spec.xlabel or default_xlabel)
    ax.set_ylabel(spec.ylabel or default_ylabel)
    if spec.title:
        ax.set_title(spec.title)
    ax.legend()


_BUILDERS = {"sweep": build_sweep_figure, "front": build_front_figure}


def render(spec):
    """Read, validate, draw, and write one figure; returns the output path.

    Raises SchemaError for any input that deviates from the CSV contract and
    OSError for filesystem failures; never writes a partial image on a
    validation error because validation completes before the canvas exists.
    """
    rows = read_rows(spec.input_csv)
    with plt.style.context(str(_STYLE_PATH)):
        fig = _BUILDERS[spec.kind](rows, spec)
        try:
            metadata = _FORMAT_METADATA.get(spec.output_path.suffix.lower())
            fig.savefig(spec.output_path, metadata=metadata)
        finally:
            plt.close(fig)
    return spec.output_path
