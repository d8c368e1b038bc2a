"""Run configuration: one flat key=value text format with full defaulting.

Config files hold ``key = value`` lines; ``#`` starts a comment, blank lines
are ignored, unknown keys are rejected. ``none`` (case-insensitive) clears an
optional value; severity_cuts takes three comma-separated floats. Every run
writes its fully resolved config next to its outputs, and re-running from that
file reproduces the outputs byte-for-byte.
"""

from __future__ import annotations

from dataclasses import dataclass, fields, replace
from pathlib import Path

from .vegmetric import MetricConfig


@dataclass
class RunConfig:
    """All free parameters of the pipeline, with calibrated defaults."""

    gaussian_size: int = 41
    gaussian_sigma: float = 10.0
    samples_per_line: int = 100
    alpha: float = 0.5
    beta: float = -0.05
    alarm_threshold: float = 0.81
    canny_low: float = 50.0
    canny_high: float = 150.0
    tgdi_margin: float = 32.0
    tile_size: int = 640
    seed: int = 0
    threads: int = 1
    leaky_slope: float = 0.01
    severity_cuts: tuple | None = None
    run_timestamp: str | None = None
    out_dir: str | None = None

    def validate(self) -> "RunConfig":
        self.metric_config().validate()
        if self.tile_size < 1:
            raise ValueError("tile_size must be positive")
        if self.threads < 1:
            raise ValueError("threads must be at least 1")
        if not (0.0 < self.leaky_slope < 1.0):
            raise ValueError("leaky_slope must lie in (0, 1)")
        return self

    def metric_config(self) -> MetricConfig:
        return MetricConfig(
            gaussian_size=self.gaussian_size,
            gaussian_sigma=self.gaussian_sigma,
            samples_per_line=self.samples_per_line,
            alpha=self.alpha,
            beta=self.beta,
            alarm_threshold=self.alarm_threshold,
            tgdi_margin=self.tgdi_margin,
            canny_low=self.canny_low,
            canny_high=self.canny_high,
            severity_cuts=self.severity_cuts,
        )


_OPTIONAL_STR = {"run_timestamp", "out_dir"}


def _parse_value(name: str, text: str):
    text = text.strip()
    if text.lower() == "none":
        return None
    if name == "severity_cuts":
        parts = [float(p) for p in text.split(",")]
        if len(parts) != 3:
            raise ValueError("severity_cuts needs three comma-separated values")
        return tuple(parts)
    if name in _OPTIONAL_STR:
        return text
    proto = RunConfig()
    kind = type(getattr(proto, name))
    if kind is int:
        return int(text)
    if kind is float:
        return float(text)
    raise ValueError(f"cannot parse config key {name}")


def load_config(path: str | Path) -> RunConfig:
    cfg = RunConfig()
    known = {f.name for f in fields(RunConfig)}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected 'key = value'")
        key, _, value = line.partition("=")
        key = key.strip()
        if key not in known:
            raise ValueError(f"{path}:{lineno}: unknown config key {key!r}")
        cfg = replace(cfg, **{key: _parse_value(key, value)})
    return cfg.validate()


def _format_value(value) -> str:
    if value is None:
        return "none"
    if isinstance(value, tuple):
        return ",".join(repr(v) for v in value)
    return repr(value) if isinstance(value, float) else str(value)


def save_config(cfg: RunConfig, path: str | Path) -> None:
    """Write the resolved config in the same key=value format, field order."""
    lines = [f"{f.name} = {_format_value(getattr(cfg, f.name))}"
             for f in fields(RunConfig)]
    Path(path).write_text("\n".join(lines) + "\n")
