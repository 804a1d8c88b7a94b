"""
Run configuration: defaults, TOML files and command-line overrides.
"""

import os
import sys
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Dict, Optional, Tuple, Union

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from causalforge.graphs import DEFAULT_MAX_ENUMERATION_NODES, MAX_NODES

ENV_OUT_DIR = "CAUSALFORGE_OUT_DIR"
FORMATS = ("jsonl", "csv")
PERTURBATION_KINDS = ("paraphrase", "refactor")
TEMPLATE_STYLES = ("default", "paraphrase")


def default_out_dir() -> Path:
    """The output directory from $CAUSALFORGE_OUT_DIR, falling back to ./out."""
    return Path(os.environ.get(ENV_OUT_DIR, "out"))


@dataclass(frozen=True)
class RunConfig:
    """
    Settings of one generation or check run.

    Attributes
    ----------
    n_min, n_max : int
        The node-count range, 2 <= n_min <= n_max <= max_nodes.
    seed : int
        Split and baseline seed, an unsigned 64-bit integer. Defaults to 0.
    out_dir : Path
        Where outputs are written.
    formats : Tuple[str, ...]
        Corpus formats, from "jsonl" and "csv".
    perturbations : Tuple[str, ...]
        Perturbed test copies to write, from "paraphrase" and "refactor".
    template_style : str
        Hypothesis templates of the main corpus.
    template_file : Path, optional
        Template override file.
    jobs : int
        Worker processes for corpus building.
    max_nodes : int
        The enumeration cap (at most 8).
    """

    n_min: int = 2
    n_max: int = 6
    seed: int = 0
    out_dir: Path = field(default_factory=default_out_dir)
    formats: Tuple[str, ...] = ("jsonl",)
    perturbations: Tuple[str, ...] = ()
    template_style: str = "default"
    template_file: Optional[Path] = None
    jobs: int = 1
    max_nodes: int = DEFAULT_MAX_ENUMERATION_NODES

    def validate(self) -> "RunConfig":
        """
        Check all fields and return self.

        Raises
        ------
        ValueError
            Naming the first invalid setting.
        """
        if not 2 <= self.max_nodes <= MAX_NODES:
            raise ValueError(f"max_nodes must be between 2 and {MAX_NODES}, got {self.max_nodes}.")
        if not 2 <= self.n_min <= self.n_max:
            raise ValueError(f"Invalid node range {self.n_min}..{self.n_max}; need 2 <= n_min <= n_max.")
        if self.n_max > self.max_nodes:
            raise ValueError(f"n_max={self.n_max} exceeds max_nodes={self.max_nodes}.")
        if not 0 <= self.seed < 2**64:
            raise ValueError(f"seed must be an unsigned 64-bit integer, got {self.seed}.")
        if not self.formats or any(f not in FORMATS for f in self.formats):
            raise ValueError(f"formats must be taken from {FORMATS}, got {list(self.formats)}.")
        if any(p not in PERTURBATION_KINDS for p in self.perturbations):
            raise ValueError(f"perturbations must be taken from {PERTURBATION_KINDS}, got {list(self.perturbations)}.")
        if self.template_style not in TEMPLATE_STYLES:
            raise ValueError(f"template_style must be one of {TEMPLATE_STYLES}, got '{self.template_style}'.")
        if self.jobs < 1:
            raise ValueError(f"jobs must be a positive integer, got {self.jobs}.")
        return self

    def with_overrides(self, **overrides: Any) -> "RunConfig":
        """Return a copy with every override that is not None applied."""
        return replace(self, **_coerce({k: v for k, v in overrides.items() if v is not None}))

    def to_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        data["out_dir"] = str(self.out_dir)
        data["template_file"] = None if self.template_file is None else str(self.template_file)
        data["formats"] = list(self.formats)
        data["perturbations"] = list(self.perturbations)
        return data


_KNOWN = {f.name for f in fields(RunConfig)}


def _coerce(values: Dict[str, Any]) -> Dict[str, Any]:
    unknown = sorted(set(values) - _KNOWN)
    if unknown:
        raise ValueError(f"Unknown configuration keys: {', '.join(unknown)}.")
    out = dict(values)
    for key in ("out_dir", "template_file"):
        if key in out and out[key] is not None:
            out[key] = Path(out[key])
    for key in ("formats", "perturbations"):
        if key in out:
            value = out[key]
            out[key] = (value,) if isinstance(value, str) else tuple(dict.fromkeys(value))
    return out


def load_config(path: Union[str, Path, None] = None, **overrides: Any) -> RunConfig:
    """
    Build a validated RunConfig from an optional TOML file and overrides.

    The TOML file holds top-level keys named like the RunConfig fields.
    Overrides that are None are ignored.

    Raises
    ------
    ValueError
        On unreadable TOML, unknown keys or invalid values.
    """
    config = RunConfig()
    if path is not None:
        try:
            with Path(path).open("rb") as fh:
                data = tomllib.load(fh)
        except tomllib.TOMLDecodeError as e:
            raise ValueError(f"Invalid TOML in {path}: {e}") from e
        config = replace(config, **_coerce(data))
    return config.with_overrides(**overrides).validate()
