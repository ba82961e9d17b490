"""Experiment configuration: INI-style sections, strict schema, stable hash.

Unknown sections or keys are rejected with the line number where they
appear; values parse totally or raise ConfigError. Command-line flags
override file keys before validation.
"""

from __future__ import annotations

import configparser
import hashlib
import json
from dataclasses import dataclass

from .errors import ConfigError
from .function_space import PotentialSpec
from .interval_maps import MapFamily, canonical_family
from .symbolic import Word

# section -> key -> (type tag, default or REQUIRED)
_REQUIRED = object()

SCHEMA = {
    "experiment": {
        "degrees": ("int_list", [2]),
        "potential": ("str", "const:0"),
        "q": ("int", 512),
        "interpolation": ("choice:linear,cubic", "linear"),
        "theta": ("float_or_none", None),
        "alpha": ("float", 1.0),
        "seed": ("int", 20260809),
        "workers": ("int", 1),
    },
    "window": {"a": ("float", -1.0), "b": ("float", 1.0)},
    "count": {"n_min": ("int", 1), "n_max": ("int", 5)},
    "kappa": {
        "lo": ("float", -5.0),
        "hi": ("float", 5.0),
        "tol": ("float", 1e-8),
        "q": ("int_or_none", None),
    },
    "skew": {"depth": ("int", 2)},
    "clt": {
        "n": ("int", 1000),
        "samples": ("int", 20000),
        "word_policy": ("choice:fixed,bernoulli", "fixed"),
        "word": ("str", "1"),
    },
    "lil": {"n_max": ("int", 10000), "samples": ("int", 200), "n0": ("int", 3), "word": ("str", "1")},
    "correlations": {
        "word": ("str", "1"),
        "n_max": ("int", 12),
        "g": ("str_or_none", None),
        "h": ("str_or_none", None),
    },
    "variance": {"word": ("str", "1"), "n": ("int", 20), "g": ("str_or_none", None)},
    "average": {"x_bits": ("int", 256), "n_max": ("int", 64), "f": ("str_or_none", None)},
    "derivative": {"g": ("str", "centered"), "h_step": ("float", 1e-4)},
    "normalize": {"potentials": ("str_list", ["centered", "cos:1"])},
    "spectrum": {"per_map": ("bool", False)},
}


def _parse_value(tag: str, raw, where: str):
    try:
        if tag == "int":
            return int(str(raw))
        if tag == "float":
            return float(str(raw))
        if tag == "str":
            return str(raw)
        if tag == "bool":
            s = str(raw).strip().lower()
            if s in ("1", "true", "yes", "on"):
                return True
            if s in ("0", "false", "no", "off"):
                return False
            raise ValueError(f"not a boolean: {raw!r}")
        if tag == "int_list":
            return [int(tok) for tok in str(raw).replace(",", " ").split()]
        if tag == "str_list":
            return [tok.strip() for tok in str(raw).split(",") if tok.strip()]
        if tag == "float_or_none":
            s = str(raw).strip()
            return None if s.lower() in ("", "none") else float(s)
        if tag == "int_or_none":
            s = str(raw).strip()
            return None if s.lower() in ("", "none") else int(s)
        if tag == "str_or_none":
            s = str(raw).strip()
            return None if s.lower() in ("", "none") else s
        if tag.startswith("choice:"):
            choices = tag.split(":", 1)[1].split(",")
            s = str(raw).strip()
            if s not in choices:
                raise ValueError(f"must be one of {choices}")
            return s
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{where}: {exc}") from exc
    raise ConfigError(f"unknown schema tag {tag!r}")


def _line_of(text: str, token: str) -> int:
    for i, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if stripped.startswith(token):
            return i
    return 0


@dataclass
class ExperimentConfig:
    """Validated, typed view of one experiment configuration."""

    data: dict
    source_text: str = ""

    @classmethod
    def defaults(cls) -> "ExperimentConfig":
        data = {sec: {k: v[1] for k, v in keys.items()} for sec, keys in SCHEMA.items()}
        return cls(data)

    @classmethod
    def from_text(cls, text: str) -> "ExperimentConfig":
        parser = configparser.ConfigParser(interpolation=None)
        try:
            parser.read_string(text)
        except configparser.Error as exc:
            raise ConfigError(f"config parse error: {exc}") from exc
        cfg = cls.defaults()
        cfg.source_text = text
        for section in parser.sections():
            if section not in SCHEMA:
                raise ConfigError(f"line {_line_of(text, '[' + section + ']')}: unknown section [{section}]")
            for key, raw in parser.items(section):
                if key not in SCHEMA[section]:
                    raise ConfigError(f"line {_line_of(text, key)}: unknown key {key!r} in [{section}]")
                tag = SCHEMA[section][key][0]
                cfg.data[section][key] = _parse_value(tag, raw, f"[{section}] {key}")
        cfg.validate()
        return cfg

    @classmethod
    def from_file(cls, path: str) -> "ExperimentConfig":
        try:
            with open(path, "r", encoding="utf-8") as fh:
                text = fh.read()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path!r}: {exc}") from exc
        return cls.from_text(text)

    def override(self, dotted_key: str, raw_value: str):
        if "." not in dotted_key:
            raise ConfigError(f"override {dotted_key!r} must look like section.key")
        section, key = dotted_key.split(".", 1)
        if section not in SCHEMA or key not in SCHEMA[section]:
            raise ConfigError(f"unknown override target {dotted_key!r}")
        self.data[section][key] = _parse_value(SCHEMA[section][key][0], raw_value, dotted_key)

    def validate(self):
        ex = self.data["experiment"]
        if not ex["degrees"] or any(d < 2 for d in ex["degrees"]):
            raise ConfigError("degrees must all be >= 2")
        q = ex["q"]
        if q < 16 or q & (q - 1):
            raise ConfigError(f"q must be a power of two >= 16, got {q}")
        if ex["workers"] < 1:
            raise ConfigError("workers must be >= 1")
        if not 0 < ex["alpha"] <= 1:
            raise ConfigError("alpha must lie in (0, 1]")
        if ex["theta"] is not None and not 0 < ex["theta"] < 1:
            raise ConfigError("theta must lie in (0, 1)")
        w = self.data["window"]
        if not w["a"] < w["b"]:
            raise ConfigError(f"window needs a < b, got [{w['a']}, {w['b']}]")
        c = self.data["count"]
        if c["n_min"] < 1 or c["n_max"] < c["n_min"]:
            raise ConfigError("count n range must satisfy 1 <= n_min <= n_max")
        k = self.data["kappa"]
        if not k["lo"] < k["hi"]:
            raise ConfigError("kappa bracket needs lo < hi")
        if self.data["skew"]["depth"] < 1:
            raise ConfigError("skew depth must be >= 1")
        if self.data["clt"]["samples"] < 1000:
            raise ConfigError("clt needs at least 1000 samples")
        if self.data["lil"]["n0"] < 3:
            raise ConfigError("lil n0 must be >= 3")
        PotentialSpec.parse(ex["potential"])

    # convenience accessors -------------------------------------------------

    def family(self) -> MapFamily:
        return canonical_family(self.data["experiment"]["degrees"])

    def potential(self, text: str = None) -> PotentialSpec:
        return PotentialSpec.parse(text or self.data["experiment"]["potential"])

    def word(self, text: str, periodic: bool = True) -> Word:
        w = Word.parse(text, len(self.data["experiment"]["degrees"]))
        return Word(w.symbols, w.alphabet_size, periodic=periodic)

    def get(self, section: str, key: str):
        return self.data[section][key]

    def canonical_json(self) -> str:
        # worker count is an execution detail: results must be identical for
        # any value, so it is not part of the experiment identity
        data = {sec: dict(keys) for sec, keys in self.data.items()}
        data["experiment"].pop("workers", None)
        return json.dumps(data, sort_keys=True, separators=(",", ":"))

    def sha256(self) -> str:
        return hashlib.sha256(self.canonical_json().encode()).hexdigest()
