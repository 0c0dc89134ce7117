"""Run configuration: YAML file plus flag overrides, validated as a whole.

A configuration is a nested mapping with the blocks ``manifold``, ``curve``,
``flow``, ``output`` and, per subcommand, ``helix`` or ``conformal``.
Values come from three layers, later ones winning: built-in defaults, the
config file, and command-line flags.  Each resolved key remembers which
layer set it.
"""

from __future__ import annotations

import copy
import inspect
import json
from dataclasses import dataclass, field

import yaml

from .errors import ConfigError
from .generators import GENERATORS
from .manifold import FAMILIES

SUBCOMMANDS = ("flow", "helix", "ramp", "conformal")
BASES = ("circle", "sphere2", "euclidean", "sphere3", "hyperbolic3")

_FLOW_DEFAULTS = {
    "t_max": 1.0,
    "tol_geo": 1e-4,
    "converge_steps": 50,
    "c_cfl": 0.25,
    "dt_min": 1e-12,
    "dt_max": 1e-2,
    "resample_every": 25,
    "k2_max": 1e6,
    "length_floor": 1e-4,
    "n_max": 3,
    "monitor_tol": 5e-2,
    "monitor_gate": 1e-6,
    "bernstein": False,
    "max_steps": None,
}

_MANIFOLD_DEFAULTS = {
    "family": "euclidean",
    "dim": 2,
    "base": "circle",
    "base_dim": 2,
    "base_radius": 1.0,
    "rho": 1.0,
}


def defaults(subcommand):
    """Default configuration tree for ``subcommand``."""
    if subcommand not in SUBCOMMANDS:
        raise ConfigError([f"unknown subcommand {subcommand!r}"])
    cfg = {"seed": 0, "output": {"dir": "out", "snapshot_every": 0}}
    if subcommand == "helix":
        cfg["helix"] = {"K": -1, "k0": 1.0, "tau0": 1.0, "t_end": 10.0, "dt": 1e-3}
        return cfg
    cfg["manifold"] = dict(_MANIFOLD_DEFAULTS)
    cfg["flow"] = dict(_FLOW_DEFAULTS)
    cfg["curve"] = {"init": "circle", "N": 256, "params": {}}
    if subcommand == "ramp":
        cfg["manifold"]["family"] = "product"
        cfg["curve"]["init"] = "torus-winding"
        cfg["flow"]["t_max"] = 100.0
    elif subcommand == "conformal":
        cfg["manifold"]["family"] = "conformal"
        cfg["manifold"]["base"] = "euclidean"
        cfg["conformal"] = {"mode": "conformal"}
    return cfg


def _flatten(tree, prefix=""):
    out = {}
    for key, val in tree.items():
        name = f"{prefix}{key}"
        if isinstance(val, dict) and key != "params":
            out.update(_flatten(val, name + "."))
        elif key == "params":
            out[name] = val
            for pk, pv in val.items():
                out[f"{name}.{pk}"] = pv
        else:
            out[name] = val
    return out


@dataclass
class RunConfig:
    """Resolved configuration of one run and the origin of every key."""

    subcommand: str
    tree: dict
    provenance: dict = field(default_factory=dict)

    def __getitem__(self, block):
        return self.tree[block]

    @property
    def seed(self):
        return self.tree["seed"]

    def to_dict(self):
        return {"subcommand": self.subcommand, **copy.deepcopy(self.tree)}

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))

    def __eq__(self, other):
        return isinstance(other, RunConfig) and self.to_json() == other.to_json()


def _coerce(val, like):
    """Turn numeric-looking strings into numbers where a number is expected.

    YAML 1.1 reads ``1e-4`` (no dot) as a string; ``like`` is the default
    value of the key, or None when the key has no numeric default to go by.
    """
    if not isinstance(val, str) or isinstance(like, (str, bool, dict)):
        return val
    for kind in (int, float):
        try:
            return kind(val)
        except ValueError:
            pass
    return val


def _merge(base, overlay, path, layer, provenance, errors):
    for key, val in overlay.items():
        name = f"{path}{key}"
        if key not in base:
            if path.endswith("params."):
                base[key] = _coerce(val, None)
                provenance[name] = layer
                continue
            errors.append(f"unknown key {name!r}")
            continue
        if isinstance(base[key], dict) and key != "params":
            if not isinstance(val, dict):
                errors.append(f"{name!r} must be a mapping")
                continue
            _merge(base[key], val, name + ".", layer, provenance, errors)
        elif key == "params":
            if not isinstance(val, dict):
                errors.append(f"{name!r} must be a mapping")
                continue
            _merge(base[key], val, name + ".", layer, provenance, errors)
        else:
            base[key] = _coerce(val, base[key])
            provenance[name] = layer


def load_file(path):
    """Read a YAML (or JSON) config file into a mapping."""
    try:
        with open(path) as fh:
            data = yaml.safe_load(fh)
    except OSError as exc:
        raise ConfigError([f"cannot read config {path}: {exc.strerror}"]) from exc
    except yaml.YAMLError as exc:
        raise ConfigError([f"{path}: invalid YAML: {exc}"]) from exc
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise ConfigError([f"{path}: top level must be a mapping"])
    return data


def resolve(subcommand, file_data=None, overrides=None, derived=None):
    """Combine defaults, file data and flag overrides, then validate.

    ``overrides`` maps dotted keys (``"flow.t_max"``) to values.  ``derived``
    holds defaults that depend on other choices (for example the manifold
    family implied by a rate mode); they are recorded as ``"derived"``.

    Raises
    ------
    ConfigError
        Listing every problem found.
    """
    tree = defaults(subcommand)
    provenance = {k: "default" for k in _flatten(tree)}
    errors = []
    file_data = dict(file_data or {})
    sub = file_data.pop("subcommand", subcommand)
    if sub != subcommand:
        errors.append(f"config file is for subcommand {sub!r}, not {subcommand!r}")
    _merge(tree, file_data, "", "file", provenance, errors)
    layered = [(k, v, "derived") for k, v in (derived or {}).items()]
    layered += [(k, v, "flag") for k, v in (overrides or {}).items()]
    for dotted, val, layer in layered:
        parts = dotted.split(".")
        node, ok = tree, True
        for p in parts[:-1]:
            if not isinstance(node, dict) or p not in node:
                ok = False
                break
            node = node[p]
        in_params = len(parts) >= 2 and parts[-2] == "params"
        if not ok or not isinstance(node, dict) or (parts[-1] not in node and not in_params):
            errors.append(f"unknown key {dotted!r}")
            continue
        node[parts[-1]] = _coerce(val, node.get(parts[-1]))
        provenance[dotted] = layer
    errors += validate(subcommand, tree)
    if errors:
        raise ConfigError(errors)
    return RunConfig(subcommand, tree, provenance)


def from_dict(data):
    """Rebuild a RunConfig from :meth:`RunConfig.to_dict` output."""
    data = copy.deepcopy(data)
    sub = data.pop("subcommand")
    return resolve(sub, data)


def _is_pow2(n):
    return isinstance(n, int) and not isinstance(n, bool) and n > 0 and n & (n - 1) == 0


def _num(x):
    return isinstance(x, (int, float)) and not isinstance(x, bool)


def validate(subcommand, tree):
    """Every violation in ``tree`` as a list of messages."""
    errors = []

    def positive(block, key):
        val = tree[block][key]
        if not _num(val) or not val > 0:
            errors.append(f"{block}.{key} must be a positive number, got {val!r}")

    def count(block, key, minimum=0):
        val = tree[block][key]
        if not isinstance(val, int) or isinstance(val, bool) or val < minimum:
            errors.append(f"{block}.{key} must be an integer >= {minimum}, got {val!r}")

    if not isinstance(tree.get("seed"), int) or isinstance(tree.get("seed"), bool):
        errors.append(f"seed must be an integer, got {tree.get('seed')!r}")
    count("output", "snapshot_every")
    if not isinstance(tree["output"]["dir"], str) or not tree["output"]["dir"]:
        errors.append("output.dir must be a nonempty path")

    if subcommand == "helix":
        h = tree["helix"]
        if h["K"] not in (-1, 0, 1) or isinstance(h["K"], bool):
            errors.append(f"helix.K must be -1, 0 or 1, got {h['K']!r}")
        for key in ("t_end", "dt"):
            positive("helix", key)
        if not _num(h["k0"]) or h["k0"] < 0:
            errors.append(f"helix.k0 must be a nonnegative number, got {h['k0']!r}")
        if not _num(h["tau0"]):
            errors.append(f"helix.tau0 must be a number, got {h['tau0']!r}")
        return errors

    m, c, f = tree["manifold"], tree["curve"], tree["flow"]
    if m["family"] not in FAMILIES:
        errors.append(f"manifold.family must be one of {list(FAMILIES)}, got {m['family']!r}")
    if m["base"] not in BASES:
        errors.append(f"manifold.base must be one of {list(BASES)}, got {m['base']!r}")
    count("manifold", "dim", 2)
    count("manifold", "base_dim", 1)
    positive("manifold", "base_radius")
    positive("manifold", "rho")
    for key in ("t_max", "tol_geo", "c_cfl", "dt_min", "dt_max", "k2_max", "length_floor", "monitor_tol", "monitor_gate"):
        positive("flow", key)
    count("flow", "resample_every")
    count("flow", "converge_steps", 1)
    count("flow", "n_max", 2)
    if isinstance(f["n_max"], int) and f["n_max"] > 4:
        errors.append(f"flow.n_max must be at most 4, got {f['n_max']!r}")
    if f["max_steps"] is not None:
        count("flow", "max_steps", 1)
    if not isinstance(f["bernstein"], bool):
        errors.append(f"flow.bernstein must be true or false, got {f['bernstein']!r}")
    if _num(f["dt_min"]) and _num(f["dt_max"]) and f["dt_min"] > f["dt_max"]:
        errors.append("flow.dt_min must not exceed flow.dt_max")
    n = c["N"]
    if not _is_pow2(n) or not 16 <= n <= 4096:
        errors.append(f"curve.N must be a power of two between 16 and 4096, got {n!r}")
    if c["init"] not in GENERATORS:
        errors.append(f"curve.init must be one of {sorted(GENERATORS)}, got {c['init']!r}")
    else:
        accepted = set(inspect.signature(GENERATORS[c["init"]]).parameters) - {"N"}
        for key in c["params"]:
            if key not in accepted:
                errors.append(f"unknown key 'curve.params.{key}' for generator {c['init']!r}")
        if c["init"] == "points-file" and "path" not in c["params"]:
            errors.append("curve.params.path is required for points-file")
    if subcommand == "ramp" and m["family"] not in ("product", "warped-circle"):
        errors.append(f"ramp runs need manifold.family product, got {m['family']!r}")
    if subcommand == "conformal":
        mode = tree["conformal"]["mode"]
        want = {"conformal": "conformal", "off": "conformal", "warped": "warped-circle"}.get(mode)
        if want is None:
            errors.append(f"conformal.mode must be conformal, warped or off, got {mode!r}")
        elif m["family"] != want:
            errors.append(f"conformal.mode {mode!r} needs manifold.family {want!r}, got {m['family']!r}")
    return errors


def parse_value(text):
    """Interpret a flag value the way YAML would (numbers, booleans, null)."""
    try:
        val = yaml.safe_load(text)
    except yaml.YAMLError:
        return text
    return _coerce(val, None)
