"""Plain-text run configuration: a line-oriented grammar and its inverse.

The grammar is deliberately tiny so any tool can read and write it without a
serialization library:

    # comment lines start with '#'
    [section]
    key = value

The five sections are [grid], [physics], [scheme], [scenario] and [output];
every key is optional and falls back to the documented default, so the empty
string parses to the reference configuration.  Values are decimal numbers
except for the handful of named choices (scenario id and variant, the stop
probe, the output directory).  Unknown sections, unknown keys, duplicates,
type mismatches and violated parameter invariants are all reported as
ConfigError naming the offending section and key.

format_config renders a resolved configuration back to this grammar with
every key explicit; parse_config(format_config(cfg)) == cfg.
"""

from dataclasses import replace

from pfsi import scenarios
from pfsi.core import GridSpec, PhysParams, SchemeParams
from pfsi.driver import SimulationConfig
from pfsi.scenarios import SCENARIO_PARAM_KEYS

SECTIONS = ("grid", "physics", "scheme", "scenario", "output")


class ConfigError(ValueError):
    """Malformed or invalid configuration text."""


# ---------------------------------------------------------------------------
# schemas and defaults
# ---------------------------------------------------------------------------

_SCHEMAS = {
    "grid": {"length_L": float, "height_M": float, "nx": int, "nz": int},
    "physics": {"mu": float, "lam": float, "gamma": float},
    "scheme": {
        "eps": float,
        "delta": float,
        "dt_window": float,
        "dt_inner": float,
        "kappa_contact": float,
        "a_diff": float,
        "b_reg": float,
        "beta_reg": float,
        "eta_floor": float,
        "tol_penalty": float,
    },
    "output": {
        "total_time": float,
        "output_every": int,
        "seed": int,
        "stop_threshold": float,
        "stop_probe": str,
        "stop_x0": float,
        "directory": str,
    },
}

DEFAULTS = {
    "grid": {"length_L": 1.0, "height_M": 1.0, "nx": 256, "nz": 64},
    "physics": {"mu": 2e-3, "lam": 0.0, "gamma": 3.0},
    "scheme": {
        "eps": 0.01,
        "delta": 0.01,
        "dt_window": 0.01,
        "dt_inner": 1e-4,
        "kappa_contact": 1e-4,
        "a_diff": 2e-3,
        "b_reg": 0.0,
        "beta_reg": 4.0,
        "eta_floor": 1e-12,
        "tol_penalty": 1e-6,
    },
    "output": {
        "total_time": 1.0,
        "output_every": 1,
        "seed": 0,
        "stop_threshold": 0.0,
        "stop_probe": "min",
        "directory": "pfsi_out",
        # stop_x0 has no static default: it resolves to mid-domain
    },
}

#: scenario parameter values are decimal unless named here
_SCENARIO_VALUE_TYPES = {"variant": str, "mode": int}


# ---------------------------------------------------------------------------
# parsing
# ---------------------------------------------------------------------------

def _split_lines(text):
    """Raw pass: section headers and key/value pairs, location-tagged."""
    sections = {name: {} for name in SECTIONS}
    current = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("[") and line.endswith("]"):
            name = line[1:-1].strip()
            if name not in sections:
                raise ConfigError(
                    f"line {lineno}: unknown section [{name}]; sections are "
                    f"{', '.join(SECTIONS)}"
                )
            current = name
            continue
        if "=" not in line:
            raise ConfigError(
                f"line {lineno}: expected 'key = value' or '[section]', got {raw.strip()!r}"
            )
        if current is None:
            raise ConfigError(f"line {lineno}: key outside any [section] header")
        key, _, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if not key or not value:
            raise ConfigError(f"line {lineno}: empty key or value in [{current}]")
        if key in sections[current]:
            raise ConfigError(f"line {lineno}: duplicate key {key!r} in [{current}]")
        sections[current][key] = value
    return sections


def _convert(section, key, text, target):
    try:
        if target is int:
            return int(text)
        if target is float:
            return float(text)
        return text
    except ValueError:
        raise ConfigError(
            f"[{section}] {key}: expected {target.__name__}, got {text!r}"
        ) from None


def _typed_section(name, raw):
    schema = _SCHEMAS[name]
    values = dict(DEFAULTS[name])
    for key, text in raw.items():
        if key not in schema:
            raise ConfigError(
                f"[{name}] unknown key {key!r}; known keys: {', '.join(sorted(schema))}"
            )
        values[key] = _convert(name, key, text, schema[key])
    return values


def _scenario_section(raw):
    raw = dict(raw)
    scenario_id = raw.pop("id", "equilibrium")
    if scenario_id not in SCENARIO_PARAM_KEYS:
        raise ConfigError(
            f"[scenario] id: unknown scenario {scenario_id!r}; available: "
            f"{', '.join(sorted(SCENARIO_PARAM_KEYS))}"
        )
    allowed = SCENARIO_PARAM_KEYS[scenario_id]
    params = {}
    for key, text in raw.items():
        if key not in allowed:
            raise ConfigError(
                f"[scenario] unknown key {key!r} for scenario {scenario_id}; "
                f"allowed: {', '.join(sorted(allowed))}"
            )
        params[key] = _convert("scenario", key, text, _SCENARIO_VALUE_TYPES.get(key, float))
    return scenario_id, params


def _build(section, factory, values):
    try:
        return factory(**values)
    except ValueError as exc:
        raise ConfigError(f"[{section}] {exc}") from None


def _replace_checked(section, obj, **changes):
    try:
        return replace(obj, **changes)
    except ValueError as exc:
        raise ConfigError(f"[{section}] {exc}") from None


def parse_config(text):
    """Parse configuration text into a fully validated SimulationConfig.

    Every bundle invariant is enforced here, and the named scenario is built
    once on the parsed grid to validate its parameters and initial data, so a
    config that parses is a config that starts.
    """
    sections = _split_lines(text)
    grid = _build("grid", GridSpec, _typed_section("grid", sections["grid"]))
    phys = _build("physics", PhysParams, _typed_section("physics", sections["physics"]))
    scheme = _build("scheme", SchemeParams, _typed_section("scheme", sections["scheme"]))
    scenario_id, params = _scenario_section(sections["scenario"])

    out = _typed_section("output", sections["output"])
    config = _build(
        "output",
        SimulationConfig,
        dict(
            grid=grid,
            phys=phys,
            scheme=scheme,
            scenario_id=scenario_id,
            scenario_params=params,
            total_time=out["total_time"],
            output_every=out["output_every"],
            seed=out["seed"],
            stop_threshold=out["stop_threshold"],
            stop_probe=out["stop_probe"],
            stop_x0=out.get("stop_x0"),
            output_dir=out["directory"],
        ),
    )
    # dry-build the scenario so bad initial data fails at parse time
    try:
        scenarios.resolve(scenario_id, params, grid, phys, scheme)
    except ValueError as exc:
        raise ConfigError(f"[scenario] {exc}") from None
    return config


# ---------------------------------------------------------------------------
# sweep overrides
# ---------------------------------------------------------------------------

def apply_override(config, dotted_key, value_text):
    """Return a copy of config with one 'section.key' replaced by value_text.

    The replacement goes through the same typing and invariant checks as
    parsing, including the scenario dry-build, so a sweep value that cannot
    start fails here and not mid-batch.
    """
    section, _, key = dotted_key.partition(".")
    if section not in SECTIONS or not key:
        raise ConfigError(
            f"sweep key {dotted_key!r} must be 'section.key' with section in "
            f"{', '.join(SECTIONS)}"
        )
    if section == "scenario":
        if key == "id":
            raise ConfigError("sweep cannot vary the scenario id")
        allowed = SCENARIO_PARAM_KEYS[config.scenario_id]
        if key not in allowed:
            raise ConfigError(
                f"[scenario] unknown key {key!r} for scenario {config.scenario_id}; "
                f"allowed: {', '.join(sorted(allowed))}"
            )
        value = _convert("scenario", key, value_text, _SCENARIO_VALUE_TYPES.get(key, float))
        params = dict(config.scenario_params)
        params[key] = value
        new = _replace_checked("scenario", config, scenario_params=params)
    else:
        schema = _SCHEMAS[section]
        if key not in schema:
            raise ConfigError(
                f"[{section}] unknown key {key!r}; known keys: {', '.join(sorted(schema))}"
            )
        value = _convert(section, key, value_text, schema[key])
        if section == "output":
            field_name = {"directory": "output_dir"}.get(key, key)
            new = _replace_checked(section, config, **{field_name: value})
        else:
            attr = {"grid": "grid", "physics": "phys", "scheme": "scheme"}[section]
            bundle = _replace_checked(section, getattr(config, attr), **{key: value})
            new = _replace_checked(section, config, **{attr: bundle})
    try:
        scenarios.resolve(new.scenario_id, new.scenario_params, new.grid, new.phys, new.scheme)
    except ValueError as exc:
        raise ConfigError(f"[scenario] {exc}") from None
    return new


# ---------------------------------------------------------------------------
# rendering
# ---------------------------------------------------------------------------

def _render_value(value):
    if isinstance(value, bool):
        raise TypeError("boolean config values are not part of the grammar")
    if isinstance(value, float):
        return repr(value)
    return str(value)


def format_config(config):
    """Render a SimulationConfig back to canonical text (all keys explicit)."""
    grid, phys, scheme = config.grid, config.phys, config.scheme
    lines = []

    def block(name, pairs):
        lines.append(f"[{name}]")
        for key, value in pairs:
            lines.append(f"{key} = {_render_value(value)}")
        lines.append("")

    block("grid", [(k, getattr(grid, k)) for k in _SCHEMAS["grid"]])
    block("physics", [(k, getattr(phys, k)) for k in _SCHEMAS["physics"]])
    block("scheme", [(k, getattr(scheme, k)) for k in _SCHEMAS["scheme"]])
    block(
        "scenario",
        [("id", config.scenario_id)] + sorted(config.scenario_params.items()),
    )
    block(
        "output",
        [
            ("total_time", config.total_time),
            ("output_every", config.output_every),
            ("seed", config.seed),
            ("stop_threshold", config.stop_threshold),
            ("stop_probe", config.stop_probe),
            ("stop_x0", config.stop_x0),
            ("directory", config.output_dir),
        ],
    )
    return "\n".join(lines)
