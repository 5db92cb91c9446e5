from __future__ import annotations

import os
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable, Dict, Iterable, List, Tuple

import yaml

from pvtag.errors import ConfigError, DomainError
from pvtag.physics.harvester import FLAT, EnvClass, IlluminationEnv, PvCellSpec, PvModuleSpec, is_flat
from pvtag.physics.power_model import Load, LoadProfile
from pvtag.physics.rf_link import ReaderProfile, TagRfProfile, dbm_to_watts
from pvtag.sim.inventory import Disturbance, LightWindow, Scenario, TagPlacement

SEED_ENV_VAR = "PVTAG_SEED"

_IDENT: Callable[[float], float] = float
_REQUIRED = object()

# quantity -> accepted unit suffix -> conversion to the base unit (first entry)
_QUANTITIES: Dict[str, Dict[str, Callable[[float], float]]] = {
    "transmit_power": {"w": _IDENT, "mw": lambda v: v * 1e-3, "dbm": dbm_to_watts},
    "carrier_frequency": {"hz": _IDENT, "mhz": lambda v: v * 1e6},
    "irradiance": {"w_cm2": _IDENT, "mw_cm2": lambda v: v * 1e-3, "uw_cm2": lambda v: v * 1e-6},
    "cell_area": {"cm2": _IDENT, "mm2": lambda v: v * 1e-2},
    "ic_idle": {"w": _IDENT, "uw": lambda v: v * 1e-6},
    "draw": {"w": _IDENT, "uw": lambda v: v * 1e-6},
    "passive_sensitivity": {"w": _IDENT, "dbm": dbm_to_watts},
    "assisted_sensitivity": {"w": _IDENT, "dbm": dbm_to_watts},
}

_TOP_KEYS = {
    "scenario", "reader", "environment", "pv_modules", "load_profiles",
    "tags", "disturbances", "detector", "telemetry",
}


def _number(value: Any, path: str, unit: str = "") -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        suffix = f" ({unit})" if unit else ""
        raise ConfigError(f"{path}: expected a number{suffix}, got {value!r}")
    return float(value)


def _integer(value: Any, path: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"{path}: expected an integer, got {value!r}")
    return value


def _flag(value: Any, path: str) -> bool:
    if not isinstance(value, bool):
        raise ConfigError(f"{path}: expected true/false, got {value!r}")
    return value


def _list(value: Any, path: str) -> list:
    if value is None:
        return []
    if not isinstance(value, list):
        raise ConfigError(f"{path}: expected a list, got {type(value).__name__}")
    return value


def _vector(value: Any, path: str) -> Tuple[float, float, float]:
    if not isinstance(value, (list, tuple)) or len(value) != 3:
        raise ConfigError(f"{path}: expected [x, y, z] in m, got {value!r}")
    return tuple(_number(v, f"{path}[{i}]", "m") for i, v in enumerate(value))


class _Section:
    """One mapping of the scenario file with a closed key set."""

    def __init__(self, data: Any, path: str, plain: Iterable[str] = (), quantities: Iterable[str] = ()):
        if data is None:
            data = {}
        if not isinstance(data, dict):
            raise ConfigError(f"{path}: expected a mapping, got {type(data).__name__}")
        self.data = data
        self.path = path
        self.quantities = tuple(quantities)
        allowed = set(plain)
        for q in self.quantities:
            allowed.update(f"{q}_{suffix}" for suffix in _QUANTITIES[q])
        unknown = sorted(str(k) for k in data if k not in allowed)
        if unknown:
            raise ConfigError(
                f"{path}: unknown key(s) {unknown}; allowed: {sorted(allowed)}"
            )

    def key(self, name: str) -> str:
        return f"{self.path}.{name}" if self.path else name

    def get(self, name: str, default: Any = None) -> Any:
        return self.data.get(name, default)

    def has(self, name: str) -> bool:
        return name in self.data

    def quantity(self, base: str, default: Any = _REQUIRED) -> Any:
        units = _QUANTITIES[base]
        given = [f"{base}_{s}" for s in units if f"{base}_{s}" in self.data]
        if len(given) > 1:
            raise ConfigError(f"{self.path}: give only one of {given}")
        if not given:
            if default is _REQUIRED:
                spellings = ", ".join(f"{base}_{s}" for s in units)
                raise ConfigError(f"{self.path}: missing required quantity ({spellings})")
            return default
        key = given[0]
        suffix = key[len(base) + 1:]
        return units[suffix](_number(self.data[key], self.key(key), suffix))


def _build(path: str, factory: Callable[..., Any], **kwargs: Any) -> Any:
    try:
        return factory(**kwargs)
    except DomainError as exc:
        raise ConfigError(f"{path}: {exc}") from exc


@dataclass
class PvTagConfig:
    raw: Dict[str, Any]

    def __post_init__(self) -> None:
        if not isinstance(self.raw, dict):
            raise ConfigError("scenario file must be a mapping at the top level")
        _Section(self.raw, "", plain=_TOP_KEYS)

    @property
    def reader(self) -> ReaderProfile:
        s = _Section(
            self.raw.get("reader"), "reader",
            plain={"antenna_gain_dbi", "allow_over_limit", "allow_out_of_band"},
            quantities=("transmit_power", "carrier_frequency"),
        )
        return _build(
            "reader", ReaderProfile,
            transmit_power=s.quantity("transmit_power", 1.0),
            antenna_gain_dbi=_number(s.get("antenna_gain_dbi", 8.5), s.key("antenna_gain_dbi"), "dBi"),
            carrier_frequency=s.quantity("carrier_frequency", 915e6),
            allow_over_limit=_flag(s.get("allow_over_limit", False), s.key("allow_over_limit")),
            allow_out_of_band=_flag(s.get("allow_out_of_band", False), s.key("allow_out_of_band")),
        )

    @property
    def environment(self) -> IlluminationEnv:
        s = _Section(
            self.raw.get("environment"), "environment",
            plain={"class", "light_schedule"}, quantities=("irradiance",),
        )
        try:
            env_class = EnvClass(s.get("class", EnvClass.INDOOR_LIT.value))
        except ValueError as exc:
            raise ConfigError(
                f"environment.class: expected one of {[c.value for c in EnvClass]}, got {s.get('class')!r}"
            ) from exc
        return _build(
            "environment", IlluminationEnv.for_class,
            env_class=env_class, irradiance=s.quantity("irradiance", None),
        )

    @property
    def light_schedule(self) -> Tuple[LightWindow, ...]:
        env = self.raw.get("environment") or {}
        windows = []
        for i, item in enumerate(_list(env.get("light_schedule"), "environment.light_schedule")):
            path = f"environment.light_schedule[{i}]"
            s = _Section(item, path, plain={"start_round", "end_round", "scale"})
            windows.append(LightWindow(
                start_round=_integer(s.get("start_round"), s.key("start_round")),
                end_round=_integer(s.get("end_round"), s.key("end_round")),
                scale=_number(s.get("scale"), s.key("scale")),
            ))
        return tuple(windows)

    @property
    def pv_modules(self) -> Dict[str, PvModuleSpec]:
        modules = self.raw.get("pv_modules") or {}
        if not isinstance(modules, dict):
            raise ConfigError("pv_modules: expected a mapping of name -> module")
        out = {}
        for name, item in modules.items():
            path = f"pv_modules.{name}"
            s = _Section(
                item, path,
                plain={"efficiency", "indoor_efficiency", "vmpp_v", "series_count", "parallel_count", "bend_radius_mm"},
                quantities=("cell_area",),
            )
            indoor = s.get("indoor_efficiency")
            bend = s.get("bend_radius_mm", FLAT)
            cell = _build(
                path, PvCellSpec,
                efficiency=_number(s.get("efficiency", 0.13), s.key("efficiency")),
                vmpp=_number(s.get("vmpp_v", 0.88), s.key("vmpp_v"), "V"),
                active_area=s.quantity("cell_area", 1.0),
                indoor_efficiency=None if indoor is None else _number(indoor, s.key("indoor_efficiency")),
            )
            out[str(name)] = _build(
                path, PvModuleSpec,
                cell=cell,
                series_count=_integer(s.get("series_count", 1), s.key("series_count")),
                parallel_count=_integer(s.get("parallel_count", 1), s.key("parallel_count")),
                bend_radius=FLAT if is_flat(bend) else _number(bend, s.key("bend_radius_mm"), "mm"),
            )
        return out

    @property
    def load_profiles(self) -> Dict[str, LoadProfile]:
        profiles = self.raw.get("load_profiles") or {}
        if not isinstance(profiles, dict):
            raise ConfigError("load_profiles: expected a mapping of name -> profile")
        out = {}
        for name, item in profiles.items():
            path = f"load_profiles.{name}"
            s = _Section(item, path, plain={"loads"}, quantities=("ic_idle",))
            loads = []
            for i, entry in enumerate(_list(s.get("loads"), s.key("loads"))):
                lpath = f"{path}.loads[{i}]"
                ls = _Section(entry, lpath, plain={"name", "min_voltage_v"}, quantities=("draw",))
                loads.append(_build(
                    lpath, Load,
                    name=str(ls.get("name", f"load{i}")),
                    draw=ls.quantity("draw"),
                    min_voltage=_number(ls.get("min_voltage_v", 0.5), ls.key("min_voltage_v"), "V"),
                ))
            out[str(name)] = _build(path, LoadProfile, ic_idle=s.quantity("ic_idle", 10e-6), loads=tuple(loads))
        return out

    def _tag_entries(self) -> List[_Section]:
        tags = _list(self.raw.get("tags"), "tags")
        return [
            _Section(
                item, f"tags[{i}]",
                plain={"id", "position_m", "antenna_gain_dbi", "transmission_coefficient",
                       "backscatter_gain", "pv_module", "load_profile"},
                quantities=("passive_sensitivity", "assisted_sensitivity"),
            )
            for i, item in enumerate(tags)
        ]

    @property
    def tags(self) -> Tuple[TagPlacement, ...]:
        modules = self.pv_modules
        profiles = self.load_profiles
        out = []
        for s in self._tag_entries():
            if "id" not in s.data:
                raise ConfigError(f"{s.path}: missing required key 'id'")
            tag_id = str(s.get("id"))
            rf = _build(
                s.path, TagRfProfile,
                antenna_gain_dbi=_number(s.get("antenna_gain_dbi", 2.15), s.key("antenna_gain_dbi"), "dBi"),
                transmission_coefficient=_number(
                    s.get("transmission_coefficient", 1.0), s.key("transmission_coefficient")
                ),
                passive_sensitivity=s.quantity("passive_sensitivity", dbm_to_watts(-9.0)),
                assisted_sensitivity=s.quantity("assisted_sensitivity", dbm_to_watts(-23.0)),
            )
            module_name = s.get("pv_module")
            if module_name is not None and module_name not in modules:
                raise ConfigError(
                    f"{s.key('pv_module')}: unknown module '{module_name}' (defined: {sorted(modules)})"
                )
            profile_name = s.get("load_profile")
            if profile_name is not None and profile_name not in profiles:
                raise ConfigError(
                    f"{s.key('load_profile')}: unknown profile '{profile_name}' (defined: {sorted(profiles)})"
                )
            out.append(_build(
                s.path, TagPlacement,
                tag_id=tag_id,
                position=_vector(s.get("position_m"), s.key("position_m")),
                rf=rf,
                pv_module=None if module_name is None else modules[module_name],
                loads=LoadProfile() if profile_name is None else profiles[profile_name],
                backscatter_gain=_number(s.get("backscatter_gain", 1.0), s.key("backscatter_gain")),
            ))
        return tuple(out)

    @property
    def disturbances(self) -> Tuple[Disturbance, ...]:
        out = []
        for i, item in enumerate(_list(self.raw.get("disturbances"), "disturbances")):
            s = _Section(item, f"disturbances[{i}]", plain={"tag", "start_round", "end_round", "offset_db"})
            out.append(Disturbance(
                tag_id=str(s.get("tag")),
                start_round=_integer(s.get("start_round"), s.key("start_round")),
                end_round=_integer(s.get("end_round"), s.key("end_round")),
                offset_db=_number(s.get("offset_db"), s.key("offset_db"), "dB"),
            ))
        return tuple(out)

    @property
    def seed(self) -> int:
        override = os.environ.get(SEED_ENV_VAR)
        if override is not None and override.strip():
            try:
                return int(override, 0)
            except ValueError as exc:
                raise ConfigError(f"{SEED_ENV_VAR}: expected an integer, got {override!r}") from exc
        s = self._scenario_section()
        return _integer(s.get("seed", 0), s.key("seed"))

    def _scenario_section(self) -> _Section:
        return _Section(
            self.raw.get("scenario"), "scenario",
            plain={"rounds", "q_init", "q_step", "rssi_noise_sigma_db", "seed", "reader_position_m"},
        )

    @property
    def scenario(self) -> Scenario:
        s = self._scenario_section()
        position = s.get("reader_position_m")
        return _build(
            "scenario", Scenario,
            reader=self.reader,
            tags=self.tags,
            env=self.environment,
            rounds=_integer(s.get("rounds", 100), s.key("rounds")),
            q_init=_integer(s.get("q_init", 4), s.key("q_init")),
            rssi_noise_sigma=_number(s.get("rssi_noise_sigma_db", 0.0), s.key("rssi_noise_sigma_db"), "dB"),
            seed=self.seed,
            q_step=_number(s.get("q_step", 0.2), s.key("q_step")),
            reader_position=(0.0, 0.0, 0.0) if position is None else _vector(position, s.key("reader_position_m")),
            light_schedule=self.light_schedule,
            disturbances=self.disturbances,
        )

    @property
    def detector_cfg(self) -> Dict[str, Any]:
        s = _Section(self.raw.get("detector"), "detector", plain={"calib_window", "k_sigma", "min_run", "sigma_floor_db"})
        cfg: Dict[str, Any] = {}
        if s.has("calib_window"):
            cfg["calib_window"] = _integer(s.get("calib_window"), s.key("calib_window"))
        if s.has("k_sigma"):
            cfg["k_sigma"] = _number(s.get("k_sigma"), s.key("k_sigma"))
        if s.has("min_run"):
            cfg["min_run"] = _integer(s.get("min_run"), s.key("min_run"))
        if s.has("sigma_floor_db"):
            cfg["sigma_floor"] = _number(s.get("sigma_floor_db"), s.key("sigma_floor_db"), "dB")
        return cfg

    @property
    def telemetry_cfg(self) -> Dict[str, Any]:
        s = _Section(self.raw.get("telemetry"), "telemetry", plain={"quantization_c"})
        if s.has("quantization_c"):
            return {"quantization": _number(s.get("quantization_c"), s.key("quantization_c"), "degC")}
        return {}

    def dump_normalized(self) -> str:
        """The scenario in base units; parses back to an equal ``Scenario``."""
        sc = self.scenario
        r = sc.reader
        modules = self.pv_modules
        profiles = self.load_profiles
        doc: Dict[str, Any] = {
            "scenario": {
                "rounds": sc.rounds,
                "q_init": sc.q_init,
                "q_step": sc.q_step,
                "rssi_noise_sigma_db": sc.rssi_noise_sigma,
                "seed": sc.seed,
                "reader_position_m": list(sc.reader_position),
            },
            "reader": {
                "transmit_power_w": r.transmit_power,
                "antenna_gain_dbi": r.antenna_gain_dbi,
                "carrier_frequency_hz": r.carrier_frequency,
                "allow_over_limit": r.allow_over_limit,
                "allow_out_of_band": r.allow_out_of_band,
            },
            "environment": {
                "class": sc.env.env_class.value,
                "irradiance_w_cm2": sc.env.irradiance,
                "light_schedule": [
                    {"start_round": w.start_round, "end_round": w.end_round, "scale": w.scale}
                    for w in sc.light_schedule
                ],
            },
            "pv_modules": {
                name: {
                    "efficiency": m.cell.efficiency,
                    **({"indoor_efficiency": m.cell.indoor_efficiency}
                       if m.cell.indoor_efficiency is not None else {}),
                    "vmpp_v": m.cell.vmpp,
                    "cell_area_cm2": m.cell.active_area,
                    "series_count": m.series_count,
                    "parallel_count": m.parallel_count,
                    "bend_radius_mm": FLAT if is_flat(m.bend_radius) else m.bend_radius,
                }
                for name, m in modules.items()
            },
            "load_profiles": {
                name: {
                    "ic_idle_w": p.ic_idle,
                    "loads": [
                        {"name": ld.name, "draw_w": ld.draw, "min_voltage_v": ld.min_voltage}
                        for ld in p.loads
                    ],
                }
                for name, p in profiles.items()
            },
            "tags": [],
            "disturbances": [
                {"tag": d.tag_id, "start_round": d.start_round, "end_round": d.end_round, "offset_db": d.offset_db}
                for d in sc.disturbances
            ],
        }
        for entry, tag in zip(self._tag_entries(), sc.tags):
            item: Dict[str, Any] = {
                "id": tag.tag_id,
                "position_m": list(tag.position),
                "antenna_gain_dbi": tag.rf.antenna_gain_dbi,
                "transmission_coefficient": tag.rf.transmission_coefficient,
                "passive_sensitivity_w": tag.rf.passive_sensitivity,
                "assisted_sensitivity_w": tag.rf.assisted_sensitivity,
                "backscatter_gain": tag.backscatter_gain,
            }
            for ref in ("pv_module", "load_profile"):
                if entry.get(ref) is not None:
                    item[ref] = entry.get(ref)
            doc["tags"].append(item)
        for section in ("detector", "telemetry"):
            if self.raw.get(section):
                doc[section] = self.raw[section]
        return yaml.safe_dump(doc, sort_keys=False)


def load_config(path: str | Path) -> PvTagConfig:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"Scenario file not found: {path}")

    with path.open("r", encoding="utf-8") as f:
        try:
            raw = yaml.safe_load(f) or {}
        except yaml.YAMLError as exc:
            raise ConfigError(f"{path}: not valid YAML ({exc})") from exc

    return PvTagConfig(raw=raw)
