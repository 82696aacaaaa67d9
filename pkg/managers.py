import copy
import json
import logging
from pathlib import Path

from candidates import MARGIN_SNAPSHOTS, MAX_DD_PHI_RAD, MAX_DELTA_F_HZ, SNR_THRESHOLD_DB
from errors import ConfigError
from excision import NotchSet
from sky_sim import (
    PRESETS,
    BaselineGeometry,
    InjectedPair,
    InjectedRfi,
    InjectedSource,
    SimConfig,
)
from stats import D_MODES
from timebase import ObservatoryClock, Pointing

logger = logging.getLogger(__name__)

FILE_DURATION_HR = {"full": 4.0, "desk": 0.1}
SCHEDULES = ("continuous", "daily")
LEVELS = ("first", "second")


def _defaults(preset: str) -> dict:
    return {
        "simulation": {
            **PRESETS[preset],
            "sigma": 1.0,
            "correlated_fraction": 0.0,
            "quantize_bits": 8,
            "seed": 0,
            "frames_per_tick": 2,
        },
        "geometry": {
            "baseline_wavelengths": 32.0,
            "reference_freq_hz": 1425e6,
        },
        "clock": {
            "mjd_epoch": 60284.0,
            "site_longitude_deg": 0.0,
            "tick_interval_s": 3.0,
        },
        "pointing": {
            "dec_deg": -8.0,
            "azimuth_deg": 180.0,
        },
        "notches": {
            "harmonic_base_hz": 100e3,
            "harmonic_halfwidth_hz": 15e3,
            "lo_exclusion_hz": [1424e6, 1426e6],
            "first_level_band_hz": [1398e6, 1451e6],
            "second_level_band_hz": [1405e6, 1435e6],
        },
        "excision": {
            "snr_threshold_db": SNR_THRESHOLD_DB,
            "trip_threshold": 10,
            "rfi_cap_per_segment": 200,
            "rfi_cap_per_frame": 100,
            "margin_snapshot": "end_of_file",
        },
        "run": {
            "preset": preset,
            "file_duration_hr": FILE_DURATION_HR[preset],
            "ra_of_interest_hr": 5.25,
            "level": "second",
            "schedule": "continuous",
            "n_files": 1,
            "max_delta_f_hz": MAX_DELTA_F_HZ,
            "max_dd_phi_rad": MAX_DD_PHI_RAD,
            "d_mode": "trial",
            "workers": 4,
            "max_lag": 64,
        },
        "injections": {
            "pairs": [],
            "sources": [],
            "rfi": [],
        },
    }


class ConfigManager:
    """Scenario configuration: preset defaults, a JSON scenario on top, then CLI overrides."""

    RESOLVED_FILE = "resolved_config.json"

    def __init__(self, path=None, preset: str | None = None, overrides: dict | None = None):
        self.path = Path(path) if path is not None else None
        scenario = self._load_json(self.path) if self.path is not None else {}
        preset = preset or scenario.get("run", {}).get("preset", "desk")
        if preset not in PRESETS:
            raise ConfigError(f"unknown scale preset '{preset}', expected one of {sorted(PRESETS)}")
        self._config = _defaults(preset)
        self._merge(scenario, source=str(self.path))
        self._config["run"]["preset"] = preset
        if overrides:
            self._merge(overrides, source="command line")
        self.validate()

    def _load_json(self, path: Path) -> dict:
        try:
            with open(path, "r", encoding="utf-8") as f:
                data = json.load(f)
        except json.JSONDecodeError as e:
            raise ConfigError(f"{path} is not valid JSON: {e}") from e
        if not isinstance(data, dict):
            raise ConfigError(f"{path} must hold a JSON object")
        return data

    def _merge(self, data: dict, source: str):
        for section, values in data.items():
            if section not in self._config:
                raise ConfigError(f"{source}: unknown section '{section}'")
            if section == "injections":
                for kind, items in values.items():
                    if kind not in self._config["injections"]:
                        raise ConfigError(f"{source}: unknown injection kind '{kind}'")
                    if not isinstance(items, list):
                        raise ConfigError(f"{source}: injections.{kind} must be a list")
                    self._config["injections"][kind] = list(items)
                continue
            if not isinstance(values, dict):
                raise ConfigError(f"{source}: section '{section}' must be an object")
            for key, value in values.items():
                if key not in self._config[section]:
                    raise ConfigError(f"{source}: unknown key '{section}.{key}'")
                if value is not None:
                    self._config[section][key] = value

    def validate(self):
        """Build every typed object once so bad values fail early."""
        run = self.get_run()
        if not run["file_duration_hr"] > 0:
            raise ConfigError(f"run.file_duration_hr must be > 0, got {run['file_duration_hr']}")
        if not 0.0 <= run["ra_of_interest_hr"] < 24.0:
            raise ConfigError(f"run.ra_of_interest_hr must be within [0, 24), got {run['ra_of_interest_hr']}")
        if run["level"] not in LEVELS:
            raise ConfigError(f"run.level must be one of {LEVELS}, got '{run['level']}'")
        if run["schedule"] not in SCHEDULES:
            raise ConfigError(f"run.schedule must be one of {SCHEDULES}, got '{run['schedule']}'")
        if run["d_mode"] not in D_MODES:
            raise ConfigError(f"run.d_mode must be one of {D_MODES}, got '{run['d_mode']}'")
        if int(run["n_files"]) < 1 or int(run["workers"]) < 1:
            raise ConfigError("run.n_files and run.workers must be >= 1")
        if self.get_excision()["margin_snapshot"] not in MARGIN_SNAPSHOTS:
            raise ConfigError(f"excision.margin_snapshot must be one of {MARGIN_SNAPSHOTS}")
        self.sim_config()
        self.geometry()
        self.clock()
        self.pointing()
        self.notches()
        self.injected_pairs()
        self.injected_sources()
        self.injected_rfi()

    def _build(self, cls, kind: str, values: dict):
        try:
            return cls(**values)
        except TypeError as e:
            raise ConfigError(f"{kind}: {e}") from e

    # --- Sections ---
    def get_section(self, name: str) -> dict:
        return self._config[name]

    def get_run(self) -> dict:
        return self._config["run"]

    def get_excision(self) -> dict:
        return self._config["excision"]

    def as_dict(self) -> dict:
        return copy.deepcopy(self._config)

    # --- Typed views ---
    def sim_config(self) -> SimConfig:
        sim = dict(self._config["simulation"])
        sim["fft_len"] = int(sim["fft_len"])
        return self._build(SimConfig, "simulation", sim)

    def geometry(self) -> BaselineGeometry:
        return self._build(BaselineGeometry, "geometry", self._config["geometry"])

    def clock(self) -> ObservatoryClock:
        return self._build(ObservatoryClock, "clock", self._config["clock"])

    def pointing(self) -> Pointing:
        return self._build(Pointing, "pointing", self._config["pointing"])

    def notches(self) -> NotchSet:
        values = {k: tuple(v) if isinstance(v, list) else v for k, v in self._config["notches"].items()}
        return self._build(NotchSet, "notches", values)

    def injected_pairs(self) -> list[InjectedPair]:
        return [self._build(InjectedPair, "injections.pairs", p) for p in self._config["injections"]["pairs"]]

    def injected_sources(self) -> list[InjectedSource]:
        sources = []
        for s in self._config["injections"]["sources"]:
            s = dict(s)
            if s.get("f_range_hz") is not None:
                s["f_range_hz"] = tuple(s["f_range_hz"])
            sources.append(self._build(InjectedSource, "injections.sources", s))
        return sources

    def injected_rfi(self) -> list[InjectedRfi]:
        return [self._build(InjectedRfi, "injections.rfi", r) for r in self._config["injections"]["rfi"]]

    def save_resolved(self, out_dir) -> Path:
        out = Path(out_dir) / self.RESOLVED_FILE
        out.parent.mkdir(parents=True, exist_ok=True)
        with open(out, "w", encoding="utf-8") as f:
            json.dump(self._config, f, indent=4, sort_keys=True)
        logger.info("resolved configuration written to %s", out)
        return out
