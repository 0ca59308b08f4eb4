"""Experiment configuration: YAML file keys mirror the simulation-parameter table."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field

import yaml

from .channel import doppler_bounds, kmh_to_mps
from .coeffs import CoeffModel
from .errors import ConfigurationError
from .grid import OtfsParams

SCENARIOS = ("sig-nmse", "sig-ber", "est-nmse-snr", "est-nmse-m", "est-ber", "validate", "analyze")


@dataclass
class ExperimentConfig:
    scenario: str
    carrier_frequency_hz: float = 4e9
    subcarrier_spacing_hz: float = 15e3
    num_subcarriers: int = 128
    num_slots: int = 64
    speeds_kmh: list = field(default_factory=lambda: [500])
    alphabet: str = "16QAM"
    l_max: int = 20
    num_paths: int = 4
    m_sweep: list = field(default_factory=lambda: [128, 256, 512, 1024, 2048])
    snr_p_db: list = field(default_factory=lambda: [45])
    ebn0_db: list = field(default_factory=lambda: [10, 15, 20, 25, 30])
    trials: int = 200
    base_seed: int = 1
    model: str = "ideal-exact"
    doppler: str = "grid"
    frames_per_channel: int = 1
    osf: int = 4
    output_path: str | None = None

    def __post_init__(self):
        self._coerce()
        if self.scenario not in SCENARIOS:
            raise ConfigurationError(f"unknown scenario {self.scenario!r}")
        if self.trials < 1:
            raise ConfigurationError("trials must be >= 1")
        if self.frames_per_channel < 1:
            raise ConfigurationError("frames_per_channel must be >= 1")
        if not self.speeds_kmh:
            raise ConfigurationError("speeds_kmh must not be empty")
        if self.num_paths > self.l_max:
            raise ConfigurationError("num_paths cannot exceed l_max (delays are distinct)")
        CoeffModel(self.model)

    def _coerce(self):
        # YAML 1.1 reads "2.0e9" as a string, so numeric fields are cast explicitly
        try:
            for name in _FLOAT_FIELDS:
                setattr(self, name, float(getattr(self, name)))
            for name in _INT_FIELDS:
                val = getattr(self, name)
                if float(val) != int(float(val)):
                    raise ValueError(f"{name} must be an integer")
                setattr(self, name, int(float(val)))
            for name in _LIST_FIELDS:
                setattr(self, name, [float(v) for v in getattr(self, name)])
            self.m_sweep = [int(v) for v in self.m_sweep]
        except (TypeError, ValueError) as exc:
            raise ConfigurationError(f"bad configuration value: {exc}") from None

    @property
    def coeff_model(self) -> CoeffModel:
        return CoeffModel(self.model)

    def params(self, M=None, N=None) -> OtfsParams:
        """Grid parameters with the Doppler cap set by the fastest configured speed."""
        M = M or self.num_subcarriers
        N = N or self.num_slots
        base = OtfsParams(M=M, N=N, delta_f=self.subcarrier_spacing_hz, f_c=self.carrier_frequency_hz,
                          l_max=self.l_max, k_max=0.0)
        _, k_max = doppler_bounds(kmh_to_mps(max(self.speeds_kmh)), base)
        return dataclasses.replace(base, k_max=k_max)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


_FLOAT_FIELDS = ("carrier_frequency_hz", "subcarrier_spacing_hz")
_INT_FIELDS = ("num_subcarriers", "num_slots", "l_max", "num_paths", "trials", "base_seed",
               "frames_per_channel", "osf")
_LIST_FIELDS = ("speeds_kmh", "snr_p_db", "ebn0_db")

# scenario defaults: desk-scale versions of the published figures
SCENARIO_DEFAULTS = {
    "sig-nmse": dict(num_slots=128, speeds_kmh=[100, 360, 500], trials=100, doppler="continuous",
                     m_sweep=[128, 256, 512, 1024, 2048]),
    "sig-ber": dict(num_subcarriers=512, num_slots=128, speeds_kmh=[500], trials=40,
                    ebn0_db=[10, 15, 20, 25, 30]),
    "est-nmse-snr": dict(num_subcarriers=128, num_slots=64, snr_p_db=[20, 25, 30, 35, 40, 45, 50]),
    "est-nmse-m": dict(num_slots=128, m_sweep=[128, 256, 512, 1024], speeds_kmh=[100, 500],
                       snr_p_db=[45], trials=100),
    "est-ber": dict(num_subcarriers=128, num_slots=64, snr_p_db=[45], ebn0_db=[10, 15, 20, 25, 30]),
    "validate": dict(num_subcarriers=32, num_slots=16, l_max=8, trials=100, speeds_kmh=[500]),
    "analyze": dict(num_subcarriers=64, num_slots=32),
}


def make_config(scenario: str, overrides: dict | None = None) -> ExperimentConfig:
    vals = dict(SCENARIO_DEFAULTS.get(scenario, {}))
    vals.update(overrides or {})
    known = {f.name for f in dataclasses.fields(ExperimentConfig)}
    unknown = set(vals) - known
    if unknown:
        raise ConfigurationError(f"unknown configuration keys: {sorted(unknown)}")
    vals["scenario"] = scenario
    return ExperimentConfig(**vals)


def load_config(path, scenario: str) -> ExperimentConfig:
    with open(path) as fh:
        data = yaml.safe_load(fh) or {}
    if not isinstance(data, dict):
        raise ConfigurationError("configuration file must hold a key/value mapping")
    data.pop("scenario", None)
    return make_config(scenario, data)
