"""Run configuration: TOML parsing, validation, and flat overrides.

Every section mirrors a module config; unknown keys are rejected so stale
campaign files fail loudly. Defaults reproduce the baseline system.
"""

from __future__ import annotations

import dataclasses
import os

try:
    import tomllib  # Python >= 3.11
except ModuleNotFoundError:  # pragma: no cover - depends on interpreter
    import tomli as tomllib

from .campaign import SystemConfig
from .counts import EFFICIENT, STANDARD, ErrorModel, ProtocolParams
from .finitekey import SecurityParams
from .link import LinkModel, receiver_scaling_db
from .optimizer import OptConfig, OptSpace
from .orbit import OrbitConfig

THREADS_ENV_VAR = "SATKEY_THREADS"


class ConfigError(ValueError):
    """Invalid configuration; message names the offending key and constraint."""


_SECTION_FIELDS = {
    "orbit": {"altitude_km", "earth_radius_km", "mu_km3_s2", "min_elevation_deg", "time_step_s"},
    "link": {
        "eta_link_sys_db",
        "offset_db",
        "receiver_diameter_m",
        "p_ec",
        "p_ap",
        "airmass_db",
        "curve_file",
    },
    "error": {"intrinsic_qber"},
    "protocol": {"mu1", "mu2", "p1", "p2", "p_x", "p_x_receiver", "source_rate_hz", "variant"},
    "security": {"eps_c", "eps_s", "n_chernoff"},
    "optimizer": {
        "p_x_min",
        "p_x_max",
        "mu1_min",
        "mu1_max",
        "mu2_min",
        "mu2_max",
        "p3_min",
        "dt_resolution_s",
        "starts",
        "warm_starts",
        "maxiter",
        "keep_trace",
    },
    "campaign": {
        "d_min_step_km",
        "d_min_max_km",
        "latitude_deg",
        "eta_offsets_db",
        "p_ec_values",
        "qber_i_values",
        "max_passes",
    },
}
_TOP_LEVEL = {"seed", "out_dir", "threads"} | set(_SECTION_FIELDS)


def _check_keys(raw: dict) -> None:
    for key, value in raw.items():
        if key not in _TOP_LEVEL:
            raise ConfigError(f"unknown top-level key {key!r}")
        if key in _SECTION_FIELDS:
            if not isinstance(value, dict):
                raise ConfigError(f"section {key!r} must be a table")
            for sub in value:
                if sub not in _SECTION_FIELDS[key]:
                    raise ConfigError(f"unknown key {key}.{sub!r}")


@dataclasses.dataclass
class RunConfig:
    """Validated configuration for one CLI invocation."""

    system: SystemConfig
    protocol: ProtocolParams
    seed: int = 0
    out_dir: str = "."
    threads: int = 1
    campaign: dict = dataclasses.field(default_factory=dict)
    raw: dict = dataclasses.field(default_factory=dict)

    @classmethod
    def from_dict(cls, raw: dict) -> "RunConfig":
        _check_keys(raw)
        try:
            orbit = OrbitConfig(**raw.get("orbit", {}))

            link_raw = dict(raw.get("link", {}))
            curve_file = link_raw.pop("curve_file", None)
            receiver = link_raw.pop("receiver_diameter_m", None)
            if "eta_link_sys_db" in link_raw:
                link_raw["zenith_loss_db"] = link_raw.pop("eta_link_sys_db")
            link_raw.setdefault("altitude_km", orbit.altitude_km)
            link_raw.setdefault("earth_radius_km", orbit.earth_radius_km)
            if curve_file is not None:
                link = LinkModel.from_csv(curve_file, **link_raw)
            else:
                link = LinkModel(**link_raw)
            if receiver is not None:
                link = link.with_offset(receiver_scaling_db(receiver))

            error = ErrorModel(**raw.get("error", {}))
            security = SecurityParams(**raw.get("security", {}))

            proto_raw = dict(raw.get("protocol", {}))
            variant = proto_raw.pop("variant", "efficient")
            variant = {"efficient": EFFICIENT, "standard": STANDARD,
                       EFFICIENT: EFFICIENT, STANDARD: STANDARD}.get(variant)
            if variant is None:
                raise ConfigError("protocol.variant must be 'efficient' or 'standard'")
            mu1 = proto_raw.pop("mu1", 0.5)
            mu2 = proto_raw.pop("mu2", 0.08)
            p1 = proto_raw.pop("p1", 0.72)
            p2 = proto_raw.pop("p2", 0.18)
            protocol = ProtocolParams(
                mu=(mu1, mu2, 0.0),
                p_mu=(p1, p2, 1.0 - p1 - p2),
                p_x=proto_raw.pop("p_x", 0.5 if variant == STANDARD else 0.889),
                source_rate_hz=proto_raw.pop("source_rate_hz", 1e8),
                variant=variant,
                p_x_receiver=proto_raw.pop("p_x_receiver", None),
            )

            opt_raw = dict(raw.get("optimizer", {}))
            space = OptSpace(
                p_x_bounds=(opt_raw.pop("p_x_min", 0.5), opt_raw.pop("p_x_max", 0.99)),
                mu1_bounds=(opt_raw.pop("mu1_min", 0.1), opt_raw.pop("mu1_max", 1.0)),
                mu2_bounds=(opt_raw.pop("mu2_min", 0.01), opt_raw.pop("mu2_max", 0.5)),
                p3_min=opt_raw.pop("p3_min", 0.01),
                dt_resolution_s=opt_raw.pop("dt_resolution_s", 1.0),
            )
            opt = OptConfig(
                starts=opt_raw.pop("starts", 8),
                warm_starts=opt_raw.pop("warm_starts", 2),
                maxiter=opt_raw.pop("maxiter", 300),
                keep_trace=opt_raw.pop("keep_trace", False),
            )

            seed = int(raw.get("seed", 0))
            threads = int(raw.get("threads", 0)) or int(os.environ.get(THREADS_ENV_VAR, 1))
            system = SystemConfig(
                orbit=orbit,
                link=link,
                error=error,
                security=security,
                space=space,
                opt=opt,
                source_rate_hz=protocol.source_rate_hz,
                variant=variant,
                seed=seed,
            )
        except ConfigError:
            raise
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from exc
        return cls(
            system=system,
            protocol=protocol,
            seed=seed,
            out_dir=str(raw.get("out_dir", ".")),
            threads=max(threads, 1),
            campaign=dict(raw.get("campaign", {})),
            raw=raw,
        )

    @classmethod
    def load(cls, path: str | None, overrides: dict | None = None) -> "RunConfig":
        raw: dict = {}
        if path is not None:
            with open(path, "rb") as fh:
                raw = tomllib.load(fh)
        if overrides:
            for dotted, value in overrides.items():
                section, _, key = dotted.partition(".")
                if not key:
                    raw[section] = value
                else:
                    raw.setdefault(section, {})[key] = value
        return cls.from_dict(raw)
