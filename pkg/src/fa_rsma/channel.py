"""Geometric multipath channels for fluid-antenna users and the LoS sensing channel.

Positions are in meters, angles in radians. Each user ``k`` sees ``L_k`` paths with
angles ``(theta, phi)``; the phase of path ``l`` at a 2-D point ``[x, y]`` is

    (2 pi / wavelength) * (x sin(theta) cos(phi) + y cos(theta))

and the same phase law is used on the BS side (at ``b_n``) and on the user side
(at ``p_k``).
"""

from __future__ import annotations

import configparser
import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Sequence

import numpy as np

SCENARIO_RECORD_VERSION = 1

C0_PRINTED = "printed"
C0_CONVENTIONAL = "conventional"


class ConfigurationError(ValueError):
    """Raised for inconsistent scenario or channel configuration."""


def reference_gain(wavelength: float, convention: str = C0_PRINTED) -> float:
    """Average channel power gain at the 1 m reference distance.

    ``printed`` is (lambda / (4 pi^2))^2, ``conventional`` is the free-space
    (lambda / (4 pi))^2.
    """
    if convention == C0_PRINTED:
        return (wavelength / (4.0 * math.pi**2)) ** 2
    if convention == C0_CONVENTIONAL:
        return (wavelength / (4.0 * math.pi)) ** 2
    raise ConfigurationError(f"unknown C0 convention {convention!r}")


def dbm_to_watt(dbm):
    return 10.0 ** ((np.asarray(dbm, dtype=float) - 30.0) / 10.0)


def watt_to_dbm(watt):
    return 10.0 * np.log10(np.asarray(watt, dtype=float)) + 30.0


def upa_positions(n_antennas: int, wavelength: float, spacing: float | None = None) -> np.ndarray:
    """Square UPA of side ceil(sqrt(N_T)), filled row by row and centred on its centroid."""
    if n_antennas < 1:
        raise ConfigurationError("n_antennas must be >= 1")
    d = wavelength / 2.0 if spacing is None else spacing
    side = math.ceil(math.sqrt(n_antennas))
    idx = np.arange(n_antennas)
    pos = np.stack([idx % side, idx // side], axis=1).astype(float) * d
    return pos - pos.mean(axis=0)


def path_directions(angles: np.ndarray) -> np.ndarray:
    """Map an (L, 2) array of (theta, phi) to the (L, 2) unit-free direction [sin t cos p, cos t]."""
    angles = np.atleast_2d(np.asarray(angles, dtype=float))
    theta, phi = angles[:, 0], angles[:, 1]
    return np.stack([np.sin(theta) * np.cos(phi), np.cos(theta)], axis=1)


def wavevectors(angles: np.ndarray, wavelength: float) -> np.ndarray:
    """(L, 2) array kappa_l with phase_l(p) = kappa_l . p."""
    if wavelength <= 0:
        raise ConfigurationError("wavelength must be positive")
    return (2.0 * math.pi / wavelength) * path_directions(angles)


def rx_field_response(p, angles, wavelength: float) -> np.ndarray:
    """Receive field-response vector f(p), one unit-modulus entry per path."""
    kappa = wavevectors(angles, wavelength)
    return np.exp(1j * (kappa @ np.asarray(p, dtype=float)))


@dataclass(frozen=True)
class ScenarioGeometry:
    bs_positions: np.ndarray
    wavelength: float
    path_angles: tuple[np.ndarray, ...]
    path_responses: tuple[np.ndarray, ...]
    region_side: float
    eve_angles: tuple[float, float]
    eve_gain: float
    eve_azimuth_grid: tuple[float, ...] = ()
    eve_elevation_grid: tuple[float, ...] = ()

    def __post_init__(self):
        if self.wavelength <= 0:
            raise ConfigurationError("wavelength must be positive")
        if self.region_side < 0:
            raise ConfigurationError("region side A_0 must be >= 0")
        if self.eve_gain <= 0:
            raise ConfigurationError("eve gain must be positive")
        if len(self.path_angles) != len(self.path_responses):
            raise ConfigurationError("one angle set and one path-response matrix per user")
        for k, (ang, sig) in enumerate(zip(self.path_angles, self.path_responses)):
            n_paths = np.atleast_2d(ang).shape[0]
            if n_paths < 1:
                raise ConfigurationError(f"user {k}: at least one path required")
            if np.shape(sig) != (n_paths, n_paths):
                raise ConfigurationError(
                    f"user {k}: path-response matrix has shape {np.shape(sig)}, expected {(n_paths, n_paths)}"
                )
        if not self.eve_azimuth_grid:
            object.__setattr__(self, "eve_azimuth_grid", (float(self.eve_angles[0]),))
        if not self.eve_elevation_grid:
            object.__setattr__(self, "eve_elevation_grid", (float(self.eve_angles[1]),))

    @property
    def n_users(self) -> int:
        return len(self.path_angles)

    @property
    def n_antennas(self) -> int:
        return self.bs_positions.shape[0]

    def n_paths(self, k: int) -> int:
        return np.atleast_2d(self.path_angles[k]).shape[0]

    @property
    def half_side(self) -> float:
        return self.region_side / 2.0

    def eve_grid(self) -> list[tuple[float, float]]:
        return [(a, e) for a in self.eve_azimuth_grid for e in self.eve_elevation_grid]

    def with_region(self, region_side: float) -> "ScenarioGeometry":
        return replace(self, region_side=float(region_side))

    def singleton_grid(self) -> "ScenarioGeometry":
        """Same geometry with the angle grid collapsed onto the true Eve angle."""
        return replace(
            self,
            eve_azimuth_grid=(float(self.eve_angles[0]),),
            eve_elevation_grid=(float(self.eve_angles[1]),),
        )

    def scaled(self, user_scale: Sequence[float], eve_power_scale: float) -> "ScenarioGeometry":
        """Amplitude-scale every user's path responses and power-scale the Eve gain."""
        sig = tuple(np.asarray(s) * float(c) for s, c in zip(self.path_responses, user_scale))
        return replace(self, path_responses=sig, eve_gain=self.eve_gain * float(eve_power_scale))


@dataclass(frozen=True)
class FaPlacement:
    positions: np.ndarray  # (K, 2)

    @classmethod
    def origin(cls, n_users: int) -> "FaPlacement":
        return cls(np.zeros((n_users, 2)))

    def inside(self, region_side: float, tol: float = 0.0) -> bool:
        return bool(np.all(np.abs(self.positions) <= region_side / 2.0 + tol))


@dataclass(frozen=True)
class ChannelRealization:
    h: np.ndarray  # (K, N_T) channels used for evaluation
    h_e: np.ndarray  # (N_T,)
    noise_user: np.ndarray  # (K,) watts
    noise_eve: float
    h_hat: np.ndarray | None = None  # (K, N_T) estimates, imperfect mode
    eps: np.ndarray | None = None  # (K,) error radii, imperfect mode

    def __post_init__(self):
        if np.any(np.asarray(self.noise_user) <= 0) or self.noise_eve <= 0:
            raise ConfigurationError("noise powers must be positive")


def tx_field_response_matrix(geometry: ScenarioGeometry, k: int) -> np.ndarray:
    """G_k of shape (L_k, N_T); column n is the transmit field response at b_n."""
    kappa = wavevectors(geometry.path_angles[k], geometry.wavelength)
    return np.exp(1j * (kappa @ geometry.bs_positions.T))


def user_channel(geometry: ScenarioGeometry, placement: FaPlacement | np.ndarray, k: int) -> np.ndarray:
    """h_k = G_k^H Sigma_k f_k(p_k)."""
    pos = placement.positions if isinstance(placement, FaPlacement) else np.asarray(placement)
    sig = np.asarray(geometry.path_responses[k])
    G = tx_field_response_matrix(geometry, k)
    f = rx_field_response(pos[k], geometry.path_angles[k], geometry.wavelength)
    if sig.shape != (G.shape[0], G.shape[0]):
        raise ConfigurationError(f"user {k}: path-response shape {sig.shape} does not match L_k={G.shape[0]}")
    return G.conj().T @ (sig @ f)


def user_channels(geometry: ScenarioGeometry, placement: FaPlacement | np.ndarray) -> np.ndarray:
    return np.stack([user_channel(geometry, placement, k) for k in range(geometry.n_users)])


def steering_vector(geometry: ScenarioGeometry, azimuth: float, elevation: float) -> np.ndarray:
    kappa = wavevectors(np.array([[azimuth, elevation]]), geometry.wavelength)[0]
    return math.sqrt(geometry.eve_gain) * np.exp(1j * (geometry.bs_positions @ kappa))


def sensing_channel(geometry: ScenarioGeometry) -> np.ndarray:
    """LoS channel toward Eve at her nominal angles."""
    return steering_vector(geometry, *geometry.eve_angles)


def sensing_channel_grid(geometry: ScenarioGeometry) -> np.ndarray:
    """One steering vector per (azimuth, elevation) grid pair, shape (N_e1 * N_e2, N_T)."""
    return np.stack([steering_vector(geometry, a, e) for a, e in geometry.eve_grid()])


# -------------------------------------------------------------------- CSI error


def error_radius(h_hat: np.ndarray, rel_error: float, convention: str = "energy") -> float:
    """Error-ball radius from a relative CSI error.

    ``energy``: rel_error = eps^2 / ||h||^2, so eps = sqrt(rel_error) ||h||.
    ``printed``: rel_error = eps^2 / ||h||, so eps = sqrt(rel_error ||h||); unit dependent.
    """
    if rel_error < 0:
        raise ConfigurationError("relative CSI error must be >= 0")
    nrm = float(np.linalg.norm(h_hat))
    if convention == "energy":
        return math.sqrt(rel_error) * nrm
    if convention == "printed":
        return math.sqrt(rel_error * nrm)
    raise ConfigurationError(f"unknown error-radius convention {convention!r}")


def sample_error_sphere(n: int, dim: int, eps: float, rng: np.random.Generator) -> np.ndarray:
    """n complex vectors uniformly distributed on the sphere ||x|| = eps."""
    x = rng.standard_normal((n, dim)) + 1j * rng.standard_normal((n, dim))
    return eps * x / np.linalg.norm(x, axis=1, keepdims=True)


def perturb_channel(
    h_hat: np.ndarray,
    eps: float,
    direction: np.ndarray | None = None,
    *,
    rng: np.random.Generator | None = None,
    boundary: bool = True,
) -> np.ndarray:
    """A channel inside (or on, with ``boundary``) the ball ||h - h_hat|| <= eps.

    ``direction`` fixes the error direction; otherwise one is drawn from ``rng``.
    """
    if eps < 0:
        raise ConfigurationError("eps must be >= 0")
    h_hat = np.asarray(h_hat, dtype=complex)
    if eps == 0:
        return h_hat.copy()
    if direction is None:
        rng = np.random.default_rng() if rng is None else rng
        direction = rng.standard_normal(h_hat.shape) + 1j * rng.standard_normal(h_hat.shape)
    direction = np.asarray(direction, dtype=complex)
    nrm = np.linalg.norm(direction)
    if nrm == 0:
        return h_hat.copy()
    radius = eps
    if not boundary:
        rng = np.random.default_rng() if rng is None else rng
        radius = eps * rng.uniform() ** (1.0 / (2 * h_hat.size))
    return h_hat + radius * direction / nrm


# ------------------------------------------------------------------ sampling


@dataclass(frozen=True)
class ScenarioConfig:
    n_users: int = 4
    n_antennas: int = 4
    n_paths: int = 12
    wavelength: float = 0.1
    region_side: float = 0.3  # A_0 in meters (3 lambda)
    pathloss_exponent: float = 2.8
    c0_convention: str = C0_PRINTED
    user_distance: tuple[float, float] = (20.0, 100.0)
    eve_distance: tuple[float, float] = (10.0, 15.0)
    noise_dbm: float = -80.0
    eve_azimuth_grid: tuple[float, ...] = (math.pi / 10, math.pi / 4)
    eve_elevation_grid: tuple[float, ...] = (math.pi / 10, math.pi / 3)
    angle_range: tuple[float, float] = (0.0, math.pi)
    rel_csi_error: float = 0.01
    error_convention: str = "energy"
    antenna_spacing: float | None = None

    def validate(self):
        if self.n_users < 1 or self.n_antennas < 1 or self.n_paths < 1:
            raise ConfigurationError("K, N_T and L must be >= 1")
        for name in ("user_distance", "eve_distance"):
            lo, hi = getattr(self, name)
            if not 0 < lo <= hi:
                raise ConfigurationError(f"{name} must satisfy 0 < lo <= hi, got {(lo, hi)}")
        if self.wavelength <= 0 or self.region_side < 0:
            raise ConfigurationError("wavelength must be > 0 and region side >= 0")
        if not self.eve_azimuth_grid or not self.eve_elevation_grid:
            raise ConfigurationError("Eve angle grids must be nonempty")
        if self.rel_csi_error < 0:
            raise ConfigurationError("relative CSI error must be >= 0")
        reference_gain(self.wavelength, self.c0_convention)


def sample_scenario(seed: int, config: ScenarioConfig = ScenarioConfig()):
    """Random drop: geometry plus the channel realization at the region centre.

    The draw order is fixed so that the same seed gives the same drop regardless
    of ``region_side``. The returned realization carries the estimate ``h_hat``
    (the geometric channel) and radii ``eps``; ``h`` equals ``h_hat``.
    """
    config.validate()
    rng = np.random.default_rng(seed)
    K, L = config.n_users, config.n_paths
    c0 = reference_gain(config.wavelength, config.c0_convention)
    d_user = rng.uniform(*config.user_distance, size=K)
    d_eve = float(rng.uniform(*config.eve_distance))
    angles = []
    responses = []
    for k in range(K):
        ang = rng.uniform(*config.angle_range, size=(L, 2))
        ck = c0 * d_user[k] ** (-config.pathloss_exponent)
        g = (rng.standard_normal(L) + 1j * rng.standard_normal(L)) * math.sqrt(ck / L / 2.0)
        angles.append(ang)
        responses.append(np.diag(g))
    grid = [(a, e) for a in config.eve_azimuth_grid for e in config.eve_elevation_grid]
    eve = grid[int(rng.integers(len(grid)))]
    geometry = ScenarioGeometry(
        bs_positions=upa_positions(config.n_antennas, config.wavelength, config.antenna_spacing),
        wavelength=config.wavelength,
        path_angles=tuple(angles),
        path_responses=tuple(responses),
        region_side=config.region_side,
        eve_angles=(float(eve[0]), float(eve[1])),
        eve_gain=c0 * d_eve ** (-config.pathloss_exponent),
        eve_azimuth_grid=tuple(float(a) for a in config.eve_azimuth_grid),
        eve_elevation_grid=tuple(float(e) for e in config.eve_elevation_grid),
    )
    h = user_channels(geometry, FaPlacement.origin(K))
    noise = float(dbm_to_watt(config.noise_dbm))
    eps = np.array([error_radius(h[k], config.rel_csi_error, config.error_convention) for k in range(K)])
    channels = ChannelRealization(
        h=h,
        h_e=sensing_channel(geometry),
        noise_user=np.full(K, noise),
        noise_eve=noise,
        h_hat=h.copy(),
        eps=eps,
    )
    return geometry, channels


# --------------------------------------------------------------- config files


_INT_KEYS = {"n_users", "n_antennas", "n_paths"}
_FLOAT_KEYS = {"wavelength", "region_side", "pathloss_exponent", "noise_dbm", "rel_csi_error"}
_PAIR_KEYS = {"user_distance", "eve_distance", "angle_range"}
_LIST_KEYS = {"eve_azimuth_grid", "eve_elevation_grid"}
_STR_KEYS = {"c0_convention", "error_convention"}


def _floats(text: str) -> tuple[float, ...]:
    return tuple(float(eval_number(tok)) for tok in text.replace(",", " ").split())


def eval_number(token: str) -> float:
    """Parse a float, also accepting ``pi`` multiples such as ``pi/10`` or ``0.5*pi``."""
    tok = token.strip().lower().replace(" ", "")
    if "pi" not in tok:
        return float(tok)
    num, _, den = tok.partition("/")
    scale = float(den) if den else 1.0
    num = num.replace("*", "")
    coef = num.replace("pi", "")
    return (float(coef) if coef else 1.0) * math.pi / scale


def load_scenario_config(path: str | Path) -> ScenarioConfig:
    """Read a ``[scenario]`` section of ``key = value`` lines.

    Keys are the field names of :class:`ScenarioConfig`; pairs and lists are
    whitespace- or comma-separated, angles may use ``pi`` (``pi/10``).
    """
    parser = configparser.ConfigParser()
    if not parser.read(path):
        raise ConfigurationError(f"cannot read scenario config {path}")
    if "scenario" not in parser:
        raise ConfigurationError(f"{path}: missing [scenario] section")
    return scenario_config_from_mapping(dict(parser["scenario"]))


def scenario_config_from_mapping(items: dict[str, str]) -> ScenarioConfig:
    kwargs = {}
    for key, raw in items.items():
        if key in _INT_KEYS:
            kwargs[key] = int(raw)
        elif key in _FLOAT_KEYS:
            kwargs[key] = eval_number(raw)
        elif key in _PAIR_KEYS:
            vals = _floats(raw)
            if len(vals) != 2:
                raise ConfigurationError(f"{key} needs two values")
            kwargs[key] = vals
        elif key in _LIST_KEYS:
            kwargs[key] = _floats(raw)
        elif key in _STR_KEYS:
            kwargs[key] = raw.strip()
        elif key == "antenna_spacing":
            kwargs[key] = None if raw.strip().lower() == "none" else eval_number(raw)
        else:
            raise ConfigurationError(f"unknown scenario key {key!r}")
    cfg = ScenarioConfig(**kwargs)
    cfg.validate()
    return cfg


# -------------------------------------------------------- scenario records


def _encode(a) -> list:
    a = np.asarray(a)
    if np.iscomplexobj(a):
        return np.stack([a.real, a.imag], axis=-1).tolist()
    return a.tolist()


def _decode(obj, complex_: bool) -> np.ndarray:
    a = np.asarray(obj, dtype=float)
    return a[..., 0] + 1j * a[..., 1] if complex_ else a


def scenario_to_record(geometry: ScenarioGeometry, channels: ChannelRealization) -> dict:
    """Versioned JSON-ready record; complex entries are [re, im] pairs, matrices row-major."""
    rec = {
        "version": SCENARIO_RECORD_VERSION,
        "geometry": {
            "bs_positions": _encode(geometry.bs_positions),
            "wavelength": geometry.wavelength,
            "path_angles": [_encode(a) for a in geometry.path_angles],
            "path_responses": [_encode(s) for s in geometry.path_responses],
            "region_side": geometry.region_side,
            "eve_angles": list(geometry.eve_angles),
            "eve_gain": geometry.eve_gain,
            "eve_azimuth_grid": list(geometry.eve_azimuth_grid),
            "eve_elevation_grid": list(geometry.eve_elevation_grid),
        },
        "channels": {
            "h": _encode(channels.h),
            "h_e": _encode(channels.h_e),
            "noise_user": _encode(channels.noise_user),
            "noise_eve": channels.noise_eve,
            "h_hat": None if channels.h_hat is None else _encode(channels.h_hat),
            "eps": None if channels.eps is None else _encode(channels.eps),
        },
    }
    return rec


def scenario_from_record(rec: dict):
    if rec.get("version") != SCENARIO_RECORD_VERSION:
        raise ConfigurationError(f"unsupported scenario record version {rec.get('version')!r}")
    g, c = rec["geometry"], rec["channels"]
    geometry = ScenarioGeometry(
        bs_positions=_decode(g["bs_positions"], False),
        wavelength=float(g["wavelength"]),
        path_angles=tuple(_decode(a, False) for a in g["path_angles"]),
        path_responses=tuple(_decode(s, True) for s in g["path_responses"]),
        region_side=float(g["region_side"]),
        eve_angles=tuple(g["eve_angles"]),
        eve_gain=float(g["eve_gain"]),
        eve_azimuth_grid=tuple(g["eve_azimuth_grid"]),
        eve_elevation_grid=tuple(g["eve_elevation_grid"]),
    )
    channels = ChannelRealization(
        h=_decode(c["h"], True),
        h_e=_decode(c["h_e"], True),
        noise_user=_decode(c["noise_user"], False),
        noise_eve=float(c["noise_eve"]),
        h_hat=None if c["h_hat"] is None else _decode(c["h_hat"], True),
        eps=None if c["eps"] is None else _decode(c["eps"], False),
    )
    return geometry, channels


def save_scenario(path: str | Path, geometry: ScenarioGeometry, channels: ChannelRealization) -> None:
    Path(path).write_text(json.dumps(scenario_to_record(geometry, channels)))


def load_scenario(path: str | Path):
    return scenario_from_record(json.loads(Path(path).read_text()))
