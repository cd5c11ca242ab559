"""Noise-normalized optimization scenario.

Optimizers work in units where every noise power is 1 and the power budget is 1:
user k's path responses are scaled by sqrt(P0) / sigma_k and the Eve gain by
P0 / sigma_e^2. Rates are unchanged by this rescaling; covariances map back to
watts by multiplying with P0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .channel import (
    ChannelRealization,
    FaPlacement,
    ScenarioGeometry,
    sensing_channel,
    sensing_channel_grid,
    user_channels,
)
from .rates import BeamformerSet, RsmaConfig


@dataclass(frozen=True)
class Scenario:
    geometry: ScenarioGeometry
    config: RsmaConfig
    eps: np.ndarray
    power_watts: float
    noise_user: np.ndarray
    noise_eve: float

    @classmethod
    def from_physical(
        cls,
        geometry: ScenarioGeometry,
        channels: ChannelRealization,
        config: RsmaConfig,
        eps: np.ndarray | None = None,
    ) -> "Scenario":
        p0 = config.p0
        sig = np.asarray(channels.noise_user, dtype=float)
        se = float(channels.noise_eve)
        amp = np.sqrt(p0 / sig)
        norm_geom = geometry.scaled(amp, p0 / se)
        raw_eps = channels.eps if eps is None else eps
        raw_eps = np.zeros(geometry.n_users) if raw_eps is None else np.asarray(raw_eps, dtype=float)
        norm_cfg = RsmaConfig(config.rc, config.alpha, config.s0 / se, 1.0, config.sdma)
        return cls(norm_geom, norm_cfg, raw_eps * amp, p0, sig, se)

    @property
    def n_users(self) -> int:
        return self.geometry.n_users

    @property
    def n_antennas(self) -> int:
        return self.geometry.n_antennas

    @property
    def sdma(self) -> bool:
        return self.config.sdma

    def channels(self, placement: FaPlacement | np.ndarray) -> ChannelRealization:
        h = user_channels(self.geometry, placement)
        return ChannelRealization(
            h=h,
            h_e=sensing_channel(self.geometry),
            noise_user=np.ones(self.n_users),
            noise_eve=1.0,
            h_hat=h,
            eps=self.eps,
        )

    def eve_grid_channels(self) -> np.ndarray:
        return sensing_channel_grid(self.geometry)

    def with_config(self, **changes) -> "Scenario":
        return replace(self, config=replace(self.config, **changes))

    def with_eps(self, eps) -> "Scenario":
        return replace(self, eps=np.broadcast_to(np.asarray(eps, dtype=float), (self.n_users,)).copy())

    def singleton_grid(self) -> "Scenario":
        return replace(self, geometry=self.geometry.singleton_grid())

    def with_region(self, region_side: float) -> "Scenario":
        return replace(self, geometry=self.geometry.with_region(region_side))

    def physical_beams(self, beams: BeamformerSet) -> BeamformerSet:
        return beams.scaled(self.power_watts)

    def max_sensing(self) -> float:
        """Largest achievable normalized sensing energy at the worst grid angle (all power on one beam)."""
        grid = self.eve_grid_channels()
        return float(min(np.linalg.norm(g) ** 2 for g in grid))
