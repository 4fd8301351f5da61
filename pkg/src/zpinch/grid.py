"""Radial node layouts for equilibria and finite-element meshes."""

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError


@dataclass(frozen=True)
class GridSpec:
    """Node count and clustering policy for a radial mesh on ``[0, r0]``.

    ``n`` is the number of elements. ``edge_fraction`` of the elements
    land in the outer ``edge_width`` of the radius; ``axis_stretch`` in
    ``[0, 1)`` shrinks the elements next to the axis by ``1 - axis_stretch``.
    """

    n: int = 256
    edge_fraction: float = 1.0 / 3.0
    edge_width: float = 0.1
    axis_stretch: float = 0.3

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 16:
            raise ConfigError(f"grid needs at least 16 elements, got {self.n}")
        if not 0.0 < self.edge_width < 1.0:
            raise ConfigError("edge_width must lie in (0, 1)")
        if not 0.0 <= self.axis_stretch < 1.0:
            raise ConfigError("axis_stretch must lie in [0, 1)")
        if not 0.0 < self.edge_fraction < 1.0:
            raise ConfigError("edge_fraction must lie in (0, 1)")
        slope = self.edge_slope()
        if not 0.0 < slope <= 1.0:
            raise ConfigError("clustering policy cannot be met by the radial map")

    def edge_slope(self):
        """Relative size of the edge cells compared with a uniform mesh."""
        t_edge = 1.0 - _stretch(1.0 - self.edge_fraction, self.axis_stretch)
        cube = t_edge**_EDGE_POWER
        return float((self.edge_width - cube) / (t_edge - cube))

    def refined(self, factor=2):
        return GridSpec(self.n * factor, self.edge_fraction, self.edge_width, self.axis_stretch)

    def nodes(self, r0):
        return radial_nodes(self, r0)

    @classmethod
    def from_config(cls, block):
        if block is None:
            return cls()
        if isinstance(block, GridSpec):
            return block
        block = dict(block)
        clustering = block.pop("clustering", None)
        kwargs = {"n": block.pop("n", 256)}
        if isinstance(clustering, dict):
            kwargs.update(clustering)
        elif isinstance(clustering, (int, float)):
            kwargs["edge_fraction"] = float(clustering)
        elif clustering not in (None, "default"):
            raise ConfigError(f"unknown clustering policy {clustering!r}")
        if block:
            raise ConfigError(f"unknown grid keys {sorted(block)}")
        try:
            return cls(**kwargs)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc


_EDGE_POWER = 3.0


def _stretch(s, axis_stretch):
    return s - axis_stretch * s * (1.0 - s)


def radial_nodes(spec, r0):
    """Smoothly mapped nodes ``0 = r_0 < ... < r_n = r0``.

    With ``t`` the stretched distance from the edge in index space,
    ``1 - r/r0 = c t + (1 - c) t^3``; ``c`` is fixed by the requested
    fraction of cells in the edge band, so edge cells shrink like ``1/n``.
    """
    s = np.linspace(0.0, 1.0, spec.n + 1)
    t = 1.0 - _stretch(s, spec.axis_stretch)
    c = spec.edge_slope()
    nodes = r0 * (1.0 - (c * t + (1.0 - c) * t**_EDGE_POWER))
    nodes[0] = 0.0
    nodes[-1] = r0
    return nodes
