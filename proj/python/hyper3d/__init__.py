"""Hybrid triplane shape VAE.

Arrays are numpy; shapes are JSON-compatible dicts (see docs/formats.md).
"""

import json as _json

# libtorch must be loaded before the extension resolves its symbols.
import torch as _torch  # noqa: F401

from . import _core
from ._core import ConfigError, RuntimeFailure, occupancy, query_hybrid, token_length

__all__ = [
    "ConfigError",
    "Model",
    "RuntimeFailure",
    "evaluate",
    "occupancy",
    "octree",
    "preset",
    "query_hybrid",
    "sdf",
    "shape_mesh",
    "synthetic_corpus",
    "token_length",
]


def _dump(shape):
    return shape if isinstance(shape, str) else _json.dumps(shape)


def sdf(shape, points):
    """Signed distance of an analytic shape at (N, 3) points; negative inside."""
    return _core.sdf(_dump(shape), points)


def octree(shape, depth):
    """Node and leaf counts per level plus the deepest surface-carrying cell centres."""
    return _core.octree(_dump(shape), depth)


def shape_mesh(shape, resolution=128):
    """Reference mesh (vertices, faces) of an analytic shape by marching cubes."""
    return _core.shape_mesh(_dump(shape), resolution)


def synthetic_corpus(count, seed=0):
    """Deterministic CSG corpus as a list of (name, shape dict)."""
    return [(name, _json.loads(spec)) for name, spec in _core.synthetic_corpus(count, seed)]


def evaluate(recon, gt, normalize=True, seed=0):
    """F-score, chamfer x1e4, normal consistency and Surface IoU of two (vertices, faces) meshes."""
    return _json.loads(_core.evaluate(recon[0], recon[1], gt[0], gt[1], normalize, seed))


def preset(name):
    """VAE configuration of a named preset as a dict."""
    return _json.loads(_core.preset(name))


class Model:
    """A trained or freshly initialised VAE."""

    def __init__(self, path=None, *, _handle=None):
        self._m = _handle if _handle is not None else _core.Model(str(path))

    @classmethod
    def create(cls, config, seed=0):
        return cls(_handle=_core.Model.create(_json.dumps(config), seed))

    @property
    def config(self):
        return _json.loads(self._m.config_json)

    @property
    def token_length(self):
        return self._m.token_length

    def reconstruct(self, shape, extractor, resolution=128, seed=0):
        """Mesh (vertices, faces) of the posterior-mean reconstruction of an analytic shape."""
        return self._m.reconstruct(_dump(shape), str(extractor), resolution, seed)

    def upscale(self, triplane_res, grid_res):
        """Model at a higher latent resolution initialised from this one."""
        return Model(_handle=self._m.upscale(triplane_res, grid_res))

    def save(self, path):
        self._m.save(str(path))
