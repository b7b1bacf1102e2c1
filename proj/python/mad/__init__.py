"""Python bindings for the mad toolkit."""

import json as _json
import os as _os
import sys as _sys

_ext_dir = _os.environ.get("MAD_EXTENSION_DIR")
if _ext_dir:
    _sys.path.insert(0, _ext_dir)
    import _core
else:
    from . import _core

MadError = _core.MadError
segment_clips = _core.segment_clips
filter_clips = _core.filter_clips
ade = _core.ade
min_ade = _core.min_ade
apd = _core.apd
iou = _core.iou
frechet_distance = _core.frechet_distance
synth_scene = _core.synth_scene
render_pose = _core.render_pose
latent_mask = _core.latent_mask
inject_noise = _core.inject_noise


def fit_ratings(records, criterion="general", models=()):
    """Fits Elo-scale ratings to preference records (dicts or a JSONL string)."""
    if not isinstance(records, str):
        records = "\n".join(_json.dumps(r) for r in records)
    return _json.loads(_core.fit_ratings_json(records, criterion, list(models)))


__all__ = [
    "MadError", "segment_clips", "filter_clips", "ade", "min_ade", "apd", "iou",
    "frechet_distance", "fit_ratings", "synth_scene", "render_pose", "latent_mask",
    "inject_noise",
]
