# -*- coding: utf-8 -*-
# Copyright (c) The anxietysense project
# This code is distributed under the two-clause BSD License.


"""Small helpers shared across modules."""

import hashlib
import json
import zlib

import numpy as np

# Fixed float formatting keeps CSV outputs byte-identical across reruns.
CSV_FLOAT_FORMAT = '%.10g'


def derive_seed(seed, *keys):
    """Derive a 32-bit seed from a root seed and a sequence of keys.

    Args:
        seed (int): the root seed
        *keys (int or str): identifiers of the task (repetition, participant, ...)

    Returns:
        int: a seed that depends only on its arguments, never on scheduling.
    """
    entropy = [int(seed)]
    for key in keys:
        if isinstance(key, str):
            key = zlib.crc32(key.encode('utf-8'))
        entropy.append(int(key))
    return int(np.random.SeedSequence(entropy).generate_state(1)[0])


def rng_for(seed, *keys):
    """Build a numpy Generator seeded by derive_seed(seed, *keys)."""
    return np.random.default_rng(derive_seed(seed, *keys))


def file_digest(path, chunk_size=1 << 16):
    """Compute the sha256 hex digest of a file."""
    digest = hashlib.sha256()
    with open(path, 'rb') as f:
        for chunk in iter(lambda: f.read(chunk_size), b''):
            digest.update(chunk)
    return digest.hexdigest()


def _json_default(value):
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        return float(value)
    if isinstance(value, np.ndarray):
        return value.tolist()
    if hasattr(value, 'value'):
        # Enums
        return value.value
    raise TypeError("Object of type %s is not JSON serializable" % type(value).__name__)


def dumps_json(data):
    """Serialize to JSON deterministically (sorted keys, NaN as null)."""
    return json.dumps(_nan_to_none(data), sort_keys=True, indent=2, default=_json_default) + '\n'


def _nan_to_none(data):
    if isinstance(data, dict):
        return {k: _nan_to_none(v) for k, v in data.items()}
    if isinstance(data, (list, tuple)):
        return [_nan_to_none(v) for v in data]
    if isinstance(data, float) and data != data:
        return None
    return data


def write_csv(frame, path):
    """Write a DataFrame with the fixed float format and Unix line endings."""
    frame.to_csv(path, index=False, float_format=CSV_FLOAT_FORMAT, na_rep='', lineterminator='\n')


def write_json(data, path):
    with open(path, 'w', encoding='utf-8', newline='\n') as f:
        f.write(dumps_json(data))
