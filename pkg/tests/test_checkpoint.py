import numpy as np
import pytest

from crimecast import checkpoint
from crimecast.checkpoint import CheckpointError
from crimecast.nn import NetworkSpec, init_params, network_forward


def test_round_trip_bit_exact(tmp_path):
    params = init_params(4, NetworkSpec(10, 8, 4, 0.3))
    path = tmp_path / "m.ckpt"
    checkpoint.save(params, path)
    loaded = checkpoint.load(path)
    assert loaded.sizes == params.sizes
    assert loaded.dropout_rate == 0.3 and loaded.seed == params.seed
    for (na, a), (nb, b) in zip(params.named_arrays(), loaded.named_arrays()):
        assert na == nb and a.tobytes() == b.tobytes()
    x = np.random.default_rng(0).normal(size=(5, 10))
    assert network_forward(params, x)[0] == network_forward(loaded, x)[0]


def test_seedless_round_trip():
    params = init_params(1, NetworkSpec(2, 2, 2))
    params.seed = None
    assert checkpoint.loads(checkpoint.dumps(params)).seed is None


def test_header():
    blob = checkpoint.dumps(init_params(0, NetworkSpec(3, 2, 1)))
    assert blob[:8] == b"CRCASTNN"
    assert int.from_bytes(blob[8:12], "little") == 1


@pytest.mark.parametrize("mutate", [
    lambda b: b"XXXXXXXX" + b[8:],
    lambda b: b[:8] + (2).to_bytes(4, "little") + b[12:],
    lambda b: b[:-8],
    lambda b: b + b"\0",
    lambda b: b[:10],
])
def test_corrupt_checkpoints(mutate):
    blob = checkpoint.dumps(init_params(0, NetworkSpec(3, 2, 1)))
    with pytest.raises(CheckpointError):
        checkpoint.loads(mutate(blob))
