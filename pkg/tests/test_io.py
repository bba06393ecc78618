import io
import json

import numpy as np
import pytest

from deepshift.cae import init_model
from deepshift.conv_core import random_network
from deepshift.io import ModelFileError, dump_model, load_model, read_stream_csv


def test_network_round_trip_bit_identical():
    net = random_network(np.random.default_rng(0), [3, 2], [4, 5, 2])
    back, dec = load_model(dump_model(net))
    assert dec is None
    for a, b in zip(net.layers, back.layers):
        assert a.weights.tobytes() == b.weights.tobytes()
        assert a.bias.tobytes() == b.bias.tobytes()
        assert a.activation == b.activation


def test_cae_round_trip_keeps_decoder_bias():
    model = init_model(3, 2, 4, seed=1)
    model = model.with_params(model.encoder.weights, model.encoder.bias, [0.1, 1 / 3, -2e-17])
    net, dec = load_model(dump_model(model))
    assert dec.tobytes() == model.decoder_bias.tobytes()
    assert net.layers[0].weights.tobytes() == model.encoder.weights.tobytes()


def test_mismatched_chaining_rejected():
    net = random_network(np.random.default_rng(0), [3, 2], [4, 5, 2])
    doc = json.loads(dump_model(net))
    doc["layers"][1] = json.loads(dump_model(
        random_network(np.random.default_rng(1), [2], [3, 2])))["layers"][0]
    with pytest.raises(ModelFileError, match="C_out"):
        load_model(json.dumps(doc))


@pytest.mark.parametrize("text", ["not json", "{}", '{"layers": [{"w": 1}]}',
                                  '{"layers": [{"w": 2, "c_in": 1, "c_out": 1, '
                                  '"weights": [[[1.0]]], "bias": [0.0]}]}'])
def test_malformed_documents(text):
    with pytest.raises(ModelFileError):
        load_model(text)


def test_stream_csv():
    data = read_stream_csv(io.StringIO("# comment\nc0,c1\n1,2\n3,4.5\n"))
    assert data.tolist() == [[1.0, 2.0], [3.0, 4.5]]
