"""Regenerate the instance files bundled with the package."""
from pathlib import Path

import numpy as np

from abstract_mixing import serialization
from abstract_mixing.adapters import LinearOperatorSpec, LipschitzMapSpec, path_metric
from abstract_mixing.core_model import Instance
from abstract_mixing.mixed_families import MixedFamilyValues
from abstract_mixing.mixing import SeminormBallModel, random_two_layer
from abstract_mixing.multilinear import MultilinearInstance
from abstract_mixing.core_model import ExponentParams

OUT = Path(__file__).resolve().parents[1] / "src" / "abstract_mixing" / "data"


def main():
    OUT.mkdir(exist_ok=True)
    rng = np.random.default_rng(20240601)

    eye = np.eye(2).reshape(2, 1, 1, 2)
    serialization.save(Instance(np.ones((2, 1, 1)), eye, eye), OUT / "identity.json", {"q": 1.0, "s": 1.0})

    serialization.save(MixedFamilyValues([1.0, 1.0], [[1.0, 0.0], [0.0, 1.0]]), OUT / "family.json",
                       {"q": 1.0, "s": 2.0})

    coeff = np.zeros((2, 1, 1, 2))
    coeff[0, 0, 0, 0], coeff[1, 0, 0, 1] = 1.0, 0.5
    ball = SeminormBallModel.linf(coeff)
    H = rng.uniform(0.1, 1.0, size=(2, 1, 1, 3))
    serialization.save(ball.instance(np.ones((2, 1, 1)), H), OUT / "ball.json", {"q": 1.0, "s": 2.0}, ball)

    serialization.save(random_two_layer(rng), OUT / "two_layer.json", {"q": 1.0, "s": 2.0, "t": 4.0})

    c2 = rng.uniform(-1.0, 1.0, size=(4, 1, 2, 2))
    ball2 = SeminormBallModel.linf(c2)
    Hs = (rng.uniform(0.1, 1.0, size=(4, 1, 1, 2)), rng.uniform(0.1, 1.0, size=(4, 1, 2, 3)))
    mi = MultilinearInstance((2, 2), (1,), (1, 2), Hs, ball2.M_tensor(), (1.0, 1.0), ExponentParams(1.0, 2.0))
    serialization.save(mi, OUT / "multilinear.json", ball=ball2)

    serialization.save(LinearOperatorSpec(np.array([[1.0, 0.5], [-0.25, 0.75]])), OUT / "linear.json",
                       {"q": 1.0, "s": 2.0})
    serialization.save(LipschitzMapSpec(path_metric(3), 0.5 * path_metric(3), [0, 1, 2]), OUT / "lipschitz.json",
                       {"q": 1.0, "s": 2.0})


if __name__ == "__main__":
    main()
