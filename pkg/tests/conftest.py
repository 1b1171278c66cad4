import pytest
from causal_probe.generators import (SUCCESSION_DIGITS, make_succession_task,
                                     succession_names)
from causal_probe.networks import init_network
from causal_probe.training import train

SUCCESSION_SEED = 0
SUCCESSION_HIDDEN = 32


@pytest.fixture(scope="session")
def trained_succession():
    """
    The succession toy trained the way `causalprobe gen succession` does.
    """
    dataset = make_succession_task(SUCCESSION_SEED)
    network = init_network([dataset.width, SUCCESSION_HIDDEN,
                            SUCCESSION_DIGITS], ["relu", "identity"],
                           SUCCESSION_SEED,
                           succession_names(SUCCESSION_HIDDEN))
    result = train(network, dataset, 4000, 0.5, SUCCESSION_SEED)
    return result.network, dataset
