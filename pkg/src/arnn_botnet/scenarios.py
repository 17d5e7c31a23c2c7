"""Named synthetic scenarios shared by the scripts and the test suite."""

from .synth import SynthConfig

# 20 nodes, 200 slots. Two seeds start attacking at slot 125 (about 62% into
# the trace) and 40% of the rest are susceptible, so roughly a third of the
# nodes end up compromised.
OUTBREAK = SynthConfig(
    seed=1,
    n_nodes=20,
    n_slots=200,
    initial_compromised=(0, 1),
    attack_fraction=1.0,
    infection_threshold=0.3,
    attack_rate_factor=5.0,
    onset_slot=125,
    benign_skew=1.0,
    susceptible_fraction=0.4,
)
