"""Security-game harness: oracles, blinded world, experiments, adversaries."""
