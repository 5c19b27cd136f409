"""4L-RASE entanglement simulator and analysis pipeline."""
