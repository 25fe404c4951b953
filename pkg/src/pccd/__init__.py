"""Point-cloud crystal diffusion: encode crystals as 3x128x3 tensors, train a
DDPM noise predictor on them, sample, decode and evaluate."""

__version__ = "0.1.0"
