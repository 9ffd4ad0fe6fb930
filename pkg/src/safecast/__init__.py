"""Risk-responsive motion forecasting: safety-distance kinematics, graph
attention encoders with learnable uncertainty noise, and a maneuver-
conditioned Gaussian-mixture trajectory decoder, plus the training,
evaluation, and data tooling around them."""

__version__ = "0.1.0"
