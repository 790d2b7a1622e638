"""First-harmonic oscillation profile shared by the analytic and simulated paths."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = ["OscillationProfile", "wrap_pi", "wrap_deg360"]


def wrap_pi(angle):
    """Wrap radians into (-pi, pi]."""
    w = np.mod(np.asarray(angle, dtype=float) + math.pi, 2 * math.pi) - math.pi
    w = np.where(w == -math.pi, math.pi, w)
    return float(w) if np.ndim(w) == 0 else w


def wrap_deg360(angle_rad):
    """Radians to degrees in [0, 360)."""
    d = np.mod(np.degrees(np.asarray(angle_rad, dtype=float)), 360.0)
    d = np.where(np.isclose(d, 360.0, rtol=0, atol=1e-9), 0.0, d)
    return float(d) if np.ndim(d) == 0 else d


@dataclass(frozen=True)
class OscillationProfile:
    """p_i(t) ~ x_i + y_i sin(omega t + phi_i) with phi_1 = 0.

    ``phases`` are radians in (-pi, pi]; ``biases``/``amplitudes`` may be
    None when only frequency and phase are known.
    """

    omega: float
    phases: np.ndarray
    biases: np.ndarray | None = None
    amplitudes: np.ndarray | None = None

    def __post_init__(self):
        if not self.omega > 0:
            raise ValueError(f"omega must be > 0, got {self.omega!r}")
        object.__setattr__(self, "phases", np.asarray(self.phases, dtype=float))
        for name in ("biases", "amplitudes"):
            v = getattr(self, name)
            if v is not None:
                object.__setattr__(self, name, np.asarray(v, dtype=float))

    @property
    def n_genes(self) -> int:
        return len(self.phases)

    @property
    def period(self) -> float:
        return 2 * math.pi / self.omega

    @property
    def phases_deg(self) -> np.ndarray:
        """Phases in degrees wrapped to [0, 360)."""
        return wrap_deg360(self.phases)

    def waveform(self, t) -> np.ndarray:
        """Evaluate the sinusoidal approximation, shape (N, len(t))."""
        if self.biases is None or self.amplitudes is None:
            raise ValueError("profile carries no bias/amplitude")
        t = np.asarray(t, dtype=float)
        return self.biases[:, None] + self.amplitudes[:, None] * np.sin(
            self.omega * t[None, :] + self.phases[:, None]
        )
