"""Deliberately misbehaving backends used to exercise failure paths."""

import numpy as np

from nnbench.harness import Backend, ReferenceBackend


class WrongBackend(Backend):
    """Reference outputs scaled by 2: breaches any sane MSE tolerance."""

    def __init__(self):
        self._ref = ReferenceBackend()

    def descriptor(self):
        d = self._ref.descriptor()
        d.name = "wrong"
        return d

    def forward(self, spec, params, x, switches=None):
        return 2.0 * self._ref.forward(spec, params, x, switches=switches)

    def forward_fused(self, specs, params, x):
        return 2.0 * self._ref.forward_fused(specs, params, x)


class NanBackend(Backend):
    """Emits NaN outputs: must surface as a failure record."""

    def __init__(self):
        self._ref = ReferenceBackend()

    def descriptor(self):
        d = self._ref.descriptor()
        d.name = "nan"
        return d

    def forward(self, spec, params, x, switches=None):
        y = self._ref.forward(spec, params, x, switches=switches)
        return y * np.float32(np.nan)

    def forward_fused(self, specs, params, x):
        return self.forward(specs[0], params[0], x)
