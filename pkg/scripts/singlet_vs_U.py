"""Two-dot singlet amplitude over U, compared with its U^-3 tail 2*sqrt(2)/U^3."""

import math

import numpy as np

from cotunnel.model import ModelParams, Scenario, final_channels, initial_state
from cotunnel.tmatrix import fourth_order_amplitude

sc = Scenario.parse("double:du")
singlet = final_channels(sc)[0]
print(f"{'U':>10} {'|singlet|':>14} {'|singlet| U^3':>14}")
for U in np.concatenate([np.linspace(0, 10, 11), np.geomspace(1e2, 1e6, 5)]):
    p = ModelParams(U=float(U))
    ini, _ = initial_state(sc, p)
    a = abs(fourth_order_amplitude(ini, singlet, p))
    print(f"{U:10.4g} {a:14.6e} {a * U**3:14.6f}")
print(f"{'limit':>10} {'':>14} {2 * math.sqrt(2):14.6f}")
