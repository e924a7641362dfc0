"""vaporcell: simulation and analysis for alkali-vapor-cell quantum sensors.

Submodules:

* atomic_data  -- isotope registry, D1 line table, buffer-gas data
* lineshape    -- pressure-broadened absorption spectra and fits
* sas          -- saturated-absorption feature positions and spectra
* sns          -- spin-noise records and Lorentzian PSD fits
* hanle        -- zero-field resonances, Bloch dynamics, modulation
* sigproc      -- Welch ASD, lock-in demodulation, sensitivity scaling
* thermal      -- heater PID, resistance and stray-field diagnostics
* fitkit       -- the damped least-squares engine behind every fit
* cli          -- the `vaporcell` command line driver
"""

from . import (
    atomic_data,
    config,
    errors,
    fitkit,
    hanle,
    lineshape,
    records,
    sas,
    sigproc,
    sns,
    thermal,
)
from .records import Spectrum, TimeSeries

__version__ = "0.1.0"

__all__ = [
    "atomic_data",
    "config",
    "errors",
    "fitkit",
    "hanle",
    "lineshape",
    "records",
    "sas",
    "sigproc",
    "sns",
    "thermal",
    "Spectrum",
    "TimeSeries",
    "__version__",
]
