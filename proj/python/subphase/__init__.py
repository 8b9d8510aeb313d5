"""Sub-geometric phase simulator: propagation, phase extraction, models and scans."""

from ._subphase import *  # noqa: F401,F403
from ._subphase import models  # noqa: F401
