"""Scenario drivers built on the solver modules."""

from .concentration import *  # noqa: F401,F403
from .concentration import __all__ as _conc
from .data import *  # noqa: F401,F403
from .data import __all__ as _data
from .merle import *  # noqa: F401,F403
from .merle import __all__ as _merle
from .minimal_mass import *  # noqa: F401,F403
from .minimal_mass import __all__ as _mm
from .nonexistence import *  # noqa: F401,F403
from .nonexistence import __all__ as _nx
from .pseudo import *  # noqa: F401,F403
from .pseudo import __all__ as _pc
from .threshold import *  # noqa: F401,F403
from .threshold import __all__ as _th

__all__ = [*_conc, *_data, *_merle, *_mm, *_nx, *_pc, *_th]
