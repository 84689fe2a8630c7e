from ._dgfusion import *  # noqa: F401,F403
from ._dgfusion import __version__  # noqa: F401
