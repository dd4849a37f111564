from ._cvarseq import *  # noqa: F401,F403
from ._cvarseq import __doc__  # noqa: F401
