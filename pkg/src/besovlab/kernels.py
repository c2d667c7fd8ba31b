"""Backend selection for the hot loops.

The compiled extension is used when it imports; otherwise the numpy versions
take over. Set ``BESOVLAB_PURE=1`` to force the fallback.
"""

import os

from . import _purepy

BACKEND = "python"
panel_sums = _purepy.panel_sums
kaluza_recursion = _purepy.kaluza_recursion

if os.environ.get("BESOVLAB_PURE", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels
    except ImportError:  # extension not built
        pass
    else:
        BACKEND = "compiled"
        panel_sums = _kernels.panel_sums
        kaluza_recursion = _kernels.kaluza_recursion

__all__ = ["BACKEND", "panel_sums", "kaluza_recursion"]
