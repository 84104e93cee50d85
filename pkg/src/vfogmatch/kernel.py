"""Search kernel selection: the compiled extension when built, else pure Python."""
from . import _search

try:
    from . import _csearch
except ImportError:  # extension not built
    _csearch = None

BACKENDS = {"python": _search.search}
if _csearch is not None:
    BACKENDS["cython"] = _csearch.search

BACKEND = "cython" if _csearch is not None else "python"
search = BACKENDS[BACKEND]


def get(name=None):
    if name is None:
        return search
    try:
        return BACKENDS[name]
    except KeyError:
        raise ValueError(f"kernel backend {name!r} unavailable; have {sorted(BACKENDS)}") from None
