"""Auto-import builtin experiment modules to trigger @register_experiment decorators."""
from . import spectra
from . import transients
from . import edge_modes
from . import spectra_response
from . import oracle_check
