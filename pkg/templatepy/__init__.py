from . import prompts
from . import scoring
from . import icl
from . import analysis
from . import experiment
