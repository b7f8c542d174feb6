from .errors import *
from .file_utils import *
from .runner_utils import *
