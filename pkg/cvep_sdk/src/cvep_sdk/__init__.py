from .codes import *
from .stimulus import *
from .reconvolution import *
from .decoder import *
from .preprocess import *
from .simulator import *
from .evaluation import *
from .timer import *
from .utils import *
from .managers import *
