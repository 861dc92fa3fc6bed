from .dataset_manager import *
from .pipeline_manager import *
from .report_manager import *
