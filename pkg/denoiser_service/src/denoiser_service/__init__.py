"""Reference learned-denoiser service for the evrecon bridge protocol.

Runs as a child process (``python -m denoiser_service``), reading framed
denoise requests on stdin and writing replies on stdout. The wrapped model is
a small noise-level-conditioned residual CNN; ``--identity`` serves an
echo path that needs no weights.
"""

from .model import ConditionedDenoiser, load_model
from .protocol import MAGIC, read_request, write_reply

__version__ = "0.1.0"
