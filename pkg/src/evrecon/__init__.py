"""evrecon: log-brightness image reconstruction from event-camera data.

Given per-pixel optical flow, brightness recovery from events is a sparse
linear inverse problem: motion-compensated events form a normalized
measurement image that approximates the directional derivative of brightness
along the flow, and a sparse operator expresses that derivative on the pixel
grid. This package assembles both sides and inverts the system with Tikhonov,
total-variation, or plug-and-play denoiser regularization, plus a
frequency-domain path for reconstruction from a given Laplacian, and
super-resolution / motion-segmented / Bayer-color variants.
"""

from .io import EventPacket, FlowField, parse_events, parse_flow, parse_labels, read_pgm, write_pgm
from .motion import (Niwe, VelocityGrid, WarpedEvents, accumulate_iwe, build_niwe,
                     estimate_global_flow_cmax, normalize_iwe, simulate_events,
                     warp_events)
from .operators import (SparseOperator, StencilKind, build_directional_operator,
                        build_gradient_operator, laplacian_kernel)
from .solvers import SolveReport, cg_solve, lsqr_solve
from .reconstruct import (PnpParams, ReconConfig, ReconResult, TikhonovParams,
                          TvParams, shrink, solve_pnp, solve_tikhonov, solve_tv)
from .denoise import (BridgeDenoiser, bridge_denoiser, gaussian_denoiser,
                      identity_denoiser, tv_denoiser)
from .poisson import BoundaryMode, laplacian_forward, poisson_closed_form, solve_poisson_pnp
from .pipeline import reconstruct_events, to_unit_range, upsample_flow
from .extensions import (corrupt_flow, reconstruct_clusters, reconstruct_color,
                         reconstruct_superres, split_bayer)
from .metrics import affine_fit, align_mean_scale, hist_equalize, mse, ssim

__version__ = "0.1.0"
