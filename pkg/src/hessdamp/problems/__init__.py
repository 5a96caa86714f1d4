"""Test objectives, the deblurring problem and image I/O."""

from .gradcheck import fd_gradient, max_gradient_error, relative_gradient_error
from .imaging import (
    DeblurProblem,
    blur_adjoint,
    blur_apply,
    deblur_objective,
    gaussian_kernel,
    image_to_point,
    kx_adjoint,
    kx_apply,
    ky_adjoint,
    ky_apply,
    operator_norm,
    phantom,
    point_to_image,
    synthesize_observation,
)
from .pgm import PGMError, pgm_read, pgm_write
from .testfuncs import DOUBLE_WELL_CRITICAL_POINTS, double_well, quadratic, random_spd, rosenbrock
