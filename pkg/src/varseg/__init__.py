"""Image segmentation by diffeomorphic deformation of a template curve.

A closed polygon is flowed by an LDDMM geodesic (Gaussian kernel, shooting
from initial momenta) until its varifold matches the thresholded gradient
field of the image under a Gaussian x Cauchy-Binet kernel metric.
"""
__version__ = "0.1.0"

from .errors import (  # noqa: E402
    DegeneracyError,
    DivergenceError,
    EmptyFieldError,
    ImageSizeError,
    PGMError,
    VarsegError,
)
from .imageio import Image, add_gaussian_noise, add_salt_pepper, load_pgm, read_pgm, save_pgm, write_pgm  # noqa: E402
from .gradfield import GradientField, compute_gradient, extract_field, gaussian_smooth, gradient_field  # noqa: E402
from .varifold import (  # noqa: E402
    KernelParams,
    PolyCurve,
    VarifoldAtoms,
    closed_polygon,
    curve_to_atoms,
    grad_loss_L1,
    inner_product,
    loss_L0,
    loss_L1,
)
from .lddmm import (  # noqa: E402
    DeformationParams,
    ShootingState,
    flow_points,
    grad_shoot,
    hamiltonian,
    reg_energy,
    shoot,
)
from .segmenter import (  # noqa: E402
    AdamParams,
    SegmentationConfig,
    SegmentationResult,
    grad_total_energy,
    init_ellipse,
    optimize,
    segment,
    total_energy,
)
