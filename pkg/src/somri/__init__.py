"""somri: state-ownership selective-scan regularization for undersampled MRI.

The package provides, at desk scale:

* centered orthonormal 2-D Fourier transforms with a direct-summation oracle,
* k-space sampling masks (equispaced / random Cartesian, golden-angle radial),
* the MRI forward operator, adjoint, noise simulation, and data consistency,
* the state-ownership router splitting features into a resident carrier and a
  non-resident evidence stream,
* the exponential-trapezoidal selective scan (sequential oracle and chunked
  evaluation) with evidence-conditioned B/C interfaces,
* the unrolled reconstruction of six two-unit groups with per-group DC,
* the two-level outer-band leakage diagnostic plus PSNR/SSIM metrics,
* phantoms, synthetic coil maps, and a self-describing field file format.
"""

from .errors import (
    CapabilityError,
    ConfigError,
    DataIntegrityError,
    DomainError,
    FormatError,
    ShapeError,
    SomriError,
    UsageError,
)
from .fieldfile import read_field, write_field
from .fourier import dft2c_reference, fft2c, ifft2c, inner_product
from .leakage import (
    LeakageReport,
    combine_slices,
    expression_ratio,
    leakage_report,
    outer_band_leakage,
    report_rows,
    write_report_csv,
    write_report_json,
)
from .masks import GOLDEN_ANGLE_DEG, MaskSpec, SampleMask, generate_mask
from .metrics import psnr, ssim
from .model import (
    ModelConfig,
    ModelWeights,
    init_weights,
    load_weights,
    reconstruct,
    save_weights,
)
from .operators import (
    ForwardConfig,
    adjoint,
    data_consistency,
    data_consistency_kspace,
    forward,
    simulate,
)
from .phantoms import make_phantom, synth_coil_maps
from .router import (
    BINOMIAL_KERNEL,
    OwnershipStreams,
    RouterWeights,
    binomial_project,
    carrier_project,
    extract_features,
    route,
)
from .scan import (
    ModulationWeights,
    ScanOutput,
    ScanWeights,
    SsmConfig,
    SsmParams,
    generate_ssm_params,
    modulate_interfaces,
    selective_scan_chunked,
    selective_scan_sequential,
)
from .unit import (
    ABLATION_VARIANTS,
    AblationSwitches,
    UnitProbe,
    UnitWeights,
    content_tokens,
    detokenize,
    nsr,
    so_unit_forward,
    tokenize,
)

__version__ = "0.1.0"
