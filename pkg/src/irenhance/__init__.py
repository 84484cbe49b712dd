"""Task-oriented infrared image enhancement.

Layer decomposition (l0-l1 then l1, solved with ADMM) followed by
differential grayscale morphological reconstruction saliency.
"""

from .decomposition import (
    DecompParams,
    FusionParams,
    LayerStack,
    compress_stretch,
    decompose_l0_l1,
    decompose_l1,
    dual_scale_decompose,
    fuse_layers,
)
from .imgcore import Domain, Image, ImageStats, load_image, normalize, save_image, stats
from .metrics import MetricsReport, average_gradient, entropy, spatial_frequency, std_dev, vif
from .morphology import (
    Connectivity,
    StructuringElement,
    dilate,
    erode,
    geodesic_dilate_unit,
    geodesic_erode_unit,
    gmr,
    make_square_se,
    reconstruct_by_dilation,
    reconstruct_by_erosion,
)
from .pipeline import EnhanceConfig, EnhanceResult, enhance, load_config
from .saliency import (
    SaliencyFusionParams,
    SaliencyPair,
    diff_gmr,
    extract_and_enhance,
    fuse_saliency,
    split_saliency,
)

__version__ = "0.1.0"
