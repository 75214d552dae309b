"""Super-ray graph transform codec for quasi-lossless light field compression.

The toolkit segments the reference view into super-pixels, extends them to
super-rays with per-label median disparities, builds a graph per super-ray
and codes the light field through graph Fourier transforms: a sampled
subset of rays travels as a coded reference image, high-frequency
coefficients are quantised and entropy-coded, and the receiver recovers the
low frequencies by solving the sampling system. See the README for the CLI
and the bitstream layout.
"""

from .errors import (InputError, PluginError, SingularSystemError, SrgfError,
                     StreamError)
from .lightfield import (LightField, QualityReport, load_light_field, psnr,
                         save_light_field)
from .pipeline import CodecConfig, EncodeResult, decode, encode

__version__ = "0.1.0"

__all__ = [
    "CodecConfig",
    "EncodeResult",
    "InputError",
    "LightField",
    "PluginError",
    "QualityReport",
    "SingularSystemError",
    "SrgfError",
    "StreamError",
    "decode",
    "encode",
    "load_light_field",
    "psnr",
    "save_light_field",
    "__version__",
]
