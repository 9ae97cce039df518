"""Mittag-Leffler distributions, stable densities and their mixtures."""

from .mixtures import (
    MixtureMethod,
    MixtureSpec,
    QKernelParams,
    generic_mixture_density,
    lamperti_density,
    mixture_density,
    mixture_laplace,
    q_kernel,
    q_kernel_atom,
    q_kernel_laplace,
)
from .mldist import (
    MLParams,
    SamplerStrategy,
    ml_density,
    ml_moment,
    ml_sample,
    product_density,
    product_factors,
)
from .mlfunc import PrabhakarParams, mittag_leffler
from .numkernel import (
    DEFAULT_QUAD,
    MethodDomainError,
    QuadratureError,
    QuadratureSpec,
    SeriesError,
)
from .powerconv import ConvMethod, powerconv_density, powerconv_laplace
from .stable import StableMethod, StableSpec, stable_density, stable_sample
from .verify import golden_suite, run_golden

__all__ = [name for name in dir() if not name.startswith("_")]
