"""Self-affine tiles in one dimension: cyclotomic tools, tile digit sets, product forms."""

from .cyclotomic import CycIndex, cyclo_at_one, cyclotomic, expand_substitution
from .integer_tile import (
    IntegerTileDecision,
    TilingCertificate,
    de_bruijn_decompose,
    is_integer_tile,
    prime_power_chain,
)
from .phitree import Blocking, TileDecision, find_blocking, is_blocking, is_tile_digit_set
from .polyring import DigitSet, IntPoly, mask_polynomial, mod_cyclic
from .productform import (
    Classification,
    KernelSpec,
    ProductFormChain,
    Stage,
    classify,
    extract_chain,
    kernel_build,
    kernel_p2q,
    make_modulo_product_form,
    make_product_form,
    order_k_execute,
)
from .spectra import Spectrum, check_T1, check_T2, compute_spectrum, prime_power_spectrum
from .tilecheck import CountReport, DigitSystem, counting_check, digit_expansion_count

__all__ = [
    "Blocking",
    "Classification",
    "CountReport",
    "CycIndex",
    "DigitSet",
    "DigitSystem",
    "IntPoly",
    "IntegerTileDecision",
    "KernelSpec",
    "ProductFormChain",
    "Spectrum",
    "Stage",
    "TileDecision",
    "TilingCertificate",
    "check_T1",
    "check_T2",
    "classify",
    "compute_spectrum",
    "counting_check",
    "cyclo_at_one",
    "cyclotomic",
    "de_bruijn_decompose",
    "digit_expansion_count",
    "expand_substitution",
    "extract_chain",
    "find_blocking",
    "is_blocking",
    "is_integer_tile",
    "is_tile_digit_set",
    "kernel_build",
    "kernel_p2q",
    "make_modulo_product_form",
    "make_product_form",
    "mask_polynomial",
    "mod_cyclic",
    "order_k_execute",
    "prime_power_chain",
    "prime_power_spectrum",
]
