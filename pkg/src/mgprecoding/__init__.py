"""Precoding for multigateway multibeam satellite forward links.

Channel synthesis, block regularized-SVD precoders under several gateway
cooperation regimes, feeder-link and CSI impairments, and link metrics.
"""

__version__ = "0.1.0"

from .channel import (ChannelMatrix, ClusterLayout, GeometryConfig, RainFadingModel,
                      assemble_channel, build_coverage, feed_gain, sample_rain, w_entry)
from .cooperation import (CooperationScheme, Kind, SCENARIOS, effective_csi, overhead_count,
                          overhead_uniform, rank_one_compress, scheme_from_name, scheme_precoder)
from .impairments import FeederLinkModel, QuantizerSpec, feed_subset_limit, feeder_matrix, quantize_csi
from .metrics import (ModcodTable, check_interlacing, default_modcod_table, modcod_efficiency,
                      sinr, smse, verify_theorem1)
from .precoder import PrecoderSet, PrecodingError, block_svd_precoder, gateway_precoder, icm_precoder

__all__ = [
    "ChannelMatrix", "ClusterLayout", "GeometryConfig", "RainFadingModel", "assemble_channel",
    "build_coverage", "feed_gain", "sample_rain", "w_entry",
    "CooperationScheme", "Kind", "SCENARIOS", "effective_csi", "overhead_count", "overhead_uniform",
    "rank_one_compress", "scheme_from_name", "scheme_precoder",
    "FeederLinkModel", "QuantizerSpec", "feed_subset_limit", "feeder_matrix", "quantize_csi",
    "ModcodTable", "check_interlacing", "default_modcod_table", "modcod_efficiency", "sinr", "smse",
    "verify_theorem1",
    "PrecoderSet", "PrecodingError", "block_svd_precoder", "gateway_precoder", "icm_precoder",
]
