"""Processing and statistical modeling of double-directional THz channel scans."""

from .bundle import (AngleGrid, BundleError, FrequencyAxis, LinkGeometry, MeasurementBundle, load_bundle,
                     validate_bundle, write_bundle)
from .condensed import (CondensedParams, CondenseOptions, condense_location, find_local_maxima, kappa1, path_loss,
                        rmsds)
from .directional import (Aps, Ddaps, angular_spread, circular_mean, compute_ddaps, marginal_aps, select_max_dir,
                          synth_omni)
from .fitting import (LinearFit, Sample2D, StatFit, fit_lognormal_db, fit_normal, ols_fit, shadowing_residuals,
                      weighted_fit)
from .pdp import (NoSignalError, Pdp, PdpOptions, PdpSet, apply_ota, directional_pdp, estimate_noise_floor,
                  threshold_gate)
from .statmodel import ChannelModel, default_model, ecdf, mean_ds_db, mean_pl, sample_links
from .synth import PathSpec, SceneSpec, antenna_gain, build_canonical_scenes, synthesize_bundle

__version__ = "0.1.0"
