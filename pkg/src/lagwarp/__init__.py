"""Time-warping recurrent networks for first-order time-lag dynamics.

The package covers the full pipeline: exact time-lag simulation as ground
truth, simple-RNN and LSTM kernels, provable weight constructions whose
timescale can be warped analytically, gate-bias-shift transfer learning
with grid search and optional fine-tuning, training with truncated
backpropagation through time, timescale diagnostics (ACF/PACF), and
fuel-moisture physics baselines.  Scikit-learn style estimators in
:mod:`lagwarp.estimators` wrap the trainable pieces.
"""

__version__ = "0.1.0"

from .constructions import (
    LstmErrorBudget,
    TanhScaling,
    build_exact_simplernn,
    build_linear_lstm,
    build_tanh_simplernn,
    default_output_gate_bias,
    lstm_error_bound,
    run_scaled_tanh_rnn,
    tanh_error_bound,
    tanh_scaling_delta,
    warp_lstm_theoretical,
    warp_simplernn,
)
from .diagnostics import (
    AcfResult,
    Metrics,
    acf,
    ar1_simulate,
    autocovariance,
    interpolate_predictions,
    metrics,
    pacf,
    pacf_from_acf,
)
from .dynsys import (
    NewtonCooling,
    TimeLagSystem,
    newton_solution,
    simulate_timelag,
    timelag_closed_form,
    timelag_step,
    warp_retention,
    zoh_discretize,
)
from .errors import (
    DomainError,
    EmptyDataError,
    ParseError,
    ShapeError,
    UnsupportedLayerError,
    WeightsFormatError,
)
from .estimators import RnnRegressor, TimeWarpFineTune, TimeWarpSearch
from .fmc import (
    FmcOdeHyper,
    FuelClass,
    WeatherRow,
    equilibria,
    fmc_forecast,
    fmc_ode_step,
    fuel_class_coeffs,
)
from .rnn import (
    Architecture,
    DenseParams,
    LstmParams,
    Network,
    RecurrentState,
    SimpleRnnParams,
    activation,
    logit,
    lstm_step,
    network_forward,
    param_count,
    sigmoid,
    simple_rnn_step,
)
from .serialization import load_weights, read_sparse_series, save_weights
from .training import (
    FreezeSpec,
    Sample,
    SparseSeries,
    TrainingConfig,
    bptt_gradients,
    init_network,
    make_windows,
    masked_mse,
    train,
)
from .warp import (
    GridSearchResult,
    WarpGrid,
    WarpShift,
    apply_bias_shift,
    expected_shift_signs,
    grid_search_timewarp,
    timewarp_finetune,
)
