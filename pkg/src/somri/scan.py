"""Selective state-space scan: parameter generation, interface modulation,
and the exponential-trapezoidal recurrence in sequential and chunked form.

Per head and token n the recurrence over the matrix state H (d_state x m) is

    V_n = B'_n U_n                       write:  (d_state x rank)(rank x m)
    H_n = alpha_n H_{n-1} + beta_n V_{n-1} + gamma_n V_n
    Y_n = C'_n^T H_n                     read:   (rank x d_state)(d_state x m)

with

    alpha_n = exp(delta_n * a)
    beta_n  = (1 - lambda_n) * delta_n * exp(delta_n * a)
    gamma_n = lambda_n * delta_n

where delta_n > 0 is the step, a <= 0 the per-head transition scalar, and
lambda_n in [0, 1] the trapezoidal mixing coefficient.  H_0 = 0 and V_0 = 0
(no pre-sequence input).  Each head's d_head-wide token is reshaped row-major
to a rank x m input block (m = d_head / rank), giving the MIMO form.

The chunked evaluation is mathematically identical: within a chunk the state
trajectory is assembled from cumulative transition products (computed in log
space, which is safe because alpha > 0), and the carried state crosses chunk
boundaries once per chunk.  The sequential loop is the oracle the chunked
path is tested against.

Interface modulation conditions the write/read matrices on non-resident
evidence tokens g:

    [mu_B, nu_B, mu_C, nu_C] = P(rms_norm(g))
    B' = B * (1 + alpha_mu * tanh(mu_B)) + alpha_nu * tanh(nu_B)
    C' = C * (1 + alpha_mu * tanh(mu_C)) + alpha_nu * tanh(nu_C)

Modulation vectors are per-(head, d_state) and broadcast over rank.  With a
zero projection the modulated interfaces equal the raw ones bit for bit.
"""

from dataclasses import dataclass, replace

import numpy as np

from .errors import ConfigError, DataIntegrityError, DomainError, ShapeError

RMS_NORM_EPS = 1e-6


@dataclass(frozen=True)
class SsmConfig:
    """Dimensions and modulation strengths of the scan block."""

    d_model: int = 96
    d_state: int = 16
    d_head: int = 64
    rank: int = 4
    chunk: int = 16
    expand: int = 2
    alpha_mu: float = 0.1
    alpha_nu: float = 0.1

    def __post_init__(self):
        if self.d_head % self.rank:
            raise ConfigError(f"d_head {self.d_head} not divisible by rank {self.rank}")
        if (self.d_model * self.expand) % self.d_head:
            raise ConfigError(
                f"d_model * expand = {self.d_model * self.expand} not divisible "
                f"by d_head {self.d_head}"
            )
        if self.chunk < 1:
            raise ConfigError(f"chunk must be >= 1, got {self.chunk}")
        if self.alpha_mu < 0 or self.alpha_nu < 0:
            raise ConfigError("modulation strengths must be >= 0")

    @property
    def d_inner(self):
        return self.d_model * self.expand

    @property
    def heads(self):
        return self.d_inner // self.d_head

    @property
    def m(self):
        """Sub-channel width of the MIMO state block."""
        return self.d_head // self.rank


@dataclass
class ScanWeights:
    """Token-to-parameter generation maps; dense weights are (in, out)."""

    delta_weight: np.ndarray  # (d_inner, heads)
    delta_bias: np.ndarray  # (heads,)
    a_log: np.ndarray  # (heads,); a = -exp(a_log)
    lambda_weight: np.ndarray  # (d_inner, heads)
    lambda_bias: np.ndarray  # (heads,)
    b_weight: np.ndarray  # (d_inner, heads * d_state * rank)
    b_bias: np.ndarray
    c_weight: np.ndarray
    c_bias: np.ndarray


@dataclass
class ModulationWeights:
    proj_weight: np.ndarray  # (evidence channels, heads * 4 * d_state)
    proj_bias: np.ndarray


@dataclass
class SsmParams:
    """Per-token, per-head scan parameters.

    ``b_mod``/``c_mod`` hold the conditioned interfaces once
    :func:`modulate_interfaces` has run; otherwise the raw ``b``/``c`` apply.
    """

    delta: np.ndarray  # (N, heads), > 0
    a: np.ndarray  # (heads,), <= 0
    lam: np.ndarray  # (N, heads), in [0, 1]
    b: np.ndarray  # (N, heads, d_state, rank)
    c: np.ndarray  # (N, heads, d_state, rank)
    b_mod: np.ndarray | None = None
    c_mod: np.ndarray | None = None

    @property
    def b_effective(self):
        return self.b if self.b_mod is None else self.b_mod

    @property
    def c_effective(self):
        return self.c if self.c_mod is None else self.c_mod


@dataclass
class ScanOutput:
    states: np.ndarray  # (N, heads, d_state, m) hidden-state trajectory
    readout: np.ndarray  # (N, heads, d_head)


def generate_ssm_params(
    tokens, w: ScanWeights, cfg: SsmConfig, tie_a_delta=False, tie_b_c=False
) -> SsmParams:
    """Generate per-token scan parameters from content tokens.

    delta = softplus(linear(token) + bias), a = -exp(a_log) per head (input
    independent), lambda = sigmoid(linear(token)), B and C are linear maps of
    the token reshaped to (d_state, rank) per head.

    ``tie_a_delta`` replaces the learned step with the shared per-head scalar
    that drives the transition: delta = softplus(a_log).  ``tie_b_c`` reuses
    the B generation map for C.
    """
    u = _check_tokens(tokens, cfg)
    for name in ("delta_weight", "a_log", "lambda_weight", "b_weight", "c_weight"):
        if not np.all(np.isfinite(getattr(w, name))):
            raise DataIntegrityError(f"scan weight {name} contains non-finite values")
    n = u.shape[0]

    if tie_a_delta:
        delta = np.broadcast_to(_softplus(w.a_log.astype(np.float64)), (n, cfg.heads)).copy()
    else:
        delta = _softplus(u @ w.delta_weight + w.delta_bias)
    a = -np.exp(w.a_log.astype(np.float64))
    lam = _sigmoid(u @ w.lambda_weight + w.lambda_bias)

    def interface(weight, bias):
        return (u @ weight + bias).reshape(n, cfg.heads, cfg.d_state, cfg.rank)

    b = interface(w.b_weight, w.b_bias)
    c = b.copy() if tie_b_c else interface(w.c_weight, w.c_bias)
    return SsmParams(delta=delta, a=a, lam=lam, b=b, c=c)


def modulate_interfaces(
    params: SsmParams, g_tokens, w: ModulationWeights, cfg: SsmConfig
) -> SsmParams:
    """Condition the write/read interfaces on non-resident evidence tokens."""
    g = np.asarray(g_tokens, dtype=np.float64)
    if g.ndim != 2 or g.shape[0] != params.b.shape[0]:
        raise ShapeError(
            f"evidence tokens {g.shape} do not align with {params.b.shape[0]} content tokens"
        )
    if g.shape[1] != w.proj_weight.shape[0]:
        raise ShapeError(
            f"evidence tokens have {g.shape[1]} channels, projection expects "
            f"{w.proj_weight.shape[0]}"
        )
    normed = g / np.sqrt(np.mean(g * g, axis=1, keepdims=True) + RMS_NORM_EPS)
    mod = (normed @ w.proj_weight + w.proj_bias).reshape(
        g.shape[0], cfg.heads, 4, cfg.d_state
    )
    mu_b, nu_b, mu_c, nu_c = (mod[:, :, i, :, None] for i in range(4))  # broadcast over rank
    b_mod = params.b * (1.0 + cfg.alpha_mu * np.tanh(mu_b)) + cfg.alpha_nu * np.tanh(nu_b)
    c_mod = params.c * (1.0 + cfg.alpha_mu * np.tanh(mu_c)) + cfg.alpha_nu * np.tanh(nu_c)
    return replace(params, b_mod=b_mod, c_mod=c_mod)


def selective_scan_sequential(u, params: SsmParams, cfg: SsmConfig) -> ScanOutput:
    """Token-by-token reference evaluation of the recurrence (the oracle)."""
    tokens = _check_tokens(u, cfg)
    _check_param_domains(params, tokens.shape[0], cfg)
    v = _write_inputs(tokens, params, cfg)
    alpha, beta, gamma = _coefficients(params)

    n = tokens.shape[0]
    states = np.empty_like(v)
    h = np.zeros(v.shape[1:])
    v_prev = np.zeros(v.shape[1:])
    for i in range(n):
        h = (
            alpha[i][:, None, None] * h
            + beta[i][:, None, None] * v_prev
            + gamma[i][:, None, None] * v[i]
        )
        states[i] = h
        v_prev = v[i]
    return ScanOutput(states=states, readout=_read_states(states, params, cfg))


def selective_scan_chunked(u, params: SsmParams, cfg: SsmConfig) -> ScanOutput:
    """Chunk-wise evaluation, mathematically identical to the sequential scan.

    Within each chunk of ``cfg.chunk`` tokens the trajectory is combined from
    cumulative-product transition weights; the carried state crosses chunk
    boundaries once per chunk.
    """
    tokens = _check_tokens(u, cfg)
    _check_param_domains(params, tokens.shape[0], cfg)
    alpha, beta, gamma = _coefficients(params)

    n, heads = alpha.shape[0], alpha.shape[1]
    sm = cfg.d_state * cfg.m
    # head-major flat layout (heads, N, d_state * m) keeps the batched matmuls
    # and broadcasts on contiguous memory
    blocks = tokens.reshape(n, cfg.heads, cfg.rank, cfg.m)
    v_hm = np.einsum(
        "nhsr,nhrm->hnsm", params.b_effective, blocks, optimize=True
    ).reshape(heads, n, sm)
    drive_hm = gamma.T[:, :, None] * v_hm
    drive_hm[:, 1:] += beta.T[:, 1:, None] * v_hm[:, :-1]

    tiny = np.finfo(np.float64).tiny
    log_alpha = np.log(np.maximum(alpha, tiny)).T  # (heads, N)

    t = cfg.chunk
    n_full = (n // t) * t
    states_hm = np.empty_like(drive_hm)
    carry = np.zeros((heads, sm))
    if n_full:
        n_chunks = n_full // t
        s = np.cumsum(log_alpha[:, :n_full].reshape(heads, n_chunks, t), axis=2)
        # lower-triangular transition weights T[i, j] = prod_{k=j+1..i} alpha_k
        t_mat = np.exp(s[:, :, :, None] - s[:, :, None, :])
        t_mat *= np.tri(t)
        intra = np.matmul(
            t_mat, np.ascontiguousarray(drive_hm[:, :n_full]).reshape(heads, n_chunks, t, sm)
        )
        decay = np.exp(s)  # (heads, n_chunks, T) cumulative transition weights
        entry = np.empty((heads, n_chunks, sm))  # state entering each chunk
        for c in range(n_chunks):  # carried state crosses chunk boundaries once per chunk
            entry[:, c] = carry
            carry = decay[:, c, -1, None] * carry + intra[:, c, -1]
        full = decay[:, :, :, None] * entry[:, :, None, :] + intra
        states_hm[:, :n_full] = full.reshape(heads, n_full, sm)
    if n_full < n:  # remainder chunk
        s = np.cumsum(log_alpha[:, n_full:], axis=1)
        t_mat = np.exp(s[:, :, None] - s[:, None, :])
        t_mat *= np.tri(n - n_full)
        intra = np.matmul(t_mat, drive_hm[:, n_full:])
        states_hm[:, n_full:] = np.exp(s)[:, :, None] * carry[:, None, :] + intra

    states = np.ascontiguousarray(
        states_hm.reshape(heads, n, cfg.d_state, cfg.m).transpose(1, 0, 2, 3)
    )
    return ScanOutput(states=states, readout=_read_states(states, params, cfg))


def _write_inputs(tokens, params, cfg):
    blocks = tokens.reshape(tokens.shape[0], cfg.heads, cfg.rank, cfg.m)
    return np.einsum("nhsr,nhrm->nhsm", params.b_effective, blocks, optimize=True)


def _read_states(states, params, cfg):
    out = np.einsum("nhsr,nhsm->nhrm", params.c_effective, states, optimize=True)
    return out.reshape(states.shape[0], cfg.heads, cfg.d_head)


def _coefficients(params):
    decay = np.exp(params.delta * params.a[None, :])
    alpha = decay
    beta = (1.0 - params.lam) * params.delta * decay
    gamma = params.lam * params.delta
    return alpha, beta, gamma


def _check_tokens(u, cfg):
    arr = np.asarray(u, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[1] != cfg.d_inner:
        raise ShapeError(
            f"tokens must be (N, {cfg.d_inner}), got {np.asarray(u).shape}"
        )
    return arr


def _check_param_domains(params, n_tokens, cfg):
    expected = (n_tokens, cfg.heads, cfg.d_state, cfg.rank)
    if params.b.shape != expected:
        raise ShapeError(f"B interface shape {params.b.shape}, expected {expected}")
    if np.any(params.delta <= 0):
        raise DomainError("delta must be strictly positive")
    if np.any(params.a > 0):
        raise DomainError("transition scalar a must be <= 0")
    if np.any(params.lam < 0) or np.any(params.lam > 1):
        raise DomainError("lambda must lie in [0, 1]")


def _softplus(x):
    return np.logaddexp(0.0, x)


def _sigmoid(x):
    out = np.empty_like(x, dtype=np.float64)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out
