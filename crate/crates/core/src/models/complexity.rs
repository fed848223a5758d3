//! Closed-form inference cost and parameter counts of the two classifiers.
//! These follow the published formulas, which leave out biases and the
//! readout layer; use [`crate::nn::Parameterized::parameter_count`] for the
//! exact number of tensors entries in a built model.

/// `(N_t + N_r)(6F_n + N_iter(6F_n N_h + 3(N_l − 1)N_h² + 3F_m N_h))`.
pub fn count_gnn_multiplications(
    n_t: u64,
    n_r: u64,
    f_n: u64,
    f_m: u64,
    n_iter: u64,
    n_l: u64,
    n_h: u64,
) -> u64 {
    let per_round = 6 * f_n * n_h + 3 * n_l.saturating_sub(1) * n_h * n_h + 3 * f_m * n_h;
    (n_t + n_r) * (6 * f_n + n_iter * per_round)
}

/// `4N_h + (N_l − 1)N_h² + N_h N_t N_r`.
pub fn count_dnn_multiplications(n_t: u64, n_r: u64, n_l: u64, n_h: u64) -> u64 {
    4 * n_h + n_l.saturating_sub(1) * n_h * n_h + n_h * n_t * n_r
}

/// `2(6F_n + 4F_n N_h + 2(N_l − 1)N_h² + 2F_m N_h)`.
pub fn count_gnn_parameters(f_n: u64, f_m: u64, n_l: u64, n_h: u64) -> u64 {
    2 * (6 * f_n + 4 * f_n * n_h + 2 * n_l.saturating_sub(1) * n_h * n_h + 2 * f_m * n_h)
}

/// Weight count of the dense baseline, which coincides with its multiplications.
pub fn count_dnn_parameters(n_t: u64, n_r: u64, n_l: u64, n_h: u64) -> u64 {
    count_dnn_multiplications(n_t, n_r, n_l, n_h)
}
