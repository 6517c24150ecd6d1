#pragma once

namespace qmeta {

/// Numerical thresholds used across the library. One instance with the
/// defaults below is used unless a caller passes its own.
struct Tolerances {
    // eigen-decomposition
    double biorthonormality = 1e-8;     // |<l_i, r_j> - delta_ij|
    double eigen_residual = 1e-8;       // ||A r - lambda r|| / ||A||
    double cluster = 1e-10;             // relative eigenvalue cluster width
    double defective_condition = 1e-7;  // sigma_min / sigma_max of the eigenvector matrix
    double ordering_tie = 1e-12;        // real parts closer than this are ties

    // Sylvester
    double sylvester_overlap = 1e-10;   // min |a_i + b_j|
    double sylvester_residual = 1e-9;

    // states and operators
    double hermitian = 1e-10;
    double normalisation = 1e-10;
    double density_matrix = 1e-9;       // trace / hermiticity / positivity of rho
    double steady_state = 1e-10;        // |lambda| below this counts as zero
    double rank_one = 1e-10;            // sigma_2 / sigma_1 for reset jumps
    double reset_point_distance = 1e-9; // trace distance for deduplication
    double zero_rate = 1e-14;

    // metastability
    double gap_warning = 10.0;          // |Re l_{m+1} / Re l_m| below this: NoGap

    // trajectory sampling
    double root_relative = 1e-10;       // bisection stop, relative in time
};

inline const Tolerances& default_tolerances() {
    static const Tolerances tol{};
    return tol;
}

}  // namespace qmeta
