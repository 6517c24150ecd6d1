#pragma once

#include <random>
#include <string>
#include <vector>

#include "../oracles.hpp"
#include "qmeta/models.hpp"

namespace testing_util {

inline qmeta::LindbladModel one_jump_model() {
    return qmeta::build_preset({"three_state_1j", {{"Omega1", 1.0}, {"Omega2", 0.05}, {"kappa1", 4.0}}});
}

inline qmeta::LindbladModel two_jump_model() {
    return qmeta::build_preset(
        {"three_state_2j", {{"Omega1", 1.0}, {"Omega2", 0.05}, {"kappa1", 4.0}, {"kappa2", 1.0}}});
}

inline qmeta::LindbladModel dfs_model(double omega_r = 0.0) {
    return qmeta::build_preset({"two_qubit_dfs",
                                {{"Omega1", 0.02}, {"Omega2", 0.01}, {"gamma1", 4.0}, {"gamma2", 1.0}, {"Omega_r", omega_r}}});
}

inline qmeta::CMatrix random_matrix(std::mt19937_64& rng, Eigen::Index n) {
    std::normal_distribution<double> g;
    qmeta::CMatrix m(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j) m(i, j) = {g(rng), g(rng)};
    return m;
}

inline qmeta::CVector random_state(std::mt19937_64& rng, Eigen::Index n, bool real = false) {
    std::normal_distribution<double> g;
    qmeta::CVector v(n);
    for (Eigen::Index i = 0; i < n; ++i) v(i) = {g(rng), real ? 0.0 : g(rng)};
    return v / v.norm();
}

}  // namespace testing_util
