#pragma once

// Preset models. Three-state presets are written in the rotated basis
// |0> = |a>, |1> = i|b>, |2> = i|c>, where G is real. Two-qubit presets use
// the basis (|uu>, |ud>, |du>, |dd>) with qubit 1 as the left tensor factor.

#include <map>
#include <string>
#include <vector>

#include "qmeta/qme.hpp"

namespace qmeta {

struct PresetParams {
    std::string name;
    std::map<std::string, double> params;  // Omega1, Omega2, kappa1, kappa2, gamma1, gamma2, Omega_r
};

/// Throws UnknownPreset, MissingParam, or InvalidArgument for negative or non-finite rates.
LindbladModel build_preset(const PresetParams& p);

std::vector<std::string> preset_names();

/// The 9x9 matrix of the three-state Liouvillian in the operator basis
/// {|2><2|, |1><1|, |0><0|, sx01, sx02, sx12, i sy01, i sy02, i sy12},
/// transcribed entry by entry.
Eigen::MatrixXd appendix_liouvillian_3state(double omega1, double omega2, double kappa1);

/// The operator basis above, in order.
std::vector<CMatrix> appendix_operator_basis();

/// Superoperator `sup` (column-stacking) expressed in a non-orthonormal
/// operator basis through the coordinates y_a = Tr[B_a^dag rho]:
/// T sup T^-1 with T_a = vec(B_a)^dag.
CMatrix to_operator_basis(const CMatrix& sup, const std::vector<CMatrix>& basis);

// Two-qubit basis states.
CVector ket_uu();
CVector ket_ud();
CVector ket_du();
CVector ket_dd();

/// |k> in dimension d.
CVector basis_ket(std::size_t d, std::size_t k);

}  // namespace qmeta
