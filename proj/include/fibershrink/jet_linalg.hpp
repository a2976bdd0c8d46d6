#pragma once

#include "fibershrink/jet.hpp"

namespace fibershrink {

JetMat jet_identity(int n);

/// Gauss-Jordan inverse with partial pivoting on |value|.  Throws
/// SingularMetricError when every pivot candidate falls below pivot_tol.
JetMat jet_inverse(const JetMat& a, double pivot_tol = 1e-12);

/// Basis of the right kernel of a (rows x cols) jet matrix, computed by
/// Gaussian elimination with row partial pivoting and fixed left-to-right
/// column order.  Columns of the result span ker(a); entries are jets.
JetMat jet_kernel_basis(const JetMat& a, double pivot_tol = 1e-12);

/// Solve a * x = b for square a (same pivoting as jet_inverse).
JetMat jet_solve(const JetMat& a, const JetMat& b, double pivot_tol = 1e-12);

}  // namespace fibershrink
