/*
 * Copyright 2026 The limflow Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <Eigen/Dense>

namespace limflow {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/// Throws computation_failure if any entry is NaN or Inf.
void require_finite(const Matrix& m, const char* what);

/// e^{sM} by scaling and squaring with a diagonal Pade approximant.
/// s must be non-negative; s == 0 returns the identity exactly.
Matrix expm(const Matrix& m, double s = 1.0);

/// Principal matrix logarithm. Throws branch_failure when an eigenvalue lies
/// on the closed negative real axis (including zero).
Matrix logm_principal(const Matrix& m);

/// Solves F X + X F^T = S through a complex Schur form of F. Throws singular
/// when F and -F^T share an eigenvalue.
Matrix solve_two_sided(const Matrix& f, const Matrix& s);

/// max Re(lambda) over the spectrum.
double spectral_abscissa(const Matrix& m);

/// True iff m is symmetric up to tol and every eigenvalue exceeds tol.
bool is_spd(const Matrix& m, double tol = 1e-12);

double min_symmetric_eigenvalue(const Matrix& m);

Matrix symmetrize(const Matrix& m);

/// Symmetric positive semidefinite square root; negative eigenvalues from
/// rounding are clipped to zero.
Matrix psd_sqrt(const Matrix& m);

/// Relative singularity test used by every covariance inversion:
/// |det C| / prod(C_ii) <= tol. Requires a positive diagonal.
bool nearly_singular_covariance(const Matrix& c, double tol = 1e-10);

}  // namespace limflow
