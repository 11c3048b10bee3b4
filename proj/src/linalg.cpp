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

#include "limflow/linalg.hpp"

#include "limflow/error.hpp"

#include <Eigen/Eigenvalues>

#include <array>
#include <cmath>
#include <complex>
#include <numbers>
#include <string>

namespace limflow {

namespace {

using Complex = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;

void require_square(const Matrix& m, const char* what) {
    if (m.rows() != m.cols() || m.rows() == 0) {
        throw Error(ErrorCode::invalid_argument,
                    std::string(what) + ": expected a non-empty square matrix, got " +
                        std::to_string(m.rows()) + "x" + std::to_string(m.cols()));
    }
}

double norm1(const Matrix& m) { return m.cwiseAbs().colwise().sum().maxCoeff(); }

// Diagonal Pade approximants of degree 3..13 for exp, with the backward-error
// thresholds of the scaling-and-squaring method.
constexpr std::array<double, 4> kPade3 = {120.0, 60.0, 12.0, 1.0};
constexpr std::array<double, 6> kPade5 = {30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0};
constexpr std::array<double, 8> kPade7 = {17297280.0, 8648640.0, 1995840.0, 277200.0,
                                          25200.0,    1512.0,    56.0,      1.0};
constexpr std::array<double, 10> kPade9 = {17643225600.0, 8821612800.0, 2075673600.0,
                                           302702400.0,   30270240.0,   2162160.0,
                                           110880.0,      3960.0,       90.0,
                                           1.0};
constexpr std::array<double, 14> kPade13 = {
    64764752532480000.0, 32382376266240000.0, 7771770303897600.0, 1187353796428800.0,
    129060195264000.0,   10559470521600.0,    670442572800.0,     33522128640.0,
    1323241920.0,        40840800.0,          960960.0,           16380.0,
    182.0,               1.0};

constexpr double kTheta3 = 1.495585217958292e-2;
constexpr double kTheta5 = 2.539398330063230e-1;
constexpr double kTheta7 = 9.504178996162932e-1;
constexpr double kTheta9 = 2.097847961257068e0;
constexpr double kTheta13 = 5.371920351148152e0;

template <std::size_t N>
Matrix pade_low(const Matrix& a, const std::array<double, N>& b) {
    // Degrees 3..9: U = A * sum odd terms, V = sum even terms.
    const Index n = a.rows();
    const Matrix ident = Matrix::Identity(n, n);
    const Matrix a2 = a * a;
    Matrix power = ident;
    Matrix u_inner = Matrix::Zero(n, n);
    Matrix v = Matrix::Zero(n, n);
    for (std::size_t k = 0; k + 1 < N; k += 2) {
        v += b[k] * power;
        u_inner += b[k + 1] * power;
        power = power * a2;
    }
    const Matrix u = a * u_inner;
    return (v - u).partialPivLu().solve(v + u);
}

Matrix pade13(const Matrix& a) {
    const auto& b = kPade13;
    const Index n = a.rows();
    const Matrix ident = Matrix::Identity(n, n);
    const Matrix a2 = a * a;
    const Matrix a4 = a2 * a2;
    const Matrix a6 = a4 * a2;
    const Matrix u =
        a * (a6 * (b[13] * a6 + b[11] * a4 + b[9] * a2) + b[7] * a6 + b[5] * a4 + b[3] * a2 +
             b[1] * ident);
    const Matrix v = a6 * (b[12] * a6 + b[10] * a4 + b[8] * a2) + b[6] * a6 + b[4] * a4 +
                     b[2] * a2 + b[0] * ident;
    return (v - u).partialPivLu().solve(v + u);
}

struct GaussLegendre {
    std::array<double, 12> nodes{};
    std::array<double, 12> weights{};
};

// Nodes and weights on [0, 1] by Newton iteration on the Legendre polynomial.
GaussLegendre make_gauss_legendre() {
    GaussLegendre gl;
    constexpr int m = static_cast<int>(gl.nodes.size());
    for (int i = 0; i < m; ++i) {
        double x = std::cos(std::numbers::pi * (i + 0.75) / (m + 0.5));
        double dp = 1.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p0 = 1.0;
            double p1 = x;
            for (int k = 2; k <= m; ++k) {
                const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            dp = m * (x * p1 - p0) / (x * x - 1.0);
            const double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-16) {
                break;
            }
        }
        gl.nodes[i] = 0.5 * (x + 1.0);
        gl.weights[i] = 1.0 / ((1.0 - x * x) * dp * dp);
    }
    return gl;
}

const GaussLegendre& gauss_legendre() {
    static const GaussLegendre gl = make_gauss_legendre();
    return gl;
}

// Principal square root of an upper triangular matrix.
CMatrix sqrt_upper(const CMatrix& t) {
    const Index n = t.rows();
    CMatrix r = CMatrix::Zero(n, n);
    for (Index j = 0; j < n; ++j) {
        r(j, j) = std::sqrt(t(j, j));
        for (Index i = j - 1; i >= 0; --i) {
            Complex acc = t(i, j);
            for (Index k = i + 1; k < j; ++k) {
                acc -= r(i, k) * r(k, j);
            }
            r(i, j) = acc / (r(i, i) + r(j, j));
        }
    }
    return r;
}

}  // namespace

void require_finite(const Matrix& m, const char* what) {
    if (!m.allFinite()) {
        throw Error(ErrorCode::computation_failure,
                    std::string(what) + ": non-finite matrix entry");
    }
}

Matrix expm(const Matrix& m, double s) {
    require_square(m, "expm");
    require_finite(m, "expm");
    if (!std::isfinite(s) || s < 0.0) {
        throw Error(ErrorCode::invalid_argument, "expm: time must be finite and non-negative");
    }
    const Index n = m.rows();
    if (s == 0.0) {
        return Matrix::Identity(n, n);
    }
    Matrix a = s * m;
    require_finite(a, "expm");
    const double norm = norm1(a);

    Matrix result;
    if (norm <= kTheta3) {
        result = pade_low(a, kPade3);
    } else if (norm <= kTheta5) {
        result = pade_low(a, kPade5);
    } else if (norm <= kTheta7) {
        result = pade_low(a, kPade7);
    } else if (norm <= kTheta9) {
        result = pade_low(a, kPade9);
    } else {
        const int squarings = std::max(0, static_cast<int>(std::ceil(std::log2(norm / kTheta13))));
        if (squarings > 1000) {
            throw Error(ErrorCode::computation_failure, "expm: argument norm too large");
        }
        a /= std::ldexp(1.0, squarings);
        result = pade13(a);
        for (int k = 0; k < squarings; ++k) {
            result = result * result;
        }
    }
    if (!result.allFinite()) {
        throw Error(ErrorCode::computation_failure, "expm: overflow");
    }
    return result;
}

Matrix logm_principal(const Matrix& m) {
    require_square(m, "logm");
    require_finite(m, "logm");
    const Index n = m.rows();
    const double scale = std::max(norm1(m), 1e-300);

    Eigen::ComplexSchur<Matrix> schur(m);
    if (schur.info() != Eigen::Success) {
        throw Error(ErrorCode::computation_failure, "logm: Schur decomposition did not converge");
    }
    CMatrix t = schur.matrixT();
    const CMatrix& u = schur.matrixU();
    for (Index i = 0; i < n; ++i) {
        const Complex lambda = t(i, i);
        const double mag = std::abs(lambda);
        if (mag <= 1e-14 * scale) {
            throw Error(ErrorCode::branch_failure, "logm: matrix is singular");
        }
        if (lambda.real() < 0.0 && std::abs(lambda.imag()) <= 1e-12 * mag) {
            throw Error(ErrorCode::branch_failure,
                        "logm: eigenvalue on the negative real axis");
        }
    }

    const CMatrix ident = CMatrix::Identity(n, n);
    int roots = 0;
    while ((t - ident).cwiseAbs().colwise().sum().maxCoeff() > 0.25) {
        t = sqrt_upper(t);
        if (++roots > 64) {
            throw Error(ErrorCode::computation_failure, "logm: square roots did not converge");
        }
    }

    // log(I + X) = int_0^1 X (I + tX)^{-1} dt, evaluated by Gauss-Legendre.
    const CMatrix x = t - ident;
    CMatrix log_t = CMatrix::Zero(n, n);
    const auto& gl = gauss_legendre();
    for (std::size_t k = 0; k < gl.nodes.size(); ++k) {
        const CMatrix shifted = ident + gl.nodes[k] * x;
        log_t += gl.weights[k] * shifted.triangularView<Eigen::Upper>().solve(x);
    }
    log_t *= std::ldexp(1.0, roots);

    const CMatrix full = u * log_t * u.adjoint();
    const double imag = full.imag().cwiseAbs().maxCoeff();
    const double real = std::max(full.real().cwiseAbs().maxCoeff(), 1.0);
    if (imag > 1e-8 * real) {
        throw Error(ErrorCode::branch_failure, "logm: principal logarithm is not real");
    }
    Matrix out = full.real();
    require_finite(out, "logm");
    return out;
}

Matrix solve_two_sided(const Matrix& f, const Matrix& s) {
    require_square(f, "solve_two_sided");
    if (s.rows() != f.rows() || s.cols() != f.cols()) {
        throw Error(ErrorCode::invalid_argument, "solve_two_sided: dimension mismatch");
    }
    require_finite(f, "solve_two_sided");
    require_finite(s, "solve_two_sided");
    const Index n = f.rows();

    Eigen::ComplexSchur<Matrix> schur(f);
    if (schur.info() != Eigen::Success) {
        throw Error(ErrorCode::computation_failure,
                    "solve_two_sided: Schur decomposition did not converge");
    }
    const CMatrix& t = schur.matrixT();
    const CMatrix& u = schur.matrixU();
    const CMatrix rhs = u.adjoint() * s.cast<Complex>() * u;

    // With F = U T U^*, the equation becomes T Y + Y T^* = U^* S U; the columns
    // of Y are recovered back to front by triangular solves.
    const double tiny = 64.0 * std::numeric_limits<double>::epsilon() * std::max(norm1(f), 1.0);
    CMatrix y(n, n);
    for (Index k = n - 1; k >= 0; --k) {
        Eigen::VectorXcd col = rhs.col(k);
        for (Index mcol = k + 1; mcol < n; ++mcol) {
            col -= std::conj(t(k, mcol)) * y.col(mcol);
        }
        CMatrix shifted = t;
        const Complex shift = std::conj(t(k, k));
        for (Index i = 0; i < n; ++i) {
            shifted(i, i) += shift;
            if (std::abs(shifted(i, i)) <= tiny) {
                throw Error(ErrorCode::singular,
                            "solve_two_sided: F and -F^T share an eigenvalue");
            }
        }
        y.col(k) = shifted.triangularView<Eigen::Upper>().solve(col);
    }

    Matrix x = (u * y * u.adjoint()).real();
    require_finite(x, "solve_two_sided");
    const double asym = (s - s.transpose()).cwiseAbs().maxCoeff();
    if (asym <= 1e-14 * std::max(s.cwiseAbs().maxCoeff(), 1e-300)) {
        x = symmetrize(x);
    }
    return x;
}

double spectral_abscissa(const Matrix& m) {
    require_square(m, "spectral_abscissa");
    require_finite(m, "spectral_abscissa");
    if (m.rows() == 1) {
        return m(0, 0);
    }
    Eigen::EigenSolver<Matrix> solver(m, false);
    if (solver.info() != Eigen::Success) {
        throw Error(ErrorCode::computation_failure, "spectral_abscissa: eigensolver failed");
    }
    return solver.eigenvalues().real().maxCoeff();
}

double min_symmetric_eigenvalue(const Matrix& m) {
    require_square(m, "min_symmetric_eigenvalue");
    require_finite(m, "min_symmetric_eigenvalue");
    Eigen::SelfAdjointEigenSolver<Matrix> solver(symmetrize(m), Eigen::EigenvaluesOnly);
    return solver.eigenvalues().minCoeff();
}

bool is_spd(const Matrix& m, double tol) {
    if (m.rows() != m.cols() || m.rows() == 0 || !m.allFinite()) {
        return false;
    }
    if ((m - m.transpose()).cwiseAbs().maxCoeff() > std::max(tol, 1e-14) * std::max(1.0, m.cwiseAbs().maxCoeff())) {
        return false;
    }
    return min_symmetric_eigenvalue(m) > tol;
}

Matrix symmetrize(const Matrix& m) { return 0.5 * (m + m.transpose()); }

Matrix psd_sqrt(const Matrix& m) {
    require_square(m, "psd_sqrt");
    require_finite(m, "psd_sqrt");
    Eigen::SelfAdjointEigenSolver<Matrix> solver(symmetrize(m));
    const Vector roots = solver.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    const Matrix& v = solver.eigenvectors();
    return v * roots.asDiagonal() * v.transpose();
}

bool nearly_singular_covariance(const Matrix& c, double tol) {
    require_square(c, "covariance");
    double diag_product = 1.0;
    for (Index i = 0; i < c.rows(); ++i) {
        if (!(c(i, i) > 0.0)) {
            return true;
        }
        diag_product *= c(i, i);
    }
    return std::abs(c.determinant()) <= tol * diag_product;
}

const char* to_string(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::invalid_argument: return "invalid argument";
        case ErrorCode::insufficient_data: return "insufficient data";
        case ErrorCode::branch_failure: return "logarithm branch failure";
        case ErrorCode::singular: return "singular system";
        case ErrorCode::computation_failure: return "computation failure";
        case ErrorCode::degenerate_variance: return "degenerate variance";
        case ErrorCode::fit_failure: return "fit failure";
        case ErrorCode::parse_error: return "parse error";
        case ErrorCode::io_error: return "i/o error";
    }
    return "unknown error";
}

}  // namespace limflow
