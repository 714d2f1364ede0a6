#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "tdlab/error.hpp"

namespace tdlab {

using Vector = std::vector<double>;

namespace linalg {

// Dense row-major matrix of 64-bit reals. Desk scale: everything here is
// O(n^3) dense and deterministic, dimensions are capped at 512.
class Matrix {
  public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
    Matrix(std::size_t rows, std::size_t cols, std::vector<double> entries);

    static Matrix identity(std::size_t n);
    static Matrix diagonal(const Vector& d);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    bool square() const { return rows_ == cols_; }

    double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

    const std::vector<double>& data() const { return data_; }
    std::vector<double>& data() { return data_; }

    Matrix transpose() const;
    Vector diag() const;
    bool all_finite() const;

    Matrix& operator+=(const Matrix& o);
    Matrix& operator-=(const Matrix& o);
    Matrix& operator*=(double s);

  private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

Matrix operator+(Matrix a, const Matrix& b);
Matrix operator-(Matrix a, const Matrix& b);
Matrix operator*(double s, Matrix a);
Matrix operator*(const Matrix& a, const Matrix& b);
Vector operator*(const Matrix& a, const Vector& x);

// a^k by repeated multiplication, k >= 0.
Matrix matrix_power(const Matrix& a, unsigned k);

double inf_norm(const Vector& v);          // max |v_i|
double inf_norm(const Matrix& a);          // max row sum of |a_ij|
double frobenius_norm(const Matrix& a);
double max_abs_entry(const Matrix& a);
double min_entry(const Matrix& a);

Vector operator-(const Vector& a, const Vector& b);
Vector operator+(const Vector& a, const Vector& b);
double dot(const Vector& a, const Vector& b);

enum class EigenMethod { PerronPowerIteration, SymmetricJacobiRotations, HessenbergQr };

struct EigenResult {
    // Real spectra keep signed eigenvalues; the general (QR) path stores the
    // modulus wherever a complex conjugate pair arises. Sorted descending by
    // modulus in either case.
    Vector eigenvalues;
    EigenMethod method;

    double max() const;
    double min() const;
};

// LU factorization with partial pivoting, reusable across right-hand sides.
class LuFactorization {
  public:
    explicit LuFactorization(Matrix a);
    Vector solve(const Vector& b) const;
    Matrix solve(const Matrix& b) const;  // column-wise
    Matrix inverse() const;

  private:
    Matrix lu_;
    std::vector<std::size_t> perm_;
};

// Gaussian elimination with partial pivoting. Throws SingularMatrix when a
// pivot falls below 1e-12 * ||a||_inf.
Vector solve_linear(const Matrix& a, const Vector& b);

// Perron root of a componentwise-nonnegative square matrix. Power iteration
// from the all-ones vector; successive Rayleigh estimates within 1e-12 count
// as converged. Falls back to the general QR path when the estimate keeps
// revisiting earlier values instead of settling (tied dominant moduli of a
// periodic or bipartite matrix) or when 20000 iterations pass unresolved;
// throws NoConvergence if the 100000-iteration cap is somehow hit anyway.
double spectral_radius_nonneg(const Matrix& a);

// All eigenvalues of a symmetric matrix via cyclic Jacobi rotations. The
// off-diagonal Frobenius norm is driven below 1e-12 * ||a||_F.
EigenResult eigenvalues_symmetric(const Matrix& a);

// Max eigenvalue modulus of a general real square matrix: Householder
// reduction to Hessenberg form, then Francis double-shift QR with deflation.
double spectral_radius_general(const Matrix& a);

// Full general spectrum as moduli (complex pairs reported by modulus).
EigenResult eigenvalues_general(const Matrix& a);

// lambda_max / lambda_min of a symmetric positive-definite matrix.
double condition_number_spd(const Matrix& a);

}  // namespace linalg

// Vector is plain std::vector<double>, so argument-dependent lookup cannot
// find its operators inside sibling namespaces; hoist them to tdlab scope.
using linalg::operator+;
using linalg::operator-;
using linalg::operator*;
using linalg::dot;

}  // namespace tdlab
