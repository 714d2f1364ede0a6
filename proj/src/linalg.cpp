#include "tdlab/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>

namespace tdlab::linalg {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();
constexpr std::size_t kMaxDim = 512;

double sign_or_one(double x) { return x >= 0.0 ? 1.0 : -1.0; }

void require(bool cond, const char* msg) {
    if (!cond) throw InvalidArg(msg);
}

}  // namespace

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {
    if (!std::isfinite(fill)) throw NonFiniteInput("Matrix: non-finite fill");
}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> entries)
    : rows_(rows), cols_(cols), data_(std::move(entries)) {
    require(rows_ * cols_ == data_.size(), "Matrix: rows*cols != entry count");
    for (double v : data_) {
        if (!std::isfinite(v)) throw NonFiniteInput("Matrix: non-finite entry");
    }
}

Matrix Matrix::identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

Matrix Matrix::diagonal(const Vector& d) {
    Matrix m(d.size(), d.size());
    for (std::size_t i = 0; i < d.size(); ++i) m(i, i) = d[i];
    return m;
}

Matrix Matrix::transpose() const {
    Matrix t(cols_, rows_);
    for (std::size_t i = 0; i < rows_; ++i)
        for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
    return t;
}

Vector Matrix::diag() const {
    std::size_t n = std::min(rows_, cols_);
    Vector d(n);
    for (std::size_t i = 0; i < n; ++i) d[i] = (*this)(i, i);
    return d;
}

bool Matrix::all_finite() const {
    for (double v : data_)
        if (!std::isfinite(v)) return false;
    return true;
}

Matrix& Matrix::operator+=(const Matrix& o) {
    require(rows_ == o.rows_ && cols_ == o.cols_, "Matrix +=: shape mismatch");
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
    return *this;
}

Matrix& Matrix::operator-=(const Matrix& o) {
    require(rows_ == o.rows_ && cols_ == o.cols_, "Matrix -=: shape mismatch");
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= o.data_[i];
    return *this;
}

Matrix& Matrix::operator*=(double s) {
    for (double& v : data_) v *= s;
    return *this;
}

Matrix operator+(Matrix a, const Matrix& b) { return a += b; }
Matrix operator-(Matrix a, const Matrix& b) { return a -= b; }
Matrix operator*(double s, Matrix a) { return a *= s; }

Matrix operator*(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.rows()) throw DimMismatch("Matrix *: inner dims differ");
    Matrix c(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        for (std::size_t k = 0; k < a.cols(); ++k) {
            double aik = a(i, k);
            if (aik == 0.0) continue;
            for (std::size_t j = 0; j < b.cols(); ++j) c(i, j) += aik * b(k, j);
        }
    }
    return c;
}

Vector operator*(const Matrix& a, const Vector& x) {
    if (a.cols() != x.size()) throw DimMismatch("Matrix * Vector: dims differ");
    Vector y(a.rows(), 0.0);
    for (std::size_t i = 0; i < a.rows(); ++i) {
        double acc = 0.0;
        for (std::size_t j = 0; j < a.cols(); ++j) acc += a(i, j) * x[j];
        y[i] = acc;
    }
    return y;
}

Matrix matrix_power(const Matrix& a, unsigned k) {
    require(a.square(), "matrix_power: not square");
    Matrix result = Matrix::identity(a.rows());
    for (unsigned i = 0; i < k; ++i) result = result * a;
    return result;
}

double inf_norm(const Vector& v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

double inf_norm(const Matrix& a) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.rows(); ++i) {
        double row = 0.0;
        for (std::size_t j = 0; j < a.cols(); ++j) row += std::abs(a(i, j));
        m = std::max(m, row);
    }
    return m;
}

double frobenius_norm(const Matrix& a) {
    double s = 0.0;
    for (double v : a.data()) s += v * v;
    return std::sqrt(s);
}

double max_abs_entry(const Matrix& a) {
    double m = 0.0;
    for (double v : a.data()) m = std::max(m, std::abs(v));
    return m;
}

double min_entry(const Matrix& a) {
    double m = std::numeric_limits<double>::infinity();
    for (double v : a.data()) m = std::min(m, v);
    return m;
}

Vector operator-(const Vector& a, const Vector& b) {
    if (a.size() != b.size()) throw DimMismatch("Vector -: sizes differ");
    Vector c(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) c[i] = a[i] - b[i];
    return c;
}

Vector operator+(const Vector& a, const Vector& b) {
    if (a.size() != b.size()) throw DimMismatch("Vector +: sizes differ");
    Vector c(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) c[i] = a[i] + b[i];
    return c;
}

double dot(const Vector& a, const Vector& b) {
    if (a.size() != b.size()) throw DimMismatch("dot: sizes differ");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double EigenResult::max() const {
    return *std::max_element(eigenvalues.begin(), eigenvalues.end());
}

double EigenResult::min() const {
    return *std::min_element(eigenvalues.begin(), eigenvalues.end());
}

// ---------------------------------------------------------------------------
// LU with partial pivoting
// ---------------------------------------------------------------------------

LuFactorization::LuFactorization(Matrix a) : lu_(std::move(a)) {
    if (!lu_.square()) throw DimMismatch("LU: matrix not square");
    const std::size_t n = lu_.rows();
    require(n >= 1, "LU: empty matrix");
    const double pivot_tol = 1e-12 * inf_norm(lu_);
    perm_.resize(n);
    for (std::size_t i = 0; i < n; ++i) perm_[i] = i;

    for (std::size_t k = 0; k < n; ++k) {
        std::size_t piv = k;
        double best = std::abs(lu_(k, k));
        for (std::size_t i = k + 1; i < n; ++i) {
            double v = std::abs(lu_(i, k));
            if (v > best) {
                best = v;
                piv = i;
            }
        }
        if (best <= pivot_tol) throw SingularMatrix("LU: pivot below tolerance");
        if (piv != k) {
            for (std::size_t j = 0; j < n; ++j) std::swap(lu_(k, j), lu_(piv, j));
            std::swap(perm_[k], perm_[piv]);
        }
        const double inv_pivot = 1.0 / lu_(k, k);
        for (std::size_t i = k + 1; i < n; ++i) {
            double mult = lu_(i, k) * inv_pivot;
            lu_(i, k) = mult;
            if (mult == 0.0) continue;
            for (std::size_t j = k + 1; j < n; ++j) lu_(i, j) -= mult * lu_(k, j);
        }
    }
}

Vector LuFactorization::solve(const Vector& b) const {
    const std::size_t n = lu_.rows();
    if (b.size() != n) throw DimMismatch("LU solve: rhs size differs");
    Vector x(n);
    for (std::size_t i = 0; i < n; ++i) x[i] = b[perm_[i]];
    for (std::size_t i = 1; i < n; ++i) {
        double acc = x[i];
        for (std::size_t j = 0; j < i; ++j) acc -= lu_(i, j) * x[j];
        x[i] = acc;
    }
    for (std::size_t ii = n; ii-- > 0;) {
        double acc = x[ii];
        for (std::size_t j = ii + 1; j < n; ++j) acc -= lu_(ii, j) * x[j];
        x[ii] = acc / lu_(ii, ii);
    }
    return x;
}

Matrix LuFactorization::solve(const Matrix& b) const {
    const std::size_t n = lu_.rows();
    if (b.rows() != n) throw DimMismatch("LU solve: rhs rows differ");
    Matrix x(n, b.cols());
    Vector col(n);
    for (std::size_t j = 0; j < b.cols(); ++j) {
        for (std::size_t i = 0; i < n; ++i) col[i] = b(i, j);
        Vector sol = solve(col);
        for (std::size_t i = 0; i < n; ++i) x(i, j) = sol[i];
    }
    return x;
}

Matrix LuFactorization::inverse() const { return solve(Matrix::identity(lu_.rows())); }

Vector solve_linear(const Matrix& a, const Vector& b) {
    return LuFactorization(a).solve(b);
}

// ---------------------------------------------------------------------------
// Power iteration for nonnegative matrices
// ---------------------------------------------------------------------------

double spectral_radius_nonneg(const Matrix& a) {
    if (!a.square()) throw DimMismatch("spectral_radius_nonneg: not square");
    const std::size_t n = a.rows();
    require(n >= 1 && n <= kMaxDim, "spectral_radius_nonneg: bad dimension");
    for (double v : a.data()) {
        require(v >= 0.0, "spectral_radius_nonneg: negative entry");
    }

    Vector x(n, 1.0);
    double estimate = 0.0;
    bool have_estimate = false;
    constexpr int kMaxIters = 100000;
    // Tied dominant moduli (periodic or bipartite structure) make the
    // estimate cycle instead of settling: it keeps moving step-to-step yet
    // revisits a value from a few iterations back at the very tolerance that
    // defines convergence. Those cases are handed to the QR path, as is
    // anything still unresolved after the soft cap. The revisit scan reaches
    // back far enough to cover cycle periods up to the dimension cap.
    constexpr int kSoftCap = 20000;
    constexpr int kWindow = int(kMaxDim) + 9;
    std::vector<double> ring(kWindow, 0.0);
    int oscillating = 0;

    for (int it = 0; it < kMaxIters; ++it) {
        Vector y = a * x;
        double xx = dot(x, x);
        double rayleigh = dot(x, y) / xx;
        double yy = std::sqrt(dot(y, y));
        if (yy == 0.0) return 0.0;  // A^k 1 = 0 with A >= 0 means A nilpotent
        for (std::size_t i = 0; i < n; ++i) x[i] = y[i] / yy;

        double scale = std::max(1.0, std::abs(rayleigh));
        if (have_estimate && std::abs(rayleigh - estimate) < 1e-12 * scale) {
            return rayleigh;
        }
        if (it >= 2) {
            bool revisit = false;
            int depth = std::min(it, kWindow);
            for (int lag = 2; lag <= depth; ++lag) {
                if (std::abs(rayleigh - ring[(it - lag) % kWindow]) < 1e-12 * scale) {
                    revisit = true;
                    break;
                }
            }
            if (revisit) {
                if (++oscillating >= 3) return spectral_radius_general(a);
            } else {
                oscillating = 0;
            }
        }
        if (it + 1 >= kSoftCap) return spectral_radius_general(a);
        ring[it % kWindow] = rayleigh;
        estimate = rayleigh;
        have_estimate = true;
    }
    throw NoConvergence("spectral_radius_nonneg: iteration cap hit, last estimate " +
                        std::to_string(estimate));
}

// ---------------------------------------------------------------------------
// Cyclic Jacobi rotations for symmetric matrices
// ---------------------------------------------------------------------------

namespace {

double off_diagonal_frobenius(const Matrix& a) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j)
            if (i != j) s += a(i, j) * a(i, j);
    return std::sqrt(s);
}

void sort_desc_by_modulus(Vector& v) {
    std::sort(v.begin(), v.end(),
              [](double a, double b) { return std::abs(a) > std::abs(b); });
}

}  // namespace

EigenResult eigenvalues_symmetric(const Matrix& a) {
    if (!a.square()) throw DimMismatch("eigenvalues_symmetric: not square");
    const std::size_t n = a.rows();
    require(n >= 1 && n <= kMaxDim, "eigenvalues_symmetric: bad dimension");

    double asym = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            asym = std::max(asym, std::abs(a(i, j) - a(j, i)));
    if (asym > 1e-10 * std::max(inf_norm(a), kEps)) {
        throw NotSymmetric("eigenvalues_symmetric: ||a - a^T|| too large");
    }

    // Work on the exactly symmetrized copy so rounding asymmetry cannot leak.
    Matrix w(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) w(i, j) = 0.5 * (a(i, j) + a(j, i));

    const double target = 1e-12 * frobenius_norm(w);
    constexpr int kMaxSweeps = 100;
    for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
        if (off_diagonal_frobenius(w) <= target) break;
        for (std::size_t p = 0; p + 1 < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                double apq = w(p, q);
                if (apq == 0.0) continue;
                double theta = (w(q, q) - w(p, p)) / (2.0 * apq);
                double t = sign_or_one(theta) /
                           (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                double c = 1.0 / std::sqrt(t * t + 1.0);
                double s = t * c;
                w(p, p) -= t * apq;
                w(q, q) += t * apq;
                w(p, q) = w(q, p) = 0.0;
                for (std::size_t i = 0; i < n; ++i) {
                    if (i == p || i == q) continue;
                    double aip = w(i, p), aiq = w(i, q);
                    w(i, p) = w(p, i) = c * aip - s * aiq;
                    w(i, q) = w(q, i) = s * aip + c * aiq;
                }
            }
        }
    }
    if (off_diagonal_frobenius(w) > target) {
        throw NoConvergence("eigenvalues_symmetric: sweeps exhausted");
    }
    Vector eig = w.diag();
    sort_desc_by_modulus(eig);
    return EigenResult{std::move(eig), EigenMethod::SymmetricJacobiRotations};
}

// ---------------------------------------------------------------------------
// Hessenberg reduction + Francis double-shift QR
// ---------------------------------------------------------------------------

namespace {

// In-place Householder reduction to upper Hessenberg form (eigenvalues only,
// no transform accumulation).
void hessenberg_reduce(Matrix& h) {
    const std::size_t n = h.rows();
    if (n < 3) return;
    Vector v(n);
    for (std::size_t k = 0; k + 2 < n; ++k) {
        double col_norm = 0.0;
        for (std::size_t i = k + 1; i < n; ++i) col_norm += h(i, k) * h(i, k);
        col_norm = std::sqrt(col_norm);
        if (col_norm == 0.0) continue;
        double alpha = -sign_or_one(h(k + 1, k)) * col_norm;
        double vnorm2 = 0.0;
        for (std::size_t i = k + 1; i < n; ++i) {
            v[i] = h(i, k);
            if (i == k + 1) v[i] -= alpha;
            vnorm2 += v[i] * v[i];
        }
        if (vnorm2 == 0.0) continue;
        const double beta = 2.0 / vnorm2;
        // H <- (I - beta v v^T) H
        for (std::size_t j = k; j < n; ++j) {
            double s = 0.0;
            for (std::size_t i = k + 1; i < n; ++i) s += v[i] * h(i, j);
            s *= beta;
            for (std::size_t i = k + 1; i < n; ++i) h(i, j) -= s * v[i];
        }
        // H <- H (I - beta v v^T)
        for (std::size_t i = 0; i < n; ++i) {
            double s = 0.0;
            for (std::size_t j = k + 1; j < n; ++j) s += h(i, j) * v[j];
            s *= beta;
            for (std::size_t j = k + 1; j < n; ++j) h(i, j) -= s * v[j];
        }
        h(k + 1, k) = alpha;
        for (std::size_t i = k + 2; i < n; ++i) h(i, k) = 0.0;
    }
}

// Francis double-shift QR on an upper Hessenberg matrix (EISPACK hqr layout).
// Fills (real, imag) eigenvalue pairs.
void hessenberg_qr_eigenvalues(Matrix& h, Vector& re, Vector& im) {
    const int n = static_cast<int>(h.rows());
    re.assign(n, 0.0);
    im.assign(n, 0.0);

    double anorm = 0.0;
    for (int i = 0; i < n; ++i)
        for (int j = std::max(i - 1, 0); j < n; ++j) anorm += std::abs(h(i, j));
    if (anorm == 0.0) return;  // zero matrix

    int nn = n - 1;
    double t = 0.0, p = 0, q = 0, r = 0, x = 0, y = 0, z = 0, w = 0, s = 0;
    while (nn >= 0) {
        int its = 0;
        int l;
        do {
            for (l = nn; l >= 1; --l) {
                s = std::abs(h(l - 1, l - 1)) + std::abs(h(l, l));
                if (s == 0.0) s = anorm;
                if (std::abs(h(l, l - 1)) <= kEps * s) {
                    h(l, l - 1) = 0.0;
                    break;
                }
            }
            if (l < 1) l = 0;
            x = h(nn, nn);
            if (l == nn) {  // one real root
                re[nn] = x + t;
                im[nn] = 0.0;
                nn -= 1;
                continue;
            }
            y = h(nn - 1, nn - 1);
            w = h(nn, nn - 1) * h(nn - 1, nn);
            if (l == nn - 1) {  // a 2x2 block deflates
                p = 0.5 * (y - x);
                q = p * p + w;
                z = std::sqrt(std::abs(q));
                x += t;
                if (q >= 0.0) {  // real pair
                    z = p + (p >= 0.0 ? z : -z);
                    re[nn - 1] = re[nn] = x + z;
                    if (z != 0.0) re[nn] = x - w / z;
                    im[nn - 1] = im[nn] = 0.0;
                } else {  // complex conjugate pair
                    re[nn - 1] = re[nn] = x + p;
                    im[nn - 1] = z;
                    im[nn] = -z;
                }
                nn -= 2;
            } else {  // no root yet: double QR sweep
                if (its == 50) {
                    throw NoConvergence("spectral_radius_general: QR iteration cap");
                }
                if (its == 10 || its == 20 || its == 30 || its == 40) {
                    // exceptional shift
                    t += x;
                    for (int i = 0; i <= nn; ++i) h(i, i) -= x;
                    s = std::abs(h(nn, nn - 1)) + std::abs(h(nn - 1, nn - 2));
                    y = x = 0.75 * s;
                    w = -0.4375 * s * s;
                }
                ++its;
                int m;
                for (m = nn - 2; m >= l; --m) {
                    z = h(m, m);
                    r = x - z;
                    s = y - z;
                    p = (r * s - w) / h(m + 1, m) + h(m, m + 1);
                    q = h(m + 1, m + 1) - z - r - s;
                    r = h(m + 2, m + 1);
                    s = std::abs(p) + std::abs(q) + std::abs(r);
                    p /= s;
                    q /= s;
                    r /= s;
                    if (m == l) break;
                    double u = std::abs(h(m, m - 1)) * (std::abs(q) + std::abs(r));
                    double v = std::abs(p) * (std::abs(h(m - 1, m - 1)) + std::abs(z) +
                                              std::abs(h(m + 1, m + 1)));
                    if (u <= kEps * v) break;
                }
                for (int i = m + 2; i <= nn; ++i) h(i, i - 2) = 0.0;
                for (int i = m + 3; i <= nn; ++i) h(i, i - 3) = 0.0;
                for (int k = m; k <= nn - 1; ++k) {
                    if (k != m) {
                        p = h(k, k - 1);
                        q = h(k + 1, k - 1);
                        r = (k != nn - 1) ? h(k + 2, k - 1) : 0.0;
                        x = std::abs(p) + std::abs(q) + std::abs(r);
                        if (x != 0.0) {
                            p /= x;
                            q /= x;
                            r /= x;
                        }
                    }
                    s = std::sqrt(p * p + q * q + r * r);
                    if (p < 0.0) s = -s;
                    if (s == 0.0) continue;
                    if (k == m) {
                        if (l != m) h(k, k - 1) = -h(k, k - 1);
                    } else {
                        h(k, k - 1) = -s * x;
                    }
                    p += s;
                    x = p / s;
                    y = q / s;
                    z = r / s;
                    q /= p;
                    r /= p;
                    for (int j = k; j <= nn; ++j) {  // row modification
                        p = h(k, j) + q * h(k + 1, j);
                        if (k != nn - 1) {
                            p += r * h(k + 2, j);
                            h(k + 2, j) -= p * z;
                        }
                        h(k + 1, j) -= p * y;
                        h(k, j) -= p * x;
                    }
                    int mmin = (nn < k + 3) ? nn : k + 3;
                    for (int i = l; i <= mmin; ++i) {  // column modification
                        p = x * h(i, k) + y * h(i, k + 1);
                        if (k != nn - 1) {
                            p += z * h(i, k + 2);
                            h(i, k + 2) -= p * r;
                        }
                        h(i, k + 1) -= p * q;
                        h(i, k) -= p;
                    }
                }
            }
        } while (l < nn - 1);
    }
}

}  // namespace

EigenResult eigenvalues_general(const Matrix& a) {
    if (!a.square()) throw DimMismatch("eigenvalues_general: not square");
    const std::size_t n = a.rows();
    require(n >= 1 && n <= kMaxDim, "eigenvalues_general: bad dimension");
    if (n == 1) {
        return EigenResult{{a(0, 0)}, EigenMethod::HessenbergQr};
    }
    Matrix h = a;
    hessenberg_reduce(h);
    Vector re, im;
    hessenberg_qr_eigenvalues(h, re, im);
    Vector moduli(n);
    for (std::size_t i = 0; i < n; ++i) {
        moduli[i] = im[i] == 0.0 ? re[i] : std::hypot(re[i], im[i]);
    }
    sort_desc_by_modulus(moduli);
    return EigenResult{std::move(moduli), EigenMethod::HessenbergQr};
}

double spectral_radius_general(const Matrix& a) {
    EigenResult eig = eigenvalues_general(a);
    double rho = 0.0;
    for (double v : eig.eigenvalues) rho = std::max(rho, std::abs(v));
    return rho;
}

double condition_number_spd(const Matrix& a) {
    EigenResult eig = eigenvalues_symmetric(a);
    double lmax = eig.max();
    double lmin = eig.min();
    if (lmin <= 1e-12) {
        throw NotPositiveDefinite("condition_number_spd: lambda_min <= 1e-12");
    }
    return lmax / lmin;
}

}  // namespace tdlab::linalg
