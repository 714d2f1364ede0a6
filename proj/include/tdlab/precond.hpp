#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "tdlab/linalg.hpp"
#include "tdlab/mdp.hpp"

namespace tdlab::precond {

using linalg::EigenResult;
using linalg::Matrix;

// Which temporal-difference operator the linear system is built from.
enum class VariantKind { Td0, NStep, Lambda };

struct Variant {
    VariantKind kind = VariantKind::Td0;
    unsigned n = 1;        // n-step horizon (NStep only)
    double lambda = 0.0;   // trace parameter in [0,1] (Lambda only)

    static Variant td0() { return {}; }
    static Variant nstep(unsigned n) { return {VariantKind::NStep, n, 0.0}; }
    static Variant td_lambda(double l) { return {VariantKind::Lambda, 1, l}; }

    std::string name() const;  // "td0" | "nstep" | "lambda"
};

// The linear system h v = r_eff whose fixed point is the exact value
// function:
//   td0:    h = I - gamma P            r_eff = r
//   nstep:  h = I - gamma^n P^n        r_eff = sum_{k<n} (gamma P)^k r
//   lambda: h = (I-gamma l P)^{-1}(I-gamma P), r_eff = (I-gamma l P)^{-1} r
struct TdSystem {
    Variant variant;
    Matrix h;
    Vector r_eff;
    double gamma = 0.0;
    mdp::Mdp source;
};

enum class SplitKind { Plain, Jacobi };

// h = b - c with b invertible; "plain" keeps b = I, "jacobi" takes b = diag(h).
struct Splitting {
    Matrix b;
    Matrix c;
    SplitKind kind = SplitKind::Plain;
};

struct RegularityReport {
    bool is_regular;        // b^{-1} >= 0 and c >= 0 (within 1e-12 slack)
    double min_binv_entry;
    double min_c_entry;
};

struct Theorem1Report {
    double rho_jacobi;
    double rho_plain;
    bool holds;  // rho_jacobi <= rho_plain + 1e-10 and rho_plain < 1
};

struct OptimalStep {
    double alpha_star;  // 2 / (lambda_max + lambda_min)
    double rho_star;    // (lambda_max - lambda_min) / (lambda_max + lambda_min)
};

struct Theorem2Report {
    double kappa_jacobi;
    double kappa_plain;
    bool holds;  // kappa_jacobi <= 2 * kappa_plain + 1e-9
};

TdSystem build_system(const mdp::Mdp& m, const Variant& v);

// b = diag(h); throws DegenerateDiagonal if any h_ii <= 1e-12.
Splitting jacobi_split(const TdSystem& sys);

// b = I, c = I - h.
Splitting plain_split(const TdSystem& sys);

RegularityReport verify_regular_splitting(const Splitting& s);

// Spectral radius of I - alpha b^{-1} h. alpha == 1 takes the nonnegative
// fast path (the matrix is then b^{-1} c); other alphas go through the
// general eigensolver. alpha must be >= 0; alpha == 0 trivially returns 1.
double iteration_rate(const Splitting& s, double alpha);

Theorem1Report theorem1_check(const mdp::Mdp& m, const Variant& v);

// Requires a real, strictly positive spectrum.
OptimalStep optimal_alpha(const EigenResult& eigs);

// Requires I - gamma P symmetric positive-definite. kappa_jacobi is computed
// from the symmetric similarity D^{-1/2} H D^{-1/2} (same spectrum as the
// preconditioned operator, but safely real).
Theorem2Report theorem2_check(const mdp::Mdp& m);

// One row of the theory study: rates, optimal steps and condition numbers
// for both splittings of one system. The optional fields are present only
// when h is symmetric positive-definite (real spectrum guaranteed).
struct SplittingAnalysis {
    Variant variant;
    double gamma = 0.0;
    std::size_t n_states = 0;
    std::uint64_t seed = 0;
    double rho_plain = 0.0;
    double rho_jacobi = 0.0;
    std::optional<double> alpha_star_plain;
    std::optional<double> alpha_star_jacobi;
    std::optional<double> kappa_plain;
    std::optional<double> kappa_jacobi;
    bool theorem1_holds = false;
    std::optional<bool> theorem2_holds;
    bool is_symmetric = false;
};

SplittingAnalysis analyze(const mdp::Mdp& m, const Variant& v, std::uint64_t seed);

std::string analysis_csv_header();
std::string analysis_csv_row(const SplittingAnalysis& a);

}  // namespace tdlab::precond
