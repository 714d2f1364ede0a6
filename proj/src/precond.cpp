#include "tdlab/precond.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

namespace tdlab::precond {

using linalg::condition_number_spd;
using linalg::eigenvalues_symmetric;
using linalg::inf_norm;
using linalg::LuFactorization;
using linalg::min_entry;
using linalg::spectral_radius_general;
using linalg::spectral_radius_nonneg;

std::string Variant::name() const {
    switch (kind) {
        case VariantKind::Td0: return "td0";
        case VariantKind::NStep: return "nstep";
        case VariantKind::Lambda: return "lambda";
    }
    return "?";
}

TdSystem build_system(const mdp::Mdp& m, const Variant& v) {
    mdp::validate(m);
    const std::size_t n = m.n_states();
    const Matrix eye = Matrix::identity(n);

    TdSystem sys;
    sys.variant = v;
    sys.gamma = m.gamma;
    sys.source = m;

    switch (v.kind) {
        case VariantKind::Td0: {
            sys.h = eye - m.gamma * m.p;
            sys.r_eff = m.r;
            break;
        }
        case VariantKind::NStep: {
            if (v.n < 1) throw InvalidArg("build_system: nstep horizon < 1");
            Matrix gp = m.gamma * m.p;
            sys.h = eye - linalg::matrix_power(gp, v.n);
            // r_eff = sum_{k=0}^{n-1} (gamma P)^k r
            Vector acc = m.r;
            Vector term = m.r;
            for (unsigned k = 1; k < v.n; ++k) {
                term = gp * term;
                acc = acc + term;
            }
            sys.r_eff = std::move(acc);
            break;
        }
        case VariantKind::Lambda: {
            if (!(v.lambda >= 0.0 && v.lambda <= 1.0)) {
                throw InvalidArg("build_system: lambda outside [0,1]");
            }
            Matrix a = eye - (m.gamma * v.lambda) * m.p;
            LuFactorization lu(a);
            sys.h = lu.solve(eye - m.gamma * m.p);
            sys.r_eff = lu.solve(m.r);
            break;
        }
    }
    return sys;
}

Splitting jacobi_split(const TdSystem& sys) {
    const std::size_t n = sys.h.rows();
    Splitting s;
    s.kind = SplitKind::Jacobi;
    s.b = Matrix(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        double d = sys.h(i, i);
        if (d <= 1e-12) throw DegenerateDiagonal("jacobi_split: h diagonal entry <= 1e-12");
        s.b(i, i) = d;
    }
    s.c = s.b - sys.h;
    return s;
}

Splitting plain_split(const TdSystem& sys) {
    Splitting s;
    s.kind = SplitKind::Plain;
    s.b = Matrix::identity(sys.h.rows());
    s.c = s.b - sys.h;
    return s;
}

RegularityReport verify_regular_splitting(const Splitting& s) {
    Matrix binv = LuFactorization(s.b).inverse();
    RegularityReport rep;
    rep.min_binv_entry = min_entry(binv);
    rep.min_c_entry = min_entry(s.c);
    rep.is_regular = rep.min_binv_entry >= -1e-12 && rep.min_c_entry >= -1e-12;
    return rep;
}

double iteration_rate(const Splitting& s, double alpha) {
    if (alpha < 0.0) throw InvalidArg("iteration_rate: negative alpha");
    if (alpha == 0.0) return 1.0;
    const std::size_t n = s.b.rows();
    LuFactorization lu(s.b);

    if (alpha == 1.0) {
        // I - B^{-1}(B - C) = B^{-1}C, nonnegative for a regular splitting
        Matrix m = lu.solve(s.c);
        bool nonneg = true;
        for (double& v : m.data()) {
            if (v < 0.0) {
                if (v < -1e-12) {
                    nonneg = false;
                    break;
                }
                v = 0.0;  // rounding fuzz from the subtraction b - h
            }
        }
        if (nonneg) return spectral_radius_nonneg(m);
    }
    Matrix h = s.b - s.c;
    Matrix iter = Matrix::identity(n) - alpha * lu.solve(h);
    return spectral_radius_general(iter);
}

Theorem1Report theorem1_check(const mdp::Mdp& m, const Variant& v) {
    TdSystem sys = build_system(m, v);
    Theorem1Report rep;
    rep.rho_jacobi = iteration_rate(jacobi_split(sys), 1.0);
    rep.rho_plain = iteration_rate(plain_split(sys), 1.0);
    rep.holds = rep.rho_jacobi <= rep.rho_plain + 1e-10 && rep.rho_plain < 1.0;
    return rep;
}

OptimalStep optimal_alpha(const EigenResult& eigs) {
    if (eigs.eigenvalues.empty()) throw InvalidArg("optimal_alpha: empty spectrum");
    for (double v : eigs.eigenvalues) {
        if (!(v > 0.0)) throw NonPositiveSpectrum("optimal_alpha: eigenvalue <= 0");
    }
    double lmax = eigs.max();
    double lmin = eigs.min();
    return {2.0 / (lmax + lmin), (lmax - lmin) / (lmax + lmin)};
}

namespace {

// D^{-1/2} H D^{-1/2} for D = diag(h): symmetric whenever h is, and similar
// to D^{-1} H, so it carries the preconditioned spectrum.
Matrix diag_similarity(const Matrix& h) {
    const std::size_t n = h.rows();
    Vector dinv_sqrt(n);
    for (std::size_t i = 0; i < n; ++i) {
        double d = h(i, i);
        if (d <= 1e-12) throw DegenerateDiagonal("diagonal similarity: h_ii <= 1e-12");
        dinv_sqrt[i] = 1.0 / std::sqrt(d);
    }
    Matrix s(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) s(i, j) = dinv_sqrt[i] * h(i, j) * dinv_sqrt[j];
    return s;
}

}  // namespace

Theorem2Report theorem2_check(const mdp::Mdp& m) {
    mdp::validate(m);
    Matrix h = Matrix::identity(m.n_states()) - m.gamma * m.p;
    Theorem2Report rep;
    rep.kappa_plain = condition_number_spd(h);  // throws if not symmetric/PD
    rep.kappa_jacobi = condition_number_spd(diag_similarity(h));
    rep.holds = rep.kappa_jacobi <= 2.0 * rep.kappa_plain + 1e-9;
    return rep;
}

SplittingAnalysis analyze(const mdp::Mdp& m, const Variant& v, std::uint64_t seed) {
    TdSystem sys = build_system(m, v);
    SplittingAnalysis a;
    a.variant = v;
    a.gamma = m.gamma;
    a.n_states = m.n_states();
    a.seed = seed;
    a.rho_jacobi = iteration_rate(jacobi_split(sys), 1.0);
    a.rho_plain = iteration_rate(plain_split(sys), 1.0);
    a.theorem1_holds = a.rho_jacobi <= a.rho_plain + 1e-10 && a.rho_plain < 1.0;

    double scale = std::max(inf_norm(sys.h), 1e-300);
    a.is_symmetric = inf_norm(sys.h - sys.h.transpose()) <= 1e-10 * scale;
    if (a.is_symmetric) {
        try {
            EigenResult plain_eigs = eigenvalues_symmetric(sys.h);
            OptimalStep plain_opt = optimal_alpha(plain_eigs);
            a.alpha_star_plain = plain_opt.alpha_star;
            a.kappa_plain = plain_eigs.max() / plain_eigs.min();

            EigenResult jac_eigs = eigenvalues_symmetric(diag_similarity(sys.h));
            OptimalStep jac_opt = optimal_alpha(jac_eigs);
            a.alpha_star_jacobi = jac_opt.alpha_star;
            a.kappa_jacobi = jac_eigs.max() / jac_eigs.min();

            a.theorem2_holds = *a.kappa_jacobi <= 2.0 * *a.kappa_plain + 1e-9;
        } catch (const NonPositiveSpectrum&) {
            // symmetric but indefinite system: leave the optional fields empty
        }
    }
    return a;
}

std::string analysis_csv_header() {
    return "variant,n,lambda,gamma,n_states,seed,rho_plain,rho_jacobi,"
           "alpha_star_plain,alpha_star_jacobi,kappa_plain,kappa_jacobi,"
           "theorem1_holds,theorem2_holds";
}

namespace {

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string fmt(const std::optional<double>& v) { return v ? fmt(*v) : ""; }

}  // namespace

std::string analysis_csv_row(const SplittingAnalysis& a) {
    std::ostringstream out;
    out << a.variant.name() << ',';
    if (a.variant.kind == VariantKind::NStep) out << a.variant.n;
    out << ',';
    if (a.variant.kind == VariantKind::Lambda) out << fmt(a.variant.lambda);
    out << ',' << fmt(a.gamma) << ',' << a.n_states << ',' << a.seed << ','
        << fmt(a.rho_plain) << ',' << fmt(a.rho_jacobi) << ','
        << fmt(a.alpha_star_plain) << ',' << fmt(a.alpha_star_jacobi) << ','
        << fmt(a.kappa_plain) << ',' << fmt(a.kappa_jacobi) << ','
        << (a.theorem1_holds ? 1 : 0) << ',';
    if (a.theorem2_holds) out << (*a.theorem2_holds ? 1 : 0);
    return out.str();
}

}  // namespace tdlab::precond
