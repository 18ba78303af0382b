#include "driftspec/runner.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>

#include "json.hpp"

#include "driftspec/oracle.hpp"

namespace driftspec {

namespace {

double now_seconds() {
    using clk = std::chrono::steady_clock;
    return std::chrono::duration<double>(clk::now().time_since_epoch()).count();
}

// nested refinement: spacing halves when p -> 2p+1
int level_points(int base, int level) { return (base + 1) * (1 << level) - 1; }

double richardson(std::span<const double> lam) {
    switch (lam.size()) {
        case 1: return lam[0];
        case 2: return (4.0 * lam[1] - lam[0]) / 3.0;
        case 3: {
            const double r1a = (4.0 * lam[1] - lam[0]) / 3.0;
            const double r1b = (4.0 * lam[2] - lam[1]) / 3.0;
            return (16.0 * r1b - r1a) / 15.0;
        }
        default: throw std::invalid_argument("richardson: 1..3 levels supported");
    }
}

// restrict a fine-level field to base-grid nodes (fine index (j+1)*2^k - 1)
std::vector<double> restrict_to_base(const GridField& fine, const Grid& base, int level) {
    const int dim = base.dim();
    std::vector<double> out(base.size());
    std::vector<int> mi(dim), fi(dim);
    for (std::size_t r = 0; r < base.size(); ++r) {
        base.decode(r, mi);
        for (int j = 0; j < dim; ++j) fi[j] = (mi[j] + 1) * (1 << level) - 1;
        out[r] = fine.values[fine.grid.encode(fi)];
    }
    return out;
}

}  // namespace

MultiSolve solve_multilevel(const DriftSpec& drift, const PotentialSpec& V, double eps,
                            double alpha, Frame frame, const BoxDomain& box, int base_points,
                            int levels, SolveOptions opts) {
    if (levels < 1 || levels > 3) throw std::invalid_argument("levels must be 1..3");
    const double t0 = now_seconds();
    const int dim = box.dim();
    Grid base_grid(box, std::vector<int>(dim, base_points));

    MultiSolve out;
    std::vector<double> lams;
    std::vector<std::vector<double>> vecs;
    for (int lev = 0; lev < levels; ++lev) {
        Grid g(box, std::vector<int>(dim, level_points(base_points, lev)));
        SymmetricOperator op = assemble_symmetric(drift, V, g, eps, alpha, frame);
        EigenPair pair = smallest_eigenpair(op, opts);
        lams.push_back(pair.lambda);
        vecs.push_back(restrict_to_base(pair.u, base_grid, lev));
        if (lev == levels - 1) {
            out.finest = std::move(pair);
            out.op_finest = std::move(op);
        }
    }
    out.lambda = richardson(lams);
    out.w = GridField(base_grid, frame);
    if (levels == 1) {
        out.w.values = std::move(vecs[0]);
    } else if (levels == 2) {
        for (std::size_t i = 0; i < base_grid.size(); ++i)
            out.w.values[i] = (4.0 * vecs[1][i] - vecs[0][i]) / 3.0;
    } else {
        for (std::size_t i = 0; i < base_grid.size(); ++i) {
            const double r1a = (4.0 * vecs[1][i] - vecs[0][i]) / 3.0;
            const double r1b = (4.0 * vecs[2][i] - vecs[1][i]) / 3.0;
            out.w.values[i] = (16.0 * r1b - r1a) / 15.0;
        }
    }
    out.runtime_seconds = now_seconds() - t0;
    return out;
}

namespace {

// ---- expansion resolution for a config ----

struct ResolvedExpansion {
    EigenvalueExpansion lambda_exp;
    ExpansionKind kind = ExpansionKind::Smooth;
    int orders = 4;  // partial sums available
};

bool polynomial_homogeneous(const PotentialSpec& V) {
    if (!V.homogeneous_part()) return false;
    const double k0 = V.homogeneous_part()->degree;
    return k0 == std::round(k0) && static_cast<long>(std::llround(k0)) % 2 == 0;
}

ResolvedExpansion resolve_expansion(const ExperimentConfig& cfg, const DriftSpec& drift,
                                    const PotentialSpec& V) {
    ResolvedExpansion out;
    std::string kind = cfg.expansion;
    if (kind == "auto") kind = V.local_model() ? "smooth" : "homogeneous";
    if (kind == "smooth") {
        LocalModel lm;
        if (V.local_model())
            lm = *V.local_model();
        else
            lm = V.fd_local_model(cfg.make_box().width(0));
        out.kind = ExpansionKind::Smooth;
        out.lambda_exp = smooth_expansion(drift, lm, cfg.eps);
        out.orders = 4;
        return out;
    }
    if (!V.homogeneous_part())
        throw ConfigError("expansion = homogeneous requires a potential with a homogeneous part");
    const bool poly = polynomial_homogeneous(V);
    const int M = cfg.corrections_degree > 0 ? cfg.corrections_degree : (poly ? 40 : 80);
    HermiteBasis basis(drift, cfg.eps, M);
    const LimitPair limit = closed_form_limit(drift, cfg.eps);
    const auto F3 = build_rhs(RhsKind::F3, V, limit, basis, nullptr);
    const auto phi3 = solve_correction(basis, F3, poly ? 1e-10 : 1e-6, !poly);
    out.kind = ExpansionKind::Homogeneous;
    out.lambda_exp = homogeneous_expansion(drift, V, basis, phi3.phi);
    out.orders = 3;
    return out;
}

double sup_diff_q(const GridField& w, const LimitPair& limit) {
    const Grid& g = w.grid;
    std::vector<double> x(g.dim());
    double m = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
        g.point(i, x);
        m = std::max(m, std::abs(w.values[i] - limit.q(x)));
    }
    return m;
}

double boundary_tail_mass(const GridField& w) {
    const Grid& g = w.grid;
    std::vector<double> x(g.dim());
    double tail = 0.0, total = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
        g.point(i, x);
        bool outer = false;
        for (int j = 0; j < g.dim(); ++j) {
            const double rj = std::max(std::abs(g.box().lo[j]), std::abs(g.box().hi[j]));
            if (std::abs(x[j]) > 0.875 * rj) outer = true;
        }
        const double m = w.values[i] * w.values[i];
        total += m;
        if (outer) tail += m;
    }
    return total > 0 ? tail / total : 0.0;
}

}  // namespace

SweepOutcome sweep(const ExperimentConfig& cfg, std::ostream* log) {
    const DriftSpec drift = cfg.make_drift();
    const PotentialSpec V = cfg.make_potential();
    const LimitPair limit = closed_form_limit(drift, cfg.eps);
    const double R = cfg.resolved_radius();
    const BoxDomain physical_box = cfg.make_box();

    SweepOutcome out;
    const ResolvedExpansion rexp = resolve_expansion(cfg, drift, V);
    out.expansion = rexp.lambda_exp;

    SolveOptions opts{cfg.solver_tol, cfg.solver_max_matvecs};
    for (double alpha : cfg.alpha_ladder) {
        SweepRecord rec;
        rec.alpha = alpha;
        const bool rescaled =
            cfg.frame == "rescaled" || (cfg.frame == "auto" && alpha >= 10.0);
        try {
            const double t0 = now_seconds();
            const BoxDomain box = rescaled ? BoxDomain::cube(drift.dim(), R) : physical_box;
            const Frame frame = rescaled ? Frame::rescaled(alpha) : Frame::physical();
            MultiSolve ms = solve_multilevel(drift, V, cfg.eps, alpha, frame, box,
                                             cfg.grid_points, cfg.solver_levels, opts);
            rec.lambda_numeric = rescaled ? alpha * ms.lambda : ms.lambda;
            rec.solver_residual = ms.finest.residual;

            GridField w_rescaled = ms.w;
            if (!rescaled) {
                Grid target(BoxDomain::cube(drift.dim(), std::min(R, std::sqrt(alpha))),
                            std::vector<int>(drift.dim(), cfg.grid_points));
                w_rescaled = rescale_eigenfunction(ms.w, alpha, RescaleCenter::Origin, target);
            }
            rec.rescaled_sup_error = sup_diff_q(w_rescaled, limit);
            const MaxPointInfo mp = track_max_point(rescaled ? ms.w : ms.w, alpha);
            rec.d_alpha = mp.d_alpha;
            rec.scaled_max_drift = mp.scaled;
            rec.max_count = mp.count;
            rec.boundary_tail_mass = boundary_tail_mass(w_rescaled);
            if (rescaled) {
                const double radius = cfg.pohozaev_radius > 0 ? cfg.pohozaev_radius : R / 2.0;
                rec.pohozaev_residual =
                    pohozaev_projection(ms.op_finest, ms.finest.u, limit, radius);
            }
            rec.runtime_seconds = now_seconds() - t0;
        } catch (const SolverError& e) {
            ++out.solver_failures;
            if (log) *log << "# solver failure at alpha=" << alpha << ": " << e.what() << "\n";
            rec.lambda_numeric = std::nan("");
        }
        for (int order = 1; order <= 4; ++order)
            rec.partial_sums.push_back(
                predict_lambda(rexp.lambda_exp, alpha, std::min(order, rexp.orders)));
        out.records.push_back(std::move(rec));
        if (log)
            *log << "alpha=" << format_number(alpha)
                 << " lambda=" << format_number(out.records.back().lambda_numeric)
                 << " sup_err=" << format_number(out.records.back().rescaled_sup_error)
                 << " drift=" << format_number(out.records.back().scaled_max_drift)
                 << " t=" << format_number(out.records.back().runtime_seconds) << "s\n";
    }

    if (out.records.size() >= 4 && out.solver_failures == 0) {
        for (int order = 1; order <= rexp.orders; ++order) {
            try {
                out.fits.emplace_back(
                    order, fit_residual_order(out.records, order, 10.0 * cfg.solver_tol));
            } catch (const std::invalid_argument&) {
                break;
            }
        }
    }
    return out;
}

int run_solve(const ExperimentConfig& cfg, std::ostream& out) {
    const DriftSpec drift = cfg.make_drift();
    const PotentialSpec V = cfg.make_potential();
    const double alpha = cfg.alpha_ladder.at(0);
    const bool rescaled = cfg.frame == "rescaled" || (cfg.frame == "auto" && alpha >= 10.0);
    const double R = cfg.resolved_radius();
    const BoxDomain box = rescaled ? BoxDomain::cube(drift.dim(), R) : cfg.make_box();
    const Frame frame = rescaled ? Frame::rescaled(alpha) : Frame::physical();
    SolveOptions opts{cfg.solver_tol, cfg.solver_max_matvecs};

    try {
        MultiSolve ms = solve_multilevel(drift, V, cfg.eps, alpha, frame, box, cfg.grid_points,
                                         cfg.solver_levels, opts);
        const double lam = rescaled ? alpha * ms.lambda : ms.lambda;
        const MaxPointInfo mp = track_max_point(ms.w, alpha);
        out << "frame          : " << (rescaled ? "rescaled" : "physical") << "\n";
        out << "lambda_alpha   : " << format_number(lam) << "\n";
        out << "lambda/alpha   : " << format_number(lam / alpha) << "\n";
        out << "residual       : " << format_number(ms.finest.residual) << "\n";
        out << "matvecs        : " << ms.finest.iterations << "\n";
        out << "d_alpha        : [";
        for (std::size_t j = 0; j < mp.d_alpha.size(); ++j)
            out << (j ? ", " : "") << format_number(mp.d_alpha[j]);
        out << "]\n";
        out << "runtime_seconds: " << format_number(ms.runtime_seconds) << "\n";
        return 0;
    } catch (const SolverError& e) {
        out << "solver failure: " << e.what() << "\n";
        return 3;
    }
}

int run_sweep(const ExperimentConfig& cfg, std::ostream& out) {
    SweepOutcome oc = sweep(cfg, &out);

    if (!cfg.out_csv.empty()) {
        std::ofstream f(cfg.out_csv);
        if (!f) throw ConfigError("cannot open output.csv path: " + cfg.out_csv);
        write_sweep_csv(f, oc.records);
    }
    if (!cfg.out_json.empty()) {
        std::ofstream f(cfg.out_json);
        if (!f) throw ConfigError("cannot open output.json path: " + cfg.out_json);
        f << sweep_report_json(cfg, oc.records, oc.fits);
    }
    for (const auto& [order, fit] : oc.fits)
        out << "residual order " << order << ": slope=" << format_number(fit.slope)
            << " r2=" << format_number(fit.r_squared)
            << (fit.at_floor ? " (at solver floor)" : "") << "\n";

    if (oc.solver_failures > 0) {
        out << "sweep finished with " << oc.solver_failures << " solver failure(s)\n";
        return cfg.strict ? 3 : 0;
    }
    if (cfg.strict) {
        // trend gates: |lambda/alpha - mu| and sup error non-increasing (with a
        // floor at solver precision; the V = 0 reference is exactly flat)
        const double mu = 2.0 * cfg.make_drift().sum_abs();
        bool ok = true;
        for (std::size_t i = 1; i < oc.records.size(); ++i) {
            const auto& a = oc.records[i - 1];
            const auto& b = oc.records[i];
            const double floor = 1e-8 * mu;
            if (std::abs(b.lambda_numeric / b.alpha - mu) >
                std::abs(a.lambda_numeric / a.alpha - mu) + floor)
                ok = false;
            if (b.rescaled_sup_error > a.rescaled_sup_error + 1e-8) ok = false;
        }
        if (!ok) {
            out << "strict: trend gates violated\n";
            return 4;
        }
    }
    return 0;
}

int run_limit(const ExperimentConfig& cfg, std::ostream& out) {
    const DriftSpec drift = cfg.make_drift();
    const LimitPair lp = closed_form_limit(drift, cfg.eps);
    HermiteBasis basis(drift, cfg.eps, 20);
    const auto q = basis.sample_q();
    std::vector<double> q2(q.size());
    for (std::size_t i = 0; i < q.size(); ++i) q2[i] = q[i] * q[i];
    const double mass = basis.integrate(q2);

    out << "mu            : " << format_number(lp.mu) << "\n";
    out << "Q(0)          : " << format_number(lp.q_origin) << "\n";
    out << "sigma         : [";
    for (std::size_t j = 0; j < lp.sigma.size(); ++j)
        out << (j ? ", " : "") << format_number(lp.sigma[j]);
    out << "]\n";
    out << "int Q^2 - 1   : " << format_number(mass - 1.0) << "\n";
    std::vector<int> tau(drift.dim(), 0);
    for (int j = 0; j < drift.dim(); ++j) {
        tau.assign(drift.dim(), 0);
        tau[j] = 2;
        out << "moment x_" << (j + 1) << "^2  : " << format_number(gaussian_moment(drift, cfg.eps, tau))
            << "\n";
    }
    return 0;
}

int run_corrections(const ExperimentConfig& cfg, std::ostream& out) {
    const DriftSpec drift = cfg.make_drift();
    const PotentialSpec V = cfg.make_potential();
    const LimitPair limit = closed_form_limit(drift, cfg.eps);
    const bool poly = polynomial_homogeneous(V);
    const int M = cfg.corrections_degree > 0 ? cfg.corrections_degree
                                             : ((V.homogeneous_part() && !poly) ? 80 : 40);
    HermiteBasis basis(drift, cfg.eps, M);

    CorrectionSet set;
    struct Row {
        const char* name;
        const CorrectionSolve* sol;
        RhsKind kind;
    };
    std::vector<Row> rows;

    if (V.local_model()) {
        const auto F1 = build_rhs(RhsKind::F1, V, limit, basis, nullptr);
        set.phi1 = solve_correction(basis, F1);
        const auto F2 = build_rhs(RhsKind::F2, V, limit, basis, nullptr);
        set.phi2 = solve_correction(basis, F2);
        rows.push_back({"phi1", &*set.phi1, RhsKind::F1});
        rows.push_back({"phi2", &*set.phi2, RhsKind::F2});
    }
    if (V.homogeneous_part()) {
        const double tail_tol = poly ? 1e-10 : 1e-6;
        const auto F3 = build_rhs(RhsKind::F3, V, limit, basis, nullptr);
        set.phi3 = solve_correction(basis, F3, tail_tol, !poly);
        const auto F4 = build_rhs(RhsKind::F4, V, limit, basis, &set.phi3->phi);
        set.phi4 = solve_correction(basis, F4, tail_tol, !poly);
        rows.push_back({"phi3", &*set.phi3, RhsKind::F3});
        rows.push_back({"phi4", &*set.phi4, RhsKind::F4});
    }
    if (rows.empty())
        throw ConfigError(
            "corrections mode: potential has neither local data (gradient_at_origin, "
            "hessian_at_origin) nor a homogeneous part");

    bool strict_ok = true;
    nlohmann::ordered_json spectra;
    for (const auto& row : rows) {
        const auto& sol = *row.sol;
        const double nrm = sol.phi.norm();
        out << row.name << ": |phi|=" << format_number(nrm)
            << " <phi,Q>=" << format_number(sol.phi.c[0])
            << " tail=" << format_number(sol.tail_rel)
            << (sol.tail_warned ? " (tail relaxed: non-smooth right-hand side)" : "");
        if (nrm == 0.0) out << "  -- phi == 0 identically";
        // decay constant sup |phi(x)| e^{|x|/2} over a sampling box of 6 sigma
        double C = 0.0;
        {
            std::vector<double> x(drift.dim(), 0.0);
            const int samples = 33;
            std::vector<int> idx(drift.dim(), 0);
            const double half = 6.0 * *std::max_element(limit.sigma.begin(), limit.sigma.end());
            while (true) {
                double r = 0.0;
                for (int j = 0; j < drift.dim(); ++j) {
                    x[j] = -half + 2.0 * half * idx[j] / (samples - 1);
                    r += x[j] * x[j];
                }
                C = std::max(C, std::abs(basis.evaluate(sol.phi, x)) * std::exp(std::sqrt(r) / 2.0));
                int ax = drift.dim() - 1;
                while (ax >= 0 && idx[ax] == samples - 1) idx[ax--] = 0;
                if (ax < 0) break;
                ++idx[ax];
            }
        }
        out << " decay_C=" << format_number(C) << "\n";

        if (cfg.strict && nrm > 0.0) {
            // dense-grid constrained-solve oracle (gated only for smooth data,
            // where the collocation converges superalgebraically). The oracle
            // sees the basis-projected right-hand side, which is exact for the
            // gated polynomial-times-Gaussian cases.
            const bool gate = row.kind == RhsKind::F1 || row.kind == RhsKind::F2 || poly;
            const auto Fs = build_rhs(row.kind, V, limit, basis,
                                      row.kind == RhsKind::F4 ? &set.phi3->phi : nullptr);
            HermiteCoeffs fc = basis.project(Fs);
            auto rhs_eval = [&](std::span<const double> xx) { return basis.evaluate(fc, xx); };
            DenseCorrectionOracle oracle =
                dense_constrained_solve(drift, cfg.eps, rhs_eval, 7.0, 57);
            double maxdiff = 0.0;
            std::vector<double> x(drift.dim());
            for (std::size_t i = 0; i < oracle.phi.size(); ++i) {
                oracle.point(i, drift.dim(), x);
                maxdiff = std::max(maxdiff,
                                   std::abs(oracle.phi[i] - basis.evaluate(sol.phi, x)));
            }
            out << "  " << row.name << " dense-oracle maxdiff=" << format_number(maxdiff)
                << (gate ? "" : " (informational: non-smooth data)") << "\n";
            if (gate && maxdiff > 1e-6) strict_ok = false;
        }

        nlohmann::ordered_json coeffs = nlohmann::ordered_json::array();
        for (std::size_t f = 0; f < sol.phi.c.size(); ++f)
            if (sol.phi.c[f] != 0.0) {
                nlohmann::ordered_json e;
                e["flat_index"] = f;
                e["value"] = format_number(sol.phi.c[f]);
                coeffs.push_back(e);
            }
        spectra[row.name] = coeffs;
    }

    if (!cfg.out_json.empty()) {
        nlohmann::ordered_json j;
        j["schema_version"] = 1;
        nlohmann::ordered_json cfgj;
        std::string canon;
        for (const auto& [k, v] : cfg.resolved_items()) {
            cfgj[k] = v;
            canon += k + "=" + v + "\n";
        }
        j["config"] = cfgj;
        char hash[24];
        std::snprintf(hash, sizeof hash, "%016llx",
                      static_cast<unsigned long long>(fnv1a64(canon)));
        j["config_hash"] = hash;
        j["max_degree"] = M;
        j["spectra"] = spectra;
        std::ofstream f(cfg.out_json);
        if (!f) throw ConfigError("cannot open output.json path: " + cfg.out_json);
        f << j.dump(2) << "\n";
    }
    if (cfg.strict && !strict_ok) {
        out << "strict: dense-oracle comparison above threshold\n";
        return 4;
    }
    return 0;
}

}  // namespace driftspec
