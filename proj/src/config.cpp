#include "driftspec/config.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace driftspec {

namespace {

struct RawValue {
    enum Kind { Number, List, Text } kind = Text;
    double num = 0.0;
    std::vector<double> list;
    std::string text;
    int line = 0;
};

struct RawConfig {
    std::string origin;
    std::map<std::string, RawValue> kv;
    mutable std::set<std::string> touched;

    [[noreturn]] void fail(const std::string& key, const std::string& why) const {
        throw ConfigError(origin + ": field '" + key + "': " + why);
    }
    const RawValue* find(const std::string& key) const {
        auto it = kv.find(key);
        if (it == kv.end()) return nullptr;
        touched.insert(key);
        return &it->second;
    }
    double number(const std::string& key, std::optional<double> def = {}) const {
        const RawValue* v = find(key);
        if (!v) {
            if (def) return *def;
            fail(key, "missing required value");
        }
        if (v->kind != RawValue::Number) fail(key, "expected a number (line " + std::to_string(v->line) + ")");
        return v->num;
    }
    std::vector<double> list(const std::string& key, bool required) const {
        const RawValue* v = find(key);
        if (!v) {
            if (required) fail(key, "missing required list");
            return {};
        }
        if (v->kind == RawValue::Number) return {v->num};
        if (v->kind != RawValue::List) fail(key, "expected a [..] list (line " + std::to_string(v->line) + ")");
        return v->list;
    }
    std::string text(const std::string& key, const std::string& def) const {
        const RawValue* v = find(key);
        if (!v) return def;
        if (v->kind == RawValue::Text) return v->text;
        fail(key, "expected a bare word (line " + std::to_string(v->line) + ")");
    }
};

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

bool parse_number(const std::string& s, double& out) {
    char* end = nullptr;
    out = std::strtod(s.c_str(), &end);
    return end && *end == '\0' && end != s.c_str();
}

RawConfig tokenize(const std::string& text, const std::string& origin) {
    RawConfig rc;
    rc.origin = origin;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError(origin + ":" + std::to_string(lineno) + ": expected 'key = value'");
        const std::string key = trim(line.substr(0, eq));
        const std::string val = trim(line.substr(eq + 1));
        if (key.empty() || val.empty())
            throw ConfigError(origin + ":" + std::to_string(lineno) + ": empty key or value");
        if (rc.kv.count(key))
            throw ConfigError(origin + ":" + std::to_string(lineno) + ": duplicate key '" + key + "'");
        RawValue rv;
        rv.line = lineno;
        if (val.front() == '[') {
            if (val.back() != ']')
                throw ConfigError(origin + ":" + std::to_string(lineno) + ": unterminated list");
            rv.kind = RawValue::List;
            std::string body = val.substr(1, val.size() - 2);
            std::replace(body.begin(), body.end(), ',', ' ');
            std::istringstream items(body);
            std::string item;
            while (items >> item) {
                double d;
                if (!parse_number(item, d))
                    throw ConfigError(origin + ":" + std::to_string(lineno) + ": bad list entry '" + item + "'");
                rv.list.push_back(d);
            }
        } else if (double d; parse_number(val, d)) {
            rv.kind = RawValue::Number;
            rv.num = d;
        } else {
            rv.kind = RawValue::Text;
            rv.text = val;
        }
        rc.kv.emplace(key, rv);
    }
    return rc;
}

}  // namespace

ExperimentConfig parse_config_text(const std::string& text, const std::string& origin) {
    const RawConfig rc = tokenize(text, origin);
    ExperimentConfig c;

    c.mode = rc.text("mode", "solve");
    static const std::set<std::string> kModes{"solve", "sweep", "limit", "corrections", "verify"};
    if (!kModes.count(c.mode)) rc.fail("mode", "unknown mode '" + c.mode + "'");

    c.eps = rc.number("eps");
    if (c.eps <= 0) rc.fail("eps", "must be positive");
    c.drift_a0 = rc.number("drift.a0", 0.0);
    c.drift_coeffs = rc.list("drift.coeffs", true);

    c.preset = rc.text("potential.preset", "zero");
    c.pot_c0 = rc.number("potential.c0", 0.0);
    c.pot_gradient = rc.list("potential.gradient", false);
    c.pot_hessian = rc.list("potential.hessian", false);
    c.pot_x0 = rc.list("potential.x0", false);
    c.pot_scales = rc.list("potential.power.scales", false);
    c.pot_scale = rc.number("potential.power.scale", 1.0);
    c.pot_degree = rc.number("potential.power.degree", 2.0);
    c.pot_kind = rc.text("potential.power.kind", "radial");
    c.pot_table = rc.text("potential.table", "");

    if (const auto ladder = rc.list("alpha.ladder", false); !ladder.empty()) {
        c.alpha_ladder = ladder;
    } else if (rc.find("alpha")) {
        c.alpha_ladder = {rc.number("alpha")};
    }
    for (double a : c.alpha_ladder)
        if (a <= 0) rc.fail("alpha", "alpha must be positive");
    for (std::size_t i = 1; i < c.alpha_ladder.size(); ++i)
        if (c.alpha_ladder[i] <= c.alpha_ladder[i - 1])
            rc.fail("alpha.ladder", "must be strictly increasing");

    c.grid_points = static_cast<int>(rc.number("grid.points", 257));
    if (c.grid_points < 3) rc.fail("grid.points", "need at least 3 points per axis");
    c.box_lo = rc.list("grid.box.lo", false);
    c.box_hi = rc.list("grid.box.hi", false);
    if (const auto box = rc.list("grid.box", false); !box.empty()) {
        if (box.size() != 2 || !(box[0] < 0 && 0 < box[1]))
            rc.fail("grid.box", "expected [lo, hi] with lo < 0 < hi");
        c.box_lo.assign(c.drift_coeffs.size(), box[0]);
        c.box_hi.assign(c.drift_coeffs.size(), box[1]);
    }
    c.rescaled_radius = rc.number("grid.rescaled_radius", 0.0);
    if (c.rescaled_radius < 0) rc.fail("grid.rescaled_radius", "must be nonnegative");

    c.frame = rc.text("frame", "auto");
    if (c.frame != "auto" && c.frame != "physical" && c.frame != "rescaled")
        rc.fail("frame", "expected auto|physical|rescaled");

    c.solver_tol = rc.number("solver.tol", 1e-9);
    if (c.solver_tol <= 0) rc.fail("solver.tol", "must be positive");
    c.solver_max_matvecs = static_cast<int>(rc.number("solver.max_matvecs", 10000));
    if (c.solver_max_matvecs <= 0) rc.fail("solver.max_matvecs", "must be positive");
    c.solver_levels = static_cast<int>(rc.number("solver.levels", 1));
    if (c.solver_levels < 1 || c.solver_levels > 3)
        rc.fail("solver.levels", "supported range is 1..3");

    c.expansion = rc.text("expansion", "auto");
    if (c.expansion != "auto" && c.expansion != "smooth" && c.expansion != "homogeneous")
        rc.fail("expansion", "expected auto|smooth|homogeneous");
    c.corrections_degree = static_cast<int>(rc.number("corrections.max_degree", 0.0));
    c.pohozaev_radius = rc.number("pohozaev.radius", 0.0);
    c.out_csv = rc.text("output.csv", "");
    c.out_json = rc.text("output.json", "");

    // reject unknown keys so typos do not silently change an experiment
    for (const auto& [key, val] : rc.kv)
        if (!rc.touched.count(key))
            throw ConfigError(origin + ":" + std::to_string(val.line) + ": unknown key '" + key + "'");

    if (c.drift_coeffs.size() < 2 || c.drift_coeffs.size() > 3)
        rc.fail("drift.coeffs", "N must be 2 or 3 at desk scale");
    if (c.mode == "solve" && c.alpha_ladder.size() != 1)
        rc.fail("alpha", "solve mode needs exactly one alpha");
    if (c.mode == "sweep" && c.alpha_ladder.size() < 4)
        rc.fail("alpha.ladder", "sweep mode needs a ladder of at least 4 alphas");
    c.make_drift();      // validates the drift constraints
    c.make_potential();  // validates preset parameters
    return c;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config_text(ss.str(), path);
}

DriftSpec ExperimentConfig::make_drift() const {
    try {
        return DriftSpec(drift_a0, drift_coeffs);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("field 'drift.coeffs': ") + e.what());
    }
}

PotentialSpec ExperimentConfig::make_potential() const {
    const int n = dim();
    try {
        if (preset == "zero") return PotentialSpec::zero(n);
        if (preset == "quadratic") {
            auto H = pot_hessian;
            if (H.empty()) throw ConfigError("field 'potential.hessian': required for quadratic");
            return PotentialSpec::quadratic(n, H);
        }
        if (preset == "shifted-quadratic") {
            auto H = pot_hessian;
            auto x0 = pot_x0;
            if (x0.empty()) x0.assign(n, 0.0);
            if (H.empty()) throw ConfigError("field 'potential.hessian': required for shifted-quadratic");
            return PotentialSpec::shifted_quadratic(n, pot_c0, x0, H);
        }
        if (preset == "linear-quadratic") {
            auto g = pot_gradient;
            auto H = pot_hessian;
            if (g.empty()) throw ConfigError("field 'potential.gradient': required for linear-quadratic");
            if (H.empty()) H.assign(static_cast<std::size_t>(n) * n, 0.0);
            return PotentialSpec::linear_quadratic(n, pot_c0, g, H);
        }
        if (preset == "homogeneous-power") {
            if (pot_kind == "radial") return PotentialSpec::power_radial(n, pot_scale, pot_degree);
            if (pot_kind == "axes") {
                if (pot_scales.empty())
                    throw ConfigError("field 'potential.power.scales': required for axes kind");
                return PotentialSpec::power_axes(n, pot_scales, pot_degree);
            }
            throw ConfigError("field 'potential.power.kind': expected radial|axes");
        }
        if (preset == "table") {
            if (pot_table.empty()) throw ConfigError("field 'potential.table': path required");
            return PotentialSpec::from_table(pot_table);
        }
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("field 'potential': ") + e.what());
    }
    throw ConfigError("field 'potential.preset': unknown preset '" + preset + "'");
}

BoxDomain ExperimentConfig::make_box() const {
    const int n = dim();
    if (!box_lo.empty() || !box_hi.empty()) {
        if (static_cast<int>(box_lo.size()) != n || static_cast<int>(box_hi.size()) != n)
            throw ConfigError("field 'grid.box.lo/hi': expected N entries");
        return BoxDomain(box_lo, box_hi);
    }
    return BoxDomain::cube(n, 1.0);
}

double ExperimentConfig::resolved_radius() const {
    if (rescaled_radius > 0) return rescaled_radius;
    double smax = 0.0;
    for (double a : drift_coeffs) smax = std::max(smax, std::sqrt(eps / (4.0 * std::abs(a))));
    return 8.0 * smax;
}

namespace {
std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}
std::string fmt(const std::vector<double>& v) {
    std::string s = "[";
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + fmt(v[i]);
    return s + "]";
}
}  // namespace

std::vector<std::pair<std::string, std::string>> ExperimentConfig::resolved_items() const {
    std::vector<std::pair<std::string, std::string>> kv;
    kv.emplace_back("mode", mode);
    kv.emplace_back("eps", fmt(eps));
    kv.emplace_back("drift.a0", fmt(drift_a0));
    kv.emplace_back("drift.coeffs", fmt(drift_coeffs));
    kv.emplace_back("potential.preset", preset);
    kv.emplace_back("potential.c0", fmt(pot_c0));
    if (!pot_gradient.empty()) kv.emplace_back("potential.gradient", fmt(pot_gradient));
    if (!pot_hessian.empty()) kv.emplace_back("potential.hessian", fmt(pot_hessian));
    if (!pot_x0.empty()) kv.emplace_back("potential.x0", fmt(pot_x0));
    if (preset == "homogeneous-power") {
        kv.emplace_back("potential.power.kind", pot_kind);
        kv.emplace_back("potential.power.degree", fmt(pot_degree));
        if (pot_kind == "radial")
            kv.emplace_back("potential.power.scale", fmt(pot_scale));
        else
            kv.emplace_back("potential.power.scales", fmt(pot_scales));
    }
    if (!pot_table.empty()) kv.emplace_back("potential.table", pot_table);
    kv.emplace_back("alpha.ladder", fmt(alpha_ladder));
    kv.emplace_back("grid.points", fmt(static_cast<double>(grid_points)));
    const auto box = make_box();
    kv.emplace_back("grid.box.lo", fmt(box.lo));
    kv.emplace_back("grid.box.hi", fmt(box.hi));
    kv.emplace_back("grid.rescaled_radius", fmt(resolved_radius()));
    kv.emplace_back("frame", frame);
    kv.emplace_back("solver.tol", fmt(solver_tol));
    kv.emplace_back("solver.max_matvecs", fmt(static_cast<double>(solver_max_matvecs)));
    kv.emplace_back("solver.levels", fmt(static_cast<double>(solver_levels)));
    kv.emplace_back("expansion", expansion);
    if (corrections_degree > 0)
        kv.emplace_back("corrections.max_degree", fmt(static_cast<double>(corrections_degree)));
    kv.emplace_back("pohozaev.radius", fmt(pohozaev_radius));
    return kv;
}

}  // namespace driftspec
