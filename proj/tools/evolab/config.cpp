#include "config.hpp"

#include "evolab/families.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace evolab::cli {

using nlohmann::json;

namespace {

std::string describe(const json& v)
{
    switch (v.type()) {
    case json::value_t::null: return "null";
    case json::value_t::boolean: return "a boolean";
    case json::value_t::string: return "a string";
    case json::value_t::array: return "an array";
    case json::value_t::object: return "an object";
    default: return "a number";
    }
}

/// Reads one JSON object, recording every value it hands out (defaults
/// included) into `out`, and rejects keys it was never asked about.
class Section {
public:
    Section(const json* node, std::string path, json& out) : node_(node), path_(std::move(path)), out_(out)
    {
        if (node_ && !node_->is_object())
            fail("", "expected an object, got " + describe(*node_));
        out_ = json::object();
    }

    std::string where(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

    [[noreturn]] void fail(const std::string& key, const std::string& what) const
    {
        const std::string at = key.empty() ? path_ : where(key);
        throw ConfigError("field " + (at.empty() ? std::string("<root>") : at) + ": " + what);
    }

    const json* find(const std::string& key)
    {
        seen_.insert(key);
        if (!node_)
            return nullptr;
        const auto it = node_->find(key);
        return it == node_->end() ? nullptr : &*it;
    }

    double number(const std::string& key, double fallback)
    {
        double v = fallback;
        if (const json* j = find(key)) {
            if (!j->is_number())
                fail(key, "expected a number, got " + describe(*j));
            v = j->get<double>();
        }
        if (!std::isfinite(v))
            fail(key, "must be finite");
        out_[key] = v;
        return v;
    }

    std::optional<double> optional_number(const std::string& key)
    {
        const json* j = find(key);
        if (!j)
            return std::nullopt;
        if (!j->is_number())
            fail(key, "expected a number, got " + describe(*j));
        const double v = j->get<double>();
        if (!std::isfinite(v))
            fail(key, "must be finite");
        out_[key] = v;
        return v;
    }

    long long integer(const std::string& key, long long fallback)
    {
        long long v = fallback;
        if (const json* j = find(key)) {
            if (!j->is_number_integer())
                fail(key, "expected an integer, got " + describe(*j));
            v = j->get<long long>();
        }
        out_[key] = v;
        return v;
    }

    std::uint64_t unsigned_integer(const std::string& key, std::uint64_t fallback)
    {
        std::uint64_t v = fallback;
        if (const json* j = find(key)) {
            if (!j->is_number_unsigned())
                fail(key, "expected a nonnegative integer, got " + describe(*j));
            v = j->get<std::uint64_t>();
        }
        out_[key] = v;
        return v;
    }

    bool flag(const std::string& key, bool fallback)
    {
        bool v = fallback;
        if (const json* j = find(key)) {
            if (!j->is_boolean())
                fail(key, "expected true or false, got " + describe(*j));
            v = j->get<bool>();
        }
        out_[key] = v;
        return v;
    }

    std::string text(const std::string& key, const std::string& fallback)
    {
        std::string v = fallback;
        if (const json* j = find(key)) {
            if (!j->is_string())
                fail(key, "expected a string, got " + describe(*j));
            v = j->get<std::string>();
        }
        out_[key] = v;
        return v;
    }

    /// Canonical printed form of an expression in `dim` space variables.
    std::string expression(const std::string& key, const std::optional<std::string>& fallback, int dim)
    {
        const json* j = find(key);
        if (!j && !fallback)
            fail(key, "required");
        if (j && !j->is_string())
            fail(key, "expected an expression string, got " + describe(*j));
        const std::string v = canonical(j ? j->get<std::string>() : *fallback, key, dim);
        out_[key] = v;
        return v;
    }

    std::vector<std::string> expressions(const std::string& key, std::optional<std::size_t> count, int dim)
    {
        const json* j = find(key);
        if (!j)
            fail(key, "required");
        if (!j->is_array())
            fail(key, "expected an array of expression strings, got " + describe(*j));
        if (count && j->size() != *count)
            fail(key, "expected " + std::to_string(*count) + " entries, got " + std::to_string(j->size()));
        std::vector<std::string> v;
        for (std::size_t i = 0; i < j->size(); ++i) {
            const std::string at = key + "[" + std::to_string(i) + "]";
            if (!(*j)[i].is_string())
                fail(at, "expected an expression string");
            v.push_back(canonical((*j)[i].get<std::string>(), at, dim));
        }
        out_[key] = v;
        return v;
    }

    std::vector<double> numbers(const std::string& key, const std::vector<double>& fallback)
    {
        std::vector<double> v = fallback;
        if (const json* j = find(key)) {
            if (!j->is_array())
                fail(key, "expected an array of numbers, got " + describe(*j));
            v.clear();
            for (std::size_t i = 0; i < j->size(); ++i) {
                if (!(*j)[i].is_number())
                    fail(key + "[" + std::to_string(i) + "]", "expected a number");
                v.push_back((*j)[i].get<double>());
            }
        }
        out_[key] = v;
        return v;
    }

    void require(bool ok, const std::string& key, const std::string& what) const
    {
        if (!ok)
            fail(key, what);
    }

    /// Rejects keys that no getter asked for.
    void finish() const
    {
        if (!node_)
            return;
        for (const auto& [key, value] : node_->items())
            if (!seen_.count(key))
                fail(key, "unknown field");
    }

private:
    std::string canonical(const std::string& source, const std::string& key, int dim) const
    {
        try {
            return print(parse(source, dim));
        } catch (const Error& e) {
            fail(key, e.what());
        }
    }

    const json* node_;
    std::string path_;
    json& out_;
    std::set<std::string> seen_;
};

std::vector<Expr> to_exprs(const std::vector<std::string>& src, int dim)
{
    std::vector<Expr> out;
    for (const auto& s : src)
        out.push_back(parse(s, dim));
    return out;
}

OperatorSpec build_operator(const json* node, json& out)
{
    Section sec(node, "operator", out);
    if (!node)
        sec.fail("", "required");
    const std::string family = sec.text("family", "");
    static const std::set<std::string> families{"heat", "ornstein_uhlenbeck", "radial_drift", "confining_drift",
                                                "custom"};
    sec.require(families.count(family) > 0, "family",
                "unknown family '" + family +
                    "' (expected heat, ornstein_uhlenbeck, radial_drift, confining_drift or custom)");

    const int dim = family == "ornstein_uhlenbeck" ? 1 : static_cast<int>(sec.integer("dim", 1));
    sec.require(dim == 1 || dim == 2, "dim", "must be 1 or 2");

    const auto iv = sec.numbers("interval", {0.0, 1.0});
    sec.require(iv.size() == 2 && iv[0] < iv[1], "interval", "expected [lo, hi] with lo < hi");
    const Interval interval{iv[0], iv[1]};

    const auto c0 = sec.optional_number("declared_c0");
    const auto eta0 = sec.optional_number("declared_eta0");

    try {
        if (family == "heat" || family == "ornstein_uhlenbeck") {
            OperatorSpec op = family == "heat" ? heat_operator(dim, interval) : ornstein_uhlenbeck(interval);
            sec.require(!c0 && !eta0, "declared_c0", "fixed for the reference operators");
            sec.finish();
            return op;
        }
        if (family == "radial_drift") {
            RadialDriftParams p;
            p.dim = dim;
            p.interval = interval;
            p.k = static_cast<int>(sec.integer("k", 0));
            p.m = static_cast<int>(sec.integer("m", 0));
            p.l = static_cast<int>(sec.integer("l", 3));
            p.omega = parse(sec.expression("omega", "1", dim), dim);
            p.c1 = parse(sec.expression("c1", std::nullopt, dim), dim);
            p.c = parse(sec.expression("c", std::nullopt, dim), dim);
            p.b = to_exprs(sec.expressions("b", static_cast<std::size_t>(dim), dim), dim);
            p.drift_radius = sec.number("drift_radius", 1.0);
            p.declared_c0 = c0;
            p.declared_eta0 = eta0;
            sec.finish();
            return radial_drift_family(p);
        }
        if (family == "confining_drift") {
            ConfiningDriftParams p;
            p.dim = dim;
            p.interval = interval;
            p.m = sec.number("m", 0.0);
            p.r = sec.number("r", 1.0);
            p.q = sec.number("q", 2.0);
            p.c_j = sec.number("c_j", 1.0);
            p.b = parse(sec.expression("b", std::nullopt, dim), dim);
            const std::size_t packed = static_cast<std::size_t>(dim * (dim + 1) / 2);
            p.q_matrix = to_exprs(sec.expressions("q_matrix", packed, dim), dim);
            p.c = parse(sec.expression("c", std::nullopt, dim), dim);
            p.declared_c0 = c0;
            p.declared_eta0 = eta0;
            sec.finish();
            return confining_drift_family(p);
        }
        Coefficients k;
        k.dim = dim;
        k.q = to_exprs(sec.expressions("q", static_cast<std::size_t>(dim * (dim + 1) / 2), dim), dim);
        k.b = to_exprs(sec.expressions("b", static_cast<std::size_t>(dim), dim), dim);
        k.c = parse(sec.expression("c", std::nullopt, dim), dim);
        sec.require(c0.has_value(), "declared_c0", "required for custom operators");
        sec.require(eta0.has_value(), "declared_eta0", "required for custom operators");
        const std::string name = sec.text("name", "custom");
        sec.finish();
        return OperatorSpec(k, *c0, *eta0, interval, name);
    } catch (const ConfigError&) {
        throw;
    } catch (const Error& e) {
        throw ConfigError(std::string("field operator: ") + e.what());
    }
}

}  // namespace

json read_json(std::string_view text, const std::string& origin)
{
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        // Locate the byte offset reported by the parser.
        std::size_t line = 1;
        std::size_t col = 1;
        const std::size_t end = std::min<std::size_t>(e.byte > 0 ? e.byte - 1 : 0, text.size());
        for (std::size_t i = 0; i < end; ++i) {
            if (text[i] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
        }
        std::string what = e.what();
        if (const auto pos = what.find("syntax error"); pos != std::string::npos)
            what = what.substr(pos);
        throw ConfigError(origin + ":" + std::to_string(line) + ":" + std::to_string(col) + ": " + what);
    }
}

json read_json_file(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw ConfigError("cannot open config file " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return read_json(buf.str(), path.string());
}

void apply_overrides(json& doc, const Overrides& o)
{
    if (!doc.is_object())
        return;
    if (o.workers)
        doc["workers"] = *o.workers;
    if (o.out_dir) {
        if (!doc.contains("output") || !doc["output"].is_object())
            doc["output"] = json::object();
        doc["output"]["dir"] = *o.out_dir;
    }
    if (o.seed) {
        for (const char* section : {"mc", "checks"}) {
            if (!doc.contains(section) || !doc[section].is_object())
                doc[section] = json::object();
            doc[section]["seed"] = *o.seed;
        }
    }
}

ExperimentConfig parse_config(const json& doc)
{
    json norm = json::object();
    Section root(&doc, "", norm);

    json op_out;
    OperatorSpec op = build_operator(root.find("operator"), op_out);
    const int dim = op.dim();
    const Interval interval = op.interval();

    ExperimentConfig cfg{HarnessSetup(op), {}, false, false, 1, {}, {}};
    HarnessSetup& s = cfg.setup;
    norm["operator"] = std::move(op_out);

    {
        json out;
        Section g(root.find("grid"), "grid", out);
        s.half_width = g.number("half_width", s.half_width);
        g.require(s.half_width > 0.0, "half_width", "must be positive");
        s.points = static_cast<int>(g.integer("points", s.points));
        g.require(s.points >= 3 && s.points % 2 == 1, "points", "must be odd and at least 3");
        s.dt = g.number("dt", s.dt);
        g.require(s.dt > 0.0, "dt", "must be positive");
        s.dirichlet_base_half = g.number("dirichlet_base_half", s.dirichlet_base_half);
        g.require(s.dirichlet_base_half > 0.0, "dirichlet_base_half", "must be positive");
        s.dirichlet_doublings = static_cast<int>(g.integer("dirichlet_doublings", s.dirichlet_doublings));
        g.require(s.dirichlet_doublings >= 1 && s.dirichlet_doublings <= 6, "dirichlet_doublings",
                  "must lie in 1..6");
        g.finish();
        norm["grid"] = std::move(out);
    }
    {
        json out;
        Section w(root.find("window"), "window", out);
        s.window_half = w.number("half", s.window_half);
        w.require(s.window_half > 0.0 && s.window_half < s.half_width, "half",
                  "must be positive and inside the grid box");
        json pairs_out = json::array();
        if (const json* pairs = w.find("pairs")) {
            if (!pairs->is_array() || pairs->empty())
                w.fail("pairs", "expected a nonempty array of {\"s\": .., \"t\": ..} objects");
            s.pairs.clear();
            for (std::size_t i = 0; i < pairs->size(); ++i) {
                json pout;
                Section p(&(*pairs)[i], "window.pairs[" + std::to_string(i) + "]", pout);
                TimePair tp;
                tp.s = p.number("s", interval.lo);
                tp.t = p.number("t", interval.hi);
                p.require(interval.contains(tp.s), "s", "outside the operator interval");
                p.require(interval.contains(tp.t), "t", "outside the operator interval");
                p.require(tp.s < tp.t, "t", "must exceed s");
                p.finish();
                s.pairs.push_back(tp);
                pairs_out.push_back(std::move(pout));
            }
        } else {
            for (auto& tp : s.pairs) {
                w.require(interval.contains(tp.s) && interval.contains(tp.t), "pairs",
                          "default pair lies outside the operator interval");
                pairs_out.push_back({{"s", tp.s}, {"t", tp.t}});
            }
        }
        out["pairs"] = std::move(pairs_out);
        w.finish();
        norm["window"] = std::move(out);
    }
    {
        json out;
        Section f(root.find("functions"), "functions", out);
        s.datum = f.expression("datum", s.datum, dim);
        s.compact_datum = f.expression("compact_datum", s.compact_datum, dim);
        s.phi = f.expression("phi", s.phi, dim);
        s.w = f.expression("w", s.w, dim);
        s.v = f.expression("v", s.v, dim);
        s.mu = f.number("mu", s.mu);
        s.w_radii = f.numbers("w_radii", s.w_radii);
        f.require(!s.w_radii.empty() && std::is_sorted(s.w_radii.begin(), s.w_radii.end()), "w_radii",
                  "must be nonempty and ascending");
        s.h_exponent = static_cast<int>(f.integer("h_exponent", s.h_exponent));
        f.require(s.h_exponent >= 2, "h_exponent", "must be at least 2");
        s.p = f.number("p", s.p);
        f.require(s.p >= 1.0, "p", "must be at least 1");
        f.finish();
        norm["functions"] = std::move(out);
    }
    {
        json out;
        Section c(root.find("checks"), "checks", out);
        std::vector<std::string> ids;
        if (const json* run = c.find("run")) {
            if (!run->is_array())
                c.fail("run", "expected an array of check ids");
            for (std::size_t i = 0; i < run->size(); ++i) {
                const std::string at = "run[" + std::to_string(i) + "]";
                if (!(*run)[i].is_string())
                    c.fail(at, "expected a check id string");
                const auto id = (*run)[i].get<std::string>();
                c.require(find_check(id).has_value(), at, "unknown check id '" + id + "'");
                c.require(std::find(ids.begin(), ids.end(), id) == ids.end(), at, "duplicate check id '" + id + "'");
                ids.push_back(id);
            }
        } else {
            for (const auto& info : check_catalog())
                ids.push_back(info.id);
        }
        out["run"] = ids;
        cfg.checks = ids;

        static const std::set<std::string> extra{"integral_identity_ratio", "not_c0_mc", "compactness"};
        json tol_out = json::object();
        if (const json* tol = c.find("tolerances")) {
            if (!tol->is_object())
                c.fail("tolerances", "expected an object of check id to tolerance");
            for (const auto& [key, value] : tol->items()) {
                const std::string at = "tolerances." + key;
                c.require(find_check(key).has_value() || extra.count(key), at, "unknown tolerance key");
                c.require(value.is_number() && value.get<double>() >= 0.0, at, "expected a nonnegative number");
                s.tolerances[key] = value.get<double>();
                tol_out[key] = value.get<double>();
            }
        }
        out["tolerances"] = std::move(tol_out);
        s.mass_floor = c.number("mass_floor", s.mass_floor);
        c.require(s.mass_floor > 0.0, "mass_floor", "must be positive");
        s.random_seed = c.unsigned_integer("seed", s.random_seed);
        c.finish();
        norm["checks"] = std::move(out);
    }
    {
        json out;
        Section m(root.find("mc"), "mc", out);
        s.mc.n_paths = static_cast<long>(m.integer("n_paths", s.mc.n_paths));
        m.require(s.mc.n_paths >= 2, "n_paths", "must be at least 2");
        s.mc.dt = m.number("dt", s.mc.dt);
        m.require(s.mc.dt > 0.0, "dt", "must be positive");
        s.mc.seed = m.unsigned_integer("seed", s.mc.seed);
        s.mc.workers = static_cast<int>(m.integer("workers", s.mc.workers));
        m.require(s.mc.workers >= 1, "workers", "must be at least 1");
        m.finish();
        norm["mc"] = std::move(out);
    }
    {
        json out;
        Section l(root.find("sampling"), "sampling", out);
        LatticeSpec& ls = s.sampling.lattice;
        ls.r_check = l.number("r_check", ls.r_check);
        l.require(ls.r_check > 0.0, "r_check", "must be positive");
        ls.shell_step = l.number("shell_step", ls.shell_step);
        l.require(ls.shell_step > 0.0 && ls.shell_step <= ls.r_check, "shell_step", "must lie in (0, r_check]");
        ls.n_times = static_cast<int>(l.integer("n_times", ls.n_times));
        l.require(ls.n_times >= 1, "n_times", "must be at least 1");
        ls.n_directions = static_cast<int>(l.integer("n_directions", ls.n_directions));
        l.require(ls.n_directions >= 1, "n_directions", "must be at least 1");
        ls.seed = l.unsigned_integer("seed", ls.seed);
        l.finish();
        norm["sampling"] = std::move(out);
    }
    {
        json out;
        Section c(root.find("compactness"), "compactness", out);
        cfg.compactness = c.flag("enabled", false);
        cfg.tightness_family = c.flag("tightness_family", false);
        s.delta = c.number("delta", s.delta);
        c.require(s.delta > 0.0, "delta", "must be positive");
        c.require(!cfg.compactness || s.delta <= s.pairs.front().t - s.pairs.front().s, "delta",
                  "must not exceed t - s of the first pair");
        s.radii = c.numbers("radii", s.radii);
        c.require(!s.radii.empty() && std::is_sorted(s.radii.begin(), s.radii.end()), "radii",
                  "must be nonempty and ascending");
        c.finish();
        norm["compactness"] = std::move(out);
    }
    {
        json out;
        Section o(root.find("output"), "output", out);
        cfg.output.dir = o.text("dir", cfg.output.dir);
        o.require(!cfg.output.dir.empty(), "dir", "must not be empty");
        cfg.output.svg = o.flag("svg", false);
        o.finish();
        norm["output"] = std::move(out);
    }
    cfg.workers = static_cast<int>(root.integer("workers", 1));
    root.require(cfg.workers >= 1, "workers", "must be at least 1");
    norm["workers"] = cfg.workers;
    root.finish();

    cfg.normalized = std::move(norm);
    return cfg;
}

std::string normalized_text(const ExperimentConfig& cfg) { return cfg.normalized.dump(2) + "\n"; }

}  // namespace evolab::cli
