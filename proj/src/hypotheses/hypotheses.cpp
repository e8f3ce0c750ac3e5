#include "evolab/hypotheses.hpp"

#include "evolab/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

namespace evolab {

namespace {

constexpr double inf = std::numeric_limits<double>::infinity();

std::string fmt(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

/// Values of f over the lattice, indexed [time][point].
class Sweep {
public:
    template <typename F>
    Sweep(const Lattice& lattice, F&& f)
        : lattice_(lattice)
        , n_points_(lattice.num_points())
    {
        values_.reserve(lattice.times().size() * n_points_);
        for (double t : lattice.times()) {
            for (std::size_t p = 0; p < n_points_; ++p) {
                values_.push_back(f(t, lattice.point(p)));
            }
        }
    }

    double at(std::size_t ti, std::size_t p) const { return values_[ti * n_points_ + p]; }

    template <typename F>
    void each(F&& f) const
    {
        for (std::size_t ti = 0; ti < lattice_.times().size(); ++ti) {
            for (std::size_t p = 0; p < n_points_; ++p) {
                f(ti, p, at(ti, p));
            }
        }
    }

private:
    const Lattice& lattice_;
    std::size_t n_points_;
    std::vector<double> values_;
};

bool inner(const Lattice& lattice, std::size_t p)
{
    return lattice.radius(p) <= lattice.spec().r_check + 1e-12;
}

struct Worst {
    double margin = inf;
    std::size_t ti = 0;
    std::size_t p = 0;
};

/// Minimum of margin(ti, p) over the points accepted by `keep`.
template <typename M, typename K>
Worst worst_of(const Lattice& lattice, M&& margin, K&& keep)
{
    Worst w;
    for (std::size_t ti = 0; ti < lattice.times().size(); ++ti) {
        for (std::size_t p = 0; p < lattice.num_points(); ++p) {
            if (!keep(p)) {
                continue;
            }
            const double m = margin(ti, p);
            if (m < w.margin || std::isnan(m)) {
                w = {m, ti, p};
                if (std::isnan(m)) {
                    return w;
                }
            }
        }
    }
    return w;
}

template <typename M>
Worst worst_of(const Lattice& lattice, M&& margin)
{
    return worst_of(lattice, std::forward<M>(margin), [](std::size_t) { return true; });
}

ConditionReport finish(ConditionId id, const Sampling& s, const Lattice& lattice, const Worst& w,
                       std::map<std::string, double> constants, std::string note = {})
{
    ConditionReport r;
    r.id = id;
    r.interval = s.interval;
    r.lattice = s.lattice;
    r.constants = std::move(constants);
    r.worst_margin = w.margin;
    r.worst_t = lattice.times()[w.ti];
    const auto x = lattice.point(w.p);
    r.worst_x.assign(x.begin(), x.end());
    r.pass = w.margin >= -margin_tolerance;
    r.note = std::move(note);
    return r;
}

Lattice make_lattice(const OperatorSpec& op, const Sampling& s)
{
    if (s.interval.lo < op.interval().lo || s.interval.hi > op.interval().hi) {
        throw ParameterError("sampling interval lies outside the operator interval");
    }
    return Lattice(op.dim(), s.interval, s.lattice);
}

void require_positive(const Lattice& lattice, const Sweep& values, const char* what)
{
    values.each([&](std::size_t ti, std::size_t p, double v) {
        if (!(v > 0.0)) {
            std::ostringstream msg;
            msg << what << " is not positive at t=" << lattice.times()[ti] << " |x|=" << lattice.radius(p);
            throw ParameterError(msg.str());
        }
    });
}

std::vector<ShellExtrema> profile_of(const Lattice& lattice, const Sweep& values)
{
    std::vector<ShellExtrema> out;
    for (double r : lattice.shell_radii()) {
        out.push_back({r, inf, -inf});
    }
    values.each([&](std::size_t, std::size_t p, double v) {
        auto& e = out[lattice.shell(p)];
        e.min = std::min(e.min, v);
        e.max = std::max(e.max, v);
    });
    return out;
}

// Shell maxima must not increase beyond half the check radius.
void require_decaying(const Lattice& lattice, const Sweep& values, const char* what)
{
    const auto profile = profile_of(lattice, values);
    const double from = lattice.spec().r_check / 2.0;
    for (std::size_t k = 1; k < profile.size(); ++k) {
        if (profile[k - 1].radius < from) {
            continue;
        }
        if (profile[k].max > profile[k - 1].max * (1.0 + 1e-12) + 1e-300) {
            std::ostringstream msg;
            msg << what << " shell maxima increase between |x|=" << profile[k - 1].radius << " and |x|="
                << profile[k].radius;
            throw ParameterError(msg.str());
        }
    }
}

// Shell minima must be nondecreasing up to the check radius and end above the origin value.
void require_growing(const Lattice& lattice, const Sweep& values, const char* what)
{
    const auto profile = profile_of(lattice, values);
    const double upto = lattice.spec().r_check + 1e-12;
    std::size_t last = 0;
    for (std::size_t k = 1; k < profile.size() && profile[k].radius <= upto; ++k) {
        if (profile[k].min < profile[k - 1].min * (1.0 - 1e-12)) {
            std::ostringstream msg;
            msg << what << " does not grow along rays near |x|=" << profile[k].radius;
            throw ParameterError(msg.str());
        }
        last = k;
    }
    if (!(profile[last].min > profile[0].max)) {
        throw ParameterError(std::string(what) + " does not grow along rays");
    }
}

ConditionReport lyapunov(ConditionId id, const OperatorSpec& op, const TestFunction& phi, const Sampling& s,
                         std::optional<double> lambda, Potential potential)
{
    const Lattice lattice = make_lattice(op, s);
    const Sweep f(lattice, [&](double t, auto x) { return phi.value(t, x); });
    require_positive(lattice, f, "phi");
    require_growing(lattice, f, "phi");
    const Sweep af(lattice, [&](double t, auto x) { return apply(op, phi, t, x, potential); });

    double lam = 0.0;
    if (lambda) {
        lam = *lambda;
    } else {
        lam = -inf;
        f.each([&](std::size_t ti, std::size_t p, double v) {
            if (inner(lattice, p)) {
                lam = std::max(lam, af.at(ti, p) / v);
            }
        });
    }
    const Worst w = worst_of(lattice, [&](std::size_t ti, std::size_t p) { return lam * f.at(ti, p) - af.at(ti, p); });
    return finish(id, s, lattice, w, {{"lambda", lam}});
}

}  // namespace

std::string to_string(ConditionId id)
{
    switch (id) {
    case ConditionId::Lyapunov: return "lyapunov";
    case ConditionId::LyapunovMinusC: return "lyapunov_minus_c";
    case ConditionId::W: return "W";
    case ConditionId::H: return "h";
    case ConditionId::Div: return "div";
    case ConditionId::DriftCompensation: return "drift_compensation";
    case ConditionId::V: return "V";
    case ConditionId::BoundedAphi: return "bounded_Aphi";
    }
    return "?";
}

std::string ConditionReport::serialize() const
{
    std::ostringstream s;
    s << "condition=" << to_string(id) << " J=[" << fmt(interval.lo) << "," << fmt(interval.hi) << "]"
      << " pass=" << (pass ? "true" : "false") << " worst_margin=" << fmt(worst_margin) << " worst_t=" << fmt(worst_t)
      << " worst_x=(";
    for (std::size_t i = 0; i < worst_x.size(); ++i) {
        s << (i ? "," : "") << fmt(worst_x[i]);
    }
    s << ")";
    for (const auto& [k, v] : constants) {
        s << " " << k << "=" << fmt(v);
    }
    s << " lattice=r_check:" << fmt(lattice.r_check) << ",step:" << fmt(lattice.shell_step)
      << ",times:" << lattice.n_times << ",directions:" << lattice.n_directions << ",seed:" << lattice.seed;
    if (!note.empty()) {
        s << " note=\"" << note << "\"";
    }
    return s.str();
}

ConditionReport check_lyapunov(const OperatorSpec& op, const TestFunction& phi, const Sampling& s,
                               std::optional<double> lambda)
{
    return lyapunov(ConditionId::Lyapunov, op, phi, s, lambda, Potential::Include);
}

ConditionReport check_lyapunov_minus_c(const OperatorSpec& op, const TestFunction& phi, const Sampling& s,
                                       std::optional<double> lambda)
{
    return lyapunov(ConditionId::LyapunovMinusC, op, phi, s, lambda, Potential::Drop);
}

ConditionReport check_W(const OperatorSpec& op, const TestFunction& w, double mu, double radius,
                        const Sampling& s)
{
    const Lattice lattice = make_lattice(op, s);
    const Sweep f(lattice, [&](double t, auto x) { return w.value(t, x); });
    double inf_outside = inf;
    f.each([&](std::size_t, std::size_t p, double v) {
        if (lattice.radius(p) >= radius) {
            inf_outside = std::min(inf_outside, v);
        }
    });
    if (!(inf_outside > 0.0)) {
        throw ParameterError("W is not positive outside B(0,R)");
    }
    require_decaying(lattice, f, "W");
    const Sweep aw(lattice, [&](double t, auto x) { return apply(op, w, t, x); });
    const Worst worst = worst_of(
        lattice, [&](std::size_t ti, std::size_t p) { return aw.at(ti, p) - mu * f.at(ti, p); },
        [&](std::size_t p) { return lattice.radius(p) >= radius; });
    return finish(ConditionId::W, s, lattice, worst, {{"mu", mu}, {"R", radius}, {"inf_W", inf_outside}});
}

std::optional<ConditionReport> fit_W_radius(const OperatorSpec& op, const TestFunction& w, double mu,
                                            std::span<const double> candidates, const Sampling& s)
{
    for (double r : candidates) {
        ConditionReport rep = check_W(op, w, mu, r, s);
        if (rep.pass) {
            return rep;
        }
    }
    return std::nullopt;
}

ConditionReport check_h(const OperatorSpec& op, const TestFunction& phi, const Sampling& s, int l,
                        std::optional<HForm> form)
{
    if (l < 2) {
        throw ParameterError("h needs an integer exponent l >= 2");
    }
    if (form && (!(form->gamma > 0.0) || form->l != l)) {
        throw ParameterError("h needs gamma > 0 and a matching exponent");
    }
    const Lattice lattice = make_lattice(op, s);
    const Sweep f(lattice, [&](double t, auto x) { return phi.value(t, x); });
    require_positive(lattice, f, "phi");
    const Sweep af(lattice, [&](double t, auto x) { return apply(op, phi, t, x); });
    const Sweep fl(lattice, [&](double t, auto x) { return power(phi.value(t, x), l); });

    HForm h;
    std::string note;
    if (form) {
        h = *form;
    } else {
        h.l = l;
        const double r = lattice.spec().r_check;
        double ratio = inf;
        af.each([&](std::size_t ti, std::size_t p, double v) {
            const double rho = lattice.radius(p);
            if (rho >= r / 2.0 && rho <= r + 1e-12) {
                ratio = std::min(ratio, -v / fl.at(ti, p));
            }
        });
        if (ratio > 0.0) {
            h.gamma = 0.95 * ratio;
        } else {
            h.gamma = 1.0;
            note = "A phi does not dominate -phi^l on the outer shells; gamma set to 1";
        }
        double c = -inf;
        af.each([&](std::size_t ti, std::size_t p, double v) {
            if (inner(lattice, p)) {
                c = std::max(c, v + h.gamma * fl.at(ti, p));
            }
        });
        h.c_prime = std::max(0.0, c);
    }
    const Worst w = worst_of(lattice, [&](std::size_t ti, std::size_t p) {
        return -(h.gamma * fl.at(ti, p) - h.c_prime) - af.at(ti, p);
    });
    return finish(ConditionId::H, s, lattice, w,
                  {{"gamma", h.gamma}, {"C_prime", h.c_prime}, {"l", static_cast<double>(h.l)}}, note);
}

double lp_exponent(double k, double p, double c0)
{
    if (!(p >= 1.0)) {
        throw ParameterError("p must be at least 1");
    }
    return (k - (p - 1.0) * c0) / p;
}

ConditionReport check_div(const OperatorSpec& op, const Sampling& s, double p, std::optional<double> k)
{
    const Lattice lattice = make_lattice(op, s);
    const Program div(div_beta(op));
    const Sweep g(lattice, [&](double t, auto x) { return op.c_at(t, x) + div(t, x); });
    double kk = 0.0;
    if (k) {
        kk = *k;
    } else {
        double lo = inf;
        g.each([&](std::size_t, std::size_t pt, double v) {
            if (inner(lattice, pt)) {
                lo = std::min(lo, v);
            }
        });
        kk = std::max(0.0, -lo);
    }
    const Worst w = worst_of(lattice, [&](std::size_t ti, std::size_t pt) { return g.at(ti, pt) + kk; });
    return finish(ConditionId::Div, s, lattice, w,
                  {{"K", kk}, {"p", p}, {"K_p", lp_exponent(kk, p, op.declared_c0())}});
}

ConditionReport check_drift_compensation(const OperatorSpec& op, const Sampling& s, double p,
                                         std::optional<double> k_prime)
{
    if (!(p > 1.0)) {
        throw ParameterError("drift compensation needs p > 1");
    }
    const Lattice lattice = make_lattice(op, s);
    std::vector<Program> b;
    for (const Expr& e : beta(op)) {
        b.emplace_back(e);
    }
    const Sweep g(lattice, [&](double t, auto x) {
        double n2 = 0.0;
        for (const Program& bi : b) {
            const double v = bi(t, x);
            n2 += v * v;
        }
        return n2 / (4.0 * (p - 1.0) * op.eta_at(t, x)) - op.c_at(t, x);
    });
    double kp = 0.0;
    if (k_prime) {
        kp = *k_prime;
    } else {
        g.each([&](std::size_t, std::size_t pt, double v) {
            if (inner(lattice, pt)) {
                kp = std::max(kp, v);
            }
        });
    }
    const Worst w = worst_of(lattice, [&](std::size_t ti, std::size_t pt) { return kp - g.at(ti, pt); });
    return finish(ConditionId::DriftCompensation, s, lattice, w, {{"K_prime", kp}, {"p", p}});
}

ConditionReport check_V(const OperatorSpec& op, const TestFunction& v, const Sampling& s,
                        std::optional<double> lambda0)
{
    const Lattice lattice = make_lattice(op, s);
    const Sweep f(lattice, [&](double t, auto x) { return v.value(t, x); });
    require_positive(lattice, f, "V");
    require_decaying(lattice, f, "V");
    const Sweep av(lattice, [&](double t, auto x) { return apply(op, v, t, x); });
    double lam = 0.0;
    if (lambda0) {
        lam = *lambda0;
    } else {
        f.each([&](std::size_t ti, std::size_t p, double val) {
            if (inner(lattice, p)) {
                lam = std::max(lam, av.at(ti, p) / val);
            }
        });
    }
    const Worst w = worst_of(lattice, [&](std::size_t ti, std::size_t p) { return lam * f.at(ti, p) - av.at(ti, p); });
    return finish(ConditionId::V, s, lattice, w, {{"lambda0", lam}});
}

ConditionReport check_bounded_Aphi(const OperatorSpec& op, const TestFunction& phi, const Sampling& s,
                                   std::optional<double> m_j)
{
    const Lattice lattice = make_lattice(op, s);
    const Sweep af(lattice, [&](double t, auto x) { return apply(op, phi, t, x); });
    double m = -inf;
    if (m_j) {
        m = *m_j;
    } else {
        af.each([&](std::size_t, std::size_t p, double v) {
            if (inner(lattice, p)) {
                m = std::max(m, v);
            }
        });
    }
    const Worst w = worst_of(lattice, [&](std::size_t ti, std::size_t p) { return m - af.at(ti, p); });
    return finish(ConditionId::BoundedAphi, s, lattice, w, {{"M_J", m}});
}

std::vector<ShellExtrema> shell_profile(const Lattice& lattice,
                                        const std::function<double(double, std::span<const double>)>& f)
{
    return profile_of(lattice, Sweep(lattice, f));
}

}  // namespace evolab
