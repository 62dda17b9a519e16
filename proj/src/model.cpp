#include "ambicon/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace ambicon {

RiskProfile make_profile(double r_agent, double r_principal, double cost_coeff,
                         double effort_cap, double horizon, double reservation) {
    auto require_positive = [](double v, const char* name) {
        if (!(v > 0.0) || !std::isfinite(v)) {
            throw ValidationError("NonPositiveParameter",
                                  std::string(name) + " must be > 0");
        }
    };
    require_positive(r_agent, "r_agent");
    require_positive(r_principal, "r_principal");
    require_positive(cost_coeff, "cost_coeff");
    require_positive(effort_cap, "effort_cap");
    require_positive(horizon, "horizon");
    if (!(reservation < 0.0) || !std::isfinite(reservation)) {
        throw ValidationError("NonNegativeReservation",
                              "reservation utility must be < 0");
    }
    RiskProfile p;
    p.r_agent = r_agent;
    p.r_principal = r_principal;
    p.cost_coeff = cost_coeff;
    p.effort_cap = effort_cap;
    p.horizon = horizon;
    p.reservation = reservation;
    p.reservation_cert = -std::log(-reservation) / r_agent;
    return p;
}

std::string to_string(FbRegime r) {
    switch (r) {
        case FbRegime::DegenerateLow: return "DegenerateLow";
        case FbRegime::DegenerateHigh: return "DegenerateHigh";
        case FbRegime::BoundaryPA: return "BoundaryPA";
        case FbRegime::Interior: return "Interior";
        case FbRegime::BoundaryTops: return "BoundaryTops";
        case FbRegime::BoundaryAP: return "BoundaryAP";
        case FbRegime::InteriorRev: return "InteriorRev";
    }
    return "?";
}

std::string to_string(SbRegime r) {
    switch (r) {
        case SbRegime::PrincipalTopInAgentBand: return "PrincipalTopInAgentBand";
        case SbRegime::AgentTopInPrincipalBand: return "AgentTopInPrincipalBand";
        case SbRegime::Degenerate: return "Degenerate";
    }
    return "?";
}

namespace {

bool near(double x, double y, double tol) { return std::abs(x - y) <= tol; }

void check_band(const AmbiguityBand& b, const char* name) {
    if (!(b.lo > 0.0) || !std::isfinite(b.lo) || !std::isfinite(b.hi)) {
        throw ValidationError("NonPositiveParameter",
                              std::string(name) + ".lo must be > 0");
    }
    if (b.lo > b.hi) {
        throw ValidationError("EmptyBand",
                              std::string(name) + " has lo > hi");
    }
}

}  // namespace

FbRegime classify_fb(const AmbiguityBand& a, const AmbiguityBand& p, double tol) {
    if (!near(p.hi, a.lo, tol) && p.hi < a.lo) return FbRegime::DegenerateLow;
    if (!near(a.hi, p.lo, tol) && a.hi < p.lo) return FbRegime::DegenerateHigh;
    if (near(a.lo, p.hi, tol)) return FbRegime::BoundaryPA;
    if (near(p.lo, a.hi, tol)) return FbRegime::BoundaryAP;
    if (near(a.hi, p.hi, tol)) return FbRegime::BoundaryTops;
    return p.hi < a.hi ? FbRegime::Interior : FbRegime::InteriorRev;
}

SbRegime classify_sb(const AmbiguityBand& a, const AmbiguityBand& p, double tol) {
    if (!near(p.hi, a.lo, tol) && p.hi < a.lo) return SbRegime::Degenerate;
    if (!near(a.hi, p.lo, tol) && a.hi < p.lo) return SbRegime::Degenerate;
    if (p.hi < a.hi || near(p.hi, a.hi, tol)) {
        return SbRegime::PrincipalTopInAgentBand;
    }
    return SbRegime::AgentTopInPrincipalBand;
}

ValidatedModel validate(const RiskProfile& profile, const AmbiguityBand& band_a,
                        const AmbiguityBand& band_p, double tol) {
    RiskProfile p = make_profile(profile.r_agent, profile.r_principal,
                                 profile.cost_coeff, profile.effort_cap,
                                 profile.horizon, profile.reservation);
    check_band(band_a, "band_a");
    check_band(band_p, "band_p");

    ValidatedModel m;
    m.profile = p;
    m.band_a = band_a;
    m.band_p = band_p;
    m.fb_regime = classify_fb(band_a, band_p, tol);
    m.sb_regime = classify_sb(band_a, band_p, tol);
    if (p.effort_cap < 1.0 / p.cost_coeff) {
        std::ostringstream os;
        os << "effort_cap " << p.effort_cap
           << " binds below the unconstrained optimizer 1/cost_coeff = "
           << 1.0 / p.cost_coeff
           << "; closed forms use the clipped effort";
        m.warnings.push_back(os.str());
    }
    return m;
}

MarkovAmbiguityField MarkovAmbiguityField::constant(const AmbiguityBand& band_a,
                                                    const AmbiguityBand& band_p,
                                                    double horizon, double x_min,
                                                    double x_max) {
    MarkovAmbiguityField f;
    f.t_grid = {0.0, horizon};
    f.x_grid = {x_min, x_max};
    std::size_t n = f.t_grid.size() * f.x_grid.size();
    f.a_lo.assign(n, band_a.lo);
    f.a_hi.assign(n, band_a.hi);
    f.p_lo.assign(n, band_p.lo);
    f.p_hi.assign(n, band_p.hi);
    return f;
}

std::size_t MarkovAmbiguityField::nearest_t(double t) const {
    auto it = std::lower_bound(t_grid.begin(), t_grid.end(), t);
    if (it == t_grid.end()) return t_grid.size() - 1;
    std::size_t i = static_cast<std::size_t>(it - t_grid.begin());
    if (i > 0 && t - t_grid[i - 1] < t_grid[i] - t) --i;
    return i;
}

std::size_t MarkovAmbiguityField::nearest_x(double x) const {
    auto it = std::lower_bound(x_grid.begin(), x_grid.end(), x);
    if (it == x_grid.end()) return x_grid.size() - 1;
    std::size_t i = static_cast<std::size_t>(it - x_grid.begin());
    if (i > 0 && x - x_grid[i - 1] < x_grid[i] - x) --i;
    return i;
}

AmbiguityBand MarkovAmbiguityField::agent_band(double t, double x) const {
    std::size_t i = index(nearest_t(t), nearest_x(x));
    return {a_lo[i], a_hi[i]};
}

AmbiguityBand MarkovAmbiguityField::principal_band(double t, double x) const {
    std::size_t i = index(nearest_t(t), nearest_x(x));
    return {p_lo[i], p_hi[i]};
}

double MarkovAmbiguityField::max_principal_variance() const {
    double m = 0.0;
    for (double v : p_hi) m = std::max(m, v);
    return m;
}

void MarkovAmbiguityField::check() const {
    if (t_grid.empty() || x_grid.empty()) {
        throw ValidationError("EmptyBand", "field grid is empty");
    }
    std::size_t n = t_grid.size() * x_grid.size();
    if (a_lo.size() != n || a_hi.size() != n || p_lo.size() != n ||
        p_hi.size() != n) {
        throw ValidationError("NonPositiveParameter",
                              "field arrays do not match the grid size");
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (!(a_lo[i] > 0.0) || !(p_lo[i] > 0.0)) {
            throw ValidationError("NonPositiveParameter",
                                  "band bounds must be > 0");
        }
        if (a_lo[i] > a_hi[i] || p_lo[i] > p_hi[i]) {
            throw ValidationError("EmptyBand", "band with lo > hi in field");
        }
        if (std::max(a_lo[i], p_lo[i]) > std::min(a_hi[i], p_hi[i])) {
            throw ValidationError("EmptyBand",
                                  "agent/principal bands do not intersect");
        }
    }
    for (std::size_t i = 1; i < t_grid.size(); ++i) {
        if (!(t_grid[i] > t_grid[i - 1])) {
            throw ValidationError("NonPositiveParameter",
                                  "t_grid must be increasing");
        }
    }
    for (std::size_t i = 1; i < x_grid.size(); ++i) {
        if (!(x_grid[i] > x_grid[i - 1])) {
            throw ValidationError("NonPositiveParameter",
                                  "x_grid must be increasing");
        }
    }
}

}  // namespace ambicon
