#include "ambicon/hjbi.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

#include "ambicon/numeric.hpp"

namespace ambicon {

namespace {

struct BandPair {
    AmbiguityBand agent;
    AmbiguityBand principal;
};

AmbiguityBand intersect_or_throw(const BandPair& bands) {
    double lo = std::max(bands.agent.lo, bands.principal.lo);
    double hi = std::min(bands.agent.hi, bands.principal.hi);
    if (lo > hi) {
        throw SolverError("EmptyIntersection",
                          "agent and principal bands are disjoint at the node");
    }
    return {lo, hi};
}

double g_value(const BandPair& bands, const RiskProfile& pr, double v, double p,
               double q, double z, double gamma, double alpha) {
    const double ra = pr.r_agent, rp = pr.r_principal;
    double astar = clip(z / pr.cost_coeff, 0.0, pr.effort_cap);
    double m = 0.5 * (gamma >= 0.0 ? bands.agent.lo : bands.agent.hi) * gamma;
    return astar * p +
           (0.5 * ra * alpha * z * z + pr.cost(astar) + 0.5 * alpha * gamma - m) *
               rp * v +
           0.5 * alpha * q + 0.5 * alpha * z * z * rp * rp * v +
           alpha * z * rp * p;
}

/// Quadratic coefficients of z -> G(z) on one clipping piece.
struct Quad {
    double a, b, c;
    double eval(double z) const { return (a * z + b) * z + c; }
};

/// Closed-form min of G over z in [zlo, zhi] at fixed alpha, gamma = 0.
/// The effort clipping breakpoints z = 0 and z = k a_max cut G into three
/// convex quadratic pieces.
std::pair<double, double> min_over_z(const BandPair& bands,
                                     const RiskProfile& pr, double v, double p,
                                     double q, double alpha, double zlo,
                                     double zhi) {
    const double ra = pr.r_agent, rp = pr.r_principal, k = pr.cost_coeff;
    const double c0 = 0.5 * alpha * q;
    Quad flat{0.5 * ra * alpha * rp * v + 0.5 * alpha * rp * rp * v,
              alpha * rp * p, c0};
    Quad mid{flat.a + 0.5 / k * rp * v, flat.b + p / k, c0};
    Quad high{flat.a, flat.b,
              c0 + pr.effort_cap * p + pr.cost(pr.effort_cap) * rp * v};
    const double zbreak = k * pr.effort_cap;

    double best = std::numeric_limits<double>::infinity();
    double best_z = zlo;
    auto consider = [&](const Quad& piece, double lo, double hi) {
        if (lo > hi) return;
        double z = piece.a > 0.0 ? clip(-piece.b / (2.0 * piece.a), lo, hi)
                                 : (piece.eval(lo) <= piece.eval(hi) ? lo : hi);
        double val = piece.eval(z);
        if (val < best) {
            best = val;
            best_z = z;
        }
    };
    consider(flat, zlo, std::min(0.0, zhi));
    consider(mid, std::max(0.0, zlo), std::min(zbreak, zhi));
    consider(high, std::max(zbreak, zlo), zhi);
    return {best, best_z};
}

/// Outer sup over alpha shared by both Hamiltonians: grid scan followed by
/// golden-section refinement in the bracket around the best grid point.
template <class Inner>
HamiltonianResult sup_over_alpha(Inner inner, const AmbiguityBand& domain,
                                 int steps) {
    HamiltonianResult out;
    if (domain.hi - domain.lo <= 0.0) {
        auto [val, z] = inner(domain.lo);
        return {val, z, domain.lo};
    }
    steps = std::max(steps, 2);
    int best_i = 0;
    double best_val = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < steps; ++i) {
        double alpha =
            domain.lo + (domain.hi - domain.lo) * i / (steps - 1);
        double val = inner(alpha).first;
        if (val > best_val) {
            best_val = val;
            best_i = i;
        }
    }
    double step = (domain.hi - domain.lo) / (steps - 1);
    double lo = std::max(domain.lo, domain.lo + (best_i - 1) * step);
    double hi = std::min(domain.hi, domain.lo + (best_i + 1) * step);
    auto [alpha_ref, val_ref] = golden_max(
        [&](double a) { return inner(a).first; }, lo, hi, 1e-11);
    double alpha = val_ref >= best_val ? alpha_ref
                                       : domain.lo + best_i * step;
    auto [val, z] = inner(alpha);
    out.value = val;
    out.z_arg = z;
    out.alpha_arg = alpha;
    return out;
}

BandPair bands_at(const MarkovAmbiguityField& field, double t, double x) {
    return {field.agent_band(t, x), field.principal_band(t, x)};
}

HamiltonianResult reduced_core(const BandPair& bands, const RiskProfile& pr,
                               double v, double p, double q,
                               const HamiltonianSearch& search) {
    AmbiguityBand domain = intersect_or_throw(bands);
    double zlo = search.allow_negative_z ? search.z_min : 0.0;
    auto inner = [&](double alpha) {
        return min_over_z(bands, pr, v, p, q, alpha, zlo, search.z_max);
    };
    return sup_over_alpha(inner, domain, search.alpha_steps);
}

HamiltonianResult generic_core(const BandPair& bands, const RiskProfile& pr,
                               double v, double p, double q,
                               const HamiltonianSearch& search) {
    AmbiguityBand domain = intersect_or_throw(bands);
    const double zlo = search.allow_negative_z ? search.z_min : 0.0;
    const double zhi = search.z_max;
    const double zbreak = pr.cost_coeff * pr.effort_cap;
    // gamma probes around the optimum gamma = 0 (any nonzero gamma only
    // increases G for alpha inside the agent band).
    const double gammas[] = {-4.0, -1.0, -0.25, 0.0, 0.25, 1.0, 4.0};

    auto inner = [&](double alpha) {
        double best = std::numeric_limits<double>::infinity();
        double best_z = zlo;
        int steps = std::max(search.z_steps, 3);
        for (int i = 0; i < steps; ++i) {
            double z = zlo + (zhi - zlo) * i / (steps - 1);
            for (double g : gammas) {
                double val = g_value(bands, pr, v, p, q, z, g, alpha);
                if (val < best) {
                    best = val;
                    best_z = z;
                }
            }
        }
        // The scan locates the basin; per-piece golden search pins the
        // minimum (each clipping piece of z -> G is convex at gamma = 0).
        auto refine = [&](double lo, double hi) {
            if (lo > hi) return;
            auto [z, val] = golden_min(
                [&](double zz) {
                    return g_value(bands, pr, v, p, q, zz, 0.0, alpha);
                },
                lo, hi, 1e-12);
            if (val < best) {
                best = val;
                best_z = z;
            }
        };
        refine(zlo, std::min(0.0, zhi));
        refine(std::max(0.0, zlo), std::min(zbreak, zhi));
        refine(std::max(zbreak, zlo), zhi);
        return std::make_pair(best, best_z);
    };
    return sup_over_alpha(inner, domain, search.alpha_steps);
}

}  // namespace

GResult g_map(double t, double x, double v, double p, double q, double z,
              double gamma, double alpha, const MarkovAmbiguityField& field,
              const RiskProfile& profile) {
    if (!(v > 0.0)) {
        throw ValidationError("NonPositiveParameter", "v must be > 0");
    }
    BandPair bands = bands_at(field, t, x);
    if (!bands.principal.contains(alpha)) {
        return {0.0, false};
    }
    return {g_value(bands, profile, v, p, q, z, gamma, alpha), true};
}

HamiltonianResult hamiltonian_generic(double t, double x, double v, double p,
                                      double q, const MarkovAmbiguityField& field,
                                      const RiskProfile& profile,
                                      const HamiltonianSearch& search) {
    if (!(v > 0.0)) {
        throw ValidationError("NonPositiveParameter", "v must be > 0");
    }
    return generic_core(bands_at(field, t, x), profile, v, p, q, search);
}

HamiltonianResult hamiltonian_reduced(double t, double x, double v, double p,
                                      double q, const MarkovAmbiguityField& field,
                                      const RiskProfile& profile,
                                      const HamiltonianSearch& search) {
    if (!(v > 0.0)) {
        throw ValidationError("NonPositiveParameter", "v must be > 0");
    }
    return reduced_core(bands_at(field, t, x), profile, v, p, q, search);
}

ValueSurface solve_pde(const MarkovAmbiguityField& field,
                       const RiskProfile& profile, const PdeGrid& grid,
                       const HamiltonianSearch& search,
                       const std::vector<double>& terminal_override) {
    field.check();
    if (grid.n_t < 1 || grid.n_x < 4) {
        throw ValidationError("NonPositiveParameter",
                              "grid needs n_t >= 1 and n_x >= 4");
    }
    if (!(grid.x_min < 0.0 && 0.0 < grid.x_max)) {
        throw ValidationError("NonPositiveParameter",
                              "x-domain must contain 0");
    }
    const double t_hor = profile.horizon;
    const double dt = grid.dt(t_hor);
    const double dx = grid.dx();
    const double big_m = field.max_principal_variance();
    if (dt > grid.cfl_safety * dx * dx / big_m) {
        throw SolverError("CflViolation",
                          "dt exceeds cfl_safety * dx^2 / M; increase n_t");
    }
    if (!terminal_override.empty() &&
        terminal_override.size() != static_cast<std::size_t>(grid.n_x)) {
        throw ValidationError("NonPositiveParameter",
                              "terminal_override size must equal n_x");
    }

    ValueSurface surf;
    surf.grid = grid;
    surf.horizon = t_hor;
    const int nx = grid.n_x;
    surf.psi.assign(static_cast<std::size_t>(grid.n_t + 1) * nx, 0.0);
    surf.z_policy.assign(surf.psi.size(), 0.0);
    surf.alpha_policy.assign(surf.psi.size(), 0.0);

    const double rp = profile.r_principal;
    for (int j = 0; j < nx; ++j) {
        surf.psi[surf.index(grid.n_t, j)] =
            terminal_override.empty() ? std::exp(-rp * grid.x_at(j))
                                      : terminal_override[j];
    }

    auto node_policy = [&](double t, int j, const std::vector<double>& slice,
                           double* z_out, double* a_out) {
        double v = slice[j];
        double p = (slice[j + 1] - slice[j - 1]) / (2.0 * dx);
        double q = (slice[j + 1] - 2.0 * slice[j] + slice[j - 1]) / (dx * dx);
        BandPair bands = bands_at(field, t, grid.x_at(j));
        HamiltonianResult h = reduced_core(bands, profile, v, p, q, search);
        *z_out = h.z_arg;
        *a_out = h.alpha_arg;
        return h;
    };

    std::vector<double> prev(nx), cur(nx);
    for (int j = 0; j < nx; ++j) prev[j] = surf.psi[surf.index(grid.n_t, j)];

    // Policies on the terminal row come from the terminal slice itself.
    for (int j = 1; j + 1 < nx; ++j) {
        node_policy(t_hor, j, prev, &surf.z_policy[surf.index(grid.n_t, j)],
                    &surf.alpha_policy[surf.index(grid.n_t, j)]);
    }

    for (int n = grid.n_t - 1; n >= 0; --n) {
        double t = surf.t_at(n + 1);  // data time of the slice being consumed
        for (int j = 1; j + 1 < nx; ++j) {
            double v = prev[j];
            double p = (prev[j + 1] - prev[j - 1]) / (2.0 * dx);
            double q = (prev[j + 1] - 2.0 * prev[j] + prev[j - 1]) / (dx * dx);
            BandPair bands = bands_at(field, t, grid.x_at(j));
            HamiltonianResult h = reduced_core(bands, profile, v, p, q, search);
            // Advection coefficient multiplying psi_x at the optimizer.
            double drift = clip(h.z_arg / profile.cost_coeff, 0.0,
                                profile.effort_cap) +
                           h.alpha_arg * h.z_arg * rp;
            if (std::abs(drift) * dx > h.alpha_arg) {
                // Cell Peclet too large for central differencing: upwind.
                double p_up = drift >= 0.0 ? (prev[j + 1] - prev[j]) / dx
                                           : (prev[j] - prev[j - 1]) / dx;
                h = reduced_core(bands, profile, v, p_up, q, search);
            }
            double value = prev[j] + dt * h.value;
            if (value < 1e-300) {
                value = 1e-300;
                ++surf.clamp_count;
            }
            cur[j] = value;
            surf.z_policy[surf.index(n, j)] = h.z_arg;
            surf.alpha_policy[surf.index(n, j)] = h.alpha_arg;
        }
        cur[0] = std::max(1e-300, 3.0 * cur[1] - 3.0 * cur[2] + cur[3]);
        cur[nx - 1] = std::max(
            1e-300, 3.0 * cur[nx - 2] - 3.0 * cur[nx - 3] + cur[nx - 4]);
        surf.z_policy[surf.index(n, 0)] = surf.z_policy[surf.index(n, 1)];
        surf.z_policy[surf.index(n, nx - 1)] =
            surf.z_policy[surf.index(n, nx - 2)];
        surf.alpha_policy[surf.index(n, 0)] =
            surf.alpha_policy[surf.index(n, 1)];
        surf.alpha_policy[surf.index(n, nx - 1)] =
            surf.alpha_policy[surf.index(n, nx - 2)];
        for (int j = 0; j < nx; ++j) surf.psi[surf.index(n, j)] = cur[j];
        std::swap(prev, cur);
    }
    // Boundary policies on the terminal row.
    surf.z_policy[surf.index(grid.n_t, 0)] =
        surf.z_policy[surf.index(grid.n_t, 1)];
    surf.z_policy[surf.index(grid.n_t, nx - 1)] =
        surf.z_policy[surf.index(grid.n_t, nx - 2)];
    surf.alpha_policy[surf.index(grid.n_t, 0)] =
        surf.alpha_policy[surf.index(grid.n_t, 1)];
    surf.alpha_policy[surf.index(grid.n_t, nx - 1)] =
        surf.alpha_policy[surf.index(grid.n_t, nx - 2)];

    std::size_t total = surf.psi.size();
    if (surf.clamp_count > static_cast<long>(total / 1000)) {
        throw SolverError("NonPositiveValueSurface",
                          "positivity clamp fired on more than 0.1% of nodes");
    }

    // psi(0, 0) by linear interpolation between the straddling nodes.
    int j0 = static_cast<int>(std::floor((0.0 - grid.x_min) / dx));
    j0 = std::min(std::max(j0, 0), nx - 2);
    double x0 = grid.x_at(j0);
    double w = (0.0 - x0) / dx;
    double psi00 = (1.0 - w) * surf.psi[surf.index(0, j0)] +
                   w * surf.psi[surf.index(0, j0 + 1)];
    surf.principal_value =
        -std::exp(rp * profile.reservation_cert) * psi00;
    return surf;
}

PolicyGrids extract_policy(const ValueSurface& surface,
                           const MarkovAmbiguityField& field,
                           const RiskProfile& profile,
                           const HamiltonianSearch& search) {
    const PdeGrid& grid = surface.grid;
    const int nx = grid.n_x;
    const double dx = grid.dx();
    PolicyGrids out;
    out.z_policy.assign(surface.psi.size(), 0.0);
    out.alpha_policy.assign(surface.psi.size(), 0.0);
    for (int n = 0; n <= grid.n_t; ++n) {
        for (int j = 1; j + 1 < nx; ++j) {
            double v = surface.psi[surface.index(n, j)];
            double p = (surface.psi[surface.index(n, j + 1)] -
                        surface.psi[surface.index(n, j - 1)]) /
                       (2.0 * dx);
            double q = (surface.psi[surface.index(n, j + 1)] -
                        2.0 * v + surface.psi[surface.index(n, j - 1)]) /
                       (dx * dx);
            BandPair bands = bands_at(field, surface.t_at(n), grid.x_at(j));
            HamiltonianResult h = reduced_core(bands, profile, v, p, q, search);
            out.z_policy[surface.index(n, j)] = h.z_arg;
            out.alpha_policy[surface.index(n, j)] = h.alpha_arg;
        }
        out.z_policy[surface.index(n, 0)] = out.z_policy[surface.index(n, 1)];
        out.z_policy[surface.index(n, nx - 1)] =
            out.z_policy[surface.index(n, nx - 2)];
        out.alpha_policy[surface.index(n, 0)] =
            out.alpha_policy[surface.index(n, 1)];
        out.alpha_policy[surface.index(n, nx - 1)] =
            out.alpha_policy[surface.index(n, nx - 2)];
    }
    return out;
}

void export_surface_csv(const ValueSurface& surface, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) {
        throw SolverError("IoError", "cannot open " + path);
    }
    os << "t,x,psi,z_policy,alpha_policy\n";
    char buf[160];
    for (int n = 0; n <= surface.grid.n_t; ++n) {
        for (int j = 0; j < surface.grid.n_x; ++j) {
            std::size_t i = surface.index(n, j);
            std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g,%.17g,%.17g\n",
                          surface.t_at(n), surface.grid.x_at(j),
                          surface.psi[i], surface.z_policy[i],
                          surface.alpha_policy[i]);
            os << buf;
        }
    }
}

}  // namespace ambicon
