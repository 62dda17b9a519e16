#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "ambicon/model.hpp"

namespace ambicon {

/// Uniform space-time grid for the backward explicit scheme.
struct PdeGrid {
    int n_t = 400;  // time steps
    int n_x = 401;  // spatial nodes
    double x_min = -6.0;
    double x_max = 6.0;
    double cfl_safety = 0.9;

    double dt(double horizon) const { return horizon / n_t; }
    double dx() const { return (x_max - x_min) / (n_x - 1); }
    double x_at(int j) const { return x_min + j * dx(); }
};

/// Solved value surface psi(t, x) with per-node optimizers and the implied
/// principal value -exp(R_P R_0) psi(0, 0).
struct ValueSurface {
    PdeGrid grid;
    double horizon = 0.0;
    std::vector<double> psi;           // (n_t + 1) x n_x, row-major, t ascending
    std::vector<double> z_policy;      // same layout
    std::vector<double> alpha_policy;  // same layout
    double principal_value = 0.0;
    long clamp_count = 0;

    std::size_t index(int it, int jx) const {
        return static_cast<std::size_t>(it) * grid.n_x + jx;
    }
    double t_at(int it) const { return horizon * it / grid.n_t; }
};

/// Value of the controlled generator at one node, or infeasible when alpha is
/// outside the principal's band there.
struct GResult {
    double value = 0.0;
    bool feasible = true;
};

/// Generator term
///   G = a*(z) p + (R_A alpha z^2/2 + k(a*(z)) + alpha gamma/2 - m(gamma)) R_P v
///       + alpha q / 2 + alpha z^2 R_P^2 v / 2 + alpha z R_P p
/// with a*(z) = clip(z/k, 0, a_max) and m(gamma) the band-constrained minimum
/// of (atilde/2) gamma over the agent band at (t, x).  Infeasible when alpha
/// is outside the principal band at (t, x).
GResult g_map(double t, double x, double v, double p, double q, double z,
              double gamma, double alpha, const MarkovAmbiguityField& field,
              const RiskProfile& profile);

struct HamiltonianSearch {
    double z_min = -5.0;
    double z_max = 5.0;
    int z_steps = 201;      // generic scan resolution
    int alpha_steps = 17;   // shared outer alpha grid
    bool allow_negative_z = true;
};

struct HamiltonianResult {
    double value = 0.0;
    double z_arg = 0.0;
    double alpha_arg = 0.0;
};

/// sup over alpha in the band intersection of the inf over z of G, by nested
/// grid search
/// with golden-section refinement (gamma contributes 0 at its optimum for
/// alpha inside the agent band, and drives alpha outside the intersection to
/// -infinity, so the effective domain is the intersection at gamma = 0).
HamiltonianResult hamiltonian_generic(double t, double x, double v, double p,
                                      double q, const MarkovAmbiguityField& field,
                                      const RiskProfile& profile,
                                      const HamiltonianSearch& search = {});

/// Same optimization with the inner minimization over z done analytically:
/// G is quadratic in z on each of the three pieces cut by the effort clipping
/// breakpoints z = 0 and z = k a_max.
HamiltonianResult hamiltonian_reduced(double t, double x, double v, double p,
                                      double q, const MarkovAmbiguityField& field,
                                      const RiskProfile& profile,
                                      const HamiltonianSearch& search = {});

/// Explicit backward scheme for
///   -d/dt psi - sup_alpha inf_z G(t, x, psi, psi_x, psi_xx, z, 0, alpha) = 0,
///   psi(T, x) = exp(-R_P x),
/// with central second difference for psi_xx, central first difference for
/// psi_x falling back to drift-sign upwinding when the cell Peclet condition
/// fails, and one-sided second-order extrapolation at the lateral boundaries.
/// terminal_override, when non-empty, replaces the terminal slice (n_x values).
ValueSurface solve_pde(const MarkovAmbiguityField& field,
                       const RiskProfile& profile, const PdeGrid& grid,
                       const HamiltonianSearch& search = {},
                       const std::vector<double>& terminal_override = {});

struct PolicyGrids {
    std::vector<double> z_policy;
    std::vector<double> alpha_policy;
};

/// Recomputes the per-node optimizers from the stored surface derivatives.
PolicyGrids extract_policy(const ValueSurface& surface,
                           const MarkovAmbiguityField& field,
                           const RiskProfile& profile,
                           const HamiltonianSearch& search = {});

/// Writes "t,x,psi,z_policy,alpha_policy" rows (header included, LF, '.').
void export_surface_csv(const ValueSurface& surface, const std::string& path);

}  // namespace ambicon
