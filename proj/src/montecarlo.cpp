#include "ambicon/montecarlo.hpp"

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <thread>

#include "ambicon/numeric.hpp"

namespace ambicon {

namespace {

constexpr std::uint64_t kChunk = 1u << 16;

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

double uniform01(std::uint64_t bits) {
    return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
}

int resolve_workers(const McOptions& opt) {
    if (opt.n_workers > 0) return opt.n_workers;
    if (const char* env = std::getenv("AMBICON_THREADS")) {
        int n = std::atoi(env);
        if (n > 0) return n;
    }
    unsigned hc = std::thread::hardware_concurrency();
    return hc > 0 ? static_cast<int>(hc) : 1;
}

struct Moments {
    double sum = 0.0;
    double sumsq = 0.0;
};

/// Runs fn(index) -> double over [0, n) in fixed-size chunks, accumulating
/// per-chunk moments and reducing them in chunk order, so the result is
/// bit-identical for any worker count.  nvals parallel accumulators share
/// the same index stream (fn writes into vals[]).
template <class Fn>
std::vector<Moments> chunked_accumulate(std::uint64_t n, int nvals, Fn fn,
                                        const McOptions& opt) {
    std::uint64_t n_chunks = (n + kChunk - 1) / kChunk;
    std::vector<std::vector<Moments>> partial(n_chunks,
                                              std::vector<Moments>(nvals));
    auto work_chunk = [&](std::uint64_t c) {
        std::uint64_t lo = c * kChunk;
        std::uint64_t hi = std::min(n, lo + kChunk);
        std::vector<Moments>& acc = partial[c];
        double vals[4] = {0, 0, 0, 0};
        for (std::uint64_t i = lo; i < hi; ++i) {
            fn(i, vals);
            for (int k = 0; k < nvals; ++k) {
                acc[k].sum += vals[k];
                acc[k].sumsq += vals[k] * vals[k];
            }
        }
    };

    int workers = std::min<std::uint64_t>(resolve_workers(opt), n_chunks);
    if (workers <= 1) {
        for (std::uint64_t c = 0; c < n_chunks; ++c) work_chunk(c);
    } else {
        std::atomic<std::uint64_t> next{0};
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (int w = 0; w < workers; ++w) {
            pool.emplace_back([&] {
                for (;;) {
                    std::uint64_t c = next.fetch_add(1);
                    if (c >= n_chunks) return;
                    work_chunk(c);
                }
            });
        }
        for (auto& th : pool) th.join();
    }

    std::vector<Moments> total(nvals);
    for (std::uint64_t c = 0; c < n_chunks; ++c) {
        for (int k = 0; k < nvals; ++k) {
            total[k].sum += partial[c][k].sum;
            total[k].sumsq += partial[c][k].sumsq;
        }
    }
    return total;
}

UtilityEstimate finish(const Moments& m, std::uint64_t n) {
    UtilityEstimate e;
    e.n = n;
    e.mean = m.sum / static_cast<double>(n);
    if (n > 1) {
        double var = (m.sumsq - static_cast<double>(n) * e.mean * e.mean) /
                     static_cast<double>(n - 1);
        e.std_error = std::sqrt(std::max(0.0, var) / static_cast<double>(n));
    }
    return e;
}

/// Standard normal for sample index i, honoring the antithetic pairing.
double draw(std::uint64_t seed, std::uint64_t i, bool antithetic) {
    std::uint64_t base = antithetic ? (i >> 1) : i;
    double g = normal_at(seed, base);
    return (antithetic && (i & 1)) ? -g : g;
}

/// Terminal output for sample i under the scenario; Euler path mode sums
/// per-step increments on a separate counter stream.
double terminal_b(const Scenario& sc, const McOptions& opt, std::uint64_t i,
                  double horizon) {
    if (!opt.euler_paths) {
        return sc.effort * horizon +
               std::sqrt(sc.alpha * horizon) * draw(sc.seed, i, opt.antithetic);
    }
    int steps = opt.euler_steps > 0 ? opt.euler_steps : 256;
    double dt = horizon / steps;
    double vol = std::sqrt(sc.alpha * dt);
    double sign = (opt.antithetic && (i & 1)) ? -1.0 : 1.0;
    std::uint64_t base = opt.antithetic ? (i >> 1) : i;
    double b = 0.0;
    for (int s = 0; s < steps; ++s) {
        std::uint64_t idx = base * static_cast<std::uint64_t>(steps) +
                            static_cast<std::uint64_t>(s);
        b += sc.effort * dt + sign * vol * normal_at(sc.seed ^ 0xE7A13ULL, idx);
    }
    return b;
}

double contract_payoff(const LinearQuadraticContract& c, double b, double qv) {
    return c.z * b + 0.5 * c.gamma * qv + c.delta;
}

}  // namespace

double normal_at(std::uint64_t seed, std::uint64_t index) {
    std::uint64_t a = splitmix64(seed ^ splitmix64(index));
    std::uint64_t b = splitmix64(a ^ 0xD1B54A32D192ED03ULL);
    double u1 = uniform01(a);
    double u2 = uniform01(b);
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * 3.14159265358979323846 * u2);
}

std::vector<TerminalSample> sample_terminal(const Scenario& sc,
                                            const RiskProfile& pr,
                                            const McOptions& opt) {
    std::vector<TerminalSample> out(sc.n_paths);
    const double t = pr.horizon;
    for (std::uint64_t i = 0; i < sc.n_paths; ++i) {
        TerminalSample& s = out[i];
        s.b_t = terminal_b(sc, opt, i, t);
        s.qv_t = sc.alpha * t;
        s.effort_integral = sc.effort * t;
        s.cost_integral = t * pr.cost(sc.effort);
    }
    return out;
}

UtilityPairEstimate estimate_utilities(const LinearQuadraticContract& contract,
                                       const Scenario& sc,
                                       const RiskProfile& pr,
                                       const McOptions& opt) {
    const double t = pr.horizon;
    const double qv = sc.alpha * t;
    const double cost = t * pr.cost(sc.effort);
    const double rp = pr.r_principal, ra = pr.r_agent;
    auto fn = [&](std::uint64_t i, double* vals) {
        double b = terminal_b(sc, opt, i, t);
        double xi = contract_payoff(contract, b, qv);
        vals[0] = -safe_exp(-rp * (b - xi));
        vals[1] = -safe_exp(-ra * (xi - cost));
    };
    auto m = chunked_accumulate(sc.n_paths, 2, fn, opt);
    return {finish(m[0], sc.n_paths), finish(m[1], sc.n_paths)};
}

ScanResult worst_case_scan(const LinearQuadraticContract& contract,
                           double effort, const AmbiguityBand& band, Side side,
                           int grid_n, const Scenario& scenario_template,
                           const RiskProfile& pr, bool use_closed_form,
                           const McOptions& opt) {
    if (grid_n < 2) {
        throw ValidationError("NonPositiveParameter", "grid_n must be >= 2");
    }
    ScanResult best;
    bool first = true;
    for (int i = 0; i < grid_n; ++i) {
        double alpha = band.lo + (band.hi - band.lo) * i / (grid_n - 1);
        UtilityEstimate value;
        if (use_closed_form) {
            UtilityTerms terms = f_eval(effort, contract, alpha, alpha, 1.0, pr);
            value.mean = side == Side::Principal ? terms.gamma_p : terms.gamma_a;
            value.n = 1;
        } else {
            Scenario sc = scenario_template;
            sc.alpha = alpha;
            sc.effort = effort;
            auto est = estimate_utilities(contract, sc, pr, opt);
            value = side == Side::Principal ? est.u_p : est.u_a;
        }
        if (first || value.mean < best.value.mean) {
            best.alpha_worst = alpha;
            best.value = value;
            first = false;
        }
    }
    return best;
}

UtilityEstimate gateaux_residual(const LinearQuadraticContract& contract,
                                 const Direction& dir, double effort,
                                 double alpha_p, double alpha_a, double rho,
                                 const Scenario& scenario_template,
                                 const RiskProfile& pr, const McOptions& opt) {
    if (!(alpha_p > 0.0) || !(alpha_a > 0.0) || !(rho > 0.0)) {
        throw ValidationError("NonPositiveParameter",
                              "alpha_p, alpha_a, rho must be > 0");
    }
    const double t = pr.horizon;
    const double rp = pr.r_principal, ra = pr.r_agent;
    const double cost = t * pr.cost(effort);
    const double sp = std::sqrt(alpha_p), sa = std::sqrt(alpha_a);
    const double sqt = std::sqrt(t);

    auto h_of = [&](double x, double alpha) {
        switch (dir.kind) {
            case Direction::Kind::Constant:
                return dir.c;
            case Direction::Kind::TerminalOutput:
                return x;
            case Direction::Kind::Custom:
                return contract_payoff(dir.functional, x, alpha * t);
        }
        throw SolverError("UnsupportedDirection", "unknown direction kind");
    };

    Scenario sc = scenario_template;
    auto fn = [&](std::uint64_t i, double* vals) {
        double b = sqt * draw(sc.seed, i, opt.antithetic);  // base-measure BM
        double xp = effort * t + sp * b;
        double xa = effort * t + sa * b;
        double xi_p = contract_payoff(contract, xp, alpha_p * t);
        double xi_a = contract_payoff(contract, xa, alpha_a * t);
        double term_p = rp * h_of(xp, alpha_p) * safe_exp(-rp * (xp - xi_p));
        double term_a = rho * ra * h_of(xa, alpha_a) * safe_exp(-ra * (xi_a - cost));
        vals[0] = term_p - term_a;
    };
    auto m = chunked_accumulate(sc.n_paths, 1, fn, opt);
    return finish(m[0], sc.n_paths);
}

}  // namespace ambicon
