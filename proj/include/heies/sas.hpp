#pragma once

// Window-by-window semi-analytical simulation with adaptive step control.
//
// Per window: freeze slopes, expand drivers, factorize A0 once, then for
// k = 0..K: X(k+1) from the PDE recursion, Y(k+1) from A0 Y(k+1) = C(k+1),
// Z(k+1) from the node temperatures. The error estimate X(K+1) dt^(K+1) decides
// acceptance; the coefficients do not depend on dt, so retries only re-evaluate
// the estimate with a smaller dt.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "dt_series.hpp"
#include "model.hpp"
#include "network.hpp"
#include "newton.hpp"
#include "window_matrix.hpp"

namespace heies {

class DivergenceError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct AdaptiveConfig {
    std::size_t order = 6;  // K
    double atol = 1e-9;
    double rtol = 1e-9;
    double fac = 0.9;
    double fac_min = 0.5;
    double fac_max = 2.0;
    double dt_init = 10.0;
    double dt_min = 1e-3;
    double dt_max = 900.0;
    double theta = 1.0;
    double guard_ratio = 1e-8;
    bool reinit_at_breakpoints = true;
    FactorOptions factor;
    NewtonOptions newton;

    void validate() const {
        if (!(fac > 0.0 && fac < 1.0)) throw ValidationError("fac must lie in (0, 1)");
        if (!(fac_max >= 1.0)) throw ValidationError("fac_max must be >= 1");
        if (!(fac_min > 0.0 && fac_min < 1.0)) throw ValidationError("fac_min must lie in (0, 1)");
        if (!(dt_min > 0.0 && dt_min <= dt_init && dt_init <= dt_max))
            throw ValidationError("need 0 < dt_min <= dt_init <= dt_max");
        if (order < 1) throw ValidationError("series order K must be >= 1");
        if (!(atol >= 0.0 && rtol >= 0.0)) throw ValidationError("tolerances must be >= 0");
        if (!(theta >= 1.0 && theta <= 2.0)) throw ValidationError("theta must lie in [1, 2]");
    }
};

struct ReversalEvent {
    std::vector<std::string> pipes;
    double t_prime = 0.0;  // offset from the window start
};

struct WindowResult {
    double t_start = 0.0;
    double dt = 0.0;           // accepted length, truncated at a reversal
    double span = 0.0;         // length the error estimate was taken over
    double dt_proposed = 0.0;  // controller output after this window
    double err = 0.0;
    bool accepted = false;
    int attempts = 0;
    int factorizations = 0;
    bool guard = false;
    std::size_t estimate_order = 0;  // K+1, or K+2 when the guard fired
    std::size_t epoch = 0;
    std::optional<ReversalEvent> reversal;
    Eigen::MatrixXd coeffs;  // variables x orders, current orientation
};

/// Attempt log: used and proposed step of every try.
struct Attempt {
    double t_start = 0.0;
    double dt = 0.0;
    double err = 0.0;
    double dt_next = 0.0;
    bool accepted = false;
};

// ---- step-size control -------------------------------------------------------

/// RMS of tilde/eps. A zero term over a zero tolerance counts as zero; any
/// other term over a zero tolerance makes the estimate infinite.
[[nodiscard]] inline double error_estimate(const Eigen::VectorXd& tilde, const Eigen::VectorXd& eps) {
    if (tilde.size() == 0) return 0.0;
    double ss = 0.0;
    for (Eigen::Index i = 0; i < tilde.size(); ++i) {
        if (tilde(i) == 0.0) continue;
        const double r = tilde(i) / eps(i);
        ss += r * r;
    }
    const double e = std::sqrt(ss / static_cast<double>(tilde.size()));
    return std::isnan(e) ? std::numeric_limits<double>::infinity() : e;
}

/// dt fac (1/err)^(1/(K+1)) clamped to [fac_min dt, fac_max dt], then to
/// [dt_min, dt_max]. err = 0 grows by fac_max.
[[nodiscard]] inline double next_step_size(double dt, double err, std::size_t K, const AdaptiveConfig& cfg) {
    double prop = err > 0.0 ? dt * cfg.fac * std::pow(1.0 / err, 1.0 / static_cast<double>(K + 1))
                            : cfg.fac_max * dt;
    prop = std::min(cfg.fac_max * dt, std::max(cfg.fac_min * dt, prop));
    return std::clamp(prop, cfg.dt_min, cfg.dt_max);
}

namespace detail {

inline double eval_row(const Eigen::MatrixXd& C, int v, double dt, std::size_t upto) {
    double acc = C(v, static_cast<Eigen::Index>(upto));
    for (std::size_t k = upto; k-- > 0;) acc = acc * dt + C(v, static_cast<Eigen::Index>(k));
    return acc;
}

}  // namespace detail

/// tilde_i = C(i, p) dt^p and eps_i = atol + min(|x_i(0)|, |x_i(dt)|) rtol over
/// the listed variables, with x(dt) from orders 0..K.
inline void estimate_terms(const Eigen::MatrixXd& C, const std::vector<int>& vars, double dt, std::size_t K,
                           std::size_t p, const AdaptiveConfig& cfg, Eigen::VectorXd& tilde, Eigen::VectorXd& eps) {
    const auto n = static_cast<Eigen::Index>(vars.size());
    tilde.resize(n);
    eps.resize(n);
    const double dtp = std::pow(dt, static_cast<double>(p));
    for (Eigen::Index i = 0; i < n; ++i) {
        const int v = vars[static_cast<std::size_t>(i)];
        const double x0 = C(v, 0);
        const double x1 = detail::eval_row(C, v, dt, K);
        eps(i) = cfg.atol + std::min(std::abs(x0), std::abs(x1)) * cfg.rtol;
        tilde(i) = C(v, static_cast<Eigen::Index>(p)) * dtp;
    }
}

/// True when the order-(K+1) estimate vanishes relative to order K, as for
/// an odd/even-only Taylor series; the K+2 term must then be used.
[[nodiscard]] inline bool degenerate_order_guard(const Eigen::MatrixXd& C, const std::vector<int>& vars, double dt,
                                                 std::size_t K, const AdaptiveConfig& cfg) {
    Eigen::VectorXd t1, e1, t0, e0;
    estimate_terms(C, vars, dt, K, K + 1, cfg, t1, e1);
    estimate_terms(C, vars, dt, K, K, cfg, t0, e0);
    const double top = error_estimate(t1, e1);
    const double below = error_estimate(t0, e0);
    return below > 0.0 && top <= cfg.guard_ratio * below;
}

// ---- one window ----------------------------------------------------------------

/// Coefficients for one window start; reused by every attempt.
class WindowEngine {
public:
    WindowEngine(Model& md, const AdaptiveConfig& cfg) : md_(md), cfg_(cfg) {}

    /// Freezes slopes, expands drivers valid up to max_len, factorizes A0 and
    /// fills orders 1..K+1.
    void prepare(double t0, double max_len) {
        const std::size_t K = cfg_.order;
        if (md_.order() != K + 2) md_.resize_order(K + 2);
        md_.C.rightCols(md_.C.cols() - 1).setZero();
        md_.expand_drivers(t0, max_len);
        md_.assign_inlets(0);
        md_.freeze_slopes_all();
        wm_ = std::make_unique<WindowMatrix>();
        wm_->factorize(md_.window_matrix(), md_.row_labels(), cfg_.factor);
        ++factorizations_;
        computed_ = 0;
        fill_to(K + 1);
    }

    void fill_to(std::size_t top) {
        for (std::size_t k = computed_; k < top; ++k) {
            md_.pde_step(k);
            const auto kk = static_cast<Eigen::Index>(k + 1);
            if (!md_.y_vars.empty()) {
                const Eigen::VectorXd y = wm_->solve(md_.order_rhs(kk));
                for (std::size_t i = 0; i < md_.y_vars.size(); ++i) md_.C(md_.y_vars[i], kk) = y(static_cast<Eigen::Index>(i));
            }
            md_.assign_inlets(kk);
        }
        computed_ = std::max(computed_, top);
    }

    /// err for a trial dt; sets guard/p.
    double error(double dt, bool& guard, std::size_t& p) {
        const std::size_t K = cfg_.order;
        std::vector<int> vars = md_.x_vars;
        vars.insert(vars.end(), md_.y_vars.begin(), md_.y_vars.end());
        guard = degenerate_order_guard(md_.C, vars, dt, K, cfg_);
        p = K + 1;
        if (guard) {
            fill_to(K + 2);
            p = K + 2;
        }
        Eigen::VectorXd tilde, eps;
        estimate_terms(md_.C, vars, dt, K, p, cfg_, tilde, eps);
        return error_estimate(tilde, eps);
    }

    [[nodiscard]] int factorizations() const noexcept { return factorizations_; }

private:
    Model& md_;
    const AdaptiveConfig& cfg_;
    std::unique_ptr<WindowMatrix> wm_;
    std::size_t computed_ = 0;
    int factorizations_ = 0;
};

/// Pipes whose flow is negative at the end of the window, restricted to those
/// whose sign change comes first. Implicit pipes are skipped.
[[nodiscard]] inline std::optional<ReversalEvent> detect_reversal(const Model& md, double span, std::size_t K) {
    std::vector<std::pair<std::string, double>> roots;
    for (const auto& p : md.sys.heat.pipes) {
        if (p.implicit || !md.has("m[" + p.id + "]")) continue;
        const int v = md.var("m[" + p.id + "]");
        if (md.vars[static_cast<std::size_t>(v)].role != Role::Y) continue;
        if (detail::eval_row(md.C, v, span, K) >= 0.0) continue;
        std::vector<double> c(K + 1);
        for (std::size_t k = 0; k <= K; ++k) c[k] = md.C(v, static_cast<Eigen::Index>(k));
        const auto r = dt::first_root_in_window(dt::Series<double>(c), span);
        roots.emplace_back(p.id, r ? *r : 0.0);
    }
    if (roots.empty()) return std::nullopt;
    ReversalEvent ev;
    ev.t_prime = span;
    for (const auto& [id, r] : roots) ev.t_prime = std::min(ev.t_prime, r);
    for (const auto& [id, r] : roots)
        if (r <= ev.t_prime + 1e-9 * span) ev.pipes.push_back(id);
    return ev;
}

// ---- simulation ----------------------------------------------------------------

struct Sample {
    double t = 0.0;
    std::size_t epoch = 0;
    Eigen::VectorXd values;  // as-built orientation, ordered like SimulationResult::names
};

struct SimulationResult {
    std::vector<std::string> names;
    std::vector<Role> roles;  // roles at t = 0
    std::vector<WindowResult> windows;
    std::vector<Attempt> attempts;
    std::vector<Sample> samples;
    std::vector<std::shared_ptr<const Model>> epochs;
    std::size_t window_starts = 0;
    std::size_t rejections = 0;
    std::size_t factorizations = 0;
    std::size_t reversals = 0;
    std::size_t reinitializations = 0;
    double wall_time_s = 0.0;

    /// Index of a variable in names.
    [[nodiscard]] int column(const std::string& name) const {
        for (std::size_t i = 0; i < names.size(); ++i)
            if (names[i] == name) return static_cast<int>(i);
        throw ValidationError("unknown variable '" + name + "'");
    }

    /// Model-orientation values of sample s for its epoch's model.
    [[nodiscard]] Eigen::VectorXd internal_values(const Sample& s) const {
        const auto& md = *epochs[s.epoch];
        Eigen::VectorXd file(static_cast<Eigen::Index>(md.size()));
        for (std::size_t i = 0; i < md.size(); ++i) file(static_cast<Eigen::Index>(i)) = s.values(column(md.vars[i].name));
        return md.from_file(file);
    }
};

struct SimOptions {
    double cadence = 0.0;  // <= 0: window ends only
    bool keep_coefficients = true;
};

/// Everything needed to rebuild the model after a reversal.
struct SimSetup {
    CoupledSystem system;  // expanded
    ModelOptions options;
    bool pipe_only = false;
};

namespace detail {

inline void carry_state(const Model& from, Model& to) {
    const Eigen::VectorXd file = from.to_file(from.C.col(0));
    Eigen::VectorXd tf = to.to_file(to.C.col(0));
    for (std::size_t i = 0; i < to.size(); ++i) {
        const auto it = from.index.find(to.vars[i].name);
        if (it != from.index.end()) tf(static_cast<Eigen::Index>(i)) = file(it->second);
    }
    to.C.col(0) = to.from_file(tf);
}

}  // namespace detail

/// Runs Algorithm-style adaptive windows over [0, horizon] from the state in md.
inline SimulationResult simulate(Model md, double horizon, const AdaptiveConfig& cfg, const SimOptions& so = {},
                                 const SimSetup* setup = nullptr) {
    cfg.validate();
    if (!(horizon > 0.0)) throw ValidationError("horizon must be positive");
    const auto wall0 = std::chrono::steady_clock::now();
    const std::size_t K = cfg.order;

    SimulationResult res;
    for (const auto& v : md.vars) {
        res.names.push_back(v.name);
        res.roles.push_back(v.role);
    }
    md.theta = cfg.theta;
    for (auto& g : md.grids) g.grid.theta = cfg.theta;
    res.epochs.push_back(std::make_shared<const Model>(md));

    auto record = [&](double t, const Eigen::VectorXd& internal) {
        const Eigen::VectorXd file = md.to_file(internal);
        Sample s;
        s.t = t;
        s.epoch = res.epochs.size() - 1;
        s.values.resize(static_cast<Eigen::Index>(res.names.size()));
        for (std::size_t i = 0; i < res.names.size(); ++i) s.values(static_cast<Eigen::Index>(i)) = file(md.var(res.names[i]));
        res.samples.push_back(std::move(s));
    };

    md.set_drivers(0.0);
    md.assign_inlets(0);
    record(0.0, md.C.col(0));

    double t = 0.0;
    double dt = cfg.dt_init;
    const double t_eps = 1e-12 * std::max(1.0, horizon);
    std::size_t zero_reversals = 0;
    while (t < horizon - t_eps) {
        // Drivers that jump here need a consistent algebraic state.
        if (t > 0.0 && cfg.reinit_at_breakpoints && md.is_breakpoint(t)) {
            md.set_drivers(t);
            reinitialize_algebraic(md, cfg.newton);
            ++res.reinitializations;
        }
        const auto nb = md.next_breakpoint(t);
        const double limit = std::min(horizon, nb ? *nb : horizon);
        WindowEngine eng(md, cfg);
        eng.prepare(t, limit - t);
        ++res.window_starts;

        WindowResult wr;
        wr.t_start = t;
        wr.epoch = res.epochs.size() - 1;
        double used = 0.0;
        for (;;) {
            used = std::min(dt, limit - t);
            bool guard = false;
            std::size_t p = K + 1;
            const double err = eng.error(used, guard, p);
            const double next = next_step_size(used, err, p - 1, cfg);
            ++wr.attempts;
            res.attempts.push_back({t, used, err, next, err <= 1.0});
            wr.err = err;
            wr.guard = guard;
            wr.estimate_order = p;
            if (err <= 1.0) {
                wr.dt_proposed = next;
                wr.span = used;
                dt = next;
                break;
            }
            ++res.rejections;
            if (used <= cfg.dt_min * (1.0 + 1e-12))
                throw DivergenceError("step size underflow at t = " + std::to_string(t) + " s: err = " +
                                      std::to_string(err) + " at dt_min = " + std::to_string(cfg.dt_min));
            dt = next;
        }
        wr.accepted = true;
        wr.factorizations = eng.factorizations();
        res.factorizations += static_cast<std::size_t>(eng.factorizations());

        // Flow reversal inside the accepted window.
        std::vector<std::string> reversing;
        double t_prime = used;
        if (setup && !setup->pipe_only) {
            if (auto ev = detect_reversal(md, used, K)) {
                reversing = std::move(ev->pipes);
                t_prime = ev->t_prime;
            }
        }

        if (!reversing.empty() && t_prime <= 0.0) {
            if (++zero_reversals > 1) throw DivergenceError("repeated flow reversal at t = " + std::to_string(t));
        } else {
            zero_reversals = 0;
        }
        const double step = reversing.empty() ? used : t_prime;

        if (step > 0.0) {
            wr.dt = step;
            if (!reversing.empty()) wr.reversal = ReversalEvent{reversing, t_prime};
            if (so.keep_coefficients) wr.coeffs = md.C;

            // Samples on the cadence grid inside (t, t + step], plus the window end.
            const double t_end = (step == limit - t) ? limit : t + step;
            if (so.cadence > 0.0) {
                double n = std::floor(t / so.cadence) + 1.0;
                for (double ts = n * so.cadence; ts < t_end - 1e-9 * step; ts = (++n) * so.cadence) {
                    Eigen::VectorXd v(static_cast<Eigen::Index>(md.size()));
                    for (std::size_t i = 0; i < md.size(); ++i) v(static_cast<Eigen::Index>(i)) = detail::eval_row(md.C, static_cast<int>(i), ts - t, K);
                    record(ts, v);
                }
            }
            Eigen::VectorXd v(static_cast<Eigen::Index>(md.size()));
            for (std::size_t i = 0; i < md.size(); ++i) v(static_cast<Eigen::Index>(i)) = detail::eval_row(md.C, static_cast<int>(i), step, K);
            md.C.col(0) = v;
            md.set_drivers(t_end);
            md.assign_inlets(0);
            record(t_end, md.C.col(0));
            res.windows.push_back(std::move(wr));
            t = t_end;
        }

        if (!reversing.empty()) {
            ++res.reversals;
            SimSetup* s = const_cast<SimSetup*>(setup);
            s->system.heat = reverse_pipes(s->system.heat, reversing);
            ModelOptions mo = s->options;
            mo.validate = false;
            mo.theta = cfg.theta;
            Model next = compile_model(s->system, mo);
            detail::carry_state(md, next);
            next.set_drivers(t);
            next.assign_inlets(0);
            md = std::move(next);
            res.epochs.push_back(std::make_shared<const Model>(md));
        }
    }
    res.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - wall0).count();
    return res;
}

// ---- setup helpers -------------------------------------------------------------

/// Expands compound nodes, remaps drivers and couplings to the virtual nodes,
/// compiles the model and solves the steady start. Pipes whose steady flow
/// comes out negative are reversed and the start is recomputed.
inline Model prepare_model(SimSetup& setup, const NewtonOptions& nopt = {}) {
    ExpansionMap em;
    setup.system.heat = expand_compound_nodes(setup.system.heat, &em);
    for (auto& c : setup.system.couplings) {
        const auto it = em.moved.find(c.heat_node);
        if (it != em.moved.end()) c.heat_node = it->second;
    }
    std::map<std::string, DriverProfile> remapped;
    for (const auto& [name, prof] : setup.options.drivers) {
        std::string n = name;
        const auto lb = n.find('['), rb = n.rfind(']');
        if (lb != std::string::npos && rb != std::string::npos) {
            const std::string id = n.substr(lb + 1, rb - lb - 1);
            const auto it = em.moved.find(id);
            const std::string q = n.substr(0, lb);
            if (it != em.moved.end() && (q == "ts" || q == "tr" || q == "phi")) n = q + "[" + it->second + "]";
        }
        remapped.emplace(n, prof);
    }
    setup.options.drivers = std::move(remapped);

    for (int attempt = 0; attempt < 3; ++attempt) {
        Model md = compile_model(setup.system, setup.options);
        steady_state_init(md, nopt);
        std::vector<std::string> negative;
        for (const auto& p : md.sys.heat.pipes)
            if (!p.implicit && md.C(md.var("m[" + p.id + "]"), 0) < 0.0) negative.push_back(p.id);
        if (negative.empty()) return md;
        setup.system.heat = reverse_pipes(setup.system.heat, negative);
    }
    throw ConvergenceError("steady start keeps producing negative pipe flows", 0.0, "");
}

}  // namespace heies
